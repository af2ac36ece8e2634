#pragma once

#include <complex>
#include <vector>

namespace tracephase {

// Roots of c[0] + c[1] x + ... + c[d] x^d (c[d] != 0), via companion-matrix
// eigenvalues refined by Newton iteration (<= 50 steps, residual target
// 1e-12 * (1 + |root|)^d). Order unspecified; callers sort.
std::vector<std::complex<double>> poly_roots(const std::vector<double>& coeffs);

std::complex<double> poly_eval(const std::vector<double>& coeffs, std::complex<double> z);
std::vector<double> poly_derivative(const std::vector<double>& coeffs);

// Complex-coefficient variants of the above.
std::vector<std::complex<double>> poly_roots_c(const std::vector<std::complex<double>>& coeffs);
std::complex<double> poly_eval_c(const std::vector<std::complex<double>>& coeffs,
                                 std::complex<double> z);
std::vector<std::complex<double>> poly_derivative_c(const std::vector<std::complex<double>>& coeffs);

}  // namespace tracephase
