#include "tracephase/polyroots.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "tracephase/rational.hpp"

namespace tracephase {

std::complex<double> poly_eval(const std::vector<double>& coeffs, std::complex<double> z) {
  std::complex<double> v = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * z + *it;
  return v;
}

std::vector<double> poly_derivative(const std::vector<double>& coeffs) {
  std::vector<double> d;
  for (size_t i = 1; i < coeffs.size(); ++i) d.push_back(coeffs[i] * double(i));
  return d;
}

std::complex<double> poly_eval_c(const std::vector<std::complex<double>>& coeffs,
                                 std::complex<double> z) {
  std::complex<double> v = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * z + *it;
  return v;
}

std::vector<std::complex<double>> poly_derivative_c(
    const std::vector<std::complex<double>>& coeffs) {
  std::vector<std::complex<double>> d;
  for (size_t i = 1; i < coeffs.size(); ++i) d.push_back(coeffs[i] * double(i));
  return d;
}

std::vector<std::complex<double>> poly_roots_c(const std::vector<std::complex<double>>& coeffs) {
  std::vector<std::complex<double>> c(coeffs);
  while (!c.empty() && c.back() == 0.0) c.pop_back();
  if (c.size() < 2) throw Error(ErrorCode::EmptyPolynomial, "degree < 1 in poly_roots_c");
  int d = int(c.size()) - 1;

  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < d; ++i) comp(i, d - 1) = -c[i] / c[d];
  for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);

  std::vector<std::complex<double>> dc = poly_derivative_c(c);
  std::vector<std::complex<double>> roots;
  roots.reserve(d);
  for (int i = 0; i < d; ++i) {
    std::complex<double> z = es.eigenvalues()[i];
    for (int it = 0; it < 50; ++it) {
      std::complex<double> f = poly_eval_c(c, z);
      double target = 1e-12 * std::pow(1.0 + std::abs(z), d);
      if (std::abs(f) <= target) break;
      std::complex<double> fp = poly_eval_c(dc, z);
      if (std::abs(fp) == 0.0) break;
      z -= f / fp;
    }
    roots.push_back(z);
  }
  return roots;
}

std::vector<std::complex<double>> poly_roots(const std::vector<double>& coeffs) {
  std::vector<double> c(coeffs);
  while (!c.empty() && c.back() == 0.0) c.pop_back();
  if (c.size() < 2) throw Error(ErrorCode::EmptyPolynomial, "degree < 1 in poly_roots");
  int d = int(c.size()) - 1;

  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) comp(i, d - 1) = -c[i] / c[d];
  for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);

  std::vector<double> dc = poly_derivative(c);
  std::vector<std::complex<double>> roots;
  roots.reserve(d);
  for (int i = 0; i < d; ++i) {
    std::complex<double> z(es.eigenvalues()[i].real(), es.eigenvalues()[i].imag());
    for (int it = 0; it < 50; ++it) {
      std::complex<double> f = poly_eval(c, z);
      double target = 1e-12 * std::pow(1.0 + std::abs(z), d);
      if (std::abs(f) <= target) break;
      std::complex<double> fp = poly_eval(dc, z);
      if (std::abs(fp) == 0.0) break;
      z -= f / fp;
    }
    roots.push_back(z);
  }
  return roots;
}

}  // namespace tracephase
