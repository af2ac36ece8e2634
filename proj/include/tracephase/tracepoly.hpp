#pragma once

#include <map>
#include <memory>
#include <vector>

#include "tracephase/multiindex.hpp"
#include "tracephase/numberfield.hpp"

namespace tracephase {

// Polynomial in n variables with coefficients in the algebra R^k (coordinate
// vectors relative to the field basis).  Keys are multi-indices over the n
// block variables; index 0 is the constant term and it contributes nothing to
// the phase gradient but does shift the phase itself.
struct TracePolynomial {
  std::shared_ptr<const NumberField> field;
  int n = 1;
  std::map<MultiIndex, std::vector<double>, GradedLex> coeffs;

  int degree() const;
  void set(const MultiIndex& alpha, std::vector<double> c);
};

TracePolynomial make_trace_polynomial(std::shared_ptr<const NumberField> field, int n);

// Univariate convenience: coeff_by_power[l] is the R^k coefficient of x^l.
TracePolynomial univariate_trace_polynomial(std::shared_ptr<const NumberField> field,
                                            const std::vector<std::vector<double>>& coeff_by_power);

TracePolynomial add(const TracePolynomial& f, const TracePolynomial& g);
TracePolynomial scale(const TracePolynomial& f, double s);

// Polynomial on C^n with complex coefficients.
struct ComplexPolynomial {
  int n = 1;
  std::map<MultiIndex, Complex, GradedLex> coeffs;

  int degree() const;
  Complex eval(const std::vector<Complex>& z) const;
  std::vector<Complex> gradient(const std::vector<Complex>& z) const;
  ComplexPolynomial partial(int var) const;
  // Taylor coefficients (1/alpha!) D^alpha P(z0) for every alpha up to degree.
  std::map<MultiIndex, Complex, GradedLex> taylor_at(const std::vector<Complex>& z0) const;
};

// P with sigma*(f*(x)) = P(sigma**(x_1), ..., sigma**(x_n)); coefficient of
// alpha is c_alpha . w_sigma.
ComplexPolynomial embed_polynomial(const TracePolynomial& f, int sigma);

// (sigma**(x_1), ..., sigma**(x_n)) for x in R^{kn} laid out in n blocks of k.
std::vector<Complex> sigma_vec(const NumberField& K, int sigma, const std::vector<double>& x);

// Phase value via exact-structure-constant algebra evaluation followed by the
// trace functional.
double eval_phase(const TracePolynomial& f, const std::vector<double>& x);
// Same quantity as the sum of embedded-polynomial values (independent route;
// returns the complex sum whose imaginary part should vanish).
Complex eval_phase_embedding_route(const TracePolynomial& f, const std::vector<double>& x);

// Gradient of the phase with respect to all kn real coordinates.
std::vector<double> grad_phase(const TracePolynomial& f, const std::vector<double>& x);

// Dense-term real polynomial in `dim` real variables; the form the quadrature
// engine consumes.  Terms are kept in graded lexicographic order.
struct RealPolynomial {
  int dim = 0;
  std::vector<std::pair<MultiIndex, double>> terms;

  double eval(const double* x) const;
  double eval(const std::vector<double>& x) const { return eval(x.data()); }
  RealPolynomial partial(int var) const;
};

// The phase expanded symbolically into a polynomial on R^{kn}.
RealPolynomial compile_phase(const TracePolynomial& f);

// Polynomial in several rational variables, exact coefficients.
struct RationalPolynomial {
  int nvars = 0;
  std::map<MultiIndex, Rational, GradedLex> coeffs;

  Rational eval(const std::vector<Rational>& q) const;
  double eval_d(const std::vector<double>& q) const;
};

// Q[l-1][j] with (q_1 omega_1 + ... + q_k omega_k)^l = sum_j Q_{l,j}(q) omega_j
// for l = 1..n, exact.
std::vector<std::vector<RationalPolynomial>> moment_curve_polynomials(const NumberField& K, int n);

struct ComparabilitySample {
  std::vector<double> x;
  double grad_norm = 0;      // |grad phi(x)|
  double max_embedded = 0;   // max_sigma |P'_sigma(sigma**(x))|
  bool lower_ok = false, upper_ok = false;
};

struct ComparabilityReport {
  double lower_c = 0;   // min_sigma |w_sigma . v_sigma|
  double upper_C = 0;   // k * max_sigma |w_sigma|
  std::vector<ComparabilitySample> samples;
  bool all_ok = false;
};

// Checks c * max|P'| <= |grad phi| <= C * max|P'| with the explicit constants
// above at each supplied point.  Univariate phases only.
ComparabilityReport check_gradient_comparability(const TracePolynomial& f,
                                                 const SubspaceDecomposition& D,
                                                 const std::vector<std::vector<double>>& points);

}  // namespace tracephase
