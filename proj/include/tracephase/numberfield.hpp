#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "tracephase/rational.hpp"

namespace tracephase {

using Complex = std::complex<double>;

struct FieldSpec {
  // Ascending coefficients of a monic minimal polynomial, length k+1.
  std::vector<Rational> minpoly;
  // Row i expresses basis element omega_i in the power basis {1, theta, ..., theta^{k-1}}.
  // Empty means identity (power basis).
  RatMatrix basis;
};

class NumberField {
 public:
  int k() const { return k_; }
  int k1() const { return k1_; }
  int k2() const { return k2_; }
  const std::vector<Rational>& minpoly() const { return minpoly_; }
  const RatMatrix& basis() const { return basis_; }

  // Embeddings of theta: real ones first (descending), then conjugate pairs
  // adjacent with the positive-imaginary member first.
  const std::vector<Complex>& theta() const { return theta_; }
  bool is_real(int sigma) const { return sigma < k1_; }
  int conj_index(int sigma) const;
  int num_classes() const { return k1_ + k2_; }
  int class_of(int sigma) const { return sigma < k1_ ? sigma : k1_ + (sigma - k1_) / 2; }
  std::vector<int> class_members(int cls) const;

  // w[sigma][i] = sigma(omega_i).
  const std::vector<std::vector<Complex>>& w() const { return w_; }

  // omega_i * omega_j = sum_m structure(i,j)[m] * omega_m, exact.
  const std::vector<Rational>& structure(int i, int j) const {
    return structure_[size_t(i) * k_ + j];
  }
  const std::vector<double>& structure_d(int i, int j) const {
    return structure_d_[size_t(i) * k_ + j];
  }
  const std::vector<Rational>& trace_vec() const { return trace_vec_; }
  const std::vector<double>& trace_vec_d() const { return trace_vec_d_; }
  // Coordinates of the field element 1 in basis B.
  const std::vector<Rational>& one_coords() const { return one_; }
  const std::vector<double>& one_coords_d() const { return one_d_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  friend NumberField build_field(const FieldSpec&);
  int k_ = 0, k1_ = 0, k2_ = 0;
  std::vector<Rational> minpoly_;
  RatMatrix basis_;
  std::vector<Complex> theta_;
  std::vector<std::vector<Complex>> w_;
  std::vector<std::vector<Rational>> structure_;
  std::vector<std::vector<double>> structure_d_;
  std::vector<Rational> trace_vec_;
  std::vector<double> trace_vec_d_;
  std::vector<Rational> one_;
  std::vector<double> one_d_;
  std::vector<std::string> warnings_;
};

NumberField build_field(const FieldSpec& spec);

// Multiplication matrix of q = sum q_i omega_i in basis B, exact.
RatMatrix mult_matrix(const NumberField& K, const std::vector<Rational>& q);

// T with tr(A*(x) A*(y)) = (Tx).y; T_ij = tr_{K/Q}(omega_i omega_j), exact.
RatMatrix trace_form(const NumberField& K);

// sigma*(A*(x)) = x . w_sigma for x in R^k.
Complex sigma_star(const NumberField& K, int sigma, const std::vector<double>& x);

// Coordinate-vector algebra product via structure constants (double precision).
void alg_mul(const NumberField& K, const double* a, const double* b, double* out);
std::vector<Rational> alg_mul_exact(const NumberField& K, const std::vector<Rational>& a,
                                    const std::vector<Rational>& b);

struct SubspaceDecomposition {
  int k = 0;
  // Per class: spanning set of W_{class,R} (1 vector for real classes,
  // 2 for pairs: w_tau + conj, (1/i)(w_tau - conj)), unnormalized.
  std::vector<std::vector<std::vector<double>>> W_real;
  // Per class: orthonormal basis of V_{class,R}, deterministic pivot order and sign.
  std::vector<std::vector<std::vector<double>>> V_real;
  // Per embedding: unit v with w_{sigma'} . v = 0 for sigma' != sigma (plain
  // bilinear product), first nonzero coordinate real positive.
  std::vector<std::vector<Complex>> V_cplx;
  Complex discriminant;        // det(sigma_j(omega_i))^2
  double min_singular_value;   // of the embedding matrix
};

SubspaceDecomposition decompose(const NumberField& K);

// Components of y in the direct sum R^k = ⊕ V_{class,R}; block l of the result
// is the class-c component for each class c (n blocks of k entries each).
std::vector<std::vector<double>> v_components(const SubspaceDecomposition& D,
                                              const std::vector<double>& y);

struct RealpartDirection {
  std::vector<double> z;   // unit vector in V^n_{class(sigma),R}, kn entries
  double achieved;         // |Re(x . sigma**(z))| / |x|
};

// For strictly complex sigma and nonzero x in C^n.
RealpartDirection realpart_direction(const NumberField& K, const SubspaceDecomposition& D,
                                     int sigma, const std::vector<Complex>& x);

}  // namespace tracephase
