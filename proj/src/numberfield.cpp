#include "tracephase/numberfield.hpp"

#include <algorithm>
#include <cmath>

#include "tracephase/polyroots.hpp"

namespace tracephase {

namespace {

int poly_degree(const std::vector<Rational>& p) {
  for (int i = int(p.size()) - 1; i >= 0; --i)
    if (p[i] != 0) return i;
  return -1;
}

std::vector<Rational> poly_mul(const std::vector<Rational>& a, const std::vector<Rational>& b) {
  std::vector<Rational> r(a.size() + b.size() - 1);
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  }
  return r;
}

// p mod m with m monic.
std::vector<Rational> poly_mod(std::vector<Rational> p, const std::vector<Rational>& m) {
  int dm = poly_degree(m);
  for (int dp = poly_degree(p); dp >= dm; dp = poly_degree(p)) {
    Rational lead = p[dp];
    for (int i = 0; i <= dm; ++i) p[dp - dm + i] -= lead * m[i];
    p[dp] = 0;
  }
  p.resize(dm);
  return p;
}

std::vector<Rational> poly_make_monic(std::vector<Rational> p) {
  int d = poly_degree(p);
  if (d < 0) return p;
  Rational lead = p[d];
  p.resize(d + 1);
  for (auto& c : p) c /= lead;
  return p;
}

std::vector<Rational> poly_gcd(std::vector<Rational> a, std::vector<Rational> b) {
  a = poly_make_monic(std::move(a));
  b = poly_make_monic(std::move(b));
  while (poly_degree(b) >= 0) {
    if (poly_degree(b) == 0) return {Rational(1)};
    auto r = poly_mod(a, b);
    a = std::move(b);
    b = poly_make_monic(std::move(r));
  }
  return a;
}

}  // namespace

int NumberField::conj_index(int sigma) const {
  if (sigma < 0 || sigma >= k_) throw Error(ErrorCode::BadEmbeddingIndex, "embedding index");
  if (sigma < k1_) return sigma;
  return ((sigma - k1_) % 2 == 0) ? sigma + 1 : sigma - 1;
}

std::vector<int> NumberField::class_members(int cls) const {
  if (cls < 0 || cls >= num_classes()) throw Error(ErrorCode::BadEmbeddingIndex, "class index");
  if (cls < k1_) return {cls};
  int base = k1_ + 2 * (cls - k1_);
  return {base, base + 1};
}

NumberField build_field(const FieldSpec& spec) {
  NumberField K;
  if (spec.minpoly.size() < 2) throw Error(ErrorCode::EmptyPolynomial, "minpoly needs degree >= 1");
  int k = int(spec.minpoly.size()) - 1;
  if (spec.minpoly[k] != 1) throw Error(ErrorCode::NonMonic, "minpoly must be monic");
  K.k_ = k;
  K.minpoly_ = spec.minpoly;
  K.basis_ = spec.basis.rows() == 0 ? RatMatrix::identity(k) : spec.basis;
  if (K.basis_.rows() != k || K.basis_.cols() != k)
    throw Error(ErrorCode::DimensionMismatch, "basis must be k x k");
  RatMatrix basis_inv = K.basis_.inverse();  // throws DegenerateBasis if singular

  // Exact squarefree test.
  std::vector<Rational> dm(k);
  for (int i = 1; i <= k; ++i) dm[i - 1] = spec.minpoly[i] * i;
  auto g = poly_gcd(K.minpoly_, dm);
  if (poly_degree(g) >= 1)
    throw Error(ErrorCode::RepeatedRoots, "minimal polynomial has repeated roots");

  // Embeddings of theta.
  std::vector<double> mc(k + 1);
  for (int i = 0; i <= k; ++i) mc[i] = to_double(spec.minpoly[i]);
  auto roots = poly_roots(mc);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (std::abs(roots[i] - roots[j]) < 1e-8)
        throw Error(ErrorCode::IllConditioned, "embeddings closer than 1e-8");

  std::vector<double> reals;
  std::vector<Complex> pairs;  // positive-imaginary representatives
  for (auto& z : roots) {
    if (std::abs(z.imag()) <= 1e-10 * (1.0 + std::abs(z)))
      reals.push_back(z.real());
    else if (z.imag() > 0)
      pairs.push_back(z);
  }
  if (reals.size() + 2 * pairs.size() != size_t(k))
    throw Error(ErrorCode::IllConditioned, "inconsistent real/complex classification");
  std::sort(reals.begin(), reals.end(), std::greater<double>());
  std::sort(pairs.begin(), pairs.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  K.k1_ = int(reals.size());
  K.k2_ = int(pairs.size());
  for (double r : reals) K.theta_.push_back(Complex(r, 0.0));
  for (auto& p : pairs) {
    K.theta_.push_back(p);
    K.theta_.push_back(std::conj(p));
  }

  if (k >= 2) {
    for (double r : reals) {
      for (long q = 1; q <= 1000; ++q) {
        double p = std::round(r * double(q));
        if (std::abs(p) <= 1000.0 && std::abs(r - p / double(q)) <= 1e-10) {
          K.warnings_.push_back("embedding " + std::to_string(r) +
                                " is within 1e-10 of a small rational; minimal polynomial is "
                                "likely reducible");
          break;
        }
      }
    }
  }

  // w_sigma = (sigma(omega_1), ..., sigma(omega_k)).
  K.w_.assign(k, std::vector<Complex>(k));
  for (int s = 0; s < k; ++s) {
    Complex th = K.theta_[s];
    std::vector<Complex> pow(k);
    pow[0] = 1.0;
    for (int j = 1; j < k; ++j) pow[j] = pow[j - 1] * th;
    for (int i = 0; i < k; ++i) {
      Complex acc = 0.0;
      for (int j = 0; j < k; ++j) acc += to_double(K.basis_.at(i, j)) * pow[j];
      K.w_[s][i] = K.is_real(s) ? Complex(acc.real(), 0.0) : acc;
    }
  }
  // Exact conjugate symmetry within a pair.
  for (int s = K.k1_; s < k; s += 2)
    for (int i = 0; i < k; ++i) K.w_[s + 1][i] = std::conj(K.w_[s][i]);

  // Structure constants: omega_i omega_j reduced mod minpoly, expressed in B.
  K.structure_.assign(size_t(k) * k, {});
  K.structure_d_.assign(size_t(k) * k, {});
  for (int i = 0; i < k; ++i) {
    std::vector<Rational> pi(k);
    for (int j = 0; j < k; ++j) pi[j] = K.basis_.at(i, j);
    for (int j = 0; j < k; ++j) {
      std::vector<Rational> pj(k);
      for (int l = 0; l < k; ++l) pj[l] = K.basis_.at(j, l);
      auto prod = poly_mod(poly_mul(pi, pj), K.minpoly_);
      prod.resize(k);
      // row-vector solve c * B = prod  =>  c = prod * B^{-1}
      std::vector<Rational> c(k);
      for (int m = 0; m < k; ++m)
        for (int l = 0; l < k; ++l) c[m] += prod[l] * basis_inv.at(l, m);
      std::vector<double> cd(k);
      for (int m = 0; m < k; ++m) cd[m] = to_double(c[m]);
      K.structure_[size_t(i) * k + j] = std::move(c);
      K.structure_d_[size_t(i) * k + j] = std::move(cd);
    }
  }

  K.trace_vec_.assign(k, Rational(0));
  for (int i = 0; i < k; ++i) {
    Rational t = 0;
    for (int j = 0; j < k; ++j) t += K.structure(i, j)[j];
    K.trace_vec_[i] = t;
  }
  K.trace_vec_d_.resize(k);
  for (int i = 0; i < k; ++i) K.trace_vec_d_[i] = to_double(K.trace_vec_[i]);

  // Coordinates of 1: solve c * B = (1, 0, ..., 0).
  K.one_.assign(k, Rational(0));
  for (int m = 0; m < k; ++m) K.one_[m] = basis_inv.at(0, m);
  K.one_d_.resize(k);
  for (int m = 0; m < k; ++m) K.one_d_[m] = to_double(K.one_[m]);
  return K;
}

RatMatrix mult_matrix(const NumberField& K, const std::vector<Rational>& q) {
  int k = K.k();
  if (int(q.size()) != k) throw Error(ErrorCode::DimensionMismatch, "mult_matrix argument");
  RatMatrix A(k, k);
  for (int i = 0; i < k; ++i) {
    if (q[i] == 0) continue;
    for (int j = 0; j < k; ++j) {
      const auto& c = K.structure(i, j);
      for (int m = 0; m < k; ++m) A.at(m, j) += q[i] * c[m];
    }
  }
  return A;
}

RatMatrix trace_form(const NumberField& K) {
  int k = K.k();
  RatMatrix T(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      Rational t = 0;
      const auto& c = K.structure(i, j);
      for (int m = 0; m < k; ++m) t += c[m] * K.trace_vec()[m];
      T.at(i, j) = t;
    }
  return T;
}

Complex sigma_star(const NumberField& K, int sigma, const std::vector<double>& x) {
  if (sigma < 0 || sigma >= K.k()) throw Error(ErrorCode::BadEmbeddingIndex, "embedding index");
  if (int(x.size()) != K.k()) throw Error(ErrorCode::DimensionMismatch, "sigma_star argument");
  Complex acc = 0.0;
  for (int i = 0; i < K.k(); ++i) acc += x[i] * K.w()[sigma][i];
  return acc;
}

void alg_mul(const NumberField& K, const double* a, const double* b, double* out) {
  int k = K.k();
  for (int m = 0; m < k; ++m) out[m] = 0.0;
  for (int i = 0; i < k; ++i) {
    if (a[i] == 0.0) continue;
    for (int j = 0; j < k; ++j) {
      double f = a[i] * b[j];
      if (f == 0.0) continue;
      const auto& c = K.structure_d(i, j);
      for (int m = 0; m < k; ++m) out[m] += f * c[m];
    }
  }
}

std::vector<Rational> alg_mul_exact(const NumberField& K, const std::vector<Rational>& a,
                                    const std::vector<Rational>& b) {
  int k = K.k();
  if (int(a.size()) != k || int(b.size()) != k)
    throw Error(ErrorCode::DimensionMismatch, "alg_mul_exact argument");
  std::vector<Rational> out(k);
  for (int i = 0; i < k; ++i) {
    if (a[i] == 0) continue;
    for (int j = 0; j < k; ++j) {
      if (b[j] == 0) continue;
      Rational f = a[i] * b[j];
      const auto& c = K.structure(i, j);
      for (int m = 0; m < k; ++m) out[m] += f * c[m];
    }
  }
  return out;
}

}  // namespace tracephase
