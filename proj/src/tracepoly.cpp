#include "tracephase/tracepoly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tracephase {

namespace {

void check_coeff(const TracePolynomial& f, const MultiIndex& alpha,
                 const std::vector<double>& c) {
  if (int(alpha.size()) != f.n)
    throw Error(ErrorCode::DimensionMismatch, "multi-index arity does not match variable count");
  if (int(c.size()) != f.field->k())
    throw Error(ErrorCode::DimensionMismatch, "coefficient vector length does not match field degree");
}

// v * omega_i via structure constants.
std::vector<double> mul_basis(const NumberField& K, const std::vector<double>& v, int i) {
  int k = K.k();
  std::vector<double> out(k, 0.0);
  for (int j = 0; j < k; ++j) {
    if (v[j] == 0.0) continue;
    const auto& c = K.structure_d(j, i);
    for (int m = 0; m < k; ++m) out[m] += v[j] * c[m];
  }
  return out;
}

}  // namespace

int TracePolynomial::degree() const {
  int d = 0;
  for (const auto& [alpha, c] : coeffs) d = std::max(d, mi_total(alpha));
  return d;
}

void TracePolynomial::set(const MultiIndex& alpha, std::vector<double> c) {
  check_coeff(*this, alpha, c);
  coeffs[alpha] = std::move(c);
}

TracePolynomial make_trace_polynomial(std::shared_ptr<const NumberField> field, int n) {
  if (!field) throw Error(ErrorCode::ConfigInvalid, "null field");
  if (n < 1) throw Error(ErrorCode::ConfigInvalid, "variable count must be positive");
  TracePolynomial f;
  f.field = std::move(field);
  f.n = n;
  return f;
}

TracePolynomial univariate_trace_polynomial(std::shared_ptr<const NumberField> field,
                                            const std::vector<std::vector<double>>& coeff_by_power) {
  TracePolynomial f = make_trace_polynomial(std::move(field), 1);
  for (int l = 0; l < int(coeff_by_power.size()); ++l) {
    bool nonzero = false;
    for (double v : coeff_by_power[l]) nonzero = nonzero || v != 0.0;
    if (nonzero) f.set({l}, coeff_by_power[l]);
  }
  return f;
}

TracePolynomial add(const TracePolynomial& f, const TracePolynomial& g) {
  if (f.field.get() != g.field.get() || f.n != g.n)
    throw Error(ErrorCode::DimensionMismatch, "adding polynomials over different settings");
  TracePolynomial h = f;
  for (const auto& [alpha, c] : g.coeffs) {
    auto it = h.coeffs.find(alpha);
    if (it == h.coeffs.end()) {
      h.coeffs[alpha] = c;
    } else {
      for (size_t i = 0; i < c.size(); ++i) it->second[i] += c[i];
    }
  }
  return h;
}

TracePolynomial scale(const TracePolynomial& f, double s) {
  TracePolynomial h = f;
  for (auto& [alpha, c] : h.coeffs)
    for (double& v : c) v *= s;
  return h;
}

int ComplexPolynomial::degree() const {
  int d = 0;
  for (const auto& [alpha, c] : coeffs) d = std::max(d, mi_total(alpha));
  return d;
}

Complex ComplexPolynomial::eval(const std::vector<Complex>& z) const {
  if (int(z.size()) != n) throw Error(ErrorCode::DimensionMismatch, "eval point arity");
  // Powers of each coordinate up to the degree actually used.
  int d = degree();
  std::vector<std::vector<Complex>> pow(n, std::vector<Complex>(d + 1, Complex(1, 0)));
  for (int l = 0; l < n; ++l)
    for (int p = 1; p <= d; ++p) pow[l][p] = pow[l][p - 1] * z[l];
  Complex acc(0, 0);
  for (const auto& [alpha, c] : coeffs) {
    Complex t = c;
    for (int l = 0; l < n; ++l)
      if (alpha[l] > 0) t *= pow[l][alpha[l]];
    acc += t;
  }
  return acc;
}

std::vector<Complex> ComplexPolynomial::gradient(const std::vector<Complex>& z) const {
  if (int(z.size()) != n) throw Error(ErrorCode::DimensionMismatch, "eval point arity");
  int d = degree();
  std::vector<std::vector<Complex>> pow(n, std::vector<Complex>(d + 1, Complex(1, 0)));
  for (int l = 0; l < n; ++l)
    for (int p = 1; p <= d; ++p) pow[l][p] = pow[l][p - 1] * z[l];
  std::vector<Complex> g(n, Complex(0, 0));
  for (const auto& [alpha, c] : coeffs) {
    for (int v = 0; v < n; ++v) {
      if (alpha[v] == 0) continue;
      Complex t = c * double(alpha[v]) * pow[v][alpha[v] - 1];
      for (int l = 0; l < n; ++l)
        if (l != v && alpha[l] > 0) t *= pow[l][alpha[l]];
      g[v] += t;
    }
  }
  return g;
}

ComplexPolynomial ComplexPolynomial::partial(int var) const {
  if (var < 0 || var >= n) throw Error(ErrorCode::DimensionMismatch, "partial variable index");
  ComplexPolynomial d;
  d.n = n;
  for (const auto& [alpha, c] : coeffs) {
    if (alpha[var] == 0) continue;
    MultiIndex beta = alpha;
    beta[var] -= 1;
    d.coeffs[beta] += c * double(alpha[var]);
  }
  return d;
}

std::map<MultiIndex, Complex, GradedLex> ComplexPolynomial::taylor_at(
    const std::vector<Complex>& z0) const {
  if (int(z0.size()) != n) throw Error(ErrorCode::DimensionMismatch, "expansion point arity");
  int d = degree();
  // Dense rectangular array indexed by per-variable exponents.
  std::vector<size_t> stride(n, 1);
  for (int l = n - 2; l >= 0; --l) stride[l] = stride[l + 1] * size_t(d + 1);
  size_t total = stride[0] * size_t(d + 1);
  std::vector<Complex> dense(total, Complex(0, 0));
  for (const auto& [alpha, c] : coeffs) {
    size_t idx = 0;
    for (int l = 0; l < n; ++l) idx += size_t(alpha[l]) * stride[l];
    dense[idx] += c;
  }
  // Shift each axis: P(z + z0) via the nested Horner update along that axis.
  for (int v = 0; v < n; ++v) {
    if (z0[v] == Complex(0, 0)) continue;
    size_t s = stride[v];
    for (size_t base = 0; base < total; ++base) {
      // visit each 1-d fiber once, at the point with zero exponent in v
      if ((base / s) % size_t(d + 1) != 0) continue;
      for (int i = 0; i < d; ++i)
        for (int j = d - 1; j >= i; --j)
          dense[base + size_t(j) * s] += z0[v] * dense[base + size_t(j + 1) * s];
    }
  }
  std::map<MultiIndex, Complex, GradedLex> out;
  MultiIndex alpha(n, 0);
  for (size_t idx = 0; idx < total; ++idx) {
    size_t rem = idx;
    int tot = 0;
    for (int l = 0; l < n; ++l) {
      alpha[l] = int(rem / stride[l]);
      rem %= stride[l];
      tot += alpha[l];
    }
    if (tot > d) continue;
    if (dense[idx] != Complex(0, 0)) out[alpha] = dense[idx];
  }
  return out;
}

ComplexPolynomial embed_polynomial(const TracePolynomial& f, int sigma) {
  const NumberField& K = *f.field;
  if (sigma < 0 || sigma >= K.k()) throw Error(ErrorCode::BadEmbeddingIndex, "embed_polynomial");
  ComplexPolynomial P;
  P.n = f.n;
  const auto& w = K.w()[sigma];
  for (const auto& [alpha, c] : f.coeffs) {
    Complex b(0, 0);
    double bmax = 0.0;
    for (int i = 0; i < K.k(); ++i) {
      b += c[i] * w[i];
      bmax += std::abs(c[i]) * std::abs(w[i]);
    }
    // cancellation beyond ~14 digits is numerical dust, not a coefficient
    if (std::abs(b) > 1e-14 * bmax) P.coeffs[alpha] = b;
  }
  return P;
}

std::vector<Complex> sigma_vec(const NumberField& K, int sigma, const std::vector<double>& x) {
  int k = K.k();
  if (x.size() % k != 0 || x.empty())
    throw Error(ErrorCode::DimensionMismatch, "point length must be a multiple of the field degree");
  if (sigma < 0 || sigma >= k) throw Error(ErrorCode::BadEmbeddingIndex, "sigma_vec");
  int n = int(x.size()) / k;
  const auto& w = K.w()[sigma];
  std::vector<Complex> z(n, Complex(0, 0));
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < k; ++i) z[l] += x[size_t(l) * k + i] * w[i];
  return z;
}

double eval_phase(const TracePolynomial& f, const std::vector<double>& x) {
  const NumberField& K = *f.field;
  int k = K.k(), n = f.n;
  if (int(x.size()) != k * n) throw Error(ErrorCode::DimensionMismatch, "eval_phase point");
  int d = f.degree();
  // Algebra powers of each block variable.
  std::vector<std::vector<std::vector<double>>> pow(n);
  for (int l = 0; l < n; ++l) {
    pow[l].resize(d + 1);
    pow[l][0] = K.one_coords_d();
    if (d >= 1) pow[l][1].assign(x.begin() + size_t(l) * k, x.begin() + size_t(l + 1) * k);
    for (int p = 2; p <= d; ++p) {
      pow[l][p].resize(k);
      alg_mul(K, pow[l][p - 1].data(), pow[l][1].data(), pow[l][p].data());
    }
  }
  double phi = 0.0;
  std::vector<double> acc(k), tmp(k);
  for (const auto& [alpha, c] : f.coeffs) {
    acc = c;
    for (int l = 0; l < n; ++l) {
      if (alpha[l] == 0) continue;
      alg_mul(K, acc.data(), pow[l][alpha[l]].data(), tmp.data());
      acc.swap(tmp);
    }
    for (int m = 0; m < k; ++m) phi += K.trace_vec_d()[m] * acc[m];
  }
  return phi;
}

Complex eval_phase_embedding_route(const TracePolynomial& f, const std::vector<double>& x) {
  const NumberField& K = *f.field;
  Complex s(0, 0);
  for (int sigma = 0; sigma < K.k(); ++sigma)
    s += embed_polynomial(f, sigma).eval(sigma_vec(K, sigma, x));
  return s;
}

std::vector<double> grad_phase(const TracePolynomial& f, const std::vector<double>& x) {
  const NumberField& K = *f.field;
  int k = K.k(), n = f.n;
  if (int(x.size()) != k * n) throw Error(ErrorCode::DimensionMismatch, "grad_phase point");
  std::vector<Complex> g(size_t(k) * n, Complex(0, 0));
  for (int sigma = 0; sigma < K.k(); ++sigma) {
    ComplexPolynomial P = embed_polynomial(f, sigma);
    auto z = sigma_vec(K, sigma, x);
    auto gp = P.gradient(z);
    const auto& w = K.w()[sigma];
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < k; ++i) g[size_t(l) * k + i] += gp[l] * w[i];
  }
  std::vector<double> out(size_t(k) * n);
  for (size_t i = 0; i < out.size(); ++i) out[i] = g[i].real();
  return out;
}

double RealPolynomial::eval(const double* x) const {
  double s = 0.0;
  for (const auto& [alpha, c] : terms) {
    double t = c;
    for (int v = 0; v < dim; ++v)
      for (int e = 0; e < alpha[v]; ++e) t *= x[v];
    s += t;
  }
  return s;
}

RealPolynomial RealPolynomial::partial(int var) const {
  if (var < 0 || var >= dim) throw Error(ErrorCode::DimensionMismatch, "partial variable index");
  RealPolynomial d;
  d.dim = dim;
  for (const auto& [alpha, c] : terms) {
    if (alpha[var] == 0) continue;
    MultiIndex b = alpha;
    b[var] -= 1;
    d.terms.emplace_back(std::move(b), c * alpha[var]);
  }
  return d;
}

RealPolynomial compile_phase(const TracePolynomial& f) {
  const NumberField& K = *f.field;
  int k = K.k(), n = f.n;
  std::map<MultiIndex, double, GradedLex> phi;
  for (const auto& [alpha, c] : f.coeffs) {
    // Expand c_alpha * prod_l (sum_i x_{l,i} omega_i)^{alpha_l} coordinatewise.
    std::map<MultiIndex, std::vector<double>, GradedLex> local;
    local[MultiIndex(size_t(k) * n, 0)] = c;
    for (int l = 0; l < n; ++l) {
      for (int rep = 0; rep < alpha[l]; ++rep) {
        std::map<MultiIndex, std::vector<double>, GradedLex> next;
        for (const auto& [beta, v] : local) {
          for (int i = 0; i < k; ++i) {
            MultiIndex b2 = beta;
            b2[size_t(l) * k + i] += 1;
            auto prod = mul_basis(K, v, i);
            auto it = next.find(b2);
            if (it == next.end()) {
              next[std::move(b2)] = std::move(prod);
            } else {
              for (int m = 0; m < k; ++m) it->second[m] += prod[m];
            }
          }
        }
        local.swap(next);
      }
    }
    for (const auto& [beta, v] : local) {
      double t = 0.0;
      for (int m = 0; m < k; ++m) t += K.trace_vec_d()[m] * v[m];
      phi[beta] += t;
    }
  }
  double scale = 0.0;
  for (const auto& [beta, c] : phi) scale = std::max(scale, std::fabs(c));
  RealPolynomial out;
  out.dim = k * n;
  for (const auto& [beta, c] : phi)
    if (std::fabs(c) > 1e-13 * scale) out.terms.emplace_back(beta, c);
  return out;
}

Rational RationalPolynomial::eval(const std::vector<Rational>& q) const {
  if (int(q.size()) != nvars) throw Error(ErrorCode::DimensionMismatch, "eval point arity");
  Rational s = 0;
  for (const auto& [alpha, c] : coeffs) {
    Rational t = c;
    for (int v = 0; v < nvars; ++v)
      for (int e = 0; e < alpha[v]; ++e) t *= q[v];
    s += t;
  }
  return s;
}

double RationalPolynomial::eval_d(const std::vector<double>& q) const {
  if (int(q.size()) != nvars) throw Error(ErrorCode::DimensionMismatch, "eval point arity");
  double s = 0.0;
  for (const auto& [alpha, c] : coeffs) {
    double t = to_double(c);
    for (int v = 0; v < nvars; ++v)
      for (int e = 0; e < alpha[v]; ++e) t *= q[v];
    s += t;
  }
  return s;
}

std::vector<std::vector<RationalPolynomial>> moment_curve_polynomials(const NumberField& K, int n) {
  if (n < 1) throw Error(ErrorCode::ConfigInvalid, "moment curve length must be positive");
  int k = K.k();
  // Coordinates of X^l as polynomials in q, X = sum_j q_j omega_j.
  std::vector<std::map<MultiIndex, Rational, GradedLex>> cur(k);
  for (int j = 0; j < k; ++j) {
    MultiIndex e(k, 0);
    e[j] = 1;
    cur[j][e] = Rational(1);
  }
  std::vector<std::vector<RationalPolynomial>> out;
  auto snapshot = [&]() {
    std::vector<RationalPolynomial> row(k);
    for (int m = 0; m < k; ++m) {
      row[m].nvars = k;
      for (const auto& [a, r] : cur[m])
        if (r != 0) row[m].coeffs[a] = r;
    }
    out.push_back(std::move(row));
  };
  snapshot();
  for (int l = 2; l <= n; ++l) {
    std::vector<std::map<MultiIndex, Rational, GradedLex>> next(k);
    for (int i = 0; i < k; ++i) {
      for (const auto& [a, r] : cur[i]) {
        if (r == 0) continue;
        for (int j = 0; j < k; ++j) {
          MultiIndex a2 = a;
          a2[j] += 1;
          const auto& c = K.structure(i, j);
          for (int m = 0; m < k; ++m)
            if (c[m] != 0) next[m][a2] += r * c[m];
        }
      }
    }
    cur.swap(next);
    snapshot();
  }
  return out;
}

ComparabilityReport check_gradient_comparability(const TracePolynomial& f,
                                                 const SubspaceDecomposition& D,
                                                 const std::vector<std::vector<double>>& points) {
  if (f.n != 1) throw Error(ErrorCode::NotUnivariate, "comparability check needs a univariate phase");
  const NumberField& K = *f.field;
  int k = K.k();
  ComparabilityReport rep;
  double maxw = 0.0;
  for (int sigma = 0; sigma < k; ++sigma) {
    double nw = 0.0;
    for (const auto& wi : K.w()[sigma]) nw += std::norm(wi);
    maxw = std::max(maxw, std::sqrt(nw));
  }
  rep.upper_C = k * maxw;
  rep.lower_c = std::numeric_limits<double>::infinity();
  for (int sigma = 0; sigma < k; ++sigma) {
    Complex dot(0, 0);
    for (int i = 0; i < k; ++i) dot += K.w()[sigma][i] * D.V_cplx[sigma][i];
    rep.lower_c = std::min(rep.lower_c, std::abs(dot));
  }
  std::vector<ComplexPolynomial> P(k);
  for (int sigma = 0; sigma < k; ++sigma) P[sigma] = embed_polynomial(f, sigma);
  rep.all_ok = true;
  for (const auto& x : points) {
    ComparabilitySample s;
    s.x = x;
    auto g = grad_phase(f, x);
    double gn = 0.0;
    for (double v : g) gn += v * v;
    s.grad_norm = std::sqrt(gn);
    for (int sigma = 0; sigma < k; ++sigma) {
      auto z = sigma_vec(K, sigma, x);
      s.max_embedded = std::max(s.max_embedded, std::abs(P[sigma].gradient(z)[0]));
    }
    double slack = 1e-9 * (1.0 + s.max_embedded * rep.upper_C);
    s.lower_ok = s.grad_norm >= rep.lower_c * s.max_embedded - slack;
    s.upper_ok = s.grad_norm <= rep.upper_C * s.max_embedded + slack;
    rep.all_ok = rep.all_ok && s.lower_ok && s.upper_ok;
    rep.samples.push_back(std::move(s));
  }
  return rep;
}

}  // namespace tracephase
