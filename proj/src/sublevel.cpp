#include "tracephase/sublevel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "tracephase/polyroots.hpp"
#include "tracephase/rng.hpp"

namespace tracephase {

DirectionalBasis directional_basis(int d, int N, std::uint64_t seed, double max_cond) {
  if (d < 1) throw Error(ErrorCode::ConfigInvalid, "directional_basis: d must be >= 1");
  if (N < d) throw Error(ErrorCode::ConfigInvalid, "directional_basis: need N >= d directions");
  if (max_cond < 1.0) throw Error(ErrorCode::ConfigInvalid, "directional_basis: max_cond < 1");

  DirectionalBasis out;
  if (d == 1) {
    out.dirs.assign(N, {1.0});
    return out;
  }

  DetRng rng(derive_seed(seed, 0x646972));
  int max_attempts = 100 * N;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    Eigen::MatrixXd M(N, d);
    std::vector<std::vector<double>> dirs(N, std::vector<double>(d));
    bool degenerate = false;
    for (int i = 0; i < N; ++i) {
      double n2 = 0.0;
      for (int j = 0; j < d; ++j) {
        dirs[i][j] = rng.normal();
        n2 += dirs[i][j] * dirs[i][j];
      }
      if (n2 < 1e-300) {
        degenerate = true;
        break;
      }
      double inv = 1.0 / std::sqrt(n2);
      for (int j = 0; j < d; ++j) {
        dirs[i][j] *= inv;
        M(i, j) = dirs[i][j];
      }
    }
    if (degenerate) continue;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    double smin = svd.singularValues()(d - 1);
    if (smin <= 0.0) continue;
    double cond = svd.singularValues()(0) / smin;
    if (cond <= max_cond) {
      out.dirs = std::move(dirs);
      out.cond = cond;
      out.attempts = attempt;
      return out;
    }
  }
  throw Error(ErrorCode::RankDeficient, "directional_basis: no well-conditioned frame found");
}

namespace {

// Taylor coefficients of Q at z0 by in-place Horner shift.
std::vector<Complex> taylor_shift(std::vector<Complex> c, Complex z0) {
  int d = int(c.size()) - 1;
  for (int i = 0; i < d; ++i)
    for (int j = d - 1; j >= i; --j) c[j] += c[j + 1] * z0;
  return c;
}

}  // namespace

DerivativeZeroWitness nearest_derivative_zero(const std::vector<Complex>& coeffs, Complex z0,
                                              double C) {
  std::vector<Complex> c(coeffs);
  while (!c.empty() && c.back() == Complex(0, 0)) c.pop_back();
  if (c.size() < 2)
    throw Error(ErrorCode::DegenerateQ, "nearest_derivative_zero: polynomial is constant");
  if (C <= 0) throw Error(ErrorCode::ConfigInvalid, "nearest_derivative_zero: C must be positive");
  int d = int(c.size()) - 1;

  std::vector<Complex> T = taylor_shift(c, z0);
  DerivativeZeroWitness w;
  w.eps = std::abs(T[0]);
  for (int j = 1; j <= d; ++j) {
    double m = std::abs(T[j]);
    if (m > w.mu) {
      w.mu = m;
      w.k = j;
    }
  }
  w.bound = C * std::pow(w.eps / w.mu, 1.0 / w.k);

  std::vector<Complex> dj(c);
  w.distance = std::numeric_limits<double>::infinity();
  for (int j = 0; j < w.k; ++j) {
    for (const Complex& r : poly_roots_c(dj)) {
      double dist = std::abs(z0 - r);
      if (dist < w.distance) {
        w.distance = dist;
        w.derivative = j;
        w.zero = r;
      }
    }
    dj = poly_derivative_c(dj);
  }
  w.within = w.distance <= w.bound * (1.0 + 1e-9) + 1e-8 * (1.0 + std::abs(z0));
  return w;
}

SublevelResult sublevel_measure(const TracePolynomial& f, const SublevelSpec& spec,
                                long long samples, std::uint64_t seed) {
  const NumberField& K = *f.field;
  size_t ns = spec.embeddings.size();
  if (ns == 0 || spec.alpha.size() != ns || spec.eps.size() != ns || spec.mu.size() != ns)
    throw Error(ErrorCode::ConfigInvalid, "sublevel_measure: spec arrays must align and be nonempty");
  if (samples < 64) throw Error(ErrorCode::ConfigInvalid, "sublevel_measure: need >= 64 samples");
  for (size_t s = 0; s < ns; ++s) {
    int sigma = spec.embeddings[s];
    if (sigma < 0 || sigma >= K.k())
      throw Error(ErrorCode::BadEmbeddingIndex, "sublevel_measure: embedding out of range");
    if (int(spec.alpha[s].size()) != f.n)
      throw Error(ErrorCode::DimensionMismatch, "sublevel_measure: alpha arity != n");
    if (mi_total(spec.alpha[s]) < 2)
      throw Error(ErrorCode::ConfigInvalid, "sublevel_measure: need |alpha| >= 2");
    if (!(spec.eps[s] > 0) || !(spec.mu[s] > 0))
      throw Error(ErrorCode::ConfigInvalid, "sublevel_measure: eps and mu must be positive");
  }

  // Per embedding: the n first-order coefficient polynomials and the alpha one.
  struct Probe {
    int sigma;
    std::vector<ComplexPolynomial> grad;
    ComplexPolynomial t_alpha;
    double eps, mu;
  };
  std::vector<Probe> probes;
  for (size_t s = 0; s < ns; ++s) {
    Probe p;
    p.sigma = spec.embeddings[s];
    p.eps = spec.eps[s];
    p.mu = spec.mu[s];
    ComplexPolynomial P = embed_polynomial(f, p.sigma);
    for (int v = 0; v < f.n; ++v) p.grad.push_back(P.partial(v));
    ComplexPolynomial D = P;
    double fact = 1.0;
    for (int v = 0; v < f.n; ++v)
      for (int rep = 0; rep < spec.alpha[s][v]; ++rep) {
        D = D.partial(v);
        fact *= double(rep + 1);
      }
    for (auto& [amask, cval] : D.coeffs) cval /= fact;
    p.t_alpha = D;
    probes.push_back(std::move(p));
  }

  const int dim = K.k() * f.n;
  const int kShards = 64;
  long long base = samples / kShards, rem = samples % kShards;
  long long hits = 0, total = 0;
  std::vector<double> x(dim);
  for (int shard = 0; shard < kShards; ++shard) {
    DetRng rng(derive_seed(seed, std::uint64_t(shard)));
    long long count = base + (shard < rem ? 1 : 0);
    for (long long i = 0; i < count; ++i) {
      for (int a = 0; a < dim; ++a) x[a] = rng.uniform();
      bool ok = true;
      for (const Probe& p : probes) {
        std::vector<Complex> z = sigma_vec(K, p.sigma, x);
        double g = 0.0;
        for (const ComplexPolynomial& gp : p.grad) g = std::max(g, std::abs(gp.eval(z)));
        if (g > p.eps || std::abs(p.t_alpha.eval(z)) < p.mu) {
          ok = false;
          break;
        }
      }
      hits += ok;
      ++total;
    }
  }

  SublevelResult r;
  r.hits = hits;
  r.samples = total;
  r.measure = double(hits) / double(total);
  std::tie(r.ci_low, r.ci_high) = wilson_interval(hits, total);
  r.reference = 1.0;
  for (size_t s = 0; s < ns; ++s)
    r.reference *= std::pow(spec.eps[s] / spec.mu[s], 1.0 / (mi_total(spec.alpha[s]) - 1));
  r.ratio = r.measure / r.reference;
  return r;
}

std::pair<double, double> wilson_interval(long long hits, long long n) {
  if (n <= 0 || hits < 0 || hits > n)
    throw Error(ErrorCode::ConfigInvalid, "wilson_interval: bad counts");
  const double z = 1.959963984540054;  // 97.5% normal quantile
  double p = double(hits) / double(n), z2 = z * z;
  double denom = 1.0 + z2 / double(n);
  double center = (p + z2 / (2.0 * double(n))) / denom;
  double half = z * std::sqrt(p * (1.0 - p) / double(n) + z2 / (4.0 * double(n) * double(n))) / denom;
  double lo = hits == 0 ? 0.0 : std::max(0.0, center - half);
  double hi = hits == n ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

}  // namespace tracephase
