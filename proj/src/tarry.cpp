#include "tracephase/tarry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>

#include "tracephase/functionals.hpp"
#include "tracephase/rng.hpp"
#include "tracephase/sublevel.hpp"

namespace tracephase {

namespace {

// Taylor coefficients of p(z + z0), coefficients ascending.
std::vector<Complex> taylor_shift(std::vector<Complex> c, Complex z0) {
  int d = int(c.size()) - 1;
  for (int i = 0; i < d; ++i)
    for (int j = d - 1; j >= i; --j) c[j] += z0 * c[j + 1];
  return c;
}

std::vector<double> unit_sphere(DetRng& rng, int d) {
  std::vector<double> v(d);
  for (;;) {
    double n2 = 0.0;
    for (double& x : v) {
      x = rng.normal();
      n2 += x * x;
    }
    if (n2 > 1e-12) {
      double inv = 1.0 / std::sqrt(n2);
      for (double& x : v) x *= inv;
      return v;
    }
  }
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Volume of the unit ball in dimension d.
double unit_ball_volume(int d) {
  return std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

std::vector<double> alg_power(const NumberField& K, const std::vector<double>& c, int e) {
  std::vector<double> acc(K.one_coords_d());
  std::vector<double> tmp(K.k());
  for (int i = 0; i < e; ++i) {
    alg_mul(K, acc.data(), c.data(), tmp.data());
    acc = tmp;
  }
  return acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// Coefficient-space cover
// ---------------------------------------------------------------------------

double taylor_step_constant(CoverMode mode, int n, int l) {
  if (n < 1 || l < 1 || l > n) throw Error(ErrorCode::ConfigInvalid, "taylor_step_constant: order");
  double s = mode == CoverMode::Complex ? std::sqrt(2.0) : 1.0;
  double c = 0.0, sp = 1.0;
  for (int lp = 0; lp <= n - l; ++lp) {
    c += double(binomial(l + lp, l)) * sp;
    sp *= s;
  }
  return c;
}

namespace {

void check_cover_args(CoverMode mode, int n, double Q, const std::vector<Complex>& a) {
  if (n < 1) throw Error(ErrorCode::ConfigInvalid, "cover: n must be >= 1");
  if (!(Q > 1.0)) throw Error(ErrorCode::ConfigInvalid, "cover: Q must exceed 1");
  if (int(a.size()) != n) throw Error(ErrorCode::DimensionMismatch, "cover: need n coefficients");
  if (mode == CoverMode::Real)
    for (const Complex& c : a)
      if (c.imag() != 0.0)
        throw Error(ErrorCode::ConfigInvalid, "cover: real mode needs real coefficients");
}

bool grid_point_admits(int n, double Q, const std::vector<Complex>& coeffs, Complex zb,
                       CoverMode mode) {
  std::vector<Complex> t = taylor_shift(coeffs, zb);
  double qp = 1.0;
  for (int l = 1; l <= n; ++l) {
    qp *= Q;
    if (std::abs(t[l]) > taylor_step_constant(mode, n, l) * qp * (1.0 + 1e-9)) return false;
  }
  return true;
}

}  // namespace

bool coefficient_box_admits(CoverMode mode, int n, double Q, const std::vector<Complex>& a,
                            const std::vector<int>& box) {
  check_cover_args(mode, n, Q, a);
  size_t want = mode == CoverMode::Real ? 1 : 2;
  if (box.size() != want) throw Error(ErrorCode::DimensionMismatch, "cover: box index size");
  int qi = int(std::floor(Q));
  for (int b : box)
    if (b < -qi || b > qi) throw Error(ErrorCode::ConfigInvalid, "cover: box index out of range");
  std::vector<Complex> coeffs(n + 1, Complex(0.0, 0.0));
  for (int l = 1; l <= n; ++l) coeffs[l] = a[l - 1];
  Complex zb = mode == CoverMode::Real ? Complex(box[0] / Q, 0.0)
                                       : Complex(box[0] / Q, box[1] / Q);
  return grid_point_admits(n, Q, coeffs, zb, mode);
}

BoxMembership coefficient_box_membership(CoverMode mode, int n, double Q,
                                         const std::vector<Complex>& a) {
  check_cover_args(mode, n, Q, a);
  std::vector<Complex> coeffs(n + 1, Complex(0.0, 0.0));
  for (int l = 1; l <= n; ++l) coeffs[l] = a[l - 1];
  int qi = int(std::floor(Q));
  BoxMembership out;
  if (mode == CoverMode::Real) {
    for (int b = -qi; b <= qi; ++b)
      if (grid_point_admits(n, Q, coeffs, Complex(b / Q, 0.0), mode)) {
        out.in_cover = true;
        out.box = {b};
        return out;
      }
    return out;
  }
  for (int b1 = -qi; b1 <= qi; ++b1)
    for (int b2 = -qi; b2 <= qi; ++b2)
      if (grid_point_admits(n, Q, coeffs, Complex(b1 / Q, b2 / Q), mode)) {
        out.in_cover = true;
        out.box = {b1, b2};
        return out;
      }
  return out;
}

// ---------------------------------------------------------------------------
// Frequency-side classification
// ---------------------------------------------------------------------------

TracePolynomial frequency_polynomial(std::shared_ptr<const NumberField> K, int n,
                                     const std::vector<double>& eta) {
  if (n < 1) throw Error(ErrorCode::ConfigInvalid, "frequency_polynomial: n must be >= 1");
  int k = K->k();
  if (int(eta.size()) != n * k)
    throw Error(ErrorCode::DimensionMismatch, "frequency_polynomial: eta needs n*k entries");
  std::vector<std::vector<double>> by_power(n + 1, std::vector<double>(k, 0.0));
  for (int l = 1; l <= n; ++l)
    for (int j = 0; j < k; ++j) by_power[l][j] = eta[size_t(l - 1) * k + j];
  return univariate_trace_polynomial(std::move(K), by_power);
}

namespace {

Eigen::MatrixXd trace_form_dense(const NumberField& K) {
  RatMatrix T = trace_form(K);
  Eigen::MatrixXd M(K.k(), K.k());
  for (int i = 0; i < K.k(); ++i)
    for (int j = 0; j < K.k(); ++j) M(i, j) = to_double(T.at(i, j));
  return M;
}

}  // namespace

std::vector<double> eta_to_xi(const NumberField& K, int n, const std::vector<double>& eta) {
  int k = K.k();
  if (n < 1 || int(eta.size()) != n * k)
    throw Error(ErrorCode::DimensionMismatch, "eta_to_xi: eta needs n*k entries");
  Eigen::MatrixXd T = trace_form_dense(K);
  std::vector<double> xi(eta.size());
  for (int l = 0; l < n; ++l) {
    Eigen::Map<const Eigen::VectorXd> e(eta.data() + size_t(l) * k, k);
    Eigen::Map<Eigen::VectorXd>(xi.data() + size_t(l) * k, k) = T * e;
  }
  return xi;
}

std::vector<double> xi_to_eta(const NumberField& K, int n, const std::vector<double>& xi) {
  int k = K.k();
  if (n < 1 || int(xi.size()) != n * k)
    throw Error(ErrorCode::DimensionMismatch, "xi_to_eta: xi needs n*k entries");
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(trace_form_dense(K));
  std::vector<double> eta(xi.size());
  for (int l = 0; l < n; ++l) {
    Eigen::Map<const Eigen::VectorXd> x(xi.data() + size_t(l) * k, k);
    Eigen::Map<Eigen::VectorXd>(eta.data() + size_t(l) * k, k) = lu.solve(x);
  }
  return eta;
}

RealPolynomial extension_phase(const NumberField& K, int n, const std::vector<double>& xi) {
  int k = K.k();
  if (n < 1 || int(xi.size()) != n * k)
    throw Error(ErrorCode::DimensionMismatch, "extension_phase: xi needs n*k entries");
  auto Q = moment_curve_polynomials(K, n);
  std::map<MultiIndex, double, GradedLex> acc;
  for (int l = 1; l <= n; ++l)
    for (int j = 0; j < k; ++j) {
      double c = xi[size_t(l - 1) * k + j];
      if (c == 0.0) continue;
      for (const auto& [alpha, r] : Q[l - 1][j].coeffs) acc[alpha] += c * to_double(r);
    }
  RealPolynomial p;
  p.dim = k;
  for (auto& [alpha, c] : acc)
    if (c != 0.0) p.terms.emplace_back(alpha, c);
  return p;
}

QuadratureResult extension_value(const NumberField& K, int n, const std::vector<double>& xi,
                                 const Cutoff& psi, const QuadratureOptions& opt) {
  return oscillatory_integral(extension_phase(K, n, xi), psi, opt);
}

EtaClass classify_eta(std::shared_ptr<const NumberField> K, int n,
                      const std::vector<double>& eta, const Cutoff& psi) {
  int k = K->k();
  if (psi.dim != k) throw Error(ErrorCode::DimensionMismatch, "classify_eta: cutoff dimension");
  TracePolynomial f = frequency_polynomial(K, n, eta);
  EtaClass out;
  out.H.resize(k);
  for (int sigma = 0; sigma < k; ++sigma) {
    out.H[sigma] = uniform_H(f, sigma, psi).value;
    if (out.H[sigma] >= 1.0) {
      out.S.push_back(sigma);
      out.alpha.push_back(int(std::floor(std::log2(out.H[sigma]))));
    }
  }
  out.unclassified = out.S.empty();
  return out;
}

SfrakResult sfrak_measure(std::shared_ptr<const NumberField> K, int n,
                          const std::vector<int>& S, const std::vector<int>& alpha,
                          const Cutoff& psi, long long samples, std::uint64_t seed,
                          double box_half_width) {
  int k = K->k();
  if (n < 1) throw Error(ErrorCode::ConfigInvalid, "sfrak_measure: n must be >= 1");
  if (psi.dim != k) throw Error(ErrorCode::DimensionMismatch, "sfrak_measure: cutoff dimension");
  if (S.empty())
    throw Error(ErrorCode::ConfigInvalid, "sfrak_measure: empty class (every H below 1)");
  if (alpha.size() != S.size())
    throw Error(ErrorCode::DimensionMismatch, "sfrak_measure: alpha must align with S");
  if (samples < 64) throw Error(ErrorCode::ConfigInvalid, "sfrak_measure: need >= 64 samples");
  for (size_t i = 0; i < S.size(); ++i) {
    if (S[i] < 0 || S[i] >= k) throw Error(ErrorCode::BadEmbeddingIndex, "sfrak_measure: S");
    if (i > 0 && S[i] <= S[i - 1])
      throw Error(ErrorCode::ConfigInvalid, "sfrak_measure: S must be strictly ascending");
    if (alpha[i] < 0) throw Error(ErrorCode::ConfigInvalid, "sfrak_measure: alpha must be >= 0");
  }
  for (size_t i = 0; i < S.size(); ++i) {
    int cj = K->conj_index(S[i]);
    auto it = std::lower_bound(S.begin(), S.end(), cj);
    if (it == S.end() || *it != cj)
      throw Error(ErrorCode::NotConjugationClosed, "sfrak_measure: S");
    if (alpha[size_t(it - S.begin())] != alpha[i])
      throw Error(ErrorCode::ConfigInvalid, "sfrak_measure: alpha differs on a conjugate pair");
  }

  int max_alpha = *std::max_element(alpha.begin(), alpha.end());
  double hw = box_half_width > 0 ? box_half_width : std::ldexp(1.0, max_alpha + 2);

  SfrakResult out;
  out.samples = samples;
  out.box_volume = std::pow(2.0 * hw, double(n) * k);

  const int shards = 64;
  std::vector<double> eta(size_t(n) * k);
  for (int s = 0; s < shards; ++s) {
    DetRng rng(derive_seed(seed, std::uint64_t(s)));
    long long count = samples / shards + (s < samples % shards ? 1 : 0);
    for (long long i = 0; i < count; ++i) {
      for (double& x : eta) x = rng.uniform(-hw, hw);
      EtaClass c = classify_eta(K, n, eta, psi);
      if (!c.unclassified && c.S == S && c.alpha == alpha) ++out.hits;
    }
  }

  auto [lo, hi] = wilson_interval(out.hits, out.samples);
  out.measure = double(out.hits) / double(out.samples) * out.box_volume;
  out.ci_low = lo * out.box_volume;
  out.ci_high = hi * out.box_volume;
  double qn = 0.5 * n * (n + 1) + 1.0;
  out.bound = 1.0;
  for (int a : alpha) out.bound *= std::ldexp(1.0, int(qn) * a);
  out.ratio = out.measure / out.bound;
  return out;
}

// ---------------------------------------------------------------------------
// L^q tail experiment
// ---------------------------------------------------------------------------

LqReport lq_tail_experiment(std::shared_ptr<const NumberField> K, int n,
                            const std::vector<double>& q_list, int max_shell,
                            const Cutoff& psi, const LqOptions& opt) {
  int k = K->k();
  if (psi.dim != k) throw Error(ErrorCode::DimensionMismatch, "lq_tail: cutoff dimension");
  if (n < 1) throw Error(ErrorCode::ConfigInvalid, "lq_tail: n must be >= 1");
  if (q_list.empty()) throw Error(ErrorCode::ConfigInvalid, "lq_tail: empty exponent list");
  for (double q : q_list)
    if (!(q > 0)) throw Error(ErrorCode::ConfigInvalid, "lq_tail: exponents must be positive");
  if (max_shell < 2) throw Error(ErrorCode::ConfigInvalid, "lq_tail: need at least two shells");
  if (opt.radii_per_dir < 1 || opt.dirs_per_shell < 0 || opt.aligned_dirs < 0 ||
      opt.dirs_per_shell + opt.aligned_dirs < 1)
    throw Error(ErrorCode::ConfigInvalid, "lq_tail: sample counts");

  int d = n * k;
  LqReport rep;
  rep.q_list = q_list;

  // One direction set shared by every shell, so consecutive shell sums compare
  // the same rays at scaled radii and their ratio measures radial decay rather
  // than direction-sampling noise.
  DetRng rng(derive_seed(opt.seed, 0));
  std::vector<std::vector<double>> dirs;
  for (int i = 0; i < opt.dirs_per_shell; ++i) dirs.push_back(unit_sphere(rng, d));

  // Directions whose frequency sits on the slow-decay ray: the polynomial is
  // a perfect n-th power of (x - x_r) with unit leading block, so |E| decays
  // like |xi|^{-k/n} instead of the generic |xi|^{-k/2}.
  for (int t = 1; t <= opt.aligned_dirs; ++t) {
    double v = 0.8 * double(t) / double(opt.aligned_dirs + 1);
    std::vector<double> x_r(k, v);
    RecenterMap M = recenter_map(*K, n, x_r, K->one_coords_d());
    std::vector<double> eta(size_t(n) * k, 0.0);
    for (size_t i = 0; i < M.offset.size(); ++i) eta[i] = M.offset[i];
    for (int j = 0; j < k; ++j) eta[size_t(n - 1) * k + j] = K->one_coords_d()[j];
    std::vector<double> xi = eta_to_xi(*K, n, eta);
    double nm = norm2(xi);
    for (double& x : xi) x /= nm;
    dirs.push_back(std::move(xi));
  }

  // Stratified radius multipliers in [1, 2), also shared across shells.
  std::vector<std::vector<double>> rad_mult(dirs.size(),
                                            std::vector<double>(opt.radii_per_dir));
  for (auto& per_dir : rad_mult)
    for (int j = 0; j < opt.radii_per_dir; ++j)
      per_dir[j] = std::exp2((double(j) + rng.uniform()) / double(opt.radii_per_dir));

  for (int m = 1; m <= max_shell; ++m) {
    LqShellRow row;
    row.shell = m;
    row.r_lo = std::ldexp(1.0, m - 1);
    row.r_hi = std::ldexp(1.0, m);
    row.mean_abs_q.assign(q_list.size(), 0.0);

    std::vector<double> xi(d);
    for (size_t di = 0; di < dirs.size(); ++di)
      for (int j = 0; j < opt.radii_per_dir; ++j) {
        double radius = row.r_lo * rad_mult[di][j];
        for (int i = 0; i < d; ++i) xi[i] = radius * dirs[di][i];
        QuadratureResult E = oscillatory_integral(extension_phase(*K, n, xi), psi, opt.quad);
        double mag = std::abs(E.value);
        for (size_t qi = 0; qi < q_list.size(); ++qi)
          row.mean_abs_q[qi] += std::pow(mag, q_list[qi]);
        ++row.samples;
      }

    double annulus = unit_ball_volume(d) *
                     (std::pow(row.r_hi, double(d)) - std::pow(row.r_lo, double(d)));
    row.shell_sum.resize(q_list.size());
    for (size_t qi = 0; qi < q_list.size(); ++qi) {
      row.mean_abs_q[qi] /= double(row.samples);
      row.shell_sum[qi] = row.mean_abs_q[qi] * annulus;
    }
    rep.rows.push_back(std::move(row));
  }

  rep.ratios.assign(q_list.size(), {});
  rep.convergent.assign(q_list.size(), false);
  for (size_t qi = 0; qi < q_list.size(); ++qi) {
    for (size_t m = 1; m < rep.rows.size(); ++m) {
      double prev = rep.rows[m - 1].shell_sum[qi];
      rep.ratios[qi].push_back(prev > 0 ? rep.rows[m].shell_sum[qi] / prev : 0.0);
    }
    size_t tail = std::min<size_t>(3, rep.ratios[qi].size());
    bool conv = tail > 0;
    for (size_t i = rep.ratios[qi].size() - tail; i < rep.ratios[qi].size(); ++i)
      conv = conv && rep.ratios[qi][i] < 0.9;
    rep.convergent[qi] = conv;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Lower-bound (sharpness) experiment
// ---------------------------------------------------------------------------

RecenterMap recenter_map(const NumberField& K, int n, const std::vector<double>& x_r,
                         const std::vector<double>& eta_n) {
  int k = K.k();
  if (n < 1) throw Error(ErrorCode::ConfigInvalid, "recenter_map: n must be >= 1");
  if (int(x_r.size()) != k || int(eta_n.size()) != k)
    throw Error(ErrorCode::DimensionMismatch, "recenter_map: center and leading block need k entries");

  std::vector<double> neg(k);
  for (int i = 0; i < k; ++i) neg[i] = -x_r[i];
  // pow[e] = (-x_r)^e in the algebra.
  std::vector<std::vector<double>> pow(n + 1);
  for (int e = 0; e <= n; ++e) pow[e] = alg_power(K, neg, e);

  int d = (n - 1) * k;
  RecenterMap out;
  out.linear.assign(d, std::vector<double>(d, 0.0));
  out.offset.assign(d, 0.0);
  std::vector<double> tmp(k), unit(k);
  for (int l = 1; l <= n - 1; ++l) {
    // Block row l: coefficient of z^l gets binom(j, l) theta_j (-x_r)^{j-l}.
    for (int j = l; j <= n - 1; ++j) {
      double b = double(binomial(j, l));
      for (int col = 0; col < k; ++col) {
        std::fill(unit.begin(), unit.end(), 0.0);
        unit[col] = 1.0;
        alg_mul(K, pow[j - l].data(), unit.data(), tmp.data());
        for (int row = 0; row < k; ++row)
          out.linear[size_t(l - 1) * k + row][size_t(j - 1) * k + col] = b * tmp[row];
      }
    }
    alg_mul(K, eta_n.data(), pow[n - l].data(), tmp.data());
    double b = double(binomial(n, l));
    for (int row = 0; row < k; ++row) out.offset[size_t(l - 1) * k + row] = b * tmp[row];
  }

  if (d == 0) {
    out.det = 1.0;
    return out;
  }
  Eigen::MatrixXd M(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) M(i, j) = out.linear[i][j];
  out.det = M.partialPivLu().determinant();
  return out;
}

double cos_power_integral(int n) {
  if (n < 2) throw Error(ErrorCode::ConfigInvalid, "cos_power_integral: n must be >= 2");
  // Alternating series over cells where s^n crosses multiples of pi, each cell
  // integrated by Gauss-Legendre, then repeated averaging of partial sums.
  const int cells = 240;
  const auto& nodes = gauss_nodes(15);
  const auto& weights = gauss_weights(15);
  std::vector<double> partial(cells);
  double sum = 0.0;
  for (int j = 0; j < cells; ++j) {
    double s0 = std::pow(M_PI * j, 1.0 / n);
    double s1 = std::pow(M_PI * (j + 1), 1.0 / n);
    double h = 0.5 * (s1 - s0), c = 0.5 * (s1 + s0), cell = 0.0;
    for (size_t i = 0; i < nodes.size(); ++i)
      cell += weights[i] * std::cos(std::pow(c + h * nodes[i], double(n)));
    sum += cell * h;
    partial[j] = sum;
  }
  while (partial.size() > 1) {
    for (size_t i = 0; i + 1 < partial.size(); ++i)
      partial[i] = 0.5 * (partial[i] + partial[i + 1]);
    partial.pop_back();
  }
  return partial[0];
}

void validate_sharpness_config(const SharpnessConfig& cfg, int k) {
  if (!(cfg.A > 2.0))
    throw Error(ErrorCode::ConfigInvalid, "sharpness: lacunary base must exceed 2");
  if (cfg.Q_list.empty() && cfg.m_min > cfg.m_max)
    throw Error(ErrorCode::ConfigInvalid, "sharpness: empty exponent range");
  for (double Q : cfg.Q_list)
    if (!(Q > 1.0)) throw Error(ErrorCode::ConfigInvalid, "sharpness: Q values must exceed 1");
  if (!(cfg.a > 0) || !(cfg.c1 > 0))
    throw Error(ErrorCode::ConfigInvalid, "sharpness: scales must be positive");
  if (cfg.c1 * std::pow(cfg.a, double(k + 1)) > 0.01 * (1.0 + 1e-12))
    throw Error(ErrorCode::ConfigInvalid,
                "sharpness: perturbation budget c1 * a^{k+1} exceeds 0.01");
  if (cfg.trials < 1) throw Error(ErrorCode::ConfigInvalid, "sharpness: trials must be >= 1");
  if (cfg.C_KB < 0) throw Error(ErrorCode::ConfigInvalid, "sharpness: negative lower bound");
}

SharpnessReport sharpness_experiment(std::shared_ptr<const NumberField> K, int n,
                                     const SharpnessConfig& cfg, const Cutoff& psi,
                                     const QuadratureOptions& quad) {
  int k = K->k();
  if (psi.dim != k) throw Error(ErrorCode::DimensionMismatch, "sharpness: cutoff dimension");
  if (n < 2) throw Error(ErrorCode::ConfigInvalid, "sharpness: n must be >= 2");
  validate_sharpness_config(cfg, k);

  std::vector<double> Qs = cfg.Q_list;
  if (Qs.empty())
    for (int m = cfg.m_min; m <= cfg.m_max; ++m) Qs.push_back(std::pow(cfg.A, m));

  double wmax = 0.0;
  for (int sigma = 0; sigma < k; ++sigma) {
    double s = 0.0;
    for (const Complex& c : K->w()[sigma]) s += std::norm(c);
    wmax = std::max(wmax, std::sqrt(s));
  }
  double C_KB = cfg.C_KB > 0 ? cfg.C_KB : 0.1 * wmax;
  double C_floor = 1e-12 * C_KB;

  SharpnessReport rep;
  std::vector<double> logQ, logII;

  for (size_t qi = 0; qi < Qs.size(); ++qi) {
    double Q = Qs[qi];
    double Qn = std::pow(Q, double(n));
    DetRng rng(derive_seed(cfg.seed, std::uint64_t(qi)));
    int r_max = std::max(1, int(std::floor(Q / 10.0)));
    double mean_abs = 0.0;
    int got = 0;

    for (int trial = 0; trial < cfg.trials; ++trial) {
      // Leading block: radius in the lower part of the dyadic range, bounded
      // away from the kernel of every embedding.
      std::vector<double> theta_n(k);
      for (;;) {
        bool ok = false;
        for (int attempt = 0; attempt < 200 && !ok; ++attempt) {
          std::vector<double> dir = unit_sphere(rng, k);
          double radius = Qn * (1.0 + 0.3 * rng.uniform());
          for (int i = 0; i < k; ++i) theta_n[i] = radius * dir[i];
          ok = true;
          for (int sigma = 0; sigma < k && ok; ++sigma)
            ok = std::abs(sigma_star(*K, sigma, theta_n)) >= C_KB * Qn;
        }
        if (ok) break;
        C_KB *= 0.5;
        rep.C_KB_reduced = true;
        if (C_KB < C_floor)
          throw Error(ErrorCode::ExperimentFailed,
                      "sharpness: no leading block clears the embedding lower bound");
      }

      std::vector<double> eta(size_t(n) * k, 0.0);
      double scale = 1.0;
      for (int l = 1; l <= n - 1; ++l) {
        scale *= cfg.c1 * Q;
        std::vector<double> b = rng.ball(k);
        for (int j = 0; j < k; ++j) eta[size_t(l - 1) * k + j] = scale * b[j];
      }
      for (int j = 0; j < k; ++j) eta[size_t(n - 1) * k + j] = theta_n[j];

      std::vector<int> r(k);
      std::vector<double> x_r(k);
      for (int j = 0; j < k; ++j) {
        r[j] = 1 + rng.uniform_int(r_max);
        x_r[j] = double(r[j]) / Q;
      }

      // The frequency-space change of variables attached to this trial is
      // volume preserving; a drift here would invalidate the measure bookkeeping.
      RecenterMap M = recenter_map(*K, n, x_r, theta_n);
      if (std::abs(M.det - 1.0) > 1e-6)
        throw Error(ErrorCode::ExperimentFailed, "sharpness: recenter map determinant drifted");

      double r1 = psi.r1, r2 = psi.r2;
      if (cfg.shrink_cutoff) {
        double need = 1.05 * (2.0 * cfg.a / Q + norm2(x_r));
        if (need < r1) {
          r1 = need;
          r2 = std::min(r2, std::max(1.5 * r1, r1 + 0.35));
        }
      }
      std::vector<double> center(psi.center);
      for (int j = 0; j < k; ++j) center[j] -= x_r[j];
      Cutoff shifted = make_cutoff(center, r1, r2);

      QuadratureResult II =
          oscillatory_integral(frequency_polynomial(K, n, eta), shifted, quad);
      SharpnessRow row;
      row.Q = Q;
      row.r = r;
      row.abs_II = std::abs(II.value);
      row.product = row.abs_II * std::pow(Q, double(k));
      row.error_estimate = II.error_estimate;
      row.converged = II.converged;
      rep.rows.push_back(std::move(row));
      mean_abs += rep.rows.back().abs_II;
      ++got;
    }

    logQ.push_back(std::log(Q));
    logII.push_back(std::log(std::max(mean_abs / got, 1e-300)));
  }

  rep.C_KB_used = C_KB;
  rep.min_product = rep.max_product = rep.rows.front().product;
  for (const auto& row : rep.rows) {
    rep.min_product = std::min(rep.min_product, row.product);
    rep.max_product = std::max(rep.max_product, row.product);
  }

  double mx = 0, my = 0;
  for (size_t i = 0; i < logQ.size(); ++i) {
    mx += logQ[i];
    my += logII[i];
  }
  mx /= double(logQ.size());
  my /= double(logQ.size());
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < logQ.size(); ++i) {
    sxx += (logQ[i] - mx) * (logQ[i] - mx);
    sxy += (logQ[i] - mx) * (logII[i] - my);
  }
  rep.slope = sxx > 0 ? sxy / sxx : 0.0;
  return rep;
}

}  // namespace tracephase
