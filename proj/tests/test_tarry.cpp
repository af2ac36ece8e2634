#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <memory>
#include <random>

#include "tracephase/functionals.hpp"
#include "tracephase/tarry.hpp"
#include "test_util.hpp"

using namespace tracephase;
using namespace tptest;

namespace {

std::shared_ptr<const NumberField> make(const FieldSpec& s) {
  return std::make_shared<NumberField>(build_field(s));
}

std::vector<Complex> conj_coeffs(const std::vector<Complex>& a) {
  std::vector<Complex> c(a.size());
  for (size_t i = 0; i < a.size(); ++i) c[i] = std::conj(a[i]);
  return c;
}

// Coefficients (degree >= 1 part) of sum_l T_l (z - z0)^l.
std::vector<Complex> from_taylor(const std::vector<Complex>& T, Complex z0) {
  int n = int(T.size()) - 1;
  std::vector<Complex> c(n + 1, Complex(0, 0));
  for (int l = 1; l <= n; ++l)
    for (int j = 0; j <= l; ++j) {
      Complex pw(1, 0);
      for (int e = 0; e < l - j; ++e) pw *= -z0;
      c[j] += T[l] * double(binomial(l, j)) * pw;
    }
  return {c.begin() + 1, c.end()};
}

}  // namespace

TEST_CASE("taylor step constants") {
  double s2 = std::sqrt(2.0);
  CHECK(taylor_step_constant(CoverMode::Real, 1, 1) == doctest::Approx(1.0));
  CHECK(taylor_step_constant(CoverMode::Real, 2, 1) == doctest::Approx(3.0));
  CHECK(taylor_step_constant(CoverMode::Real, 2, 2) == doctest::Approx(1.0));
  CHECK(taylor_step_constant(CoverMode::Real, 3, 1) == doctest::Approx(6.0));
  CHECK(taylor_step_constant(CoverMode::Real, 3, 2) == doctest::Approx(4.0));
  CHECK(taylor_step_constant(CoverMode::Complex, 2, 1) == doctest::Approx(1.0 + 2.0 * s2));
  CHECK(taylor_step_constant(CoverMode::Complex, 3, 1) == doctest::Approx(7.0 + 2.0 * s2));
  CHECK(taylor_step_constant(CoverMode::Complex, 3, 2) == doctest::Approx(1.0 + 3.0 * s2));
  CHECK_THROWS_AS((void)taylor_step_constant(CoverMode::Real, 2, 0), Error);
  CHECK_THROWS_AS((void)taylor_step_constant(CoverMode::Real, 2, 3), Error);
}

TEST_CASE("cover membership worked examples") {
  // Zero polynomial is admitted at the first grid point scanned.
  auto z = coefficient_box_membership(CoverMode::Real, 2, 4.0, {Complex(0), Complex(0)});
  CHECK(z.in_cover);
  CHECK(z.box == std::vector<int>{-4});

  // Linear case: in the cover exactly when |lambda| <= Q.
  for (double Q : {4.0, 7.5}) {
    auto in = coefficient_box_membership(CoverMode::Real, 1, Q, {Complex(0.9 * Q)});
    CHECK(in.in_cover);
    CHECK(in.box == std::vector<int>{-int(std::floor(Q))});
    auto out = coefficient_box_membership(CoverMode::Real, 1, Q, {Complex(1.1 * Q)});
    CHECK(!out.in_cover);
    CHECK(out.box.empty());
  }

  // Quadratic with a_2 beyond Q^2 can never be admitted.
  auto big = coefficient_box_membership(CoverMode::Real, 2, 4.0, {Complex(0), Complex(100)});
  CHECK(!big.in_cover);

  // 20 z needs |T_1(z_b)| = 20 |z_b| <= 3 Q = 12: first such grid point is -1/2.
  auto mid = coefficient_box_membership(CoverMode::Real, 2, 4.0, {Complex(0), Complex(10)});
  CHECK(mid.in_cover);
  CHECK(mid.box == std::vector<int>{-2});

  // Complex grid scan: |20 z| <= (1 + 2 sqrt 2) Q first holds at (-3/4, 0).
  auto cx = coefficient_box_membership(CoverMode::Complex, 2, 4.0, {Complex(0), Complex(10)});
  CHECK(cx.in_cover);
  CHECK(cx.box == std::vector<int>{-3, 0});
}

TEST_CASE("cover membership validation") {
  CHECK_THROWS_AS((void)coefficient_box_membership(CoverMode::Real, 1, 1.0, {Complex(0)}),
                  Error);
  CHECK_THROWS_AS((void)coefficient_box_membership(CoverMode::Real, 0, 4.0, {}), Error);
  CHECK_THROWS_AS(
      (void)coefficient_box_membership(CoverMode::Real, 1, 4.0, {Complex(0.0, 1.0)}), Error);
  CHECK_THROWS_AS((void)coefficient_box_membership(CoverMode::Real, 2, 4.0, {Complex(0)}),
                  Error);
  CHECK_THROWS_AS(
      (void)coefficient_box_admits(CoverMode::Real, 1, 4.0, {Complex(1)}, {1, 2}), Error);
  CHECK_THROWS_AS((void)coefficient_box_admits(CoverMode::Real, 1, 4.0, {Complex(1)}, {5}),
                  Error);
}

TEST_CASE("cover completeness for bounded Taylor data") {
  // Any polynomial whose Taylor coefficients at some plateau point z* satisfy
  // |T_l| <= Q^l lands in the cover; the admitting point is within one grid
  // step of z*, which is what the step constants were sized for.
  std::mt19937 rng(2026);
  for (CoverMode mode : {CoverMode::Real, CoverMode::Complex}) {
    for (int n : {1, 2, 3}) {
      for (double Q : {1.5, 4.0, 9.5}) {
        for (int rep = 0; rep < 800; ++rep) {
          Complex z0;
          if (mode == CoverMode::Real)
            z0 = Complex(random_uniform(rng, -1.0, 1.0), 0.0);
          else
            z0 = Complex(random_uniform(rng, -1.0, 1.0), random_uniform(rng, -1.0, 1.0));
          std::vector<Complex> T(n + 1, Complex(0, 0));
          double qp = 1.0;
          for (int l = 1; l <= n; ++l) {
            qp *= Q;
            double mag = 0.999 * qp * random_uniform(rng, 0.0, 1.0);
            if (mode == CoverMode::Real)
              T[l] = Complex(rng() % 2 ? mag : -mag, 0.0);
            else {
              double ph = random_uniform(rng, 0.0, 2.0 * M_PI);
              T[l] = mag * Complex(std::cos(ph), std::sin(ph));
            }
          }
          auto a = from_taylor(T, z0);
          CAPTURE(n);
          CAPTURE(Q);
          REQUIRE(coefficient_box_membership(mode, n, Q, a).in_cover);
        }
      }
    }
  }
}

TEST_CASE("cover conjugation symmetry") {
  std::mt19937 rng(11);
  int in_count = 0;
  for (int rep = 0; rep < 400; ++rep) {
    int n = 1 + int(rng() % 3);
    double Q = random_uniform(rng, 1.5, 6.0);
    std::vector<Complex> a(n);
    double qp = 1.0;
    for (int l = 0; l < n; ++l) {
      qp *= Q;
      a[l] = Complex(random_uniform(rng, -1.5 * qp, 1.5 * qp),
                     random_uniform(rng, -1.5 * qp, 1.5 * qp));
    }
    auto m = coefficient_box_membership(CoverMode::Complex, n, Q, a);
    auto mc = coefficient_box_membership(CoverMode::Complex, n, Q, conj_coeffs(a));
    CHECK(m.in_cover == mc.in_cover);
    if (m.in_cover) {
      ++in_count;
      CHECK(coefficient_box_admits(CoverMode::Complex, n, Q, conj_coeffs(a),
                                   {m.box[0], -m.box[1]}));
    }
  }
  CHECK(in_count > 50);  // the draw ranges straddle the cover boundary
}

TEST_CASE("frequency polynomial and trace-form transfer") {
  auto Q = make(spec_Q());
  auto Qi = make(spec_Qi());
  auto Qs2 = make(spec_Qsqrt2());
  auto Qc2 = make(spec_Qcbrt2());

  // Rational field: the trace form is the identity.
  std::vector<double> eta{0.7, -1.3};
  CHECK(eta_to_xi(*Q, 2, eta) == eta);
  CHECK(xi_to_eta(*Q, 2, eta) == eta);

  // Gaussian field: diagonal form (2, -2) per block.
  std::vector<double> g{1.0, 2.0, -3.0, 0.5};
  auto xi = eta_to_xi(*Qi, 2, g);
  CHECK(xi[0] == doctest::Approx(2.0));
  CHECK(xi[1] == doctest::Approx(-4.0));
  CHECK(xi[2] == doctest::Approx(-6.0));
  CHECK(xi[3] == doctest::Approx(-1.0));

  std::mt19937 rng(5);
  for (auto& K : {Qi, Qs2, Qc2}) {
    int k = K->k();
    for (int n : {1, 2, 3}) {
      for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> v(size_t(n) * k);
        for (double& t : v) t = random_uniform(rng, -3.0, 3.0);
        auto back = xi_to_eta(*K, n, eta_to_xi(*K, n, v));
        for (size_t i = 0; i < v.size(); ++i)
          CHECK(back[i] == doctest::Approx(v[i]).epsilon(1e-10));

        // Dual route for the phase: the moment-curve pairing against xi equals
        // the trace phase of the frequency polynomial at eta = T^{-1} xi.
        RealPolynomial p = extension_phase(*K, n, v);
        TracePolynomial f = frequency_polynomial(K, n, xi_to_eta(*K, n, v));
        std::vector<double> x(k);
        for (double& t : x) t = random_uniform(rng, -2.0, 2.0);
        double a = p.eval(x), b = eval_phase(f, x);
        CHECK(a == doctest::Approx(b).epsilon(1e-9));
      }
    }
  }

  CHECK_THROWS_AS((void)frequency_polynomial(Qi, 2, {1.0, 2.0}), Error);
  CHECK_THROWS_AS((void)eta_to_xi(*Qi, 1, {1.0}), Error);
}

TEST_CASE("extension value against the direct transform") {
  auto Q = make(spec_Q());
  Cutoff psi = plateau_cutoff(1, 0.0, 1.0, 2.0);
  QuadratureOptions opt;
  opt.tol = 1e-8;
  for (double x : {0.3, 1.0, 2.7}) {
    auto E = extension_value(*Q, 1, {x}, psi, opt);
    CHECK(E.converged);
    Complex ref = fourier_reference(psi, {-x}, 1e-10);
    CHECK(std::abs(E.value - ref) < 1e-6);
  }
}

TEST_CASE("eta classification") {
  auto Q = make(spec_Q());
  auto Qi = make(spec_Qi());
  Cutoff psi = plateau_cutoff(1, 0.0, 2.0, 3.0);
  Cutoff psi2 = plateau_cutoff(2, 0.0, 2.0, 3.0);

  // Pure square term: the order-2 coefficient is 256 everywhere, so the
  // uniform derivative size is 256^{1/2} = 16, dyadic exponent 4.
  EtaClass c = classify_eta(Q, 2, {0.0, 256.0}, psi);
  CHECK(c.H[0] == doctest::Approx(16.0));
  CHECK(c.S == std::vector<int>{0});
  CHECK(c.alpha == std::vector<int>{4});
  CHECK(!c.unclassified);

  EtaClass z = classify_eta(Q, 2, {0.0, 0.0}, psi);
  CHECK(z.unclassified);
  CHECK(z.S.empty());

  // Small frequency: H < 1 in every embedding.
  EtaClass tiny = classify_eta(Q, 2, {0.01, 0.02}, psi);
  CHECK(tiny.unclassified);

  // Conjugate embeddings always agree, so S is empty or the full pair.
  std::mt19937 rng(9);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> eta(4);
    for (double& t : eta) t = random_uniform(rng, -20.0, 20.0);
    EtaClass g = classify_eta(Qi, 2, eta, psi2);
    CHECK(g.H[0] == doctest::Approx(g.H[1]).epsilon(1e-9));
    CHECK((g.S.empty() || g.S == std::vector<int>{0, 1}));
    if (!g.S.empty()) CHECK(g.alpha[0] == g.alpha[1]);
  }

  CHECK_THROWS_AS((void)classify_eta(Q, 2, {1.0}, psi), Error);
  CHECK_THROWS_AS((void)classify_eta(Qi, 1, {1.0, 1.0}, psi), Error);
}

TEST_CASE("class measure: linear rational case is exact") {
  auto Q = make(spec_Q());
  Cutoff psi = plateau_cutoff(1, 0.0, 2.0, 3.0);
  // n = 1: H(eta) = |eta|, so the class (S, alpha) = ({0}, (3)) is the pair of
  // intervals [-16, -8) and [8, 16), measure 16 inside the box [-32, 32].
  SfrakResult r = sfrak_measure(Q, 1, {0}, {3}, psi, 6400, 77);
  CHECK(r.box_volume == doctest::Approx(64.0));
  CHECK(r.measure == doctest::Approx(16.0).epsilon(0.08));
  CHECK(r.ci_low <= 16.0);
  CHECK(16.0 <= r.ci_high);
  CHECK(r.bound == doctest::Approx(64.0));  // exponent n(n+1)/2 + 1 = 2 per class step
  CHECK(r.ratio == doctest::Approx(r.measure / 64.0));

  SfrakResult again = sfrak_measure(Q, 1, {0}, {3}, psi, 6400, 77);
  CHECK(again.hits == r.hits);
  CHECK(again.measure == r.measure);
}

TEST_CASE("class measure: quadratic and complex cases") {
  auto Q = make(spec_Q());
  Cutoff psi = plateau_cutoff(1, 0.0, 2.0, 3.0);
  SfrakResult r = sfrak_measure(Q, 2, {0}, {2}, psi, 3000, 5);
  CHECK(r.hits > 0);
  CHECK(r.measure <= r.box_volume);
  CHECK(r.bound == doctest::Approx(std::ldexp(1.0, 8)));  // 2^{4 alpha}, alpha = 2
  CHECK(r.ci_low <= r.measure);
  CHECK(r.measure <= r.ci_high);

  auto Qi = make(spec_Qi());
  Cutoff psi2 = plateau_cutoff(2, 0.0, 2.0, 3.0);
  SfrakResult g = sfrak_measure(Qi, 2, {0, 1}, {1, 1}, psi2, 640, 5);
  CHECK(g.samples == 640);
  CHECK(g.bound == doctest::Approx(std::ldexp(1.0, 8)));  // both pair members count
  CHECK(g.hits >= 0);

  CHECK_THROWS_AS((void)sfrak_measure(Q, 1, {}, {}, psi, 640, 5), Error);
  CHECK_THROWS_AS((void)sfrak_measure(Qi, 2, {0}, {1}, psi2, 640, 5), Error);
  CHECK_THROWS_AS((void)sfrak_measure(Qi, 2, {0, 1}, {1, 2}, psi2, 640, 5), Error);
  CHECK_THROWS_AS((void)sfrak_measure(Q, 1, {0}, {-1}, psi, 640, 5), Error);
  CHECK_THROWS_AS((void)sfrak_measure(Q, 1, {0}, {1}, psi, 10, 5), Error);
  CHECK_THROWS_AS((void)sfrak_measure(Q, 1, {1}, {1}, psi, 640, 5), Error);
}

TEST_CASE("recenter map is a unit-determinant shift of coefficients") {
  std::mt19937 rng(31);
  for (auto& spec : {spec_Qsqrt2(), spec_Qcbrt2()}) {
    auto K = make(spec);
    int k = K->k();
    for (int n : {2, 3}) {
      for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> x_r(k), eta_n(k);
        for (double& t : x_r) t = random_uniform(rng, -0.5, 0.5);
        for (double& t : eta_n) t = random_uniform(rng, -4.0, 4.0);
        RecenterMap M = recenter_map(*K, n, x_r, eta_n);
        CHECK(M.det == doctest::Approx(1.0).epsilon(1e-9));

        int d = (n - 1) * k;
        std::vector<double> theta(d);
        for (double& t : theta) t = random_uniform(rng, -2.0, 2.0);
        // eta' = linear theta + offset; check the defining identity
        // f_eta(x) = g_theta(x - x_r) with matching leading blocks.
        std::vector<double> eta(size_t(n) * k, 0.0);
        for (int i = 0; i < d; ++i) {
          eta[i] = M.offset[i];
          for (int j = 0; j < d; ++j) eta[i] += M.linear[i][j] * theta[j];
        }
        for (int j = 0; j < k; ++j) eta[size_t(n - 1) * k + j] = eta_n[j];
        std::vector<double> theta_full(theta);
        theta_full.insert(theta_full.end(), eta_n.begin(), eta_n.end());

        // The re-expansion also produces a degree-zero coefficient, which the
        // map drops because a constant never changes |I|; add its trace back
        // before comparing pointwise.
        std::vector<double> c0(k, 0.0), pw(K->one_coords_d()), tmp(k), neg(k);
        for (int j = 0; j < k; ++j) neg[j] = -x_r[j];
        for (int l = 1; l <= n; ++l) {
          alg_mul(*K, pw.data(), neg.data(), tmp.data());
          pw = tmp;  // (-x_r)^l
          const double* block = l < n ? theta.data() + size_t(l - 1) * k : eta_n.data();
          alg_mul(*K, block, pw.data(), tmp.data());
          for (int j = 0; j < k; ++j) c0[j] += tmp[j];
        }
        double tr_c0 = 0.0;
        for (int j = 0; j < k; ++j) tr_c0 += K->trace_vec_d()[j] * c0[j];

        TracePolynomial f = frequency_polynomial(K, n, eta);
        TracePolynomial g = frequency_polynomial(K, n, theta_full);
        for (int t = 0; t < 5; ++t) {
          std::vector<double> x(k), shifted(k);
          for (int j = 0; j < k; ++j) {
            x[j] = random_uniform(rng, -1.5, 1.5);
            shifted[j] = x[j] - x_r[j];
          }
          double lhs = eval_phase(f, x) + tr_c0;
          double rhs = eval_phase(g, shifted);
          CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
        }
      }
    }
  }

  auto K = make(spec_Qsqrt2());
  RecenterMap trivial = recenter_map(*K, 1, {0.1, 0.2}, {1.0, 0.0});
  CHECK(trivial.det == doctest::Approx(1.0));
  CHECK(trivial.offset.empty());
  CHECK_THROWS_AS((void)recenter_map(*K, 2, {0.1}, {1.0, 0.0}), Error);
}

TEST_CASE("oscillatory power integral matches the closed form") {
  for (int n : {2, 3, 4}) {
    double exact = std::tgamma(1.0 + 1.0 / n) * std::cos(M_PI / (2.0 * n));
    CHECK(cos_power_integral(n) == doctest::Approx(exact).epsilon(1e-10));
  }
  CHECK_THROWS_AS((void)cos_power_integral(1), Error);
}

TEST_CASE("lq tails: rational field, square phase") {
  auto Q = make(spec_Q());
  Cutoff psi = plateau_cutoff(1, 0.0, 1.0, 1.5);
  LqOptions opt;
  opt.dirs_per_shell = 8;
  opt.radii_per_dir = 3;
  opt.aligned_dirs = 3;
  opt.seed = 7;
  opt.quad.tol = 2e-5;

  LqReport rep = lq_tail_experiment(Q, 2, {3.0, 5.0}, 4, psi, opt);
  REQUIRE(rep.rows.size() == 4);
  CHECK(rep.rows[0].samples == 33);
  CHECK(rep.ratios[0].size() == 3);

  // Exponent 5 integrates; exponent 3 sits at the divergence threshold, where
  // the shell sums grow.
  CHECK(rep.convergent[1]);
  CHECK(!rep.convergent[0]);
  CHECK(rep.ratios[0].back() > 1.0);

  LqReport again = lq_tail_experiment(Q, 2, {3.0, 5.0}, 4, psi, opt);
  for (size_t m = 0; m < rep.rows.size(); ++m)
    for (size_t qi = 0; qi < 2; ++qi)
      CHECK(again.rows[m].shell_sum[qi] == rep.rows[m].shell_sum[qi]);

  CHECK_THROWS_AS((void)lq_tail_experiment(Q, 2, {}, 4, psi, opt), Error);
  CHECK_THROWS_AS((void)lq_tail_experiment(Q, 2, {3.0}, 1, psi, opt), Error);
  CHECK_THROWS_AS((void)lq_tail_experiment(Q, 2, {-1.0}, 4, psi, opt), Error);
}

TEST_CASE("lq tails: real quadratic field") {
  auto K = make(spec_Qsqrt2());
  Cutoff psi = plateau_cutoff(2, 0.0, 1.0, 1.5);
  LqOptions opt;
  opt.dirs_per_shell = 4;
  opt.radii_per_dir = 2;
  opt.aligned_dirs = 2;
  opt.seed = 3;
  opt.quad.tol = 2e-5;

  LqReport rep = lq_tail_experiment(K, 2, {3.0, 5.0}, 3, psi, opt);
  CHECK(rep.convergent[1]);
  CHECK(!rep.convergent[0]);
  CHECK(rep.ratios[0].back() > 1.0);
}

TEST_CASE("sharpness: rational field across dyadic scales") {
  auto Q = make(spec_Q());
  Cutoff psi = plateau_cutoff(1, 0.0, 2.0, 3.0);
  SharpnessConfig cfg;
  cfg.Q_list = {4.0, 8.0, 16.0};
  cfg.trials = 2;
  cfg.a = 4.0;
  cfg.c1 = 1e-4;
  cfg.seed = 12;
  QuadratureOptions quad;
  quad.tol = 1e-5;
  quad.max_depth = 22;

  SharpnessReport rep = sharpness_experiment(Q, 2, cfg, psi, quad);
  REQUIRE(rep.rows.size() == 6);
  for (const auto& row : rep.rows) {
    CHECK(row.converged);
    CHECK(row.product > 0.0);
  }
  CHECK(!rep.C_KB_reduced);
  CHECK(rep.max_product / rep.min_product <= 20.0);
  CHECK(rep.slope == doctest::Approx(-1.0).epsilon(0.2));
}

TEST_CASE("sharpness: real quadratic field with adapted cutoff") {
  auto K = make(spec_Qsqrt2());
  Cutoff psi = plateau_cutoff(2, 0.0, 2.0, 3.0);
  SharpnessConfig cfg;
  cfg.Q_list = {8.0};
  cfg.trials = 1;
  cfg.a = 2.0;
  cfg.c1 = 1e-4;
  cfg.shrink_cutoff = true;
  cfg.seed = 4;
  QuadratureOptions quad;
  quad.tol = 1e-4;
  quad.max_panels = 60000000;
  quad.max_depth = 22;

  SharpnessReport rep = sharpness_experiment(K, 2, cfg, psi, quad);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].converged);
  CHECK(rep.rows[0].product > 0.0);
  CHECK(rep.rows[0].abs_II > 0.0);
}

TEST_CASE("sharpness configuration validation") {
  auto Q = make(spec_Q());
  Cutoff psi = plateau_cutoff(1, 0.0, 2.0, 3.0);
  QuadratureOptions quad;
  SharpnessConfig bad;

  bad.A = 2.0;
  CHECK_THROWS_AS((void)validate_sharpness_config(bad, 1), Error);

  bad = SharpnessConfig{};
  bad.c1 = 0.01;
  bad.a = 4.0;  // 0.01 * 16 > 0.01
  CHECK_THROWS_AS((void)validate_sharpness_config(bad, 1), Error);

  bad = SharpnessConfig{};
  bad.trials = 0;
  CHECK_THROWS_AS((void)validate_sharpness_config(bad, 1), Error);

  bad = SharpnessConfig{};
  bad.Q_list = {0.5};
  CHECK_THROWS_AS((void)validate_sharpness_config(bad, 1), Error);

  SharpnessConfig ok;
  ok.Q_list = {4.0};
  CHECK_THROWS_AS((void)sharpness_experiment(Q, 1, ok, psi, quad), Error);
}
