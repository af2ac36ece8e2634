// Acceptance gate: one pass/fail line per criterion, exit 0 iff all pass.
// argv[1] is the pinned-constants fixture (defaults to the repo copy).

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "tracephase/cutoff.hpp"
#include "tracephase/functionals.hpp"
#include "tracephase/harness.hpp"
#include "tracephase/numberfield.hpp"
#include "tracephase/quadrature.hpp"
#include "tracephase/rng.hpp"
#include "tracephase/sublevel.hpp"
#include "tracephase/tarry.hpp"
#include "tracephase/tracepoly.hpp"

using namespace tracephase;
using nlohmann::json;

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::shared_ptr<const NumberField> make_field(std::vector<Rational> minpoly) {
  FieldSpec spec;
  spec.minpoly = std::move(minpoly);
  return std::make_shared<NumberField>(build_field(spec));
}

double fit_log_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += std::log(xs[i]);
    my += std::log(ys[i]);
  }
  mx /= double(xs.size());
  my /= double(xs.size());
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double dx = std::log(xs[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(ys[i]) - my);
  }
  return sxy / sxx;
}

TracePolynomial random_univariate(std::shared_ptr<const NumberField> K, DetRng& rng,
                                  int max_deg) {
  TracePolynomial f = make_trace_polynomial(K, 1);
  int deg = 1 + rng.uniform_int(max_deg);
  for (int d = 1; d <= deg; ++d) {
    std::vector<double> c(K->k());
    for (double& v : c) v = rng.uniform(-2.0, 2.0);
    f.set({d}, std::move(c));
  }
  return f;
}

struct Gate {
  int failures = 0;

  void run(int idx, const char* name, const std::function<std::string()>& body) {
    double t0 = now_s();
    bool ok = true;
    std::string detail;
    try {
      detail = body();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    std::printf("[%d] %-28s %s  (%.1fs) %s\n", idx, name, ok ? "PASS" : "FAIL", now_s() - t0,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

void require(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error(what);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// Shared experiment configs: criterion 6 measures against the pinned fixture,
// so these must match the configs the fixture was calibrated with
// (fixtures/pin/*.json).
json polydisc_config() {
  return {{"experiment", "polydisc"},
          {"field", {{"minpoly", {"1", "0", "1"}}}},
          {"seed", 5},
          {"params",
           {{"poly", {{"n", 1}, {"coeffs", {{"(2)", {1.0, 0.0}}}}}},
            {"samples", 60},
            {"box", 1.5},
            {"C", 1.0}}}};
}

json jstability_config() {
  return {{"experiment", "jfunc"},
          {"field", {{"minpoly", {"1", "0", "1"}}}},
          {"seed", 17},
          {"params",
           {{"op", "stability"},
            {"poly", {{"n", 1}, {"coeffs", {{"(3)", {1.0, 0.0}}}}}},
            {"eps", 0.05},
            {"base_points", 20},
            {"samples_per_disc", 5}}}};
}

}  // namespace

int main(int argc, char** argv) {
  std::string fixture_path = argc > 1 ? argv[1] : "fixtures/pinned_constants.json";
  Gate gate;

  auto Q = make_field({Rational(0), Rational(1)});
  auto Qs = make_field({Rational(-2), Rational(0), Rational(1)});
  auto Qi = make_field({Rational(1), Rational(0), Rational(1)});
  auto Qc = make_field({Rational(-2), Rational(0), Rational(0), Rational(1)});

  // 1. Exact multiplication matrices and trace forms on the quadratic fields.
  gate.run(1, "structure exactness", [&] {
    std::vector<std::pair<Rational, Rational>> qs = {
        {Rational(1), Rational(0)},  {Rational(0), Rational(1)}, {Rational(2), Rational(-3)},
        {Rational(1, 2), Rational(5, 7)}, {Rational(-4), Rational(9)}};
    for (const auto& [q1, q2] : qs) {
      RatMatrix ms = mult_matrix(*Qs, {q1, q2});
      RatMatrix want_s(2, 2);
      want_s.at(0, 0) = q1; want_s.at(0, 1) = 2 * q2;
      want_s.at(1, 0) = q2; want_s.at(1, 1) = q1;
      require(ms == want_s, "mult matrix mismatch over the real quadratic field");

      RatMatrix mi = mult_matrix(*Qi, {q1, q2});
      RatMatrix want_i(2, 2);
      want_i.at(0, 0) = q1; want_i.at(0, 1) = -q2;
      want_i.at(1, 0) = q2; want_i.at(1, 1) = q1;
      require(mi == want_i, "mult matrix mismatch over the imaginary quadratic field");
    }
    RatMatrix ts(2, 2), ti(2, 2);
    ts.at(0, 0) = 2; ts.at(1, 1) = 4;
    ti.at(0, 0) = 2; ti.at(1, 1) = -2;
    require(trace_form(*Qs) == ts, "trace form mismatch: expected diag(2, 4)");
    require(trace_form(*Qi) == ti, "trace form mismatch: expected diag(2, -2)");
    return std::string("exact over rationals, 5 multipliers x 2 fields");
  });

  // 2. Embedding-sum identity for the phase, plus the imaginary-quadratic
  //    specialization phi_f = 2 Re f.
  gate.run(2, "phase identity", [&] {
    DetRng rng(101);
    double worst = 0;
    for (auto K : {Q, Qs, Qi, Qc}) {
      for (int i = 0; i < 25; ++i) {
        TracePolynomial f = random_univariate(K, rng, 4);
        std::vector<double> x(K->k());
        for (double& v : x) v = rng.uniform(-2.0, 2.0);
        double direct = eval_phase(f, x);
        Complex via = eval_phase_embedding_route(f, x);
        double diff = std::abs(via - Complex(direct, 0.0)) / (1 + std::abs(direct));
        worst = std::max(worst, diff);
        require(diff <= 1e-9, "embedding-route identity exceeded 1e-9");
      }
    }
    double worst2 = 0;
    for (int i = 0; i < 100; ++i) {
      TracePolynomial f = random_univariate(Qi, rng, 4);
      std::vector<double> x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
      Complex fz = embed_polynomial(f, 0).eval(sigma_vec(*Qi, 0, x));
      double diff = std::abs(eval_phase(f, x) - 2 * fz.real()) / (1 + std::abs(2 * fz.real()));
      worst2 = std::max(worst2, diff);
      require(diff <= 1e-9, "2 Re f specialization exceeded 1e-9");
    }
    return fmt("identity worst %.1e, 2Re worst %.1e over 100+100 draws", worst, worst2);
  });

  // 3. Decay slope of the oscillatory integral against the uniform functional.
  gate.run(3, "main bound decay slopes", [&] {
    std::vector<double> lambdas{16, 64, 256, 1024};
    QuadratureOptions opt{2e-5, 40000000, 18, 1};
    auto check = [&](std::shared_ptr<const NumberField> K, std::vector<double> coeff,
                     std::vector<int> S, const Cutoff& psi, double want,
                     const char* label) -> double {
      TracePolynomial f = make_trace_polynomial(K, 1);
      f.set({2}, std::move(coeff));
      DecayReport rep = verify_main_bound(f, S, psi, lambdas, opt);
      require(rep.all_converged, std::string(label) + ": integral not converged");
      require(rep.bounded, std::string(label) + ": |I| H exceeded 3x its median");
      require(std::abs(rep.slope_I - want) <= 0.10,
              fmt("%s: slope %.4f outside %.2f +- 0.10", label, rep.slope_I, want));
      return rep.slope_I;
    };
    double s1 = check(Q, {1.0}, {0}, plateau_cutoff(1, 0, 2.0, 3.0), -0.5, "rational x^2");
    double s2 = check(Qs, {1.0, 0.0}, {0, 1}, plateau_cutoff(2, 0, 0.175, 0.35), -1.0,
                      "real quadratic x^2");
    double s3 = check(Qi, {1.0, 0.0}, {0, 1}, plateau_cutoff(2, 0, 0.175, 0.35), -1.0,
                      "imaginary quadratic z^2");
    double s4 = check(Qs, {-std::sqrt(2.0), 1.0}, {1}, plateau_cutoff(2, 0, 0.1, 0.2), -0.5,
                      "degenerate family");
    return fmt("slopes %.3f/%.3f/%.3f/%.3f vs -0.5/-1/-1/-0.5", s1, s2, s3, s4);
  });

  // 4. Two-sided gradient comparability with the explicit constants.
  gate.run(4, "gradient comparability", [&] {
    DetRng rng(202);
    int checked = 0;
    for (auto K : {Q, Qs, Qi, Qc}) {
      SubspaceDecomposition D = decompose(*K);
      for (int i = 0; i < 100; ++i) {
        TracePolynomial f = random_univariate(K, rng, 4);
        std::vector<std::vector<double>> pts(3, std::vector<double>(K->k()));
        for (auto& p : pts)
          for (double& v : p) v = rng.uniform(-2.0, 2.0);
        ComparabilityReport rep = check_gradient_comparability(f, D, pts);
        require(rep.all_ok, "comparability failed at a sample point");
        checked += int(rep.samples.size());
      }
    }
    return fmt("%d sample points over 4 fields, both directions", checked);
  });

  // 5. Sublevel measure growth under the epsilon sweep.
  gate.run(5, "sublevel scaling", [&] {
    std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
    auto sweep = [&](std::shared_ptr<const NumberField> K, std::vector<double> coeff,
                     std::vector<int> S, double want, const char* label) -> double {
      TracePolynomial f = make_trace_polynomial(K, 1);
      f.set({3}, std::move(coeff));
      SublevelSpec spec;
      spec.embeddings = S;
      spec.alpha.assign(S.size(), MultiIndex{3});
      std::vector<double> measures;
      for (double e : eps) {
        spec.eps.assign(S.size(), e);
        spec.mu.assign(S.size(), 1.0);
        SublevelResult r = sublevel_measure(f, spec, 1000000, 31);
        require(r.measure > 0, std::string(label) + ": empty sublevel sample");
        measures.push_back(r.measure);
      }
      double slope = fit_log_slope(eps, measures);
      require(std::abs(slope - want) <= 0.15,
              fmt("%s: slope %.4f outside %.2f +- 0.15", label, slope, want));
      return slope;
    };
    double s1 = sweep(Q, {1.0}, {0}, 0.5, "rational x^3");
    double s2 = sweep(Qi, {1.0, 0.0}, {0, 1}, 1.0, "imaginary quadratic z^3");
    return fmt("slopes %.3f/%.3f vs 0.5/1.0 at 1e6 samples", s1, s2);
  });

  // 6. J-stability ratio and polydisc overlap against the pinned fixture.
  gate.run(6, "stability and overlap", [&] {
    PinnedConstants pins = PinnedConstants::load(fixture_path);
    require(pins.doc().is_object() && !pins.doc().empty(),
            "pinned fixture missing or empty: " + fixture_path);

    json jcfg = jstability_config();
    jcfg["pinned"] = fixture_path;  // enforces the 25% regression gate
    RunResult jr = run(parse_config(jcfg));
    double ratio = jr.summary["worst_ratio"].get<double>();
    require(ratio <= 10.0, fmt("J ratio %.3f exceeds 10", ratio));
    std::stringstream ss(jr.csv.substr(jr.csv.find('\n') + 1));
    std::string cell;
    for (int i = 0; i < 4; ++i) std::getline(ss, cell, i == 3 ? '\n' : ',');
    require(std::stoi(cell) >= 100, "fewer than 100 stability trials");

    json pcfg = polydisc_config();
    pcfg["pinned"] = fixture_path;
    RunResult pr = run(parse_config(pcfg));
    double overlap = pr.summary["constants"]["N_overlap"].get<double>();
    auto pinned = pins.find({"polydisc", "minpoly(1,0,1)", 2, 1});
    require(pinned.has_value(), "fixture lacks the polydisc entry");
    require(overlap <= pinned->at("N_overlap") + 1e-12,
            fmt("overlap %.0f exceeds pinned %.0f", overlap, pinned->at("N_overlap")));
    return fmt("J ratio %.3f <= 10 on %s trials, overlap %.0f <= pinned %.0f", ratio,
               cell.c_str(), overlap, pinned->at("N_overlap"));
  });

  // 7. Transform of the cutoff against the trace pairing equals the plain
  //    transform at the trace-form image.
  gate.run(7, "trace transform identity", [&] {
    DetRng rng(21);
    double worst = 0;
    int unconverged = 0;
    for (auto K : {Q, Qs, Qi}) {
      Cutoff psi = plateau_cutoff(K->k(), 0.0, K->k() == 1 ? 1.0 : 0.8,
                                  K->k() == 1 ? 2.0 : 1.4);
      RatMatrix T = trace_form(*K);
      for (int i = 0; i < 50; ++i) {
        std::vector<double> x(K->k());
        for (double& v : x) v = rng.uniform(-1.2, 1.2);
        QuadratureResult F = trace_transform(*K, psi, x, {1e-7, 2000000, 14, 1});
        if (!F.converged) ++unconverged;
        std::vector<double> xi(K->k(), 0.0);
        for (int r = 0; r < K->k(); ++r)
          for (int c = 0; c < K->k(); ++c) xi[r] += to_double(T.at(r, c)) * x[c];
        Complex ref = fourier_reference(psi, xi, K->k() == 1 ? 1e-10 : 1e-9);
        double rel = std::abs(F.value - ref) / (1 + std::abs(ref));
        worst = std::max(worst, rel);
        require(rel <= 1e-6, fmt("transform identity off by %.2e", rel));
      }
    }
    require(unconverged == 0, "trace transform quadrature not converged");
    return fmt("worst relative error %.1e over 150 points, 3 fields", worst);
  });

  // 8. Tail-sum threshold between the exponents and sharpness of the scaling.
  gate.run(8, "tail threshold and sharpness", [&] {
    PinnedConstants pins = PinnedConstants::load(fixture_path);
    auto lq_check = [&](std::shared_ptr<const NumberField> K, int max_shell, int dirs,
                        const char* label) {
      LqOptions opt;
      opt.dirs_per_shell = dirs;
      opt.radii_per_dir = 4;
      opt.aligned_dirs = 4;
      opt.seed = 1;
      opt.quad = QuadratureOptions{2e-5, 2000000, 14, 1};
      Cutoff psi = plateau_cutoff(K->k(), 0.0, 1.0, 1.5);
      LqReport rep = lq_tail_experiment(K, 2, {3.0, 5.0}, max_shell, psi, opt);
      require(!rep.convergent[0], std::string(label) + ": q=3 tail flagged convergent");
      require(rep.convergent[1], std::string(label) + ": q=5 tail flagged divergent");
    };
    lq_check(Q, 4, 12, "rational lq");
    // The real quadratic near zone extends through shell 2, so the trailing
    // ratio window needs shells out to 5 before the decay regime dominates.
    lq_check(Qs, 5, 12, "real quadratic lq");

    auto sharp_check = [&](std::shared_ptr<const NumberField> K, SharpnessConfig cfg,
                           QuadratureOptions quad, const char* label) -> SharpnessReport {
      cfg.Q_list = {4.0, 8.0, 16.0};
      cfg.c1 = 1e-4;
      SharpnessReport rep = sharpness_experiment(K, 2, cfg, plateau_cutoff(K->k(), 0, 2, 3),
                                                 quad);
      for (const auto& row : rep.rows)
        require(row.converged, std::string(label) + ": integral not converged");
      double spread = rep.max_product / rep.min_product;
      require(spread <= 20.0, fmt("%s: product spread %.2f exceeds 20", label, spread));
      double want = -double(K->k());
      require(std::abs(rep.slope - want) <= 0.2,
              fmt("%s: slope %.4f outside %.1f +- 0.2", label, rep.slope, want));
      return rep;
    };
    SharpnessConfig c1;
    c1.a = 4.0;
    c1.trials = 2;
    c1.seed = 12;
    SharpnessReport r1 = sharp_check(Q, c1, {1e-5, 2000000, 22, 1}, "rational sharpness");
    pins.check({"tarry-sharpness", "minpoly(0,1)", 1, 2}, {{"C_pin", r1.min_product}});

    SharpnessConfig c2;
    c2.a = 2.0;
    c2.trials = 1;
    c2.seed = 4;
    c2.shrink_cutoff = true;
    SharpnessReport r2 =
        sharp_check(Qs, c2, {1e-4, 200000000, 22, 1}, "real quadratic sharpness");
    return fmt("lq thresholds hold; sharpness slopes %.3f/%.3f, spreads %.2f/%.2f",
               r1.slope, r2.slope, r1.max_product / r1.min_product,
               r2.max_product / r2.min_product);
  });

  // 9. Byte-identical CSV under identical seed and varying thread count.
  gate.run(9, "determinism", [&] {
    json mc = polydisc_config();
    RunResult a = run(parse_config(mc));
    mc["threads"] = 4;
    RunResult b = run(parse_config(mc));
    require(a.csv == b.csv, "Monte Carlo CSV differs across thread counts");

    json quad = {{"experiment", "integrate"},
                 {"field", {{"minpoly", {"-2", "0", "1"}}}},
                 {"seed", 3},
                 {"params",
                  {{"poly", {{"n", 1}, {"coeffs", {{"(2)", {1.0, 0.0}}}}}},
                   {"cutoff", "0,0.8,1.4"}}}};
    RunResult c = run(parse_config(quad));
    quad["threads"] = 4;
    RunResult d = run(parse_config(quad));
    require(c.csv == d.csv, "quadrature CSV differs across thread counts");
    require(c.csv == run(parse_config(quad)).csv, "quadrature CSV differs across reruns");
    return std::string("Monte Carlo and quadrature CSVs byte-identical, threads 1 vs 4");
  });

  if (gate.failures == 0) {
    std::printf("acceptance: all 9 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", gate.failures);
  return 1;
}
