#pragma once

#include <vector>

#include "tracephase/cutoff.hpp"
#include "tracephase/tracepoly.hpp"

namespace tracephase {

struct QuadratureOptions {
  double tol = 1e-6;               // absolute error target for the integral
  long long max_panels = 2000000;  // split budget
  int max_depth = 14;              // splits per axis
  int threads = 1;                 // accepted for interface compatibility; the
                                   // engine is serial so results never depend on it
};

struct QuadratureResult {
  Complex value{0.0, 0.0};
  double error_estimate = 0.0;
  long long panels = 0;  // leaves evaluated (pruned empty panels included)
  long long evals = 0;   // integrand evaluations
  bool converged = false;
};

// integral of e(phi(x)) psi(x) dx, e(t) = exp(2 pi i t), by adaptive panel
// subdivision with tensor Gauss-Legendre leaves.  Deterministic: identical
// inputs give bit-identical results regardless of the threads option.
QuadratureResult oscillatory_integral(const RealPolynomial& phase, const Cutoff& psi,
                                      const QuadratureOptions& opt = {});
QuadratureResult oscillatory_integral(const TracePolynomial& f, const Cutoff& psi,
                                      const QuadratureOptions& opt = {});

// Nodes and weights of the m-point Gauss-Legendre rule on [-1, 1].
const std::vector<double>& gauss_nodes(int m);
const std::vector<double>& gauss_weights(int m);

// Tensor rule value of e(phi) psi over one box; exposed so tests can exercise
// the leaf machinery directly.
Complex panel_rule(const RealPolynomial& phase, const Cutoff& psi,
                   const std::vector<double>& lo, const std::vector<double>& hi, int points);
// Conservative bound used to decide when the 7-point leaf needs no comparison
// pass, per unit of panel measure.
double panel_error_model(const RealPolynomial& phase, const Cutoff& psi,
                         const std::vector<double>& lo, const std::vector<double>& hi);

// Transform of the cutoff against the trace pairing: integral of
// psi(y) e(-(T x) . y) dy with T the trace form of K.
QuadratureResult trace_transform(const NumberField& K, const Cutoff& psi,
                                 const std::vector<double>& x, const QuadratureOptions& opt = {});

// Independent reference: iterated adaptive Simpson of psi(y) e(-xi . y).
Complex fourier_reference(const Cutoff& psi, const std::vector<double>& xi, double tol);

struct DecayRow {
  double lambda = 0;
  Complex value{0.0, 0.0};
  double abs_value = 0;
  double H = 0;         // combined uniform functional over S at this lambda
  double product = 0;   // |I| * H
  bool vacuous = false; // H vanished, bound carries no information
  bool converged = false;
};

struct DecayReport {
  std::vector<DecayRow> rows;
  double slope_I = 0;  // fitted d log|I| / d log lambda
  double slope_H = 0;  // fitted d log H / d log lambda
  double max_product = 0, median_product = 0;
  bool bounded = false;  // max <= 3 * median over informative rows
  bool all_converged = false;
};

// Scales f by each lambda, integrates against psi, and compares the decay of
// the integral with the reciprocal of the combined functional over S.
DecayReport verify_main_bound(const TracePolynomial& f, const std::vector<int>& S,
                              const Cutoff& psi, const std::vector<double>& lambdas,
                              const QuadratureOptions& opt = {});

}  // namespace tracephase
