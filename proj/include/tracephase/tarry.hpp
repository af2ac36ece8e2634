#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "tracephase/cutoff.hpp"
#include "tracephase/quadrature.hpp"
#include "tracephase/tracepoly.hpp"

namespace tracephase {

// ---------------------------------------------------------------------------
// Coefficient-space cover
// ---------------------------------------------------------------------------

enum class CoverMode { Real, Complex };

// Constant C_l multiplying Q^l in the grid-point derivative test.  It bounds
// the growth of the order-l Taylor coefficient under re-expansion one grid
// step away: C_l = sum_{l'=0}^{n-l} binom(l+l', l) s^{l'} with step s = 1
// (real grid) or sqrt(2) (complex grid).
double taylor_step_constant(CoverMode mode, int n, int l);

struct BoxMembership {
  bool in_cover = false;
  // Grid point index: (b) in real mode, (b1, b2) in complex mode, with
  // z_b = b/Q resp. (b1 + i b2)/Q.  Empty when not in the cover.
  std::vector<int> box;
};

// Scans the integer grid b in [-floor(Q), floor(Q)] (pairs of such integers
// in complex mode) for a point z_b where the Taylor coefficients T_l of
// P_a(z) = a_1 z + ... + a_n z^n satisfy |T_l(z_b)| <= C_l Q^l for every
// 1 <= l <= n.  Returns the first admissible grid point in scan order
// (ascending b; b1 outer, b2 inner).  Polynomials whose derivative data is
// bounded by Q^l somewhere on the unit plateau always land in the cover.
BoxMembership coefficient_box_membership(CoverMode mode, int n, double Q,
                                         const std::vector<Complex>& a);

// Tests one specific grid point instead of scanning.
bool coefficient_box_admits(CoverMode mode, int n, double Q,
                            const std::vector<Complex>& a, const std::vector<int>& box);

// ---------------------------------------------------------------------------
// Frequency-side classification
// ---------------------------------------------------------------------------

// f_eta(x) = A*(eta_1) x + ... + A*(eta_n) x^n, eta laid out in n blocks of k.
TracePolynomial frequency_polynomial(std::shared_ptr<const NumberField> K, int n,
                                     const std::vector<double>& eta);

// Blockwise change of variables through the trace form: xi_l = T eta_l, so
// that xi . Q(x) coincides with the phase of f_eta.
std::vector<double> eta_to_xi(const NumberField& K, int n, const std::vector<double>& eta);
std::vector<double> xi_to_eta(const NumberField& K, int n, const std::vector<double>& xi);

// The extension-operator phase xi . Q(x) expanded as a polynomial on R^k.
RealPolynomial extension_phase(const NumberField& K, int n, const std::vector<double>& xi);

// E(xi) = integral exp(2 pi i xi . Q(x)) psi(x) dx.
QuadratureResult extension_value(const NumberField& K, int n, const std::vector<double>& xi,
                                 const Cutoff& psi, const QuadratureOptions& opt = {});

struct EtaClass {
  std::vector<double> H;   // uniform derivative size per embedding
  std::vector<int> S;      // embeddings with H >= 1, ascending
  std::vector<int> alpha;  // aligned with S: floor(log2 H)
  bool unclassified = false;  // H < 1 for every embedding
};

// Dyadic class of a frequency point: per-embedding uniform H of f_eta over
// supp psi, thresholded at 1.
EtaClass classify_eta(std::shared_ptr<const NumberField> K, int n,
                      const std::vector<double>& eta, const Cutoff& psi);

struct SfrakResult {
  double measure = 0;  // Monte Carlo estimate of the class's volume in the box
  double ci_low = 0, ci_high = 0;   // Wilson 95% interval, scaled by box volume
  long long hits = 0, samples = 0;
  double box_volume = 0;
  double bound = 0;  // prod over S of 2^{(n(n+1)/2 + 1) alpha_sigma}
  double ratio = 0;  // measure / bound
};

// Volume of the set of eta in [-h, h]^{kn} whose class is exactly (S, alpha),
// by sharded Monte Carlo with classify_eta as the oracle.  Default half-width
// h = 2^{max alpha + 2}.  S must be nonempty, conjugation closed, and alpha
// constant on conjugate pairs.
SfrakResult sfrak_measure(std::shared_ptr<const NumberField> K, int n,
                          const std::vector<int>& S, const std::vector<int>& alpha,
                          const Cutoff& psi, long long samples, std::uint64_t seed,
                          double box_half_width = 0);

// ---------------------------------------------------------------------------
// L^q tail experiment
// ---------------------------------------------------------------------------

struct LqOptions {
  int dirs_per_shell = 16;  // random unit directions per dyadic shell
  int radii_per_dir = 4;    // stratified log-spaced radii per direction
  int aligned_dirs = 4;     // extra directions aligned with slow-decay rays
  std::uint64_t seed = 1;
  QuadratureOptions quad;
};

struct LqShellRow {
  int shell = 0;  // annulus 2^{shell-1} <= |xi| < 2^shell
  double r_lo = 0, r_hi = 0;
  long long samples = 0;
  std::vector<double> mean_abs_q;  // per q: mean of |E(xi)|^q over the samples
  std::vector<double> shell_sum;   // mean times annulus volume in R^{kn}
};

struct LqReport {
  std::vector<double> q_list;
  std::vector<LqShellRow> rows;
  // ratios[qi][m] = shell_sum of shell m+2 over shell m+1.
  std::vector<std::vector<double>> ratios;
  // Convergent when the last min(3, count) ratios all fall below 0.9.
  std::vector<bool> convergent;
};

// Estimates the dyadic-shell contributions to integral |E|^q d xi and flags
// each exponent as convergent or not from the trailing shell-sum ratios.
LqReport lq_tail_experiment(std::shared_ptr<const NumberField> K, int n,
                            const std::vector<double>& q_list, int max_shell,
                            const Cutoff& psi, const LqOptions& opt);

// ---------------------------------------------------------------------------
// Lower-bound (sharpness) experiment
// ---------------------------------------------------------------------------

struct RecenterMap {
  // eta' = linear theta' + offset: re-expansion of the degree-n part around a
  // shifted center, acting on the lower coefficient blocks.
  std::vector<std::vector<double>> linear;  // (n-1)k x (n-1)k, row-major blocks
  std::vector<double> offset;               // (n-1)k entries
  double det = 0;                           // always 1: unit upper triangular
};

// Coefficients eta_1..eta_{n-1} of A*(eta_n)(z - A*(x_r))^n
// + sum_l A*(theta_l)(z - A*(x_r))^l expanded in powers of z.
RecenterMap recenter_map(const NumberField& K, int n, const std::vector<double>& x_r,
                         const std::vector<double>& eta_n);

// integral_0^infty cos(s^n) ds, n >= 2, summed as the alternating series over
// half-period cells with repeated averaging.  Equals Gamma(1+1/n) cos(pi/2n).
double cos_power_integral(int n);

struct SharpnessConfig {
  double A = 4.0;            // lacunary base, must exceed 2
  int m_min = 1, m_max = 2;  // Q = A^m unless Q_list overrides
  std::vector<double> Q_list;
  double a = 4.0;    // stationary-bump scale: the main contribution lives in
                     // |x - x_r| <= a/Q
  double c1 = 1e-4;  // relative size of the lower coefficient blocks; the
                     // perturbation stays negligible when c1 a^{k+1} <= 0.01
  int trials = 2;    // frequency draws per Q
  double C_KB = 0;   // leading-block lower bound per embedding; 0 selects
                     // 0.1 * max_sigma |w_sigma| and halves on starvation
  bool shrink_cutoff = false;  // per-trial minimal plateau around x_r instead
                               // of the supplied cutoff (cuts quadrature cost
                               // at large Q; the tested quantity has support
                               // only near x_r)
  std::uint64_t seed = 1;
};

struct SharpnessRow {
  double Q = 0;
  std::vector<int> r;       // numerator of the rational center x_r = r/Q
  double abs_II = 0;        // |integral e(phi(x)) psi(x + x_r) dx|
  double product = 0;       // |II| * Q^k
  double error_estimate = 0;
  bool converged = false;
};

struct SharpnessReport {
  std::vector<SharpnessRow> rows;
  double C_KB_used = 0;
  bool C_KB_reduced = false;
  double min_product = 0, max_product = 0;
  double slope = 0;  // regression of log|II| on log Q (expected near -k)
};

void validate_sharpness_config(const SharpnessConfig& cfg, int k);

// Draws frequencies with a large nondegenerate leading block and small lower
// blocks, integrates the phase against a cutoff translated to the rational
// point x_r, and reports |II| Q^k, which stays within a constant factor across
// Q when the kernel lower bound of the theory is sharp.
SharpnessReport sharpness_experiment(std::shared_ptr<const NumberField> K, int n,
                                     const SharpnessConfig& cfg, const Cutoff& psi,
                                     const QuadratureOptions& quad);

}  // namespace tracephase
