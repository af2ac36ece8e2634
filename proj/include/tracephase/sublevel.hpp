#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tracephase/multiindex.hpp"
#include "tracephase/tracepoly.hpp"

namespace tracephase {

// N unit directions in R^d whose N x d row matrix has condition number
// sigma_max / sigma_min <= max_cond.  Deterministic in `seed`; the whole set
// is redrawn until the bound holds, up to 100*N attempts (RankDeficient
// afterwards).  d == 1 returns N copies of (1).
struct DirectionalBasis {
  std::vector<std::vector<double>> dirs;
  double cond = 1.0;
  int attempts = 0;
};

DirectionalBasis directional_basis(int d, int N, std::uint64_t seed, double max_cond = 1e6);

// Witness for the root-closeness estimate.  With T_j the Taylor coefficients
// of Q at z0, eps = |T_0| and mu = max_{j>=1} |T_j| attained first at j = k,
// some derivative Q^(j) with 0 <= j < k vanishes within C * (eps/mu)^(1/k)
// of z0.  C defaults to a constant calibrated for deg Q <= 6.
struct DerivativeZeroWitness {
  int k = 0;            // Taylor index attaining mu
  double eps = 0, mu = 0;
  double distance = 0;  // distance from z0 to the nearest qualifying zero
  int derivative = 0;   // its order j (0 means Q itself)
  Complex zero{0, 0};
  double bound = 0;     // C * (eps/mu)^(1/k)
  bool within = false;
};

DerivativeZeroWitness nearest_derivative_zero(const std::vector<Complex>& coeffs, Complex z0,
                                              double C = 8.0);

// Sublevel set over the unit cube [0,1]^{kn}: a point x is inside when, for
// every listed embedding sigma with Taylor data T of P_sigma at sigma**(x),
//   max_{|beta|=1} |T_beta| <= eps_sigma   and   |T_alpha_sigma| >= mu_sigma.
struct SublevelSpec {
  std::vector<int> embeddings;
  std::vector<MultiIndex> alpha;  // per embedding, |alpha| >= 2
  std::vector<double> eps;        // first-order (gradient) threshold
  std::vector<double> mu;         // floor kept by the alpha coefficient
};

// Monte Carlo estimate of the measure, with a 95% Wilson interval and the
// comparison value prod_sigma (eps/mu)^(1/(|alpha|-1)).
struct SublevelResult {
  double measure = 0;
  double ci_low = 0, ci_high = 0;
  long long hits = 0, samples = 0;
  double reference = 0;
  double ratio = 0;  // measure / reference
};

// Sampling is split over 64 fixed shards with seeds derived from `seed`, so
// the result is a pure function of (f, spec, samples, seed).
SublevelResult sublevel_measure(const TracePolynomial& f, const SublevelSpec& spec,
                                long long samples, std::uint64_t seed);

// 95% Wilson score interval for `hits` successes out of `n` trials.
std::pair<double, double> wilson_interval(long long hits, long long n);

}  // namespace tracephase
