#pragma once

#include <vector>

#include "tracephase/cutoff.hpp"
#include "tracephase/tracepoly.hpp"

namespace tracephase {

struct PointwiseFunctional {
  double value = 0.0;
  MultiIndex argmax;  // empty when no qualifying coefficient is nonzero
};

// max over |alpha| >= min_order of |T_alpha|^{1/|alpha|}, T the Taylor
// coefficients of P at z; ties resolved to the graded-lex-first index.
PointwiseFunctional pointwise_functional(const ComplexPolynomial& P,
                                         const std::vector<Complex>& z, int min_order);
PointwiseFunctional pointwise_H(const ComplexPolynomial& P, const std::vector<Complex>& z);
PointwiseFunctional pointwise_J(const ComplexPolynomial& P, const std::vector<Complex>& z);

struct UniformResult {
  double value = 0.0;
  std::vector<double> argmin;  // point in supp psi approximately achieving the inf
};

// inf over supp psi of the pointwise functional of the sigma-embedded
// polynomial, by deterministic grid search with local refinement.
UniformResult uniform_functional(const TracePolynomial& f, int sigma, const Cutoff& psi,
                                 int min_order);
UniformResult uniform_H(const TracePolynomial& f, int sigma, const Cutoff& psi);
UniformResult uniform_J(const TracePolynomial& f, int sigma, const Cutoff& psi);

// Product of uniform H values over a nonempty conjugation-closed embedding set.
double combined_H(const TracePolynomial& f, const std::vector<int>& S, const Cutoff& psi);

// Single-variable references: derivative-scaling functionals with exponents
// 1/j (real line) and 2/j (complex plane).  Coefficients ascending.
double classical_real_H(const std::vector<double>& coeffs, double t);
double classical_complex_H(const std::vector<Complex>& coeffs, Complex z);

// Product region over the embedding-class decomposition: component of y - center
// in class c must have norm <= radii[c].
struct Polydisc {
  std::vector<double> center;  // kn entries
  std::vector<double> radii;   // one per embedding class
};

// Radii C / J_sigma(x) on the classes listed in S_classes, 1 elsewhere.
// J_sigma is the pointwise order->=2 functional of the class representative.
Polydisc natural_polydisc(const TracePolynomial& f, const std::vector<double>& x,
                          const std::vector<int>& S_classes, double C);

bool polydisc_contains(const SubspaceDecomposition& D, const Polydisc& P,
                       const std::vector<double>& y);
// Exact for product sets: disjoint iff some class separates the centers by
// more than the radius sum.
bool polydiscs_disjoint(const SubspaceDecomposition& D, const Polydisc& A, const Polydisc& B);

struct VitaliResult {
  std::vector<int> selected;
  bool covered = false;   // every input center lies in a selected disc scaled by 3
  int max_overlap_6x = 0; // most selected discs meeting one disc scaled by 6
};

// Greedy first-come selection of pairwise disjoint discs with common radii.
VitaliResult vitali_cover(const SubspaceDecomposition& D,
                          const std::vector<std::vector<double>>& centers,
                          const std::vector<double>& radii, int max_centers = 1000000);

struct JStabilityResult {
  double worst_ratio = 1.0;  // two-sided, over all sampled disc/class pairs
  int discs_checked = 0;
  int points_checked = 0;
};

// How much the order->=2 functional moves inside its own polydisc of scale eps.
JStabilityResult j_stability(const TracePolynomial& f, const SubspaceDecomposition& D,
                             const Cutoff& psi, double eps, int base_points,
                             int samples_per_disc, unsigned seed);

}  // namespace tracephase
