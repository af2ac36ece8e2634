#include "tracephase/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tracephase/rng.hpp"

namespace tracephase {

namespace {

// Per-class norms of the components of diff (kn entries, n blocks).
std::vector<double> class_component_norms(const SubspaceDecomposition& D,
                                          const std::vector<double>& diff) {
  int k = D.k;
  if (diff.size() % k != 0 || diff.empty())
    throw Error(ErrorCode::DimensionMismatch, "component norms need n blocks of k entries");
  int n = int(diff.size()) / k;
  size_t ncls = D.V_real.size();
  std::vector<double> norm2(ncls, 0.0);
  std::vector<double> block(k);
  for (int l = 0; l < n; ++l) {
    std::copy(diff.begin() + size_t(l) * k, diff.begin() + size_t(l + 1) * k, block.begin());
    auto comp = v_components(D, block);
    for (size_t c = 0; c < ncls; ++c)
      for (int i = 0; i < k; ++i) norm2[c] += comp[c][i] * comp[c][i];
  }
  for (double& v : norm2) v = std::sqrt(v);
  return norm2;
}

int grid_points_for(int dim) { return dim <= 3 ? 33 : 17; }

}  // namespace

PointwiseFunctional pointwise_functional(const ComplexPolynomial& P,
                                         const std::vector<Complex>& z, int min_order) {
  auto T = P.taylor_at(z);
  PointwiseFunctional out;
  for (const auto& [alpha, c] : T) {
    int order = mi_total(alpha);
    if (order < min_order) continue;
    double v = std::pow(std::abs(c), 1.0 / order);
    if (v > out.value) {
      out.value = v;
      out.argmax = alpha;
    }
  }
  return out;
}

PointwiseFunctional pointwise_H(const ComplexPolynomial& P, const std::vector<Complex>& z) {
  return pointwise_functional(P, z, 1);
}

PointwiseFunctional pointwise_J(const ComplexPolynomial& P, const std::vector<Complex>& z) {
  return pointwise_functional(P, z, 2);
}

UniformResult uniform_functional(const TracePolynomial& f, int sigma, const Cutoff& psi,
                                 int min_order) {
  const NumberField& K = *f.field;
  int dim = K.k() * f.n;
  if (dim > 4)
    throw Error(ErrorCode::DimensionTooLarge, "uniform functional search supports at most 4 dimensions");
  if (psi.dim != dim)
    throw Error(ErrorCode::DimensionMismatch, "cutoff dimension does not match the phase domain");
  ComplexPolynomial P = embed_polynomial(f, sigma);

  UniformResult best;
  best.value = std::numeric_limits<double>::infinity();
  auto consider = [&](const std::vector<double>& x) {
    if (!psi.in_support(x)) return;
    double v = pointwise_functional(P, sigma_vec(K, sigma, x), min_order).value;
    if (v < best.value) {
      best.value = v;
      best.argmin = x;
    }
  };
  auto sweep = [&](const std::vector<double>& lo, const std::vector<double>& hi, int g) {
    std::vector<int> idx(dim, 0);
    std::vector<double> x(dim);
    while (true) {
      for (int a = 0; a < dim; ++a)
        x[a] = lo[a] + (hi[a] - lo[a]) * (g == 1 ? 0.5 : double(idx[a]) / (g - 1));
      consider(x);
      int a = dim - 1;
      while (a >= 0 && ++idx[a] == g) idx[a--] = 0;
      if (a < 0) break;
    }
  };

  auto [lo0, hi0] = psi.bounding_box();
  int g = grid_points_for(dim);
  sweep(lo0, hi0, g);
  if (!best.argmin.empty()) {
    double width = 0.0;
    for (int a = 0; a < dim; ++a) width = std::max(width, hi0[a] - lo0[a]);
    double half = width / 2.0;
    for (int pass = 1; pass <= 3; ++pass) {
      half /= 8.0;
      std::vector<double> lo(dim), hi(dim);
      for (int a = 0; a < dim; ++a) {
        lo[a] = std::max(lo0[a], best.argmin[a] - half);
        hi[a] = std::min(hi0[a], best.argmin[a] + half);
      }
      sweep(lo, hi, g);
    }
  }
  if (!std::isfinite(best.value)) {
    best.value = 0.0;
    best.argmin = psi.center;
  }
  return best;
}

UniformResult uniform_H(const TracePolynomial& f, int sigma, const Cutoff& psi) {
  return uniform_functional(f, sigma, psi, 1);
}

UniformResult uniform_J(const TracePolynomial& f, int sigma, const Cutoff& psi) {
  return uniform_functional(f, sigma, psi, 2);
}

double combined_H(const TracePolynomial& f, const std::vector<int>& S, const Cutoff& psi) {
  const NumberField& K = *f.field;
  if (S.empty()) throw Error(ErrorCode::EmptySet, "combined functional needs a nonempty embedding set");
  std::vector<bool> in(K.k(), false);
  for (int s : S) {
    if (s < 0 || s >= K.k()) throw Error(ErrorCode::BadEmbeddingIndex, "combined functional set");
    if (in[s]) throw Error(ErrorCode::ConfigInvalid, "duplicate embedding in set");
    in[s] = true;
  }
  for (int s : S)
    if (!in[K.conj_index(s)])
      throw Error(ErrorCode::NotConjugationClosed, "embedding set must be closed under conjugation");
  double prod = 1.0;
  for (int s : S) prod *= uniform_H(f, s, psi).value;
  return prod;
}

namespace {

template <typename T>
std::vector<T> taylor_shift_1d(std::vector<T> c, T t) {
  int d = int(c.size()) - 1;
  for (int i = 0; i < d; ++i)
    for (int j = d - 1; j >= i; --j) c[j] += t * c[j + 1];
  return c;
}

}  // namespace

double classical_real_H(const std::vector<double>& coeffs, double t) {
  if (coeffs.empty()) throw Error(ErrorCode::EmptyPolynomial, "classical functional of nothing");
  auto c = taylor_shift_1d(coeffs, t);
  double h = 0.0;
  for (size_t j = 1; j < c.size(); ++j) h = std::max(h, std::pow(std::fabs(c[j]), 1.0 / j));
  return h;
}

double classical_complex_H(const std::vector<Complex>& coeffs, Complex z) {
  if (coeffs.empty()) throw Error(ErrorCode::EmptyPolynomial, "classical functional of nothing");
  auto c = taylor_shift_1d(coeffs, z);
  double h = 0.0;
  for (size_t j = 1; j < c.size(); ++j) h = std::max(h, std::pow(std::abs(c[j]), 2.0 / j));
  return h;
}

Polydisc natural_polydisc(const TracePolynomial& f, const std::vector<double>& x,
                          const std::vector<int>& S_classes, double C) {
  const NumberField& K = *f.field;
  if (int(x.size()) != K.k() * f.n)
    throw Error(ErrorCode::DimensionMismatch, "polydisc base point size");
  if (C <= 0) throw Error(ErrorCode::ConfigInvalid, "polydisc scale must be positive");
  int ncls = K.num_classes();
  std::vector<bool> scaled(ncls, false);
  for (int c : S_classes) {
    if (c < 0 || c >= ncls) throw Error(ErrorCode::BadEmbeddingIndex, "polydisc class index");
    if (scaled[c]) throw Error(ErrorCode::ConfigInvalid, "duplicate class in polydisc set");
    scaled[c] = true;
  }
  Polydisc P;
  P.center = x;
  P.radii.assign(ncls, 1.0);
  for (int c = 0; c < ncls; ++c) {
    if (!scaled[c]) continue;
    int rep = K.class_members(c)[0];
    double J = pointwise_J(embed_polynomial(f, rep), sigma_vec(K, rep, x)).value;
    if (J <= 0.0)
      throw Error(ErrorCode::DegenerateQ, "second-order functional vanishes at the base point");
    P.radii[c] = C / J;
  }
  return P;
}

bool polydisc_contains(const SubspaceDecomposition& D, const Polydisc& P,
                       const std::vector<double>& y) {
  if (y.size() != P.center.size())
    throw Error(ErrorCode::DimensionMismatch, "polydisc membership point size");
  std::vector<double> diff(y.size());
  for (size_t i = 0; i < y.size(); ++i) diff[i] = y[i] - P.center[i];
  auto norms = class_component_norms(D, diff);
  for (size_t c = 0; c < norms.size(); ++c)
    if (norms[c] > P.radii[c]) return false;
  return true;
}

bool polydiscs_disjoint(const SubspaceDecomposition& D, const Polydisc& A, const Polydisc& B) {
  if (A.center.size() != B.center.size())
    throw Error(ErrorCode::DimensionMismatch, "polydisc pair dimensions differ");
  std::vector<double> diff(A.center.size());
  for (size_t i = 0; i < diff.size(); ++i) diff[i] = A.center[i] - B.center[i];
  auto norms = class_component_norms(D, diff);
  for (size_t c = 0; c < norms.size(); ++c)
    if (norms[c] > A.radii[c] + B.radii[c]) return true;
  return false;
}

VitaliResult vitali_cover(const SubspaceDecomposition& D,
                          const std::vector<std::vector<double>>& centers,
                          const std::vector<double>& radii, int max_centers) {
  if (int(centers.size()) > max_centers)
    throw Error(ErrorCode::BudgetExceeded, "too many candidate centers");
  if (radii.size() != D.V_real.size())
    throw Error(ErrorCode::DimensionMismatch, "one radius per embedding class required");
  VitaliResult out;
  auto norms_between = [&](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> diff(a.size());
    for (size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    return class_component_norms(D, diff);
  };
  auto meet = [&](const std::vector<double>& a, const std::vector<double>& b, double fa, double fb) {
    auto ns = norms_between(a, b);
    for (size_t c = 0; c < ns.size(); ++c)
      if (ns[c] > (fa + fb) * radii[c]) return false;
    return true;
  };
  for (int i = 0; i < int(centers.size()); ++i) {
    bool ok = true;
    for (int s : out.selected)
      if (meet(centers[i], centers[s], 1.0, 1.0)) {
        ok = false;
        break;
      }
    if (ok) out.selected.push_back(i);
  }
  out.covered = true;
  for (int i = 0; i < int(centers.size()); ++i) {
    bool hit = false;
    for (int s : out.selected) {
      auto ns = norms_between(centers[i], centers[s]);
      bool inside = true;
      for (size_t c = 0; c < ns.size(); ++c) inside = inside && ns[c] <= 3.0 * radii[c] + 1e-12;
      if (inside) {
        hit = true;
        break;
      }
    }
    out.covered = out.covered && hit;
  }
  for (int s : out.selected) {
    int cnt = 0;
    for (int t : out.selected)
      if (meet(centers[s], centers[t], 6.0, 1.0)) ++cnt;
    out.max_overlap_6x = std::max(out.max_overlap_6x, cnt);
  }
  return out;
}

JStabilityResult j_stability(const TracePolynomial& f, const SubspaceDecomposition& D,
                             const Cutoff& psi, double eps, int base_points,
                             int samples_per_disc, unsigned seed) {
  if (f.n != 1) throw Error(ErrorCode::NotUnivariate, "stability check needs a univariate phase");
  if (eps <= 0 || base_points < 1 || samples_per_disc < 1)
    throw Error(ErrorCode::ConfigInvalid, "stability check parameters");
  const NumberField& K = *f.field;
  int k = K.k();
  if (psi.dim != k) throw Error(ErrorCode::DimensionMismatch, "cutoff dimension");
  int ncls = K.num_classes();
  std::vector<ComplexPolynomial> P(ncls);
  std::vector<int> rep(ncls);
  for (int c = 0; c < ncls; ++c) {
    rep[c] = K.class_members(c)[0];
    P[c] = embed_polynomial(f, rep[c]);
  }
  auto Jvals = [&](const std::vector<double>& x) {
    std::vector<double> J(ncls);
    for (int c = 0; c < ncls; ++c)
      J[c] = pointwise_J(P[c], sigma_vec(K, rep[c], x)).value;
    return J;
  };

  DetRng rng(seed);
  auto [lo, hi] = psi.bounding_box();
  JStabilityResult out;
  int attempts = 0;
  while (out.discs_checked < base_points && attempts < 200 * base_points) {
    ++attempts;
    std::vector<double> x(k);
    for (int a = 0; a < k; ++a) x[a] = rng.uniform(lo[a], hi[a]);
    if (!psi.in_support(x)) continue;
    auto Jx = Jvals(x);
    if (*std::min_element(Jx.begin(), Jx.end()) <= 0.0) continue;
    ++out.discs_checked;
    for (int s = 0; s < samples_per_disc; ++s) {
      std::vector<double> y = x;
      for (int c = 0; c < ncls; ++c) {
        const auto& basis = D.V_real[size_t(c)];
        int m = int(basis.size());
        auto t = rng.ball(m);
        double r = eps / Jx[c];
        for (int b = 0; b < m; ++b)
          for (int a = 0; a < k; ++a) y[a] += r * t[b] * basis[b][a];
      }
      auto Jy = Jvals(y);
      ++out.points_checked;
      for (int c = 0; c < ncls; ++c) {
        if (Jy[c] <= 0.0) {
          out.worst_ratio = std::numeric_limits<double>::infinity();
          continue;
        }
        double r1 = Jy[c] / Jx[c], r2 = Jx[c] / Jy[c];
        out.worst_ratio = std::max({out.worst_ratio, r1, r2});
      }
    }
  }
  if (out.discs_checked == 0)
    throw Error(ErrorCode::ConfigInvalid, "no usable base points in the support");
  return out;
}

}  // namespace tracephase
