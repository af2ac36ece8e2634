#include "tracephase/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include "tracephase/functionals.hpp"
#include "tracephase/numberfield.hpp"

namespace tracephase {

namespace {

constexpr int kMaxDim = 6;
constexpr double kTwoPi = 6.283185307179586476925286766559;
// A leaf may carry at most this much phase variation (in whole periods).
// The 7-point leaf rule resolves a quarter period with error below 1e-11 of
// the panel measure, far inside the skip model's margin.
constexpr double kMaxLeafVariation = 0.25;

struct Rule {
  std::vector<double> x, w;
};

Rule compute_rule(int m) {
  Rule r;
  r.x.resize(m);
  r.w.resize(m);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 64; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= m; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2 * j - 1) * x * p1 - (j - 1) * p2) / j;
      }
      dp = m * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    r.x[i] = -x;
    r.x[m - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.w[i] = w;
    r.w[m - 1 - i] = w;
  }
  return r;
}

const Rule& rule_for(int m) {
  static const Rule r7 = compute_rule(7);
  static const Rule r15 = compute_rule(15);
  if (m == 7) return r7;
  if (m == 15) return r15;
  static std::map<int, Rule> others;
  auto it = others.find(m);
  if (it == others.end()) it = others.emplace(m, compute_rule(m)).first;
  return it->second;
}

struct Panel {
  std::array<double, kMaxDim> lo{}, hi{};
  std::array<signed char, kMaxDim> depth{};
};

// Upper bound sum_a h_a * sup_panel |d_a phi| on the total phase variation,
// split by axis.  Exponent-wise monotone bound, so it is rigorous.
double variation_bound(const RealPolynomial& phase, const Panel& p, int d, double* per_axis) {
  double amax[kMaxDim], half[kMaxDim];
  for (int a = 0; a < d; ++a) {
    double mid = 0.5 * (p.lo[a] + p.hi[a]);
    half[a] = 0.5 * (p.hi[a] - p.lo[a]);
    amax[a] = std::fabs(mid) + half[a];
  }
  for (int a = 0; a < d; ++a) per_axis[a] = 0.0;
  for (const auto& [alpha, c] : phase.terms) {
    double prod = std::fabs(c);
    for (int a = 0; a < d; ++a)
      for (int e = 0; e < alpha[a]; ++e) prod *= amax[a];
    if (prod == 0.0) continue;
    for (int a = 0; a < d; ++a) {
      if (alpha[a] == 0) continue;
      per_axis[a] += alpha[a] * (prod / amax[a]) * half[a];
    }
  }
  double total = 0.0;
  for (int a = 0; a < d; ++a) total += per_axis[a];
  return total;
}

enum class PanelKind { Outside, Plateau, Mixed };

PanelKind classify_panel(const Cutoff& psi, const Panel& p, int d) {
  double dmin2 = 0.0, dmax2 = 0.0;
  for (int a = 0; a < d; ++a) {
    double c = psi.center[a];
    double nearest = std::clamp(c, p.lo[a], p.hi[a]);
    dmin2 += (c - nearest) * (c - nearest);
    double far = std::max(std::fabs(c - p.lo[a]), std::fabs(c - p.hi[a]));
    dmax2 += far * far;
  }
  if (dmin2 > psi.r2 * psi.r2) return PanelKind::Outside;
  if (dmax2 <= psi.r1 * psi.r1) return PanelKind::Plateau;
  return PanelKind::Mixed;
}

Complex tensor_rule(const RealPolynomial& phase, const Cutoff& psi, const Panel& p, int d, int m,
                    bool plateau, long long& evals) {
  const Rule& r = rule_for(m);
  double mid[kMaxDim], half[kMaxDim];
  for (int a = 0; a < d; ++a) {
    mid[a] = 0.5 * (p.lo[a] + p.hi[a]);
    half[a] = 0.5 * (p.hi[a] - p.lo[a]);
  }
  int idx[kMaxDim] = {0};
  double x[kMaxDim];
  double re = 0.0, im = 0.0;
  while (true) {
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      x[a] = mid[a] + half[a] * r.x[idx[a]];
      w *= r.w[idx[a]] * half[a];
    }
    double amp = plateau ? 1.0 : psi.eval(x);
    ++evals;
    if (amp != 0.0) {
      double phi = kTwoPi * phase.eval(x);
      re += w * amp * std::cos(phi);
      im += w * amp * std::sin(phi);
    }
    int a = d - 1;
    while (a >= 0 && ++idx[a] == m) idx[a--] = 0;
    if (a < 0) break;
  }
  return Complex(re, im);
}

double error_model(int d, double V, bool plateau, double maxside, double w_trans) {
  double osc = 3e-15 * std::pow(8.0 * V, 14);
  double rough = plateau ? 0.0 : std::pow(2.0 * maxside / w_trans, 14);
  return d * (osc + rough);
}

void validate_phase(const RealPolynomial& phase, int d) {
  for (const auto& [alpha, c] : phase.terms) {
    if (int(alpha.size()) != d)
      throw Error(ErrorCode::DimensionMismatch, "phase term arity does not match the domain");
    for (int e : alpha)
      if (e < 0) throw Error(ErrorCode::ConfigInvalid, "negative exponent in phase");
  }
}

}  // namespace

const std::vector<double>& gauss_nodes(int m) { return rule_for(m).x; }
const std::vector<double>& gauss_weights(int m) { return rule_for(m).w; }

Complex panel_rule(const RealPolynomial& phase, const Cutoff& psi, const std::vector<double>& lo,
                   const std::vector<double>& hi, int points) {
  int d = psi.dim;
  if (int(lo.size()) != d || int(hi.size()) != d)
    throw Error(ErrorCode::DimensionMismatch, "panel bounds");
  validate_phase(phase, d);
  Panel p;
  for (int a = 0; a < d; ++a) {
    p.lo[a] = lo[a];
    p.hi[a] = hi[a];
  }
  long long evals = 0;
  bool plateau = classify_panel(psi, p, d) == PanelKind::Plateau;
  return tensor_rule(phase, psi, p, d, points, plateau, evals);
}

double panel_error_model(const RealPolynomial& phase, const Cutoff& psi,
                         const std::vector<double>& lo, const std::vector<double>& hi) {
  int d = psi.dim;
  Panel p;
  for (int a = 0; a < d; ++a) {
    p.lo[a] = lo[a];
    p.hi[a] = hi[a];
  }
  double per_axis[kMaxDim];
  double V = variation_bound(phase, p, d, per_axis);
  double maxside = 0.0;
  for (int a = 0; a < d; ++a) maxside = std::max(maxside, hi[a] - lo[a]);
  bool plateau = classify_panel(psi, p, d) == PanelKind::Plateau;
  return error_model(d, V, plateau, maxside, psi.r2 - psi.r1);
}

QuadratureResult oscillatory_integral(const RealPolynomial& phase, const Cutoff& psi,
                                      const QuadratureOptions& opt) {
  int d = psi.dim;
  if (phase.dim != d)
    throw Error(ErrorCode::DimensionMismatch, "phase and cutoff dimensions differ");
  if (d < 1 || d > kMaxDim)
    throw Error(ErrorCode::DimensionTooLarge, "quadrature supports 1 to 6 dimensions");
  if (!(opt.tol > 0) || opt.max_panels < 1 || opt.max_depth < 1)
    throw Error(ErrorCode::ConfigInvalid, "quadrature options");
  validate_phase(phase, d);

  auto [lo0, hi0] = psi.bounding_box();
  double box_volume = 1.0;
  for (int a = 0; a < d; ++a) box_volume *= hi0[a] - lo0[a];
  double rate = opt.tol / box_volume;  // per-measure error budget

  QuadratureResult res;
  double sum_re = 0, comp_re = 0, sum_im = 0, comp_im = 0;
  auto kahan = [](double v, double& s, double& c) {
    double y = v - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  };
  double err_diff = 0.0, err_skip2 = 0.0;
  bool budget_hit = false;

  std::vector<Panel> stack;
  stack.reserve(256);
  Panel root;
  for (int a = 0; a < d; ++a) {
    root.lo[a] = lo0[a];
    root.hi[a] = hi0[a];
    root.depth[a] = 0;
  }
  stack.push_back(root);
  long long created = 1;
  double w_trans = psi.r2 - psi.r1;

  while (!stack.empty()) {
    Panel p = stack.back();
    stack.pop_back();
    PanelKind kind = classify_panel(psi, p, d);
    if (kind == PanelKind::Outside) {
      ++res.panels;
      continue;
    }
    double per_axis[kMaxDim];
    double V = variation_bound(phase, p, d, per_axis);
    int axis = -1;
    double axis_score = -1.0;
    for (int a = 0; a < d; ++a) {
      if (p.depth[a] >= opt.max_depth) continue;
      double score = per_axis[a] > 0 ? per_axis[a] : 1e-300 * (p.hi[a] - p.lo[a]);
      if (score > axis_score) {
        axis_score = score;
        axis = a;
      }
    }
    bool can_split = axis >= 0 && created < opt.max_panels;
    auto push_children = [&]() {
      double m = 0.5 * (p.lo[axis] + p.hi[axis]);
      Panel a = p, b = p;
      a.hi[axis] = m;
      b.lo[axis] = m;
      ++a.depth[axis];
      ++b.depth[axis];
      stack.push_back(b);  // LIFO: lower half pops first
      stack.push_back(a);
      ++created;
    };
    if (V > kMaxLeafVariation) {
      if (can_split) {
        push_children();
        continue;
      }
      budget_hit = true;
    }

    double measure = 1.0;
    double maxside = 0.0;
    for (int a = 0; a < d; ++a) {
      measure *= p.hi[a] - p.lo[a];
      maxside = std::max(maxside, p.hi[a] - p.lo[a]);
    }
    bool plateau = kind == PanelKind::Plateau;
    double eta = error_model(d, V, plateau, maxside, w_trans);
    if (eta <= rate) {
      Complex v7 = tensor_rule(phase, psi, p, d, 7, plateau, res.evals);
      kahan(v7.real(), sum_re, comp_re);
      kahan(v7.imag(), sum_im, comp_im);
      err_skip2 += (eta * measure) * (eta * measure);
      ++res.panels;
      continue;
    }
    Complex v7 = tensor_rule(phase, psi, p, d, 7, plateau, res.evals);
    Complex v15 = tensor_rule(phase, psi, p, d, 15, plateau, res.evals);
    double diff = std::abs(v15 - v7);
    if (diff <= rate * measure || !can_split) {
      kahan(v15.real(), sum_re, comp_re);
      kahan(v15.imag(), sum_im, comp_im);
      err_diff += diff;
      if (diff > rate * measure) budget_hit = true;
      ++res.panels;
      continue;
    }
    push_children();
  }

  res.value = Complex(sum_re, sum_im);
  res.error_estimate = err_diff + std::sqrt(err_skip2);
  res.converged = !budget_hit && res.error_estimate <= opt.tol * (1.0 + std::abs(res.value));
  return res;
}

QuadratureResult oscillatory_integral(const TracePolynomial& f, const Cutoff& psi,
                                      const QuadratureOptions& opt) {
  return oscillatory_integral(compile_phase(f), psi, opt);
}

QuadratureResult trace_transform(const NumberField& K, const Cutoff& psi,
                                 const std::vector<double>& x, const QuadratureOptions& opt) {
  int k = K.k();
  if (int(x.size()) != k) throw Error(ErrorCode::DimensionMismatch, "transform argument size");
  if (psi.dim != k) throw Error(ErrorCode::DimensionMismatch, "cutoff dimension");
  RatMatrix T = trace_form(K);
  RealPolynomial lin;
  lin.dim = k;
  for (int j = 0; j < k; ++j) {
    double c = 0.0;
    for (int i = 0; i < k; ++i) c += to_double(T.at(i, j)) * x[i];
    if (c == 0.0) continue;
    MultiIndex e(k, 0);
    e[j] = 1;
    lin.terms.emplace_back(std::move(e), -c);
  }
  return oscillatory_integral(lin, psi, opt);
}

namespace {

template <typename F>
Complex adaptive_simpson_rec(const F& f, double a, double b, Complex fa, Complex fm, Complex fb,
                             Complex whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  Complex flm = f(lm), frm = f(rm);
  Complex left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  Complex right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  Complex delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
Complex adaptive_simpson(const F& f, double a, double b, double tol) {
  Complex fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  Complex whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 30);
}

Complex fourier_level(const Cutoff& psi, const std::vector<double>& xi, std::vector<double>& y,
                      int level, double tol) {
  auto [lo, hi] = psi.bounding_box();
  int k = psi.dim;
  if (level == k) {
    double dot = 0.0;
    for (int a = 0; a < k; ++a) dot += xi[a] * y[a];
    double amp = psi.eval(y);
    if (amp == 0.0) return Complex(0, 0);
    return amp * Complex(std::cos(-kTwoPi * dot), std::sin(-kTwoPi * dot));
  }
  auto f = [&](double t) {
    y[level] = t;
    return fourier_level(psi, xi, y, level + 1, tol / (8.0 * (hi[level] - lo[level])));
  };
  return adaptive_simpson(f, lo[level], hi[level], tol);
}

}  // namespace

Complex fourier_reference(const Cutoff& psi, const std::vector<double>& xi, double tol) {
  if (int(xi.size()) != psi.dim)
    throw Error(ErrorCode::DimensionMismatch, "frequency dimension");
  if (psi.dim > 2)
    throw Error(ErrorCode::DimensionTooLarge, "reference transform supports 1 or 2 dimensions");
  if (!(tol > 0)) throw Error(ErrorCode::ConfigInvalid, "reference tolerance");
  std::vector<double> y(psi.dim, 0.0);
  return fourier_level(psi, xi, y, 0, tol);
}

namespace {

double fit_slope(const std::vector<double>& logx, const std::vector<double>& logy) {
  size_t n = logx.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += logx[i];
    my += logy[i];
  }
  mx /= n;
  my /= n;
  double num = 0, den = 0;
  for (size_t i = 0; i < n; ++i) {
    num += (logx[i] - mx) * (logy[i] - my);
    den += (logx[i] - mx) * (logx[i] - mx);
  }
  return den > 0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

DecayReport verify_main_bound(const TracePolynomial& f, const std::vector<int>& S,
                              const Cutoff& psi, const std::vector<double>& lambdas,
                              const QuadratureOptions& opt) {
  if (lambdas.empty()) throw Error(ErrorCode::ConfigInvalid, "no scaling values given");
  for (double l : lambdas)
    if (!(l > 0)) throw Error(ErrorCode::ConfigInvalid, "scaling values must be positive");
  DecayReport rep;
  rep.all_converged = true;
  for (double lambda : lambdas) {
    TracePolynomial g = scale(f, lambda);
    auto q = oscillatory_integral(g, psi, opt);
    DecayRow row;
    row.lambda = lambda;
    row.value = q.value;
    row.abs_value = std::abs(q.value);
    row.converged = q.converged;
    row.H = combined_H(g, S, psi);
    row.vacuous = !(row.H > 0.0);
    row.product = row.vacuous ? 0.0 : row.abs_value * row.H;
    rep.all_converged = rep.all_converged && q.converged;
    rep.rows.push_back(row);
  }
  std::vector<double> lx, ly, lh, lhx, products;
  for (const auto& r : rep.rows) {
    if (r.abs_value > 0) {
      lx.push_back(std::log(r.lambda));
      ly.push_back(std::log(r.abs_value));
    }
    if (!r.vacuous) {
      lhx.push_back(std::log(r.lambda));
      lh.push_back(std::log(r.H));
      products.push_back(r.product);
    }
  }
  rep.slope_I = fit_slope(lx, ly);
  rep.slope_H = fit_slope(lhx, lh);
  if (!products.empty()) {
    std::sort(products.begin(), products.end());
    rep.max_product = products.back();
    size_t n = products.size();
    rep.median_product =
        n % 2 ? products[n / 2] : 0.5 * (products[n / 2 - 1] + products[n / 2]);
    rep.bounded = rep.max_product <= 3.0 * rep.median_product;
  }
  return rep;
}

}  // namespace tracephase
