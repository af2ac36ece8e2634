#pragma once

#include <utility>
#include <vector>

#include "tracephase/rational.hpp"

namespace tracephase {

// 0 for t <= 0, 1 for t >= 1, smooth strictly increasing in between.
double smooth_step(double t);

// Radial plateau bump: 1 on the ball |x - center| <= r1, 0 outside r2,
// smooth_step transition between.
struct Cutoff {
  int dim = 1;
  std::vector<double> center;
  double r1 = 1.0, r2 = 2.0;

  double eval(const double* x) const;
  double eval(const std::vector<double>& x) const { return eval(x.data()); }
  bool in_support(const double* x) const;
  bool in_support(const std::vector<double>& x) const { return in_support(x.data()); }
  // [lo, hi] per axis containing the support.
  std::pair<std::vector<double>, std::vector<double>> bounding_box() const;
  // Lebesgue measure of the support ball.
  double support_volume() const;
};

Cutoff make_cutoff(std::vector<double> center, double r1, double r2);
// All center coordinates equal to c.
Cutoff plateau_cutoff(int dim, double c, double r1, double r2);

}  // namespace tracephase
