#include "tracephase/cutoff.hpp"

#include <cmath>

namespace tracephase {

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double a = std::exp(-1.0 / t);
  double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

double Cutoff::eval(const double* x) const {
  double rho2 = 0.0;
  for (int i = 0; i < dim; ++i) {
    double d = x[i] - center[i];
    rho2 += d * d;
  }
  double rho = std::sqrt(rho2);
  return smooth_step((r2 - rho) / (r2 - r1));
}

bool Cutoff::in_support(const double* x) const {
  double rho2 = 0.0;
  for (int i = 0; i < dim; ++i) {
    double d = x[i] - center[i];
    rho2 += d * d;
  }
  return rho2 <= r2 * r2;
}

std::pair<std::vector<double>, std::vector<double>> Cutoff::bounding_box() const {
  std::vector<double> lo(dim), hi(dim);
  for (int i = 0; i < dim; ++i) {
    lo[i] = center[i] - r2;
    hi[i] = center[i] + r2;
  }
  return {lo, hi};
}

double Cutoff::support_volume() const {
  return std::pow(M_PI, dim / 2.0) * std::pow(r2, dim) / std::tgamma(dim / 2.0 + 1.0);
}

Cutoff make_cutoff(std::vector<double> center, double r1, double r2) {
  if (center.empty()) throw Error(ErrorCode::ConfigInvalid, "cutoff needs a nonempty center");
  if (!(0.0 < r1 && r1 < r2))
    throw Error(ErrorCode::ConfigInvalid, "cutoff radii must satisfy 0 < r1 < r2");
  Cutoff psi;
  psi.dim = int(center.size());
  psi.center = std::move(center);
  psi.r1 = r1;
  psi.r2 = r2;
  return psi;
}

Cutoff plateau_cutoff(int dim, double c, double r1, double r2) {
  if (dim < 1) throw Error(ErrorCode::ConfigInvalid, "cutoff dimension must be positive");
  return make_cutoff(std::vector<double>(dim, c), r1, r2);
}

}  // namespace tracephase
