#include <Eigen/Dense>
#include <cmath>

#include "tracephase/numberfield.hpp"

namespace tracephase {

namespace {

void fix_sign(std::vector<double>& v) {
  for (double c : v) {
    if (std::abs(c) > 1e-12) {
      if (c < 0)
        for (double& x : v) x = -x;
      return;
    }
  }
}

}  // namespace

SubspaceDecomposition decompose(const NumberField& K) {
  int k = K.k();
  SubspaceDecomposition D;
  D.k = k;
  int nc = K.num_classes();

  D.W_real.resize(nc);
  for (int c = 0; c < nc; ++c) {
    auto members = K.class_members(c);
    if (members.size() == 1) {
      std::vector<double> w(k);
      for (int i = 0; i < k; ++i) w[i] = K.w()[members[0]][i].real();
      D.W_real[c] = {w};
    } else {
      std::vector<double> wr(k), wi(k);
      for (int i = 0; i < k; ++i) {
        wr[i] = 2.0 * K.w()[members[0]][i].real();
        wi[i] = 2.0 * K.w()[members[0]][i].imag();
      }
      D.W_real[c] = {wr, wi};
    }
  }

  // V_{class,R}: orthogonal complement of the span of the other classes' W bases.
  D.V_real.resize(nc);
  for (int c = 0; c < nc; ++c) {
    int dim = int(D.W_real[c].size());
    int rows = k - dim;
    if (rows == 0) {
      // Single class: V is all of R^k; use the standard basis.
      for (int j = 0; j < dim; ++j) {
        std::vector<double> e(k, 0.0);
        e[j] = 1.0;
        D.V_real[c].push_back(e);
      }
      continue;
    }
    Eigen::MatrixXd A(rows, k);
    int r = 0;
    for (int c2 = 0; c2 < nc; ++c2) {
      if (c2 == c) continue;
      for (const auto& w : D.W_real[c2]) {
        for (int i = 0; i < k; ++i) A(r, i) = w[i];
        ++r;
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    Eigen::MatrixXd N = svd.matrixV().rightCols(dim);
    Eigen::MatrixXd P = N * N.transpose();
    // Deterministic basis: project standard basis vectors, pivot by norm,
    // Gram-Schmidt in pivot order, sign-fix.
    std::vector<int> order(k);
    for (int i = 0; i < k; ++i) order[i] = i;
    std::vector<double> norms(k);
    for (int i = 0; i < k; ++i) norms[i] = P.col(i).norm();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (norms[a] != norms[b]) return norms[a] > norms[b];
      return a < b;
    });
    std::vector<Eigen::VectorXd> basis;
    for (int idx : order) {
      if (int(basis.size()) == dim) break;
      Eigen::VectorXd v = P.col(idx);
      for (const auto& b : basis) v -= b.dot(v) * b;
      double nv = v.norm();
      if (nv < 1e-9) continue;
      basis.push_back(v / nv);
    }
    if (int(basis.size()) != dim)
      throw Error(ErrorCode::DegenerateBasis, "V_real basis extraction failed");
    for (const auto& b : basis) {
      std::vector<double> v(k);
      for (int i = 0; i < k; ++i) v[i] = b(i);
      fix_sign(v);
      D.V_real[c].push_back(v);
    }
  }

  // V_{sigma,C}: nullspace of the rows {w_{sigma'}}, plain bilinear product.
  D.V_cplx.resize(k);
  for (int s = 0; s < k; ++s) {
    if (k == 1) {
      D.V_cplx[s] = {Complex(1.0, 0.0)};
      continue;
    }
    Eigen::MatrixXcd A(k - 1, k);
    int r = 0;
    for (int s2 = 0; s2 < k; ++s2) {
      if (s2 == s) continue;
      for (int i = 0; i < k; ++i) A(r, i) = K.w()[s2][i];
      ++r;
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeFullV);
    Eigen::VectorXcd v = svd.matrixV().col(k - 1);
    for (int i = 0; i < k; ++i) {
      if (std::abs(v(i)) > 1e-12) {
        Complex phase = std::conj(v(i)) / std::abs(v(i));
        v *= phase;
        break;
      }
    }
    D.V_cplx[s].resize(k);
    for (int i = 0; i < k; ++i) D.V_cplx[s][i] = v(i);
  }

  Eigen::MatrixXcd E(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) E(i, j) = K.w()[j][i];
  Complex det = E.determinant();
  D.discriminant = det * det;
  Eigen::JacobiSVD<Eigen::MatrixXcd> esvd(E);
  D.min_singular_value = esvd.singularValues().minCoeff();
  return D;
}

std::vector<std::vector<double>> v_components(const SubspaceDecomposition& D,
                                              const std::vector<double>& y) {
  int k = D.k;
  if (int(y.size()) != k) throw Error(ErrorCode::DimensionMismatch, "v_components argument");
  Eigen::MatrixXd M(k, k);
  std::vector<int> offset;
  int col = 0;
  for (const auto& basis : D.V_real) {
    offset.push_back(col);
    for (const auto& v : basis) {
      for (int i = 0; i < k; ++i) M(i, col) = v[i];
      ++col;
    }
  }
  Eigen::VectorXd rhs(k);
  for (int i = 0; i < k; ++i) rhs(i) = y[i];
  Eigen::VectorXd c = M.partialPivLu().solve(rhs);
  std::vector<std::vector<double>> comps;
  for (size_t cls = 0; cls < D.V_real.size(); ++cls) {
    std::vector<double> comp(k, 0.0);
    for (size_t j = 0; j < D.V_real[cls].size(); ++j) {
      double coef = c(offset[cls] + int(j));
      for (int i = 0; i < k; ++i) comp[i] += coef * D.V_real[cls][j][i];
    }
    comps.push_back(std::move(comp));
  }
  return comps;
}

RealpartDirection realpart_direction(const NumberField& K, const SubspaceDecomposition& D,
                                     int sigma, const std::vector<Complex>& x) {
  if (sigma < 0 || sigma >= K.k()) throw Error(ErrorCode::BadEmbeddingIndex, "embedding index");
  if (K.is_real(sigma)) throw Error(ErrorCode::RealEmbedding, "sigma must be strictly complex");
  int k = K.k(), n = int(x.size());
  double xnorm = 0.0;
  for (const auto& xl : x) xnorm += std::norm(xl);
  xnorm = std::sqrt(xnorm);
  if (xnorm == 0.0) throw Error(ErrorCode::ZeroVector, "x must be nonzero");

  const auto& vbasis = D.V_real[K.class_of(sigma)];
  const auto& w = K.w()[sigma];
  std::vector<Complex> sw(vbasis.size());
  for (size_t j = 0; j < vbasis.size(); ++j) {
    Complex acc = 0.0;
    for (int i = 0; i < k; ++i) acc += vbasis[j][i] * w[i];
    sw[j] = acc;  // sigma**(v_j)
  }

  RealpartDirection out;
  out.z.assign(size_t(k) * n, 0.0);
  int nonzero = 0;
  Complex total = 0.0;
  for (int l = 0; l < n; ++l) {
    if (std::abs(x[l]) == 0.0) continue;
    ++nonzero;
    int best = 0;
    double bestval = 0.0;
    for (size_t j = 0; j < sw.size(); ++j) {
      double val = (x[l] * sw[j]).real();
      if (std::abs(val) > std::abs(bestval)) {
        best = int(j);
        bestval = val;
      }
    }
    double sign = bestval >= 0.0 ? 1.0 : -1.0;
    for (int i = 0; i < k; ++i) out.z[size_t(l) * k + i] = sign * vbasis[best][i];
    total += x[l] * (sign * sw[best]);
  }
  double zn = std::sqrt(double(nonzero));
  for (double& c : out.z) c /= zn;
  out.achieved = std::abs(total.real() / zn) / xnorm;
  return out;
}

}  // namespace tracephase
