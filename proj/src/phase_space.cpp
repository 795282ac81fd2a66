#include "releq/phase_space.hpp"

#include <Eigen/LU>
#include <cmath>
#include <vector>

#include "releq/errors.hpp"

namespace releq {

Mat standard_omega(int pairs, double scale) {
  Mat w = Mat::Zero(2 * pairs, 2 * pairs);
  for (int j = 0; j < pairs; ++j) {
    w(2 * j, 2 * j + 1) = scale;
    w(2 * j + 1, 2 * j) = -scale;
  }
  return w;
}

Mat pair_rotation_generator(const std::vector<int>& weights) {
  const int pairs = static_cast<int>(weights.size());
  Mat a = Mat::Zero(2 * pairs, 2 * pairs);
  for (int j = 0; j < pairs; ++j) {
    a(2 * j, 2 * j + 1) = -weights[j];
    a(2 * j + 1, 2 * j) = weights[j];
  }
  return a;
}

PhaseSpace PhaseSpace::standard(int pairs, double scale) {
  PhaseSpace ps;
  ps.dim = 2 * pairs;
  ps.omega = standard_omega(pairs, scale);
  ps.inner = scale * Mat::Identity(ps.dim, ps.dim);
  return ps;
}

void PhaseSpace::validate() const {
  if (dim <= 0 || dim % 2 != 0)
    throw InvalidModel("phase space dimension must be even and positive");
  if (omega.rows() != dim || omega.cols() != dim)
    throw InvalidModel("omega has wrong shape");
  if (inner.rows() != dim || inner.cols() != dim)
    throw InvalidModel("inner has wrong shape");
  if ((omega + omega.transpose()).cwiseAbs().maxCoeff() != 0.0)
    throw InvalidModel("omega is not exactly antisymmetric");
  Eigen::FullPivLU<Mat> lu(omega);
  if (!lu.isInvertible())
    throw InvalidModel("omega is singular");
  const double symdev = (inner - inner.transpose()).cwiseAbs().maxCoeff();
  if (symdev > 1e-12 * (1.0 + inner.cwiseAbs().maxCoeff()))
    throw InvalidModel("inner product is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(inner);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw InvalidModel("inner product is not positive definite");
}

} // namespace releq
