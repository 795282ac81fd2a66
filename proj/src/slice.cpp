#include "releq/slice.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "releq/errors.hpp"

namespace releq {

namespace {

struct Metric {
  Mat sqrt;
  Mat inv_sqrt;
  explicit Metric(const Mat& inner) {
    Eigen::SelfAdjointEigenSolver<Mat> es(inner);
    sqrt = es.operatorSqrt();
    inv_sqrt = es.operatorInverseSqrt();
  }
};

} // namespace

SliceDecomposition build_slice(const System& sys, const Vec& z_e, const Vec& xi,
                               double tol_rank) {
  if (tol_rank <= 0.0) throw InvalidModel("tol_rank must be positive");
  const int d = sys.dim();
  const int k = sys.torus_rank();

  const Vec grad_h = sys.hamiltonian().grad(z_e);
  const Vec res = sys.augmented_gradient(z_e, xi);
  if (res.norm() > 1e-8 * (1.0 + grad_h.norm()))
    throw NotARelativeEquilibrium("augmented gradient norm " +
                                  std::to_string(res.norm()));

  const Metric metric(sys.phase().inner);

  // Isotropy algebra from the singular values of xi -> A_xi z_e.
  const Mat orbit = sys.group_orbit_tangent(z_e);
  Eigen::JacobiSVD<Mat> osvd(metric.sqrt * orbit,
                             Eigen::ComputeFullU | Eigen::ComputeFullV);
  int r = 0;
  for (int i = 0; i < osvd.singularValues().size(); ++i) {
    const double s = osvd.singularValues()(i);
    if (s > tol_rank / 10.0 && s < 10.0 * tol_rank)
      throw RankAmbiguous("orbit singular value " + std::to_string(s) +
                          " inside the guard band of tol_rank");
    if (s >= 10.0 * tol_rank) ++r;
  }

  SliceDecomposition dec;
  dec.base_point = z_e;
  dec.generator = xi;
  dec.tol_rank = tol_rank;
  dec.m_basis = osvd.matrixV().leftCols(r);
  dec.g_me_basis = osvd.matrixV().rightCols(k - r);
  dec.q_basis = Mat::Zero(k, 0);
  // Fix column signs so the dominant entry is positive (reproducible charts).
  auto fix_signs = [](Mat& b) {
    for (int c = 0; c < b.cols(); ++c) {
      int imax = 0;
      b.col(c).cwiseAbs().maxCoeff(&imax);
      if (b(imax, c) < 0.0) b.col(c) = -b.col(c);
    }
  };
  fix_signs(dec.m_basis);
  fix_signs(dec.g_me_basis);

  for (int j = 0; j < k - r; ++j) {
    const Vec az = orbit * dec.g_me_basis.col(j);
    if (az.norm() > 1e-10 * (1.0 + z_e.norm()))
      throw RankAmbiguous("isotropy direction moves the base point");
  }

  // Kernel of the momentum differential, in metric coordinates.
  const Mat dj = sys.momentum_jacobian(z_e);
  Eigen::JacobiSVD<Mat> jsvd(dj * metric.inv_sqrt,
                             Eigen::ComputeFullU | Eigen::ComputeFullV);
  int jrank = 0;
  for (int i = 0; i < jsvd.singularValues().size(); ++i)
    if (jsvd.singularValues()(i) >= 10.0 * tol_rank) ++jrank;
  if (jrank != r)
    throw RankAmbiguous("momentum differential rank " + std::to_string(jrank) +
                        " does not match orbit rank " + std::to_string(r));
  const Mat kernel_t = jsvd.matrixV().rightCols(d - r);

  // V = complement of the orbit inside ker DJ.
  Mat v_t;
  if (r == 0) {
    v_t = kernel_t;
  } else {
    Eigen::HouseholderQR<Mat> qr(metric.sqrt * orbit * dec.m_basis);
    const Mat orbit_on = qr.householderQ() * Mat::Identity(d, r);
    const Mat coords = kernel_t.transpose() * orbit_on;  // (d-r) x r
    Eigen::JacobiSVD<Mat> csvd(coords, Eigen::ComputeFullU);
    v_t = kernel_t * csvd.matrixU().rightCols(d - 2 * r);
  }
  dec.V_basis = metric.inv_sqrt * v_t;

  if (dec.V_basis.cols() > 0 &&
      (dj * dec.V_basis).cwiseAbs().maxCoeff() >
          1e-10 * (1.0 + dj.cwiseAbs().maxCoeff()))
    throw RankAmbiguous("slice directions leak momentum");

  // W: minimal-norm preimages of the m^* dual basis under DJ.
  if (r > 0) {
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(dj * metric.inv_sqrt);
    const Mat w_t = cod.solve(dec.m_basis);
    dec.W_basis = metric.inv_sqrt * w_t;
    const Mat a_map = dec.m_basis.transpose() * (dj * dec.W_basis);
    Eigen::JacobiSVD<Mat> asvd(a_map, Eigen::ComputeFullU | Eigen::ComputeFullV);
    dec.a_condition = asvd.singularValues()(0) /
                      asvd.singularValues()(asvd.singularValues().size() - 1);
    dec.correction = dec.W_basis * a_map.inverse();
  } else {
    dec.W_basis = Mat::Zero(d, 0);
    dec.correction = Mat::Zero(d, 0);
    dec.a_condition = 1.0;
  }

  // Chart radius: how far the transversality frame can be trusted, from the
  // smallest singular value at the origin and the drift rate of the group
  // direction columns.
  Mat frame(d, r + r + dec.dim_v());
  frame.leftCols(r) = metric.sqrt * orbit * dec.m_basis;
  frame.middleCols(r, r) = metric.sqrt * dec.correction;
  frame.rightCols(dec.dim_v()) = v_t;
  Eigen::JacobiSVD<Mat> fsvd(frame);
  const double sigma_min = fsvd.singularValues().minCoeff();
  Mat chart(d, r + dec.dim_v());
  chart.leftCols(r) = dec.correction;
  chart.rightCols(dec.dim_v()) = dec.V_basis;
  double lip2 = 0.0;
  for (int j = 0; j < r; ++j) {
    const Mat gen = metric.sqrt * sys.algebra_action(dec.m_basis.col(j)) * chart;
    lip2 += gen.squaredNorm();
  }
  dec.validity_radius = lip2 > 0.0
                            ? 0.5 * sigma_min / std::sqrt(lip2)
                            : std::numeric_limits<double>::infinity();
  return dec;
}

Vec slice_map(const SliceDecomposition& dec, const Vec& eta, const Vec& v) {
  const double rho = std::sqrt(eta.squaredNorm() + v.squaredNorm());
  if (rho > dec.validity_radius)
    throw OutOfChart("|(eta,v)| = " + std::to_string(rho) +
                     " exceeds validity radius " +
                     std::to_string(dec.validity_radius));
  return dec.base_point + dec.V_basis * v + dec.correction * eta;
}

Sm2Report verify_sm2(const System& sys, const SliceDecomposition& dec,
                     const Vec& eta, const Vec& v) {
  const int d = sys.dim();
  const int r = dec.dim_m();
  const Vec z = dec.base_point + dec.V_basis * v + dec.correction * eta;
  Eigen::SelfAdjointEigenSolver<Mat> es(sys.phase().inner);
  const Mat msqrt = es.operatorSqrt();
  Mat frame(d, r + r + dec.dim_v());
  for (int j = 0; j < r; ++j)
    frame.col(j) = msqrt * (sys.algebra_action(dec.m_basis.col(j)) * z);
  frame.middleCols(r, r) = msqrt * dec.correction;
  frame.rightCols(dec.dim_v()) = msqrt * dec.V_basis;
  Eigen::JacobiSVD<Mat> svd(frame);
  Sm2Report rep;
  rep.sigma_min = svd.singularValues().minCoeff();
  rep.holds = rep.sigma_min > dec.tol_rank;
  return rep;
}

} // namespace releq
