#include "releq/reduction.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "releq/errors.hpp"

namespace releq {

namespace {

Vec full_generator(const ReducedProblem& rp, const Vec& alpha, const Vec& beta) {
  return rp.dec.generator + rp.dec.g_me_basis * alpha + rp.dec.m_basis * beta;
}

Vec chart_point(const ReducedProblem& rp, const Vec& eta, const Vec& vfull,
                bool chart_guard) {
  const double rho = std::sqrt(eta.squaredNorm() + vfull.squaredNorm());
  if (chart_guard && rho > rp.dec.validity_radius)
    throw ChartExceeded("iterate left the chart, |(eta,v)| = " +
                        std::to_string(rho));
  return rp.dec.base_point + rp.dec.V_basis * vfull + rp.dec.correction * eta;
}

// Transverse momentum residual in m^* coordinates; written so that its
// Jacobian in beta is the identity at the origin.
Vec beta_residual(const ReducedProblem& rp, const Vec& z, const Vec& omega) {
  const Vec g = rp.sys->augmented_gradient(z, omega);
  return -rp.dec.correction.transpose() * g;
}

} // namespace

ReducedProblem build_reduced(const System& sys, const SliceDecomposition& dec,
                             double kernel_tol, NewtonOptions newton) {
  ReducedProblem rp;
  rp.sys = &sys;
  rp.dec = dec;
  rp.newton = newton;

  const Mat h = sys.augmented_hessian(dec.base_point, dec.generator);
  const double hnorm = h.cwiseAbs().maxCoeff();
  const Mat orbit = sys.group_orbit_tangent(dec.base_point);
  for (int i = 0; i < sys.torus_rank(); ++i) {
    if ((h * orbit.col(i)).norm() > 1e-7 * std::max(hnorm, 1.0) * (1.0 + orbit.col(i).norm()))
      throw InvalidModel("group directions are not in the kernel of the "
                         "augmented hessian; base point is not a relative "
                         "equilibrium of this system");
  }

  Mat l = dec.V_basis.transpose() * h * dec.V_basis;
  rp.L = 0.5 * (l + l.transpose());

  if (rp.L.rows() == 0) {  // empty slice: nothing transverse to reduce
    rp.eigenvalues = Vec(0);
    rp.kernel_tol = kernel_tol > 0.0 ? kernel_tol : 1e-300;
    rp.V0_basis = Mat(0, 0);
    rp.V1_basis = Mat(0, 0);
    return rp;
  }

  Eigen::SelfAdjointEigenSolver<Mat> es(rp.L);
  rp.eigenvalues = es.eigenvalues();
  const double lnorm =
      rp.eigenvalues.size() ? rp.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  rp.kernel_tol = kernel_tol > 0.0 ? kernel_tol : 1e-7 * std::max(lnorm, 1e-300);

  std::vector<int> kernel_idx, range_idx;
  for (int i = 0; i < rp.eigenvalues.size(); ++i) {
    const double a = std::abs(rp.eigenvalues(i));
    if (a <= rp.kernel_tol)
      kernel_idx.push_back(i);
    else if (a >= 10.0 * rp.kernel_tol)
      range_idx.push_back(i);
    else
      throw SpectralGapViolated("eigenvalue " + std::to_string(rp.eigenvalues(i)) +
                                " falls between kernel_tol and 10 kernel_tol");
  }
  rp.V0_basis = Mat(rp.L.rows(), kernel_idx.size());
  rp.V1_basis = Mat(rp.L.rows(), range_idx.size());
  for (size_t i = 0; i < kernel_idx.size(); ++i)
    rp.V0_basis.col(i) = es.eigenvectors().col(kernel_idx[i]);
  for (size_t i = 0; i < range_idx.size(); ++i)
    rp.V1_basis.col(i) = es.eigenvectors().col(range_idx[i]);
  return rp;
}

Vec solve_beta(const ReducedProblem& rp, const Vec& eta, const Vec& v,
               const Vec& alpha) {
  const int r = rp.dec.dim_m();
  Vec beta = Vec::Zero(r);
  if (r == 0) return beta;
  const Vec z = chart_point(rp, eta, v, false);
  const double fd = 1e-7;

  for (int iter = 0; iter < rp.newton.max_iter; ++iter) {
    const Vec res = beta_residual(rp, z, full_generator(rp, alpha, beta));
    if (res.norm() <= rp.newton.tol) return beta;
    Mat jac(r, r);
    for (int j = 0; j < r; ++j) {
      Vec bp = beta, bm = beta;
      bp(j) += fd;
      bm(j) -= fd;
      jac.col(j) = (beta_residual(rp, z, full_generator(rp, alpha, bp)) -
                    beta_residual(rp, z, full_generator(rp, alpha, bm))) /
                   (2.0 * fd);
    }
    beta -= jac.partialPivLu().solve(res);
    if (!beta.allFinite() || beta.norm() > 1e6)
      throw NewtonDiverged("beta solve diverged");
  }
  throw NewtonDiverged("beta solve did not converge in " +
                       std::to_string(rp.newton.max_iter) + " iterations");
}

namespace {

// Range-component residual at v = v0 + V1 y, with beta re-solved inside.
Vec v1_residual(const ReducedProblem& rp, const Vec& eta, const Vec& v0,
                const Vec& y, const Vec& alpha) {
  const Vec vfull = rp.V0_basis * v0 + rp.V1_basis * y;
  const Vec beta = solve_beta(rp, eta, vfull, alpha);
  const Vec z = chart_point(rp, eta, vfull, true);
  const Vec g =
      rp.dec.V_basis.transpose() *
      rp.sys->augmented_gradient(z, full_generator(rp, alpha, beta));
  return rp.V1_basis.transpose() * g;
}

} // namespace

Vec solve_v1(const ReducedProblem& rp, const Vec& eta, const Vec& v0,
             const Vec& alpha) {
  const int m = static_cast<int>(rp.V1_basis.cols());
  Vec y = Vec::Zero(m);
  if (m == 0) return y;
  const double fd = 1e-7;

  for (int iter = 0; iter < rp.newton.max_iter; ++iter) {
    const Vec res = v1_residual(rp, eta, v0, y, alpha);
    if (res.norm() <= rp.newton.tol) return y;
    Mat jac(m, m);
    for (int j = 0; j < m; ++j) {
      Vec yp = y, ym = y;
      yp(j) += fd;
      ym(j) -= fd;
      jac.col(j) = (v1_residual(rp, eta, v0, yp, alpha) -
                    v1_residual(rp, eta, v0, ym, alpha)) /
                   (2.0 * fd);
    }
    y -= jac.partialPivLu().solve(res);
    if (!y.allFinite() || y.norm() > 1e6)
      throw NewtonDiverged("v1 solve diverged");
  }
  throw NewtonDiverged("v1 solve did not converge");
}

Vec generator_map(const ReducedProblem& rp, const Vec& eta, const Vec& v0,
                  const Vec& alpha) {
  const Vec y = solve_v1(rp, eta, v0, alpha);
  const Vec vfull = rp.V0_basis * v0 + rp.V1_basis * y;
  const Vec beta = solve_beta(rp, eta, vfull, alpha);
  return full_generator(rp, alpha, beta);
}

Vec bifurcation_function(const ReducedProblem& rp, const Vec& eta,
                         const Vec& v0, const Vec& alpha) {
  const Vec y = solve_v1(rp, eta, v0, alpha);
  const Vec vfull = rp.V0_basis * v0 + rp.V1_basis * y;
  const Vec beta = solve_beta(rp, eta, vfull, alpha);
  const Vec z = chart_point(rp, eta, vfull, true);
  const Vec g =
      rp.dec.V_basis.transpose() *
      rp.sys->augmented_gradient(z, full_generator(rp, alpha, beta));
  return rp.V0_basis.transpose() * g;
}

Vec reduced_point(const ReducedProblem& rp, const Vec& eta, const Vec& v0,
                  const Vec& alpha) {
  const Vec y = solve_v1(rp, eta, v0, alpha);
  return chart_point(rp, eta, rp.V0_basis * v0 + rp.V1_basis * y, true);
}

Vec rigid_residual(const StructureConstants& sc, const Vec& j_value,
                   const Vec& xi_full, const Mat& m_basis) {
  sc.validate();
  if (j_value.size() != sc.rank || xi_full.size() != sc.rank ||
      m_basis.rows() != sc.rank)
    throw InvalidStructureConstants("dimension mismatch");
  const int r = static_cast<int>(m_basis.cols());
  Vec rho(r);
  for (int j = 0; j < r; ++j)
    rho(j) = -j_value.dot(sc.bracket(xi_full, m_basis.col(j)));
  return rho;
}

} // namespace releq
