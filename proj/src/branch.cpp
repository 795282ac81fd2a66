#include "releq/branch.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
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

// Metric-orthonormal basis of the complement of the group orbit inside
// ker DJ(z); this carries the stability form.
Mat stability_space(const System& sys, const Metric& metric, const Vec& z) {
  const int d = sys.dim();
  const Mat dj = sys.momentum_jacobian(z);
  Eigen::JacobiSVD<Mat> jsvd(dj * metric.inv_sqrt,
                             Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double jmax =
      jsvd.singularValues().size() ? jsvd.singularValues()(0) : 0.0;
  int jrank = 0;
  for (int i = 0; i < jsvd.singularValues().size(); ++i)
    if (jsvd.singularValues()(i) > 1e-9 * std::max(jmax, 1.0)) ++jrank;
  const Mat kernel_t = jsvd.matrixV().rightCols(d - jrank);

  const Mat orbit_t = metric.sqrt * sys.group_orbit_tangent(z);
  Eigen::JacobiSVD<Mat> osvd(orbit_t, Eigen::ComputeFullU);
  const double omax =
      osvd.singularValues().size() ? osvd.singularValues()(0) : 0.0;
  int orank = 0;
  for (int i = 0; i < osvd.singularValues().size(); ++i)
    if (osvd.singularValues()(i) > 1e-9 * std::max(omax, 1.0)) ++orank;
  if (orank == 0) return metric.inv_sqrt * kernel_t;

  const Mat orbit_on = osvd.matrixU().leftCols(orank);
  const Mat coords = kernel_t.transpose() * orbit_on;
  Eigen::JacobiSVD<Mat> csvd(coords, Eigen::ComputeFullU);
  const Mat w_t = kernel_t * csvd.matrixU().rightCols(kernel_t.cols() - orank);
  return metric.inv_sqrt * w_t;
}

// Residual and Jacobian of the pinned augmented critical point system.
struct PinnedSolver {
  const System& sys;
  Mat pin_rows;   // p x 2n, rows are orbit directions at the reference point
  Vec pin_base;   // p, rows * z_ref
  bool has_arc = false;
  Vec arc_normal; // 2n + k
  double arc_rhs = 0.0;

  int dim() const { return sys.dim() + sys.torus_rank(); }

  Vec residual(const Vec& u) const {
    const int d = sys.dim();
    const int k = sys.torus_rank();
    const Vec z = u.head(d);
    const Vec xi = u.tail(k);
    Vec res(d + pin_rows.rows() + (has_arc ? 1 : 0));
    res.head(d) = sys.augmented_gradient(z, xi);
    if (pin_rows.rows() > 0)
      res.segment(d, pin_rows.rows()) = pin_rows * z - pin_base;
    if (has_arc) res(res.size() - 1) = arc_normal.dot(u) - arc_rhs;
    return res;
  }

  Mat jacobian(const Vec& u) const {
    const int d = sys.dim();
    const int k = sys.torus_rank();
    const Vec z = u.head(d);
    const Vec xi = u.tail(k);
    Mat jac = Mat::Zero(d + pin_rows.rows() + (has_arc ? 1 : 0), d + k);
    jac.topLeftCorner(d, d) = sys.augmented_hessian(z, xi);
    for (int i = 0; i < k; ++i)
      jac.block(0, d + i, d, 1) = -sys.momentum_gradient(z, i);
    if (pin_rows.rows() > 0)
      jac.block(d, 0, pin_rows.rows(), d) = pin_rows;
    if (has_arc) jac.row(jac.rows() - 1) = arc_normal.transpose();
    return jac;
  }

  // Minimal-norm Gauss-Newton. Returns false if it fails to converge.
  bool solve(Vec& u, const NewtonOptions& newton) const {
    for (int iter = 0; iter < newton.max_iter; ++iter) {
      const Vec res = residual(u);
      if (res.norm() <= newton.tol) return true;
      Eigen::CompleteOrthogonalDecomposition<Mat> cod(jacobian(u));
      const Vec step = cod.solve(res);
      u -= step;
      if (!u.allFinite() || u.norm() > 1e8) return false;
      if (step.norm() <= 1e-15 * (1.0 + u.norm()) && res.norm() > newton.tol)
        return res.norm() <= 10.0 * newton.tol;
    }
    return residual(u).norm() <= newton.tol;
  }
};

Mat orbit_pin_rows(const System& sys, const Vec& z_ref) {
  const Mat orbit = sys.group_orbit_tangent(z_ref);
  std::vector<int> active;
  for (int i = 0; i < orbit.cols(); ++i)
    if (orbit.col(i).norm() > 1e-7 * (1.0 + z_ref.norm()))
      active.push_back(i);
  Mat rows(active.size(), sys.dim());
  for (size_t i = 0; i < active.size(); ++i)
    rows.row(i) = orbit.col(active[i]).transpose();
  return rows;
}

// Tangent space of the solution manifold at u, restricted by the pins.
Mat manifold_null_basis(const PinnedSolver& solver, const Vec& u) {
  PinnedSolver noarc = solver;
  noarc.has_arc = false;
  const Mat jac = noarc.jacobian(u);
  Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeFullV);
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-8 * std::max(smax, 1.0)) ++rank;
  return svd.matrixV().rightCols(jac.cols() - rank);
}

// Integer basis of the identity component of the torus stabilizer of z.
Mat stabilizer_subtorus(const System& sys, const WeightDecomposition& wd,
                        const Vec& z) {
  const int k = sys.torus_rank();
  const Mat& m = sys.phase().inner;
  std::vector<std::vector<long>> rows;
  const double scale = std::max(z.norm(), 1e-300);
  for (const auto& pl : wd.planes) {
    const Vec coords = pl.basis.transpose() * (m * z);
    if (coords.norm() <= 1e-8 * scale) continue;
    std::vector<long> row(pl.weights.begin(), pl.weights.end());
    bool zero = true;
    for (long w : row) if (w != 0) zero = false;
    if (zero) continue;
    if (std::find(rows.begin(), rows.end(), row) == rows.end())
      rows.push_back(std::move(row));
  }
  if (rows.empty()) return Mat::Identity(k, k);
  const SmithForm snf = smith_normal_form(rows);
  Mat q(k, k - snf.rank);
  for (int j = snf.rank; j < k; ++j)
    for (int i = 0; i < k; ++i) q(i, j - snf.rank) = snf.v[i][j];
  return q;
}

} // namespace

std::string to_string(Stability s) {
  switch (s) {
    case Stability::definite_plus: return "definite+";
    case Stability::definite_minus: return "definite-";
    case Stability::indefinite: return "indefinite";
    case Stability::degenerate: return "degenerate";
  }
  return "?";
}

std::string to_string(BranchKind k) {
  switch (k) {
    case BranchKind::persistence_sigma: return "persistence_sigma";
    case BranchKind::pitchfork: return "pitchfork";
    case BranchKind::saddle_node: return "saddle_node";
    case BranchKind::complex_circle: return "complex_circle";
  }
  return "?";
}

std::string to_string(CrossingType t) {
  switch (t) {
    case CrossingType::pitchfork: return "pitchfork";
    case CrossingType::saddle_node: return "saddle_node";
    case CrossingType::complex_circle: return "complex_circle";
    case CrossingType::unclassified: return "unclassified";
  }
  return "?";
}

StabilityReport formal_stability(const System& sys, const Vec& z, const Vec& xi) {
  const Metric metric(sys.phase().inner);
  const Mat w = stability_space(sys, metric, z);
  StabilityReport rep;
  rep.dim_w = static_cast<int>(w.cols());
  if (rep.dim_w == 0) {
    rep.verdict = Stability::definite_plus;
    rep.min_abs_eig = std::numeric_limits<double>::infinity();
    rep.eigs = Vec(0);
    return rep;
  }
  const Mat form = w.transpose() * sys.augmented_hessian(z, xi) * w;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (form + form.transpose()));
  rep.eigs = es.eigenvalues();
  rep.min_abs_eig = rep.eigs.cwiseAbs().minCoeff();
  const double delta = 1e-9 * std::max(1.0, rep.eigs.cwiseAbs().maxCoeff());
  if (rep.eigs.minCoeff() > delta)
    rep.verdict = Stability::definite_plus;
  else if (rep.eigs.maxCoeff() < -delta)
    rep.verdict = Stability::definite_minus;
  else if (rep.eigs.cwiseAbs().minCoeff() <= delta)
    rep.verdict = Stability::degenerate;
  else
    rep.verdict = Stability::indefinite;
  return rep;
}

BranchPoint make_branch_point(const System& sys, const WeightDecomposition& wd,
                              const Vec& z, const Vec& xi, double arclength,
                              double branch_tol) {
  BranchPoint bp;
  bp.z = z;
  bp.xi = xi;
  bp.mu = sys.momentum(z);
  bp.arclength = arclength;
  bp.residual = sys.augmented_gradient(z, xi).norm();
  if (bp.residual > branch_tol)
    throw NotARelativeEquilibrium("branch point residual " +
                                  std::to_string(bp.residual));
  const StabilityReport rep = formal_stability(sys, z, xi);
  bp.eigs = rep.eigs;
  bp.stability = rep.verdict;
  bp.isotropy = isotropy_of(sys, wd, z);
  return bp;
}

BranchPoint find_relative_equilibrium(const System& sys, const Vec& z0,
                                      const Vec& xi0, const NewtonOptions& newton,
                                      double branch_tol) {
  PinnedSolver solver{sys, orbit_pin_rows(sys, z0), Vec(), false, Vec(), 0.0};
  solver.pin_base = solver.pin_rows * z0;
  Vec u(sys.dim() + sys.torus_rank());
  u << z0, xi0;
  if (!solver.solve(u, newton))
    throw NewtonDiverged("no relative equilibrium found from this seed");
  const WeightDecomposition wd = weight_decomposition(sys);
  return make_branch_point(sys, wd, u.head(sys.dim()), u.tail(sys.torus_rank()),
                           0.0, branch_tol);
}

Branch continue_branch(const System& sys, const Vec& z0, const Vec& xi0,
                       const Vec& direction, const ContinuationOptions& opts) {
  const int d = sys.dim();
  const int k = sys.torus_rank();
  if (direction.size() != d + k)
    throw InvalidModel("continuation direction must have dimension 2n + k");
  const WeightDecomposition wd = weight_decomposition(sys);

  Branch branch;
  Vec u(d + k);
  u << z0, xi0;

  { // Verify (or polish) the starting point.
    PinnedSolver start{sys, orbit_pin_rows(sys, z0), Vec(), false, Vec(), 0.0};
    start.pin_base = start.pin_rows * z0;
    if (!start.solve(u, opts.newton))
      throw NotARelativeEquilibrium("continuation start does not converge");
  }
  branch.points.push_back(
      make_branch_point(sys, wd, u.head(d), u.tail(k), 0.0, opts.branch_tol));

  Vec t_prev = direction.normalized();
  double arclength = 0.0;

  for (int step = 0; step < opts.n_steps; ++step) {
    const Vec z_ref = u.head(d);
    PinnedSolver solver{sys, orbit_pin_rows(sys, z_ref), Vec(), false, Vec(), 0.0};
    solver.pin_base = solver.pin_rows * z_ref;

    const Mat nullb = manifold_null_basis(solver, u);
    Vec t;
    if (nullb.cols() == 0) {
      t = t_prev;
    } else {
      t = nullb * (nullb.transpose() * t_prev);
      if (t.norm() < 1e-10) t = nullb.col(0);
      t.normalize();
      if (t.dot(t_prev) < 0.0) t = -t;
    }

    double ds = opts.step_size;
    bool accepted = false;
    Vec u_new;
    for (int attempt = 0; attempt <= opts.max_halvings; ++attempt, ds *= 0.5) {
      u_new = u + ds * t;
      PinnedSolver stepper = solver;
      stepper.has_arc = true;
      stepper.arc_normal = t;
      stepper.arc_rhs = t.dot(u_new);
      if (!stepper.solve(u_new, opts.newton)) continue;
      const Vec z_new = u_new.head(d);
      if (sys.augmented_gradient(z_new, u_new.tail(k)).norm() > opts.branch_tol)
        continue;
      if ((z_new - z_ref).norm() > 2.0 * opts.step_size) continue;
      accepted = true;
      break;
    }
    if (!accepted)
      throw StepFailed("continuation step " + std::to_string(step) +
                       " failed after " + std::to_string(opts.max_halvings) +
                       " halvings");

    // Fold flag: generator component of the tangent reverses.
    const Vec t_xi = t.tail(k);
    const Vec t_prev_xi = t_prev.tail(k);
    if (t_xi.norm() > 0.1 && t_prev_xi.norm() > 0.1 &&
        t_xi.dot(t_prev_xi) < 0.0)
      branch.folds.push_back(static_cast<int>(branch.points.size()) - 1);

    arclength += ds;
    u = u_new;
    t_prev = t;
    branch.points.push_back(make_branch_point(sys, wd, u.head(d), u.tail(k),
                                              arclength, opts.branch_tol));
  }
  return branch;
}

namespace {

// Corrects the interpolated point between two branch points and returns the
// stability spectrum there.
struct SegmentProbe {
  const System& sys;
  Vec u0, u1;
  NewtonOptions newton;

  struct Sample {
    Vec u;
    Vec eigs;
  };

  Sample at(double t) const {
    const int d = sys.dim();
    const int k = sys.torus_rank();
    const Vec z_ref = u0.head(d);
    PinnedSolver solver{sys, orbit_pin_rows(sys, z_ref), Vec(), false, Vec(), 0.0};
    solver.pin_base = solver.pin_rows * z_ref;
    solver.has_arc = true;
    Vec u = (1.0 - t) * u0 + t * u1;
    solver.arc_normal = (u1 - u0).normalized();
    solver.arc_rhs = solver.arc_normal.dot(u);
    if (!solver.solve(u, newton))
      throw NewtonDiverged("crossing refinement solve failed");
    Sample s;
    s.u = u;
    s.eigs = formal_stability(sys, u.head(d), u.tail(k)).eigs;
    return s;
  }
};

} // namespace

std::vector<CrossingEvent> detect_crossings(const System& sys,
                                            const Branch& branch,
                                            double refine_tol,
                                            const NewtonOptions& newton) {
  std::vector<CrossingEvent> events;
  if (branch.points.size() < 2) return events;
  const int d = sys.dim();
  const int k = sys.torus_rank();
  const WeightDecomposition wd = weight_decomposition(sys);
  const Metric metric(sys.phase().inner);

  for (size_t i = 0; i + 1 < branch.points.size(); ++i) {
    const BranchPoint& a = branch.points[i];
    const BranchPoint& b = branch.points[i + 1];
    if (a.eigs.size() != b.eigs.size()) continue;
    std::vector<int> changed;
    for (int j = 0; j < a.eigs.size(); ++j)
      if (a.eigs(j) * b.eigs(j) < 0.0) changed.push_back(j);
    if (changed.empty()) continue;

    SegmentProbe probe{sys, Vec(d + k), Vec(d + k), newton};
    probe.u0 << a.z, a.xi;
    probe.u1 << b.z, b.xi;

    std::vector<double> refined_ts;
    for (int j : changed) {
      // Already refined together with an earlier eigenvalue of this segment?
      bool dup = false;
      double lo = 0.0, hi = 1.0;
      double slo = a.eigs(j);
      SegmentProbe::Sample mid = probe.at(0.5);
      for (int it = 0; it < 80 && std::abs(mid.eigs(j)) > refine_tol; ++it) {
        if (slo * mid.eigs(j) < 0.0) {
          hi = 0.5 * (lo + hi);
        } else {
          lo = 0.5 * (lo + hi);
          slo = mid.eigs(j);
        }
        mid = probe.at(0.5 * (lo + hi));
      }
      const double tstar = 0.5 * (lo + hi);
      for (double t0 : refined_ts)
        if (std::abs(t0 - tstar) < 1e-6) dup = true;
      if (dup) continue;
      refined_ts.push_back(tstar);

      CrossingEvent ev;
      ev.index = static_cast<int>(i);
      ev.arclength = a.arclength + tstar * (b.arclength - a.arclength);
      ev.z = mid.u.head(d);
      ev.xi = mid.u.tail(k);
      ev.eig_id = j;
      ev.lambda = mid.eigs(j);
      ev.lambda_slope = (b.eigs(j) - a.eigs(j)) /
                        std::max(b.arclength - a.arclength, 1e-300);

      const Mat w = stability_space(sys, metric, ev.z);
      const Mat form = w.transpose() * sys.augmented_hessian(ev.z, ev.xi) * w;
      Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (form + form.transpose()));
      const double mult_tol =
          std::max(100.0 * refine_tol,
                   1e-7 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()));
      std::vector<int> kernel_ids;
      for (int e = 0; e < es.eigenvalues().size(); ++e)
        if (std::abs(es.eigenvalues()(e)) <= mult_tol) kernel_ids.push_back(e);
      ev.multiplicity = static_cast<int>(kernel_ids.size());
      ev.kernel = Mat(d, kernel_ids.size());
      for (size_t e = 0; e < kernel_ids.size(); ++e)
        ev.kernel.col(e) = w * es.eigenvectors().col(kernel_ids[e]);

      const Mat q = stabilizer_subtorus(sys, wd, ev.z);
      ev.kernel_isotropy =
          isotropy_of_restricted(sys, wd, q, ev.kernel.col(0));
      events.push_back(std::move(ev));
    }
  }
  return events;
}

Classification classify_crossing(const System& sys, const CrossingEvent& event) {
  Classification cls;
  cls.eigenvalue_slope = event.lambda_slope;
  const WeightDecomposition wd = weight_decomposition(sys);
  const Mat& m = sys.phase().inner;
  const int mult = event.multiplicity;

  // Candidate residual symmetries: discrete stabilizer components of the
  // point plus the finite elements fixing it and commuting with the action
  // of the generator.
  std::vector<Mat> candidates;
  for (const Vec& theta : stabilizer_component_generators(sys, wd, event.z))
    candidates.push_back(sys.group_exp(theta));
  const Mat axi = sys.algebra_action(event.xi);
  for (const Mat& g : sys.symmetry().finite_elements) {
    if ((g * event.z - event.z).norm() > 1e-8 * (1.0 + event.z.norm())) continue;
    if ((g * axi - axi * g).cwiseAbs().maxCoeff() > 1e-10) continue;
    candidates.push_back(g);
  }

  if (mult == 1) {
    const Vec u = event.kernel.col(0);
    bool has_minus = false;
    bool all_fix = true;
    for (const Mat& g : candidates) {
      const Vec gu = g * u;
      if ((gu + u).norm() <= 1e-8 * u.norm()) has_minus = true;
      if ((gu - u).norm() > 1e-8 * u.norm()) all_fix = false;
    }
    // Continuous stabilizer directions moving u also rule out a fixed vector.
    const Mat q = stabilizer_subtorus(sys, wd, event.z);
    for (int c = 0; c < q.cols(); ++c)
      if ((sys.algebra_action(q.col(c)) * u).norm() > 1e-8 * u.norm())
        all_fix = false;
    cls.fixed_space_trivial = !all_fix;
    cls.type = has_minus ? CrossingType::pitchfork : CrossingType::saddle_node;
    return cls;
  }

  if (mult == 2) {
    const Mat q = stabilizer_subtorus(sys, wd, event.z);
    for (int c = 0; c < q.cols(); ++c) {
      const Mat a = sys.algebra_action(q.col(c));
      const Mat r = event.kernel.transpose() * m * (a * event.kernel);
      const double w = 0.5 * (r(1, 0) - r(0, 1));
      const double wr = std::round(w);
      const Mat gen = 0.5 * (r - r.transpose());
      if (std::abs(w - wr) > 1e-6 || wr == 0.0) continue;
      if ((r - gen).cwiseAbs().maxCoeff() > 1e-6 * std::max(1.0, std::abs(w)))
        continue;
      // Kernel plane must be invariant under this circle.
      if ((a * event.kernel -
           event.kernel * (event.kernel.transpose() * m * (a * event.kernel)))
              .cwiseAbs()
              .maxCoeff() > 1e-6)
        continue;
      cls.type = CrossingType::complex_circle;
      cls.circle_weight = static_cast<int>(std::abs(wr));
      cls.circle_direction = q.col(c);
      cls.fixed_space_trivial = true;
      return cls;
    }
  }
  cls.type = CrossingType::unclassified;
  return cls;
}

SwitchResult switch_branch(const System& sys, const CrossingEvent& event,
                           const Classification& cls,
                           const std::vector<double>& amplitudes,
                           const NewtonOptions& newton, double branch_tol) {
  if (cls.type != CrossingType::pitchfork &&
      cls.type != CrossingType::complex_circle)
    throw NoBranchFound("only pitchfork and complex-circle events switch to a "
                        "new branch");
  if (amplitudes.empty()) throw NoBranchFound("empty amplitude sequence");

  const int d = sys.dim();
  const int k = sys.torus_rank();
  const WeightDecomposition wd = weight_decomposition(sys);
  const Vec z_c = event.z;
  const Vec xi_c = event.xi;
  Vec u_dir = event.kernel.col(0);
  u_dir.normalize();

  // Fixed-point subspace of the predictor's isotropy subgroup.
  const double a_probe = 1e-2 * (1.0 + z_c.norm());
  const Vec p_probe = z_c + a_probe * u_dir;
  std::vector<Mat> constraints;
  const Mat q = stabilizer_subtorus(sys, wd, p_probe);
  for (int c = 0; c < q.cols(); ++c)
    constraints.push_back(sys.algebra_action(q.col(c)));
  for (const Vec& theta : stabilizer_component_generators(sys, wd, p_probe))
    constraints.push_back(sys.group_exp(theta) - Mat::Identity(d, d));
  for (const Mat& g : sys.symmetry().finite_elements) {
    if ((g - Mat::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-12) continue;
    if ((g * p_probe - p_probe).norm() <= 1e-8 * (1.0 + p_probe.norm()))
      constraints.push_back(g - Mat::Identity(d, d));
  }
  Mat fix = Mat::Identity(d, d);
  if (!constraints.empty()) {
    Mat stacked(d * constraints.size(), d);
    for (size_t i = 0; i < constraints.size(); ++i)
      stacked.middleRows(i * d, d) = constraints[i];
    Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeFullV);
    const double smax = svd.singularValues()(0);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > 1e-9 * std::max(smax, 1.0)) ++rank;
    fix = svd.matrixV().rightCols(d - rank);
  }
  if (((Mat::Identity(d, d) - fix * fix.transpose()) * (p_probe - z_c)).norm() >
      1e-7 * (1.0 + p_probe.norm()))
    fix = Mat::Identity(d, d);  // predictor not in the fixed space; fall back

  const SliceDecomposition dec_c =
      build_slice(sys, z_c, xi_c, 1e-7);
  const Mat mb = dec_c.m_basis;
  const int r = static_cast<int>(mb.cols());
  const bool circle = cls.type == CrossingType::complex_circle;
  Vec alpha_dir = Vec::Zero(k);
  if (circle) alpha_dir = cls.circle_direction;

  Vec w_dir;
  if (dec_c.W_basis.cols() > 0) {
    w_dir = dec_c.W_basis.col(0);
    w_dir.normalize();
  } else {
    w_dir = Vec::Zero(d);
  }

  const int f = static_cast<int>(fix.cols());
  const int nunk = f + r + (circle ? 1 : 0);

  SwitchResult result;
  result.unfolding = circle ? "alpha" : "eta";
  result.branch.kind =
      circle ? BranchKind::complex_circle : BranchKind::pitchfork;
  result.branch.parent = std::make_pair(0, event.arclength);

  Vec x_warm = Vec::Zero(nunk);
  bool any = false;
  for (double amp : amplitudes) {
    const Vec p_a = z_c + amp * u_dir;
    Mat pin = orbit_pin_rows(sys, p_a);

    auto unpack = [&](const Vec& x, Vec& z, Vec& xi) {
      z = z_c + fix * x.head(f);
      xi = xi_c + mb * x.segment(f, r);
      if (circle) xi += x(nunk - 1) * alpha_dir;
    };
    // Circles unfold in the generator offset; hold the momentum-transverse
    // coordinates at their crossing values so the offset is well defined.
    const Mat w_pins = circle ? Mat(dec_c.W_basis.transpose()) : Mat(0, d);
    auto resid = [&](const Vec& x) {
      Vec z, xi;
      unpack(x, z, xi);
      Vec res(f + pin.rows() + w_pins.rows() + 1);
      res.head(f) = fix.transpose() * sys.augmented_gradient(z, xi);
      for (int i = 0; i < pin.rows(); ++i)
        res(f + i) = pin.row(i).dot(z - p_a);
      for (int i = 0; i < w_pins.rows(); ++i)
        res(f + pin.rows() + i) = w_pins.row(i).dot(z - z_c);
      res(res.size() - 1) = u_dir.dot(z - z_c) - amp;
      return res;
    };

    Vec x = x_warm;
    x.head(f) = fix.transpose() * (p_a - z_c);
    bool ok = false;
    for (int iter = 0; iter < newton.max_iter; ++iter) {
      const Vec res = resid(x);
      if (res.norm() <= newton.tol) { ok = true; break; }
      const double fd = 1e-7 * (1.0 + x.norm());
      Mat jac(res.size(), nunk);
      for (int j = 0; j < nunk; ++j) {
        Vec xp = x, xm = x;
        xp(j) += fd;
        xm(j) -= fd;
        jac.col(j) = (resid(xp) - resid(xm)) / (2.0 * fd);
      }
      Eigen::CompleteOrthogonalDecomposition<Mat> cod(jac);
      x -= cod.solve(res);
      if (!x.allFinite() || x.norm() > 1e6) break;
    }
    if (!ok) continue;

    Vec z, xi;
    unpack(x, z, xi);
    if (sys.augmented_gradient(z, xi).norm() > branch_tol) continue;
    // Reject collapse back onto the parent branch.
    if (std::abs(u_dir.dot(z - z_c)) < 0.5 * amp) continue;

    any = true;
    x_warm = x;
    result.amplitudes.push_back(amp);
    result.unfolding_values.push_back(circle ? x(nunk - 1)
                                             : w_dir.dot(z - z_c));
    result.branch.points.push_back(make_branch_point(
        sys, wd, z, xi, amp, branch_tol));
  }
  if (!any) throw NoBranchFound("corrector failed for every amplitude");

  // Leading coefficient of the unfolding parameter against squared amplitude.
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < result.amplitudes.size(); ++i) {
    const double s = result.amplitudes[i] * result.amplitudes[i];
    num += s * result.unfolding_values[i];
    den += s * s;
  }
  result.fitted_slope = den > 0.0 ? num / den : 0.0;
  return result;
}

PersistenceSurface persistence_surface(const System& sys, const Vec& z_e,
                                       const Vec& xi,
                                       const std::vector<Vec>& eta_grid,
                                       const std::vector<Vec>& alpha_grid,
                                       const NewtonOptions& newton) {
  const SliceDecomposition dec = build_slice(sys, z_e, xi, 1e-7);
  ReducedProblem rp = build_reduced(sys, dec, 0.0, newton);
  if (!rp.nondegenerate())
    throw DegenerateKernel("second variation has a " +
                           std::to_string(rp.kernel_dim()) +
                           "-dimensional kernel on the slice");
  const int k = sys.torus_rank();
  const int r = dec.dim_m();
  const int d0 = dec.dim_gme();
  const Vec v0 = Vec(0);

  PersistenceSurface surf;
  surf.expected_rank = 2 * r;

  auto solve_point = [&](const Vec& eta, const Vec& alpha) {
    const Vec y = solve_v1(rp, eta, v0, alpha);
    std::pair<Vec, Vec> out;
    out.first = dec.base_point + dec.V_basis * (rp.V1_basis * y) +
                dec.correction * eta;
    const Vec beta = solve_beta(rp, eta, rp.V1_basis * y, alpha);
    out.second = dec.generator + dec.g_me_basis * alpha + dec.m_basis * beta;
    return out;
  };

  for (const Vec& alpha : alpha_grid) {
    for (const Vec& eta : eta_grid) {
      auto [z, xi_full] = solve_point(eta, alpha);
      SurfaceSample s;
      s.eta = eta;
      s.alpha = alpha;
      s.z = z;
      s.xi = xi_full;

      // Sampled parameterization Jacobian: orbit directions plus central
      // differences in eta and alpha.
      Mat jac(sys.dim(), k + r + d0);
      jac.leftCols(k) = sys.group_orbit_tangent(z);
      const double h = 1e-6 * (1.0 + eta.norm() + alpha.norm());
      for (int j = 0; j < r; ++j) {
        Vec ep = eta, em = eta;
        ep(j) += h;
        em(j) -= h;
        jac.col(k + j) = (solve_point(ep, alpha).first -
                          solve_point(em, alpha).first) / (2.0 * h);
      }
      for (int j = 0; j < d0; ++j) {
        Vec ap = alpha, am = alpha;
        ap(j) += h;
        am(j) -= h;
        jac.col(k + r + j) = (solve_point(eta, ap).first -
                              solve_point(eta, am).first) / (2.0 * h);
      }
      Eigen::JacobiSVD<Mat> svd(jac);
      const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
      s.rank = 0;
      for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-6 * std::max(smax, 1.0)) ++s.rank;

      if (alpha.norm() == 0.0) {
        Mat tangent(sys.dim(), 2 * r);
        for (int j = 0; j < r; ++j)
          tangent.col(j) = sys.algebra_action(dec.m_basis.col(j)) * z;
        tangent.rightCols(r) = jac.middleCols(k, r);
        const Mat restricted =
            tangent.transpose() * sys.phase().omega * tangent;
        surf.sigma_indices.push_back(static_cast<int>(surf.samples.size()));
        surf.sigma_pfaffian.push_back(
            pfaffian(0.5 * (restricted - restricted.transpose())));
      }
      surf.samples.push_back(std::move(s));
    }
  }
  return surf;
}

double pfaffian(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  if (n % 2 != 0) return 0.0;
  if (n == 0) return 1.0;
  if (n == 2) return a(0, 1);
  double s = 0.0;
  for (int j = 1; j < n; ++j) {
    if (a(0, j) == 0.0) continue;
    Mat minor(n - 2, n - 2);
    int rr = 0;
    for (int r = 1; r < n; ++r) {
      if (r == j) continue;
      int cc = 0;
      for (int c = 1; c < n; ++c) {
        if (c == j) continue;
        minor(rr, cc) = a(r, c);
        ++cc;
      }
      ++rr;
    }
    const double sign = (j % 2 == 1) ? 1.0 : -1.0;
    s += sign * a(0, j) * pfaffian(minor);
  }
  return s;
}

} // namespace releq
