#include "releq/isotropy.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>

#include "releq/errors.hpp"

namespace releq {

namespace {

bool is_identity(const Mat& g) {
  return (g - Mat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() < 1e-12;
}

} // namespace

SmithForm smith_normal_form(std::vector<std::vector<long>> a) {
  const int m = static_cast<int>(a.size());
  const int k = m == 0 ? 0 : static_cast<int>(a[0].size());
  SmithForm out;
  out.v.assign(k, std::vector<long>(k, 0));
  out.v_inv.assign(k, std::vector<long>(k, 0));
  for (int i = 0; i < k; ++i) out.v[i][i] = out.v_inv[i][i] = 1;

  auto col_addmul = [&](int dst, int src, long q) {
    for (int i = 0; i < m; ++i) a[i][dst] -= q * a[i][src];
    for (int i = 0; i < k; ++i) out.v[i][dst] -= q * out.v[i][src];
    for (int j = 0; j < k; ++j) out.v_inv[src][j] += q * out.v_inv[dst][j];
  };
  auto col_swap = [&](int c1, int c2) {
    for (int i = 0; i < m; ++i) std::swap(a[i][c1], a[i][c2]);
    for (int i = 0; i < k; ++i) std::swap(out.v[i][c1], out.v[i][c2]);
    std::swap(out.v_inv[c1], out.v_inv[c2]);
  };
  auto col_negate = [&](int c) {
    for (int i = 0; i < m; ++i) a[i][c] = -a[i][c];
    for (int i = 0; i < k; ++i) out.v[i][c] = -out.v[i][c];
    for (int j = 0; j < k; ++j) out.v_inv[c][j] = -out.v_inv[c][j];
  };
  auto row_addmul = [&](int dst, int src, long q) {
    for (int j = 0; j < k; ++j) a[dst][j] -= q * a[src][j];
  };

  const int tmax = std::min(m, k);
  int t = 0;
  while (t < tmax) {
    // Locate a nonzero pivot of minimal magnitude in the trailing block.
    int pi = -1, pj = -1;
    long best = 0;
    for (int i = t; i < m; ++i)
      for (int j = t; j < k; ++j)
        if (a[i][j] != 0 && (pi < 0 || std::llabs(a[i][j]) < best)) {
          best = std::llabs(a[i][j]);
          pi = i;
          pj = j;
        }
    if (pi < 0) break;
    if (pi != t) std::swap(a[pi], a[t]);
    if (pj != t) col_swap(pj, t);

    bool clean = false;
    while (!clean) {
      clean = true;
      for (int i = t + 1; i < m; ++i)
        if (a[i][t] != 0) {
          const long q = a[i][t] / a[t][t];
          row_addmul(i, t, q);
          if (a[i][t] != 0) { std::swap(a[i], a[t]); clean = false; }
        }
      for (int j = t + 1; j < k; ++j)
        if (a[t][j] != 0) {
          const long q = a[t][j] / a[t][t];
          col_addmul(j, t, q);
          if (a[t][j] != 0) { col_swap(j, t); clean = false; }
        }
    }
    // Divisibility chain: the pivot must divide every trailing entry.
    bool restart = false;
    for (int i = t + 1; i < m && !restart; ++i)
      for (int j = t + 1; j < k && !restart; ++j)
        if (a[i][j] % a[t][t] != 0) {
          row_addmul(t, i, -1);  // add row i to row t
          restart = true;
        }
    if (restart) continue;
    if (a[t][t] < 0) col_negate(t);
    ++t;
  }

  out.divisors.assign(k, 0);
  for (int i = 0; i < tmax; ++i) out.divisors[i] = (i < t) ? a[i][i] : 0;
  out.rank = t;
  return out;
}

WeightDecomposition weight_decomposition(const System& sys, double tol) {
  const int d = sys.dim();
  const int k = sys.torus_rank();
  WeightDecomposition wd;
  if (k == 0) {
    wd.fixed_basis = Mat::Identity(d, d);
    return wd;
  }

  const Mat& m = sys.phase().inner;
  Eigen::SelfAdjointEigenSolver<Mat> mes(m);
  const Mat msqrt = mes.operatorSqrt();
  const Mat minv_sqrt = mes.operatorInverseSqrt();

  // Metric-orthonormal coordinates, where the generators are skew.
  std::vector<Mat> ks(k);
  for (int i = 0; i < k; ++i)
    ks[i] = msqrt * sys.symmetry().generators[i] * minv_sqrt;

  // Common fixed subspace: kernel of the stacked generators.
  Mat stacked(d * k, d);
  for (int i = 0; i < k; ++i) stacked.middleRows(i * d, d) = ks[i];
  Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeFullV);
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol * std::max(smax, 1.0)) ++rank;
  Mat fixed_t = svd.matrixV().rightCols(d - rank);

  const double cs[] = {0.7548776662466927, 0.5698402909980532, 0.3287568278839432,
                       0.9172835384776262, 0.2297586444527474, 0.6547893155827349};
  bool ok = false;
  for (int attempt = 0; attempt < 4 && !ok; ++attempt) {
    wd.planes.clear();
    ok = true;
    Mat b = Mat::Zero(d, d);
    for (int i = 0; i < k; ++i)
      b += (cs[(i + attempt) % 6] + 0.1 * attempt) * ks[i];
    Eigen::EigenSolver<Mat> es(b);
    std::vector<bool> used(d, false);
    for (int c = 0; c < d && ok; ++c) {
      if (used[c]) continue;
      const std::complex<double> lam = es.eigenvalues()(c);
      if (std::abs(lam) < tol) continue;   // fixed subspace handled separately
      if (lam.imag() <= 0.0) { used[c] = true; continue; }  // keep one of each pair
      used[c] = true;
      Eigen::VectorXcd vc = es.eigenvectors().col(c);
      Mat plane(d, 2);
      plane.col(0) = vc.real();
      plane.col(1) = vc.imag();
      // Orthonormalize within the plane.
      plane.col(0).normalize();
      plane.col(1) -= plane.col(0).dot(plane.col(1)) * plane.col(0);
      if (plane.col(1).norm() < 1e-10) { ok = false; break; }
      plane.col(1).normalize();

      WeightDecomposition::Plane pl;
      pl.basis = minv_sqrt * plane;
      pl.weights.resize(k);
      for (int i = 0; i < k; ++i) {
        const Mat r = plane.transpose() * ks[i] * plane;
        const Mat res = ks[i] * plane - plane * r;
        if (res.cwiseAbs().maxCoeff() > 1e-7) { ok = false; break; }
        const double w = 0.5 * (r(1, 0) - r(0, 1));
        const double wr = std::round(w);
        if (std::abs(w - wr) > 1e-7 ||
            std::abs(r(0, 0)) + std::abs(r(1, 1)) > 1e-7)
          wd.integral = false;
        pl.weights[i] = static_cast<int>(wr);
      }
      if (ok) wd.planes.push_back(std::move(pl));
    }
    if (ok && static_cast<int>(wd.planes.size()) * 2 + (d - rank) != d) ok = false;
  }
  if (!ok) {
    wd.integral = false;
    wd.planes.clear();
  }
  wd.fixed_basis = minv_sqrt * fixed_t;
  return wd;
}

namespace {

// Active integer weight rows of u, deduplicated.
std::vector<std::vector<long>> active_weights(const System& sys,
                                              const WeightDecomposition& wd,
                                              const Vec& u, double tol) {
  const Mat& m = sys.phase().inner;
  std::vector<std::vector<long>> rows;
  const double scale = std::max(u.norm(), 1e-300);
  for (const auto& pl : wd.planes) {
    const Vec coords = pl.basis.transpose() * (m * u);
    if (coords.norm() <= tol * scale) continue;
    std::vector<long> row(pl.weights.begin(), pl.weights.end());
    bool zero = true;
    for (long w : row) if (w != 0) zero = false;
    if (zero) continue;
    if (std::find(rows.begin(), rows.end(), row) == rows.end())
      rows.push_back(std::move(row));
  }
  return rows;
}

IsotropyLabel label_from_weights(const System& sys,
                                 const std::vector<std::vector<long>>& rows,
                                 int ambient_rank, bool certified,
                                 const Vec& u, double tol) {
  IsotropyLabel lab;
  lab.certified = certified;
  const SmithForm snf = smith_normal_form(rows);
  lab.torus_rank = ambient_rank - snf.rank;
  for (long dv : snf.divisors)
    if (dv > 1) lab.torus_factors.push_back(static_cast<int>(dv));
  for (size_t i = 0; i < sys.symmetry().finite_elements.size(); ++i) {
    const Mat& g = sys.symmetry().finite_elements[i];
    if (is_identity(g)) continue;
    if ((g * u - u).norm() <= tol * std::max(u.norm(), 1.0))
      lab.finite_fixing.push_back(static_cast<int>(i));
  }
  return lab;
}

} // namespace

IsotropyLabel isotropy_of(const System& sys, const WeightDecomposition& wd,
                          const Vec& u, double tol) {
  auto rows = active_weights(sys, wd, u, tol);
  return label_from_weights(sys, rows, sys.torus_rank(), wd.integral, u, tol);
}

IsotropyLabel isotropy_of_restricted(const System& sys,
                                     const WeightDecomposition& wd, const Mat& q,
                                     const Vec& u, double tol) {
  auto rows = active_weights(sys, wd, u, tol);
  // Restrict each weight row through the integer subtorus matrix q (k x m).
  const int mdim = static_cast<int>(q.cols());
  std::vector<std::vector<long>> restricted;
  for (const auto& row : rows) {
    std::vector<long> r(mdim, 0);
    for (int j = 0; j < mdim; ++j) {
      double s = 0.0;
      for (int i = 0; i < static_cast<int>(row.size()); ++i) s += row[i] * q(i, j);
      r[j] = std::lround(s);
    }
    bool zero = true;
    for (long w : r) if (w != 0) zero = false;
    if (!zero && std::find(restricted.begin(), restricted.end(), r) == restricted.end())
      restricted.push_back(std::move(r));
  }
  return label_from_weights(sys, restricted, mdim, wd.integral, u, tol);
}

std::vector<Vec> stabilizer_component_generators(const System& sys,
                                                 const WeightDecomposition& wd,
                                                 const Vec& u, double tol) {
  const int k = sys.torus_rank();
  auto rows = active_weights(sys, wd, u, tol);
  const SmithForm snf = smith_normal_form(rows);
  std::vector<Vec> gens;
  for (int i = 0; i < snf.rank; ++i) {
    const long dv = snf.divisors[i];
    if (dv <= 1) continue;
    Vec theta = Vec::Zero(k);
    for (int r = 0; r < k; ++r) theta(r) = 2.0 * M_PI / dv * snf.v[r][i];
    gens.push_back(theta);
  }
  return gens;
}

long IsotropyLabel::discrete_order() const {
  long o = 1;
  for (int f : torus_factors) o *= f;
  return o;
}

std::string IsotropyLabel::text() const {
  std::vector<std::string> parts;
  if (torus_rank == 1) parts.push_back("S1");
  else if (torus_rank > 1) parts.push_back("T" + std::to_string(torus_rank));
  for (int f : torus_factors) parts.push_back("Z" + std::to_string(f));
  if (!finite_fixing.empty())
    parts.push_back("F" + std::to_string(finite_fixing.size()));
  std::string s;
  if (parts.empty()) s = "trivial";
  for (size_t i = 0; i < parts.size(); ++i)
    s += (i ? " x " : "") + parts[i];
  if (!certified) s += " ?";
  return s;
}

} // namespace releq
