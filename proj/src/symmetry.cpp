#include "releq/symmetry.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "releq/errors.hpp"

namespace releq {

StructureConstants StructureConstants::zero(int rank) {
  StructureConstants sc;
  sc.rank = rank;
  sc.c.assign(static_cast<size_t>(rank) * rank * rank, 0.0);
  return sc;
}

StructureConstants StructureConstants::so3() {
  StructureConstants sc = zero(3);
  // [e_i, e_j] = eps_{ijk} e_k
  sc.at(0, 1, 2) = 1.0;
  sc.at(1, 0, 2) = -1.0;
  sc.at(1, 2, 0) = 1.0;
  sc.at(2, 1, 0) = -1.0;
  sc.at(2, 0, 1) = 1.0;
  sc.at(0, 2, 1) = -1.0;
  return sc;
}

Vec StructureConstants::bracket(const Vec& x, const Vec& y) const {
  Vec out = Vec::Zero(rank);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j) {
      const double xy = x(i) * y(j);
      if (xy == 0.0) continue;
      for (int k = 0; k < rank; ++k) out(k) += xy * at(i, j, k);
    }
  return out;
}

void StructureConstants::validate(double tol) const {
  if (static_cast<int>(c.size()) != rank * rank * rank)
    throw InvalidStructureConstants("wrong array size");
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j)
      for (int k = 0; k < rank; ++k)
        if (std::abs(at(i, j, k) + at(j, i, k)) > tol)
          throw InvalidStructureConstants("antisymmetry violated");
  // Jacobi: [e_i,[e_j,e_k]] + [e_j,[e_k,e_i]] + [e_k,[e_i,e_j]] = 0
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j)
      for (int k = 0; k < rank; ++k)
        for (int l = 0; l < rank; ++l) {
          double s = 0.0;
          for (int m = 0; m < rank; ++m)
            s += at(j, k, m) * at(i, m, l) + at(k, i, m) * at(j, m, l) +
                 at(i, j, m) * at(k, m, l);
          if (std::abs(s) > tol)
            throw InvalidStructureConstants("Jacobi identity violated");
        }
}

void SymmetrySpec::validate(const PhaseSpace& phase) const {
  const int d = phase.dim;
  if (static_cast<int>(generators.size()) != torus_rank)
    throw InvalidModel("generator count does not match torus rank");
  for (const Mat& a : generators) {
    if (a.rows() != d || a.cols() != d)
      throw InvalidModel("generator has wrong shape");
    const Mat infs = phase.omega * a + a.transpose() * phase.omega;
    const double scale = (phase.omega * a).cwiseAbs().maxCoeff();
    if (infs.cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0))
      throw InvalidModel("generator is not infinitesimally symplectic");
  }
  for (size_t i = 0; i < generators.size(); ++i)
    for (size_t j = i + 1; j < generators.size(); ++j) {
      const Mat comm = generators[i] * generators[j] - generators[j] * generators[i];
      if (comm.cwiseAbs().maxCoeff() > 1e-12)
        throw InvalidModel("torus generators do not commute");
    }
  for (const Mat& g : finite_elements) {
    if (g.rows() != d || g.cols() != d)
      throw InvalidModel("finite element has wrong shape");
    const Mat dev = g.transpose() * phase.omega * g - phase.omega;
    if (dev.cwiseAbs().maxCoeff() >
        1e-12 * std::max(phase.omega.cwiseAbs().maxCoeff(), 1.0))
      throw InvalidModel("finite element is not symplectic");
    const Mat mdev = g.transpose() * phase.inner * g - phase.inner;
    if (mdev.cwiseAbs().maxCoeff() >
        1e-10 * std::max(phase.inner.cwiseAbs().maxCoeff(), 1.0))
      throw InvalidModel("inner product not invariant under finite element");
  }
  // Invariance of the inner product under the torus, sampled at a few angles.
  for (const Mat& a : generators) {
    for (double t : {0.3, 1.1}) {
      const Mat g = (t * a).exp();
      const Mat mdev = g.transpose() * phase.inner * g - phase.inner;
      if (mdev.cwiseAbs().maxCoeff() >
          1e-9 * std::max(phase.inner.cwiseAbs().maxCoeff(), 1.0))
        throw InvalidModel("inner product not invariant under torus");
    }
  }
  if (structure_constants.rank != 0) structure_constants.validate();
}

} // namespace releq
