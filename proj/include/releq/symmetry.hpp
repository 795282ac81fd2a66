#pragma once

#include <vector>

#include "releq/phase_space.hpp"
#include "releq/types.hpp"

namespace releq {

/// Structure constants of a Lie algebra in a fixed basis:
/// [e_i, e_j] = sum_k c(i,j,k) e_k, stored flat as c[i*k*k + j*k + l].
struct StructureConstants {
  int rank = 0;
  std::vector<double> c;

  static StructureConstants zero(int rank);
  static StructureConstants so3();

  double at(int i, int j, int k) const { return c[(i * rank + j) * rank + k]; }
  double& at(int i, int j, int k) { return c[(i * rank + j) * rank + k]; }

  /// Bracket [x, y] in this basis.
  Vec bracket(const Vec& x, const Vec& y) const;

  /// Throws InvalidStructureConstants on antisymmetry or Jacobi violations.
  void validate(double tol = 1e-10) const;
};

/// Torus action plus a finite group of symplectic matrices on a linear
/// phase space. Generators A_i act infinitesimally: xi -> sum xi_i A_i.
struct SymmetrySpec {
  int torus_rank = 0;
  std::vector<Mat> generators;       // k matrices, 2n x 2n, commuting
  std::vector<Mat> finite_elements;  // closed under product, includes identity
  StructureConstants structure_constants;  // zero for the torus

  /// Checks infinitesimal symplecticity, commutativity, symplecticity of the
  /// finite elements and invariance of the reference inner product.
  void validate(const PhaseSpace& phase) const;
};

} // namespace releq
