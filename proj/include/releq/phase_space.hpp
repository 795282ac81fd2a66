#pragma once

#include "releq/types.hpp"

namespace releq {

/// Linear symplectic phase space R^{2n} with a constant symplectic form
/// and a reference inner product used for orthogonal complements.
struct PhaseSpace {
  int dim = 0;   // 2n
  Mat omega;     // antisymmetric, invertible
  Mat inner;     // symmetric positive definite

  int n() const { return dim / 2; }

  /// Standard form: blocks [[0,1],[-1,0]] on consecutive (x_j, y_j) pairs,
  /// optionally scaled; inner defaults to scale * identity.
  static PhaseSpace standard(int pairs, double scale = 1.0);

  /// Throws InvalidModel if omega or inner violate their contracts.
  void validate() const;
};

/// Block-diagonal matrix with `pairs` copies of [[0,1],[-1,0]] scaled by `scale`.
Mat standard_omega(int pairs, double scale = 1.0);

/// Multiplication by i on interleaved (x, y) pairs: (x, y) -> (-y, x),
/// with an integer weight per pair (weight 0 leaves the pair fixed).
Mat pair_rotation_generator(const std::vector<int>& weights);

} // namespace releq
