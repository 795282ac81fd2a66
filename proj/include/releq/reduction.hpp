#pragma once

#include "releq/slice.hpp"
#include "releq/symmetry.hpp"
#include "releq/system.hpp"

namespace releq {

struct NewtonOptions {
  int max_iter = 40;
  double tol = 1e-11;
};

/// Second variation of the augmented energy on the slice V, split into its
/// numerical kernel V0 and the complement V1. Coordinates refer to the
/// columns of dec.V_basis.
struct ReducedProblem {
  const System* sys = nullptr;
  SliceDecomposition dec;
  Mat L;          // l x l, symmetric
  Vec eigenvalues;
  Mat V0_basis;   // l x d
  Mat V1_basis;   // l x (l - d)
  double kernel_tol = 0.0;
  NewtonOptions newton;

  int kernel_dim() const { return static_cast<int>(V0_basis.cols()); }
  bool nondegenerate() const { return kernel_dim() == 0; }
};

/// Splits the spectrum of L at kernel_tol (default 1e-7 |L|_2) and enforces a
/// tenfold spectral gap between kernel and range; throws SpectralGapViolated.
ReducedProblem build_reduced(const System& sys, const SliceDecomposition& dec,
                             double kernel_tol = 0.0,
                             NewtonOptions newton = {});

/// Solves the transverse momentum equation for the generator offset beta in
/// the complement of the isotropy algebra. alpha is expressed in the columns
/// of dec.g_me_basis, v in the columns of dec.V_basis.
Vec solve_beta(const ReducedProblem& rp, const Vec& eta, const Vec& v,
               const Vec& alpha);

/// Solves the range component of the slice critical point equation for v1,
/// re-solving beta at every iterate. v0 is in V0 coordinates; the result in
/// V1 coordinates.
Vec solve_v1(const ReducedProblem& rp, const Vec& eta, const Vec& v0,
             const Vec& alpha);

/// Full generator xi + alpha + beta at the partially solved point.
Vec generator_map(const ReducedProblem& rp, const Vec& eta, const Vec& v0,
                  const Vec& alpha);

/// Kernel component of the critical point equation; its zeros (with a zero
/// rigid residual) are relative equilibria near the base point.
Vec bifurcation_function(const ReducedProblem& rp, const Vec& eta,
                         const Vec& v0, const Vec& alpha);

/// Phase-space point of slice coordinates, with the chart guard applied.
Vec reduced_point(const ReducedProblem& rp, const Vec& eta, const Vec& v0,
                  const Vec& alpha);

/// rho(beta_j) = -<J, [xi_full, m_j]> from structure constants; identically
/// zero when the constants vanish (torus case).
Vec rigid_residual(const StructureConstants& sc, const Vec& j_value,
                   const Vec& xi_full, const Mat& m_basis);

} // namespace releq
