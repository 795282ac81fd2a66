#pragma once

#include "releq/system.hpp"
#include "releq/types.hpp"

namespace releq {

/// Local parameterization Psi(eta, v) = z_e + V v + correction * eta of a
/// neighborhood transverse to the group orbit. Bases are orthonormal in the
/// reference inner product; eta lives in the dual of the complement of the
/// isotropy algebra, v in the symplectic slice V.
struct SliceDecomposition {
  Vec base_point;
  Vec generator;
  Mat g_me_basis;   // k x d0, isotropy algebra of the base point
  Mat m_basis;      // k x r, complement of the isotropy algebra
  Mat q_basis;      // k x 0 (empty for a torus)
  Mat V_basis;      // 2n x l
  Mat W_basis;      // 2n x r, momentum-transverse directions
  Mat correction;   // 2n x r, eta |-> A^{-1} P^*_m eta
  double a_condition = 0.0;  // condition number of the map A: W -> m^*
  double validity_radius = 0.0;
  double tol_rank = 0.0;

  int dim_gme() const { return static_cast<int>(g_me_basis.cols()); }
  int dim_m() const { return static_cast<int>(m_basis.cols()); }
  int dim_v() const { return static_cast<int>(V_basis.cols()); }
};

/// Builds the decomposition at a relative equilibrium. The isotropy algebra
/// is read off the singular values of the orbit map; a singular value inside
/// (tol_rank/10, 10 tol_rank) raises RankAmbiguous instead of guessing.
SliceDecomposition build_slice(const System& sys, const Vec& z_e, const Vec& xi,
                               double tol_rank = 1e-7);

/// Psi(eta, v). Throws OutOfChart outside the validity radius.
Vec slice_map(const SliceDecomposition& dec, const Vec& eta, const Vec& v);

struct Sm2Report {
  double sigma_min = 0.0;
  bool holds = false;
};

/// Smallest singular value of [group directions at Psi(eta,v) | dPsi]; the
/// transversality condition holds while it stays away from zero.
Sm2Report verify_sm2(const System& sys, const SliceDecomposition& dec,
                     const Vec& eta, const Vec& v);

} // namespace releq
