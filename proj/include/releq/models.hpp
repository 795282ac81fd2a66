#pragma once

#include <array>
#include <complex>
#include <vector>

#include "releq/system.hpp"

namespace releq {

/// Parameters of the two-mode wave-resonance family. The energy is a
/// polynomial in the invariants (X1, X2, X3, X4, U1, U2) of the torus action
/// z = (z1,..,z4) -> (z1 e^{i phi}, z2 e^{i psi}, z3 e^{2i phi}, z4 e^{2i psi}),
/// where X_j = |z_j|^2 and U_k = Re(z_k^2 conj(z_{k+2})). The swap
/// (z1<->z2, z3<->z4) must leave the polynomial invariant.
struct WaveResonanceParams {
  struct Term {
    double coeff = 0.0;
    std::array<int, 6> expo{};  // exponents of (X1, X2, X3, X4, U1, U2)
  };
  std::vector<Term> terms;  // full term list; must be swap-invariant
  double C = 1.0;           // amplitude of the base point (0, 0, C, 0)

  /// Expands pair representatives t into t + swap(t) (once if self-paired).
  static std::vector<Term> symmetric_pairs(const std::vector<Term>& reps);

  /// X1 + X2 + 2(X3 + X4) + (U1 + U2) - (X1 X3 + X2 X4) + (X1 X4 + X2 X3)/2.
  static WaveResonanceParams defaults(double C = 1.0);
};

/// Invariants of the wave torus action and their exact derivatives.
struct WaveInvariants {
  static Eigen::Matrix<double, 6, 1> values(const Vec& z);
  static Mat gradients(const Vec& z);          // 8 x 6
  static Mat hessian(const Vec& z, int which); // 8 x 8
};

/// Builds the full system: R^8 phase space, rank-2 torus with weights
/// (1,0,2,0) and (0,1,0,2), the swap reflection, and analytic derivatives.
/// Throws SymmetryViolation if the term list is not swap-invariant.
System wave_system(const WaveResonanceParams& params);

Vec wave_base_point(const WaveResonanceParams& params);
/// Generator (a3/2, xi2) of the base relative equilibrium.
Vec wave_base_generator(const WaveResonanceParams& params, double xi2 = 0.0);

/// Closed-form reference quantities for the wave model at the base point.
/// Coefficient functions a_j = dP/dX_j, b_k = dP/dU_k are exposed both at the
/// base point and as functions of the invariants, since several reference
/// formulas evaluate them along the slice rather than at the base.
struct WaveReference {
  double C = 0.0;
  double a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0, b1 = 0.0, b2 = 0.0;
  double xi1_hat = 0.0;        // a3 / 2
  double lambda1_plus = 0.0;   // a1 - a3/2 + C b1
  double lambda1_minus = 0.0;  // a1 - a3/2 - C b1
  double pitchfork_slope = 0.0;  // 1 / (4C)

  Polynomial p;  // energy polynomial in the six invariants

  double lambda2(double xi2) const { return a2 - xi2; }
  double lambda4(double xi2) const { return a4 - 2.0 * xi2; }
  double xi2_at_lambda2_zero() const { return a2; }
  double xi2_at_lambda4_zero() const { return a4 / 2.0; }

  // Distinctness diagnostics for the double crossings. The circle solve
  // needs a4 - 2 a2 != 0 at the base point; a2 != a4 is the weaker variant.
  double circle_denominator() const { return a4 - 2.0 * a2; }
  double mode_coefficient_gap() const { return a2 - a4; }

  double n_of_eta(double eta) const { return C + eta / (4.0 * C); }

  double a_at(int j, const Eigen::Matrix<double, 6, 1>& inv) const;  // dP/dX_j
  double b_at(int k, const Eigen::Matrix<double, 6, 1>& inv) const;  // dP/dU_k

  /// Exact solution of the transverse momentum equation on the slice:
  /// beta(eta, v) = (a3(pt) - a3(base))/2 + b1(pt) Y1 / (4 n(eta)),
  /// where pt is the slice point (z1, z2, n(eta), z4) and Y1 = Re(z1^2).
  double beta_closed(double eta, const std::complex<double>& z1,
                     const std::complex<double>& z2,
                     const std::complex<double>& z4) const;

  /// Exact kernel-complement correction at the lambda2 crossing:
  /// z4 = -b2 z2^2 / (2 (a4 - 2 (xi2 + alpha))), coefficients evaluated at
  /// (0, X2, n^2, 0, 0, 0) with xi2 = a2(base).
  std::complex<double> v1_z4_closed(double eta, const std::complex<double>& z2,
                                    double alpha) const;

  /// Reduced equation factor at the lambda2 crossing, in the parameterization
  /// where alpha measures the offset of the full generator from a2(pt):
  /// f2 = b2^2 X2 / (2 (a4 - 2 (a2 + alpha))) + alpha.
  double f2(double eta, double X2, double alpha) const;
};

WaveReference wave_reference(const WaveResonanceParams& params);

/// Uncoupled oscillators h = sum_j w_j |z_j|^2 with the diagonal torus action;
/// every phase point is a relative equilibrium with generator w.
System oscillator_system(const Vec& frequencies);

/// Oscillators plus an invariant quartic sum_{i<=j} q(i,j) X_i X_j; the origin
/// is an equilibrium with full isotropy.
System oscillator_quartic_system(const Vec& frequencies, const Mat& quartic);

/// Rank-1 torus acting on the first pair of R^4 only; the second pair carries
/// a cubic potential whose fold at the origin gives a one-dimensional kernel
/// with trivial residual symmetry.
System fold_model_system();
Vec fold_model_point();      // (1, 0, 0, 0)
Vec fold_model_generator();  // (2)

} // namespace releq
