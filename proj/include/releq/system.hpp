#pragma once

#include <optional>
#include <string>
#include <vector>

#include "releq/hamiltonian.hpp"
#include "releq/phase_space.hpp"
#include "releq/symmetry.hpp"
#include "releq/types.hpp"

namespace releq {

struct DriftReport {
  double orbit_drift = 0.0;     // max_t |F_t(z) - exp(t A_xi) z|
  double momentum_drift = 0.0;  // max_t |J(F_t(z)) - J(z)|
};

/// A symmetric Hamiltonian system on a linear phase space. The momentum map
/// components are the quadratic forms J_i(z) = 1/2 z^T (Omega A_i) z, with the
/// sign fixed so that the Hamiltonian vector field of J^xi is z -> A_xi z.
class System {
public:
  System(PhaseSpace phase, SymmetrySpec symmetry, HamiltonianModel ham,
         std::string name = "system");

  const PhaseSpace& phase() const { return phase_; }
  const SymmetrySpec& symmetry() const { return sym_; }
  const HamiltonianModel& hamiltonian() const { return ham_; }
  const std::string& name() const { return name_; }
  int dim() const { return phase_.dim; }
  int torus_rank() const { return sym_.torus_rank; }

  // Momentum map and its derivatives (exact; the forms are quadratic).
  Vec momentum(const Vec& z) const;
  Vec momentum_gradient(const Vec& z, int i) const;   // Omega A_i z
  Mat momentum_jacobian(const Vec& z) const;          // k x 2n, rows DJ_i
  const Mat& momentum_form(int i) const { return j_forms_[i]; }

  double augmented_value(const Vec& z, const Vec& xi) const;
  Vec augmented_gradient(const Vec& z, const Vec& xi) const;
  Mat augmented_hessian(const Vec& z, const Vec& xi) const;

  /// Columns A_i z, i = 1..k.
  Mat group_orbit_tangent(const Vec& z) const;

  /// A_xi = sum_i xi_i A_i.
  Mat algebra_action(const Vec& xi) const;
  /// exp(t A_xi).
  Mat group_exp(const Vec& xi, double t = 1.0) const;

  /// Hamiltonian vector field Omega^{-1} grad h.
  Vec vector_field(const Vec& z) const;

  /// Apply omega^{-1} to a covector.
  Vec omega_solve(const Vec& rhs) const;

  /// Integrates the flow with fixed-step RK4 and compares against the group
  /// trajectory exp(t A_xi) z. Throws IntegrationBlowup if the state escapes.
  DriftReport check_relative_equilibrium(const Vec& z, const Vec& xi,
                                         double t_max, int steps) const;

  /// Fixed-step RK4 flow map over [0, t].
  Vec integrate(const Vec& z, double t, int steps) const;

  /// Invariance checks of h and sign conventions; throws InvalidModel.
  void validate(int samples = 5, unsigned seed = 20240913u) const;

private:
  PhaseSpace phase_;
  SymmetrySpec sym_;
  HamiltonianModel ham_;
  std::string name_;
  std::vector<Mat> j_forms_;  // symmetric matrices Omega A_i
  Eigen::PartialPivLU<Mat> omega_lu_;
};

} // namespace releq
