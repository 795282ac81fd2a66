#include "releq/system.hpp"

#include <cmath>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "releq/errors.hpp"

namespace releq {

System::System(PhaseSpace phase, SymmetrySpec symmetry, HamiltonianModel ham,
               std::string name)
    : phase_(std::move(phase)),
      sym_(std::move(symmetry)),
      ham_(std::move(ham)),
      name_(std::move(name)) {
  phase_.validate();
  sym_.validate(phase_);
  j_forms_.reserve(sym_.generators.size());
  for (const Mat& a : sym_.generators) {
    Mat s = phase_.omega * a;
    j_forms_.push_back(0.5 * (s + s.transpose()));
  }
  omega_lu_.compute(phase_.omega);
}

Vec System::momentum(const Vec& z) const {
  Vec j(sym_.torus_rank);
  for (int i = 0; i < sym_.torus_rank; ++i)
    j(i) = 0.5 * z.dot(j_forms_[i] * z);
  return j;
}

Vec System::momentum_gradient(const Vec& z, int i) const {
  return j_forms_[i] * z;
}

Mat System::momentum_jacobian(const Vec& z) const {
  Mat dj(sym_.torus_rank, phase_.dim);
  for (int i = 0; i < sym_.torus_rank; ++i)
    dj.row(i) = (j_forms_[i] * z).transpose();
  return dj;
}

double System::augmented_value(const Vec& z, const Vec& xi) const {
  return ham_.value(z) - momentum(z).dot(xi);
}

Vec System::augmented_gradient(const Vec& z, const Vec& xi) const {
  Vec g = ham_.grad(z);
  for (int i = 0; i < sym_.torus_rank; ++i)
    if (xi(i) != 0.0) g -= xi(i) * (j_forms_[i] * z);
  return g;
}

Mat System::augmented_hessian(const Vec& z, const Vec& xi) const {
  Mat h = ham_.hess(z);
  for (int i = 0; i < sym_.torus_rank; ++i)
    if (xi(i) != 0.0) h -= xi(i) * j_forms_[i];
  return 0.5 * (h + h.transpose());
}

Mat System::group_orbit_tangent(const Vec& z) const {
  Mat t(phase_.dim, sym_.torus_rank);
  for (int i = 0; i < sym_.torus_rank; ++i) t.col(i) = sym_.generators[i] * z;
  return t;
}

Mat System::algebra_action(const Vec& xi) const {
  Mat a = Mat::Zero(phase_.dim, phase_.dim);
  for (int i = 0; i < sym_.torus_rank; ++i) a += xi(i) * sym_.generators[i];
  return a;
}

Mat System::group_exp(const Vec& xi, double t) const {
  return Mat((t * algebra_action(xi)).exp());
}

Vec System::vector_field(const Vec& z) const {
  return omega_lu_.solve(ham_.grad(z));
}

Vec System::omega_solve(const Vec& rhs) const { return omega_lu_.solve(rhs); }

Vec System::integrate(const Vec& z0, double t, int steps) const {
  const double h = t / steps;
  const double cap = 1e6 * (1.0 + z0.norm());
  Vec z = z0;
  for (int s = 0; s < steps; ++s) {
    const Vec k1 = vector_field(z);
    const Vec k2 = vector_field(z + 0.5 * h * k1);
    const Vec k3 = vector_field(z + 0.5 * h * k2);
    const Vec k4 = vector_field(z + h * k3);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!z.allFinite() || z.norm() > cap)
      throw IntegrationBlowup("trajectory escaped at t=" + std::to_string((s + 1) * h));
  }
  return z;
}

DriftReport System::check_relative_equilibrium(const Vec& z0, const Vec& xi,
                                               double t_max, int steps) const {
  if (t_max <= 0.0) throw InvalidModel("t_max must be positive");
  const double h = t_max / steps;
  const double cap = 1e6 * (1.0 + z0.norm());
  const Mat step_rot = group_exp(xi, h);
  const Vec j0 = momentum(z0);
  DriftReport rep;
  Vec z = z0;
  Vec orbit = z0;
  for (int s = 0; s < steps; ++s) {
    const Vec k1 = vector_field(z);
    const Vec k2 = vector_field(z + 0.5 * h * k1);
    const Vec k3 = vector_field(z + 0.5 * h * k2);
    const Vec k4 = vector_field(z + h * k3);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!z.allFinite() || z.norm() > cap)
      throw IntegrationBlowup("trajectory escaped at t=" + std::to_string((s + 1) * h));
    orbit = step_rot * orbit;
    rep.orbit_drift = std::max(rep.orbit_drift, (z - orbit).norm());
    rep.momentum_drift = std::max(rep.momentum_drift, (momentum(z) - j0).norm());
  }
  return rep;
}

void System::validate(int samples, unsigned seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int d = phase_.dim;
  for (int s = 0; s < samples; ++s) {
    Vec z(d);
    for (int i = 0; i < d; ++i) z(i) = gauss(rng);
    const double h0 = ham_.value(z);
    for (const Mat& g : sym_.finite_elements) {
      if (std::abs(ham_.value(g * z) - h0) > 1e-10 * (1.0 + std::abs(h0)))
        throw InvalidModel("hamiltonian not invariant under finite element");
    }
    for (int i = 0; i < sym_.torus_rank; ++i) {
      for (double t : {0.37, 1.91}) {
        const Mat g = (t * sym_.generators[i]).exp();
        if (std::abs(ham_.value(g * z) - h0) > 1e-9 * (1.0 + std::abs(h0)))
          throw InvalidModel("hamiltonian not invariant under torus");
      }
      // X_{J_i}(z) = A_i z: the defining property of the momentum map here.
      const Vec xj = omega_lu_.solve(j_forms_[i] * z);
      const Vec az = sym_.generators[i] * z;
      if ((xj - az).norm() > 1e-10 * (1.0 + az.norm()))
        throw InvalidModel("momentum component " + std::to_string(i) +
                           " does not generate the group direction");
    }
    if (ham_.gradient) {
      const Vec ga = ham_.gradient(z);
      const Vec gf = ham_.fd_gradient(z);
      if ((ga - gf).norm() > 1e-6 * (1.0 + ga.norm()))
        throw InvalidModel("analytic gradient disagrees with finite differences");
    }
  }
}

} // namespace releq
