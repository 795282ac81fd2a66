#include "releq/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "releq/errors.hpp"

namespace releq {

namespace {

std::array<int, 6> swap_expo(const std::array<int, 6>& e) {
  return {e[1], e[0], e[3], e[2], e[5], e[4]};
}

// Coefficient map of the term list, for exact invariance comparison.
std::map<std::array<int, 6>, double> coeff_map(
    const std::vector<WaveResonanceParams::Term>& terms) {
  std::map<std::array<int, 6>, double> m;
  for (const auto& t : terms) m[t.expo] += t.coeff;
  return m;
}

Polynomial invariant_polynomial(const WaveResonanceParams& params) {
  Polynomial p;
  p.nvars = 6;
  for (const auto& t : params.terms) {
    Polynomial::Term pt;
    pt.coeff = t.coeff;
    pt.expo.assign(t.expo.begin(), t.expo.end());
    p.terms.push_back(std::move(pt));
  }
  return p;
}

} // namespace

std::vector<WaveResonanceParams::Term> WaveResonanceParams::symmetric_pairs(
    const std::vector<Term>& reps) {
  std::vector<Term> out;
  for (const Term& t : reps) {
    out.push_back(t);
    const auto swapped = swap_expo(t.expo);
    if (swapped != t.expo) out.push_back(Term{t.coeff, swapped});
  }
  return out;
}

WaveResonanceParams WaveResonanceParams::defaults(double C) {
  WaveResonanceParams p;
  p.C = C;
  using T = Term;
  p.terms = symmetric_pairs({
      T{1.0, {1, 0, 0, 0, 0, 0}},    // X1 + X2
      T{2.0, {0, 0, 1, 0, 0, 0}},    // 2 X3 + 2 X4
      T{1.0, {0, 0, 0, 0, 1, 0}},    // U1 + U2
      T{-1.0, {1, 0, 1, 0, 0, 0}},   // -(X1 X3 + X2 X4)
      T{0.5, {1, 0, 0, 1, 0, 0}},    // (X1 X4 + X2 X3)/2
  });
  return p;
}

Eigen::Matrix<double, 6, 1> WaveInvariants::values(const Vec& z) {
  Eigen::Matrix<double, 6, 1> inv;
  for (int j = 0; j < 4; ++j)
    inv(j) = z(2 * j) * z(2 * j) + z(2 * j + 1) * z(2 * j + 1);
  // U_k = Re(z_k^2 conj(z_{k+2})), pairs (1,3) and (2,4)
  for (int k = 0; k < 2; ++k) {
    const double x = z(2 * k), y = z(2 * k + 1);
    const double xs = z(2 * (k + 2)), ys = z(2 * (k + 2) + 1);
    inv(4 + k) = (x * x - y * y) * xs + 2.0 * x * y * ys;
  }
  return inv;
}

Mat WaveInvariants::gradients(const Vec& z) {
  Mat g = Mat::Zero(8, 6);
  for (int j = 0; j < 4; ++j) {
    g(2 * j, j) = 2.0 * z(2 * j);
    g(2 * j + 1, j) = 2.0 * z(2 * j + 1);
  }
  for (int k = 0; k < 2; ++k) {
    const int i0 = 2 * k, i1 = 2 * k + 1;
    const int j0 = 2 * (k + 2), j1 = 2 * (k + 2) + 1;
    const double x = z(i0), y = z(i1), xs = z(j0), ys = z(j1);
    g(i0, 4 + k) = 2.0 * x * xs + 2.0 * y * ys;
    g(i1, 4 + k) = -2.0 * y * xs + 2.0 * x * ys;
    g(j0, 4 + k) = x * x - y * y;
    g(j1, 4 + k) = 2.0 * x * y;
  }
  return g;
}

Mat WaveInvariants::hessian(const Vec& z, int which) {
  Mat h = Mat::Zero(8, 8);
  if (which < 4) {
    h(2 * which, 2 * which) = 2.0;
    h(2 * which + 1, 2 * which + 1) = 2.0;
    return h;
  }
  const int k = which - 4;
  const int i0 = 2 * k, i1 = 2 * k + 1;
  const int j0 = 2 * (k + 2), j1 = 2 * (k + 2) + 1;
  const double x = z(i0), y = z(i1), xs = z(j0), ys = z(j1);
  h(i0, i0) = 2.0 * xs;
  h(i1, i1) = -2.0 * xs;
  h(i0, i1) = h(i1, i0) = 2.0 * ys;
  h(i0, j0) = h(j0, i0) = 2.0 * x;
  h(i0, j1) = h(j1, i0) = 2.0 * y;
  h(i1, j0) = h(j0, i1) = -2.0 * y;
  h(i1, j1) = h(j1, i1) = 2.0 * x;
  return h;
}

System wave_system(const WaveResonanceParams& params) {
  // Swap invariance of the energy polynomial.
  auto direct = coeff_map(params.terms);
  std::vector<WaveResonanceParams::Term> swapped;
  for (const auto& t : params.terms)
    swapped.push_back({t.coeff, swap_expo(t.expo)});
  if (direct != coeff_map(swapped))
    throw SymmetryViolation("wave energy polynomial is not swap-invariant");
  if (params.C <= 0.0) throw InvalidModel("wave amplitude C must be positive");
  {
    // The first-mode eigenvalue pair splits by 2 C b1; a vanishing coupling
    // coefficient at the base point collapses the analysis.
    Polynomial p = invariant_polynomial(params);
    Vec base(6);
    base << 0, 0, params.C * params.C, 0, 0, 0;
    if (std::abs(p.gradient(base)(4)) < 1e-12)
      throw InvalidModel("mode coupling coefficient vanishes at the base point");
  }

  PhaseSpace phase = PhaseSpace::standard(4, 2.0);
  SymmetrySpec sym;
  sym.torus_rank = 2;
  sym.generators = {pair_rotation_generator({1, 0, 2, 0}),
                    pair_rotation_generator({0, 1, 0, 2})};
  Mat swap = Mat::Zero(8, 8);
  swap.block(0, 2, 2, 2).setIdentity();
  swap.block(2, 0, 2, 2).setIdentity();
  swap.block(4, 6, 2, 2).setIdentity();
  swap.block(6, 4, 2, 2).setIdentity();
  sym.finite_elements = {Mat::Identity(8, 8), swap};
  sym.structure_constants = StructureConstants::zero(2);

  Polynomial p = invariant_polynomial(params);
  HamiltonianModel ham;
  ham.value = [p](const Vec& z) {
    return p.value(WaveInvariants::values(z));
  };
  ham.gradient = [p](const Vec& z) {
    const auto inv = WaveInvariants::values(z);
    const Vec dp = p.gradient(inv);
    return Vec(WaveInvariants::gradients(z) * dp);
  };
  ham.hessian = [p](const Vec& z) {
    const auto inv = WaveInvariants::values(z);
    const Vec dp = p.gradient(inv);
    const Mat d2p = p.hessian(inv);
    const Mat gi = WaveInvariants::gradients(z);
    Mat h = gi * d2p * gi.transpose();
    for (int s = 0; s < 6; ++s)
      if (dp(s) != 0.0) h += dp(s) * WaveInvariants::hessian(z, s);
    return h;
  };
  return System(std::move(phase), std::move(sym), std::move(ham), "wave_resonance");
}

Vec wave_base_point(const WaveResonanceParams& params) {
  Vec z = Vec::Zero(8);
  z(4) = params.C;
  return z;
}

Vec wave_base_generator(const WaveResonanceParams& params, double xi2) {
  const WaveReference ref = wave_reference(params);
  Vec xi(2);
  xi << ref.xi1_hat, xi2;
  return xi;
}

double WaveReference::a_at(int j, const Eigen::Matrix<double, 6, 1>& inv) const {
  Vec x(6);
  x << inv(0), inv(1), inv(2), inv(3), inv(4), inv(5);
  return p.gradient(x)(j - 1);
}

double WaveReference::b_at(int k, const Eigen::Matrix<double, 6, 1>& inv) const {
  Vec x(6);
  x << inv(0), inv(1), inv(2), inv(3), inv(4), inv(5);
  return p.gradient(x)(3 + k);
}

double WaveReference::beta_closed(double eta, const std::complex<double>& z1,
                                  const std::complex<double>& z2,
                                  const std::complex<double>& z4) const {
  const double n = n_of_eta(eta);
  const double Y1 = std::norm(z1) == 0.0 ? 0.0 : (z1 * z1).real();
  Eigen::Matrix<double, 6, 1> inv;
  inv << std::norm(z1), std::norm(z2), n * n, std::norm(z4), n * Y1,
      (z2 * z2 * std::conj(z4)).real();
  Eigen::Matrix<double, 6, 1> base;
  base << 0, 0, C * C, 0, 0, 0;
  return 0.5 * (a_at(3, inv) - a_at(3, base)) + b_at(1, inv) * Y1 / (4.0 * n);
}

std::complex<double> WaveReference::v1_z4_closed(double eta,
                                                 const std::complex<double>& z2,
                                                 double alpha) const {
  const double n = n_of_eta(eta);
  Eigen::Matrix<double, 6, 1> inv;
  inv << 0.0, std::norm(z2), n * n, 0.0, 0.0, 0.0;
  const double denom = a_at(4, inv) - 2.0 * (a2 + alpha);
  return -b_at(2, inv) * z2 * z2 / (2.0 * denom);
}

double WaveReference::f2(double eta, double X2, double alpha) const {
  const double n = n_of_eta(eta);
  Eigen::Matrix<double, 6, 1> inv;
  inv << 0.0, X2, n * n, 0.0, 0.0, 0.0;
  const double b2p = b_at(2, inv);
  const double denom = a_at(4, inv) - 2.0 * (a_at(2, inv) + alpha);
  return b2p * b2p * X2 / (2.0 * denom) + alpha;
}

WaveReference wave_reference(const WaveResonanceParams& params) {
  WaveReference ref;
  ref.C = params.C;
  ref.p = invariant_polynomial(params);
  Vec base(6);
  base << 0, 0, params.C * params.C, 0, 0, 0;
  const Vec dp = ref.p.gradient(base);
  ref.a1 = dp(0);
  ref.a2 = dp(1);
  ref.a3 = dp(2);
  ref.a4 = dp(3);
  ref.b1 = dp(4);
  ref.b2 = dp(5);
  ref.xi1_hat = 0.5 * ref.a3;
  ref.lambda1_plus = ref.a1 - 0.5 * ref.a3 + params.C * ref.b1;
  ref.lambda1_minus = ref.a1 - 0.5 * ref.a3 - params.C * ref.b1;
  ref.pitchfork_slope = 1.0 / (4.0 * params.C);
  return ref;
}

System oscillator_system(const Vec& frequencies) {
  const int n = static_cast<int>(frequencies.size());
  if (n < 1) throw InvalidModel("oscillator needs at least one frequency");
  PhaseSpace phase = PhaseSpace::standard(n, 2.0);
  SymmetrySpec sym;
  sym.torus_rank = n;
  for (int j = 0; j < n; ++j) {
    std::vector<int> w(n, 0);
    w[j] = 1;
    sym.generators.push_back(pair_rotation_generator(w));
  }
  sym.finite_elements = {Mat::Identity(2 * n, 2 * n), -Mat::Identity(2 * n, 2 * n)};
  sym.structure_constants = StructureConstants::zero(n);

  Polynomial p;
  p.nvars = 2 * n;
  for (int j = 0; j < n; ++j) {
    Polynomial::Term tx, ty;
    tx.coeff = ty.coeff = frequencies(j);
    tx.expo.assign(2 * n, 0);
    ty.expo.assign(2 * n, 0);
    tx.expo[2 * j] = 2;
    ty.expo[2 * j + 1] = 2;
    p.terms.push_back(tx);
    p.terms.push_back(ty);
  }
  return System(std::move(phase), std::move(sym), p.to_hamiltonian(), "oscillator");
}

System oscillator_quartic_system(const Vec& frequencies, const Mat& quartic) {
  const int n = static_cast<int>(frequencies.size());
  PhaseSpace phase = PhaseSpace::standard(n, 2.0);
  SymmetrySpec sym;
  sym.torus_rank = n;
  for (int j = 0; j < n; ++j) {
    std::vector<int> w(n, 0);
    w[j] = 1;
    sym.generators.push_back(pair_rotation_generator(w));
  }
  sym.finite_elements = {Mat::Identity(2 * n, 2 * n)};
  sym.structure_constants = StructureConstants::zero(n);

  auto xval = [n](const Vec& z) {
    Vec x(n);
    for (int j = 0; j < n; ++j)
      x(j) = z(2 * j) * z(2 * j) + z(2 * j + 1) * z(2 * j + 1);
    return x;
  };
  Vec w = frequencies;
  Mat q = 0.5 * (quartic + quartic.transpose());
  HamiltonianModel ham;
  ham.value = [w, q, xval, n](const Vec& z) {
    const Vec x = xval(z);
    return w.dot(x) + x.dot(q * x);
  };
  ham.gradient = [w, q, xval, n](const Vec& z) {
    const Vec x = xval(z);
    const Vec dx = w + 2.0 * (q * x);  // d/dX_j
    Vec g(2 * n);
    for (int j = 0; j < n; ++j) {
      g(2 * j) = dx(j) * 2.0 * z(2 * j);
      g(2 * j + 1) = dx(j) * 2.0 * z(2 * j + 1);
    }
    return g;
  };
  ham.hessian = [w, q, xval, n](const Vec& z) {
    const Vec x = xval(z);
    const Vec dx = w + 2.0 * (q * x);
    Mat gi = Mat::Zero(2 * n, n);
    for (int j = 0; j < n; ++j) {
      gi(2 * j, j) = 2.0 * z(2 * j);
      gi(2 * j + 1, j) = 2.0 * z(2 * j + 1);
    }
    Mat h = gi * (2.0 * q) * gi.transpose();
    for (int j = 0; j < n; ++j) {
      h(2 * j, 2 * j) += 2.0 * dx(j);
      h(2 * j + 1, 2 * j + 1) += 2.0 * dx(j);
    }
    return h;
  };
  return System(std::move(phase), std::move(sym), std::move(ham),
                "oscillator_quartic");
}

System fold_model_system() {
  PhaseSpace phase = PhaseSpace::standard(2, 2.0);
  SymmetrySpec sym;
  sym.torus_rank = 1;
  sym.generators = {pair_rotation_generator({1, 0})};
  sym.finite_elements = {Mat::Identity(4, 4)};
  sym.structure_constants = StructureConstants::zero(1);

  // h = X1 + X1^2/2 + x2^3/3 + y2^2/2, X1 = x1^2 + y1^2
  Polynomial p;
  p.nvars = 4;
  using T = Polynomial::Term;
  p.terms = {
      T{1.0, {2, 0, 0, 0}},  T{1.0, {0, 2, 0, 0}},
      T{0.5, {4, 0, 0, 0}},  T{1.0, {2, 2, 0, 0}}, T{0.5, {0, 4, 0, 0}},
      T{1.0 / 3.0, {0, 0, 3, 0}}, T{0.5, {0, 0, 0, 2}},
  };
  return System(std::move(phase), std::move(sym), p.to_hamiltonian(), "fold_model");
}

Vec fold_model_point() {
  Vec z = Vec::Zero(4);
  z(0) = 1.0;
  return z;
}

Vec fold_model_generator() {
  Vec xi(1);
  xi << 2.0;
  return xi;
}

} // namespace releq
