#pragma once

#include <complex>
#include <random>

#include "releq/models.hpp"
#include "releq/system.hpp"

namespace releq::testing {

inline Vec random_vec(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = gauss(rng);
  return v;
}

inline std::complex<double> zpair(const Vec& z, int j) {
  return {z(2 * j), z(2 * j + 1)};
}

inline void set_zpair(Vec& z, int j, const std::complex<double>& c) {
  z(2 * j) = c.real();
  z(2 * j + 1) = c.imag();
}

// Independent evaluation of the wave critical point equation in complex
// arithmetic: components 2 d/d(conj z_j) of h - J^xi.
inline Vec wave_equation_direct(const WaveResonanceParams& params, const Vec& z,
                                const Vec& xi) {
  const WaveReference ref = wave_reference(params);
  const auto inv = WaveInvariants::values(z);
  const std::complex<double> z1 = zpair(z, 0), z2 = zpair(z, 1),
                             z3 = zpair(z, 2), z4 = zpair(z, 3);
  const double a1 = ref.a_at(1, inv), a2 = ref.a_at(2, inv),
               a3 = ref.a_at(3, inv), a4 = ref.a_at(4, inv);
  const double b1 = ref.b_at(1, inv), b2 = ref.b_at(2, inv);
  Vec out(8);
  set_zpair(out, 0, 2.0 * ((a1 - xi(0)) * z1 + b1 * std::conj(z1) * z3));
  set_zpair(out, 1, 2.0 * ((a2 - xi(1)) * z2 + b2 * std::conj(z2) * z4));
  set_zpair(out, 2, 2.0 * ((a3 - 2.0 * xi(0)) * z3 + 0.5 * b1 * z1 * z1));
  set_zpair(out, 3, 2.0 * ((a4 - 2.0 * xi(1)) * z4 + 0.5 * b2 * z2 * z2));
  return out;
}

// Random swap-invariant wave parameter set with b1 bounded away from zero.
inline WaveResonanceParams random_wave_params(std::mt19937_64& rng, double C) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  using T = WaveResonanceParams::Term;
  WaveResonanceParams p;
  p.C = C;
  double b1 = u(rng);
  if (std::abs(b1) < 0.25) b1 = b1 < 0 ? -0.25 : 0.25;
  p.terms = WaveResonanceParams::symmetric_pairs({
      T{1.0 + 0.5 * u(rng), {1, 0, 0, 0, 0, 0}},
      T{1.5 + 0.5 * u(rng), {0, 0, 1, 0, 0, 0}},
      T{b1, {0, 0, 0, 0, 1, 0}},
      T{0.5 * u(rng), {1, 0, 1, 0, 0, 0}},
      T{0.5 * u(rng), {1, 0, 0, 1, 0, 0}},
      T{0.5 * u(rng), {0, 0, 2, 0, 0, 0}},
      T{0.25 * u(rng), {1, 1, 0, 0, 0, 0}},
  });
  return p;
}

} // namespace releq::testing
