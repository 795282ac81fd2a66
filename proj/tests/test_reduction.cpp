#include <doctest.h>

#include <cmath>
#include <complex>

#include "releq/errors.hpp"
#include "releq/reduction.hpp"
#include "test_helpers.hpp"

using namespace releq;
using namespace releq::testing;

namespace {

struct WaveSetup {
  WaveResonanceParams params;
  System sys;
  WaveReference ref;
  SliceDecomposition dec;

  WaveSetup(double C, double xi2)
      : params(WaveResonanceParams::defaults(C)),
        sys(wave_system(params)),
        ref(wave_reference(params)),
        dec(build_slice(sys, wave_base_point(params),
                        wave_base_generator(params, xi2), 1e-7)) {}
};

// Coordinates of a phase-space offset lying in V.
Vec v_coords(const SliceDecomposition& dec, const Mat& inner, const Vec& offset) {
  return dec.V_basis.transpose() * inner * offset;
}

Vec z2_offset(const std::complex<double>& z2) {
  Vec off = Vec::Zero(8);
  off(2) = z2.real();
  off(3) = z2.imag();
  return off;
}

} // namespace

TEST_CASE("transverse generator solve") {
  WaveSetup w(0.75, 0.4);
  ReducedProblem rp = build_reduced(w.sys, w.dec);

  SUBCASE("zero at the base point") {
    CHECK(solve_beta(rp, Vec::Zero(1), Vec::Zero(6), Vec::Zero(1)).norm() <=
          1e-12);
  }
  SUBCASE("matches the closed form across the chart") {
    std::mt19937_64 rng(41);
    for (int s = 0; s < 25; ++s) {
      Vec eta(1);
      eta << (s % 5 - 2) * 0.25 * 0.1 * w.params.C * w.params.C;
      Vec dir = random_vec(rng, 6).normalized();
      const Vec v = v_coords(w.dec, w.sys.phase().inner,
                             w.dec.V_basis * (0.1 * (s % 4) / 3.0 * dir));
      const Vec beta = solve_beta(rp, eta, v, Vec::Zero(1));
      const Vec z = slice_map(w.dec, eta, v);
      const double expected = w.ref.beta_closed(eta(0), zpair(z, 0),
                                                zpair(z, 1), zpair(z, 3));
      CHECK(beta(0) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
  SUBCASE("generator map composes base, offset, and solved part") {
    Vec eta(1);
    eta << 0.02;
    Vec alpha(1);
    alpha << 0.07;
    ReducedProblem rp2 = build_reduced(w.sys, w.dec);
    CHECK(rp2.nondegenerate());
    const Vec xi_full = generator_map(rp2, eta, Vec::Zero(0), alpha);
    // Second component is xi2 + alpha exactly.
    CHECK(xi_full(1) == doctest::Approx(0.4 + 0.07).epsilon(1e-12));
  }
}

TEST_CASE("reduced second variation reproduces the spectrum table") {
  SUBCASE("generic point splits off no kernel") {
    WaveSetup w(0.75, 0.4);
    ReducedProblem rp = build_reduced(w.sys, w.dec);
    CHECK(rp.nondegenerate());
    Vec expected(6);
    expected << w.ref.lambda1_plus, w.ref.lambda1_minus, w.ref.lambda2(0.4),
        w.ref.lambda2(0.4), w.ref.lambda4(0.4), w.ref.lambda4(0.4);
    std::sort(expected.data(), expected.data() + 6);
    for (int i = 0; i < 6; ++i)
      CHECK(rp.eigenvalues(i) == doctest::Approx(expected(i)).epsilon(1e-10));
  }
  SUBCASE("tuning the generator to a2 opens a double kernel on the z2 plane") {
    WaveSetup w0(0.75, 0.0);
    const double xi2 = wave_reference(w0.params).xi2_at_lambda2_zero();
    WaveSetup w(0.75, xi2);
    ReducedProblem rp = build_reduced(w.sys, w.dec);
    CHECK(rp.kernel_dim() == 2);
    const Mat kernel = w.dec.V_basis * rp.V0_basis;  // phase-space directions
    for (int c = 0; c < 2; ++c)
      for (int i : {0, 1, 4, 5, 6, 7})
        CHECK(std::abs(kernel(i, c)) <= 1e-9);
  }
  SUBCASE("the symmetric pitchfork point has a simple kernel") {
    WaveSetup w(1.0, 0.4);
    ReducedProblem rp = build_reduced(w.sys, w.dec);
    CHECK(rp.kernel_dim() == 1);
    const Vec kernel = w.dec.V_basis * rp.V0_basis.col(0);
    CHECK(std::abs(std::abs(kernel(0)) * std::sqrt(2.0) - 1.0) <= 1e-10);
  }
  SUBCASE("an eigenvalue inside the gap band aborts the construction") {
    WaveSetup w(0.75, 0.0);
    // lambda1+ = 0.1875 lies between 0.05 and 0.5.
    CHECK_THROWS_AS(build_reduced(w.sys, w.dec, 0.05), SpectralGapViolated);
  }
}

TEST_CASE("kernel-complement correction at the double crossing") {
  const double C = 0.75;
  WaveSetup w0(C, 0.0);
  const double xi2 = wave_reference(w0.params).xi2_at_lambda2_zero();
  WaveSetup w(C, xi2);
  ReducedProblem rp = build_reduced(w.sys, w.dec);
  REQUIRE(rp.kernel_dim() == 2);

  SUBCASE("vanishes at the origin") {
    CHECK(solve_v1(rp, Vec::Zero(1), Vec::Zero(2), Vec::Zero(1)).norm() <=
          1e-12);
  }
  SUBCASE("matches the closed form for the fourth mode") {
    for (int s = 0; s < 12; ++s) {
      const std::complex<double> z2 =
          0.05 * std::polar(0.2 + 0.8 * (s % 4) / 3.0, 0.6 * s);
      const double alpha = (s % 3 - 1) * 0.05;
      Vec eta(1);
      eta << (s % 2 ? 0.02 : 0.0);
      const Vec v0 = rp.V0_basis.transpose() *
                     v_coords(w.dec, w.sys.phase().inner, z2_offset(z2));
      Vec av(1);
      av << alpha;
      const Vec y = solve_v1(rp, eta, v0, av);
      const Vec offset = w.dec.V_basis * (rp.V1_basis * y);
      const std::complex<double> z4_num(offset(6), offset(7));
      const std::complex<double> z4_ref =
          w.ref.v1_z4_closed(eta(0), z2, alpha);
      CHECK(std::abs(z4_num - z4_ref) <= 1e-6 * std::abs(z4_ref));
      // Everything else in the complement stays at zero.
      for (int i : {0, 1, 4, 5}) CHECK(std::abs(offset(i)) <= 1e-9);
    }
  }
  SUBCASE("correction is quadratically tangent to the kernel") {
    Vec v0 = Vec::Zero(2);
    v0(0) = 0.08;
    double prev = 0.0;
    for (int h = 0; h < 4; ++h) {
      const Vec y = solve_v1(rp, Vec::Zero(1), v0, Vec::Zero(1));
      const double ratio = y.norm() / v0.squaredNorm();
      if (h > 0) CHECK(ratio == doctest::Approx(prev).epsilon(0.2));
      prev = ratio;
      v0 *= 0.5;
    }
  }
}

TEST_CASE("kernel equation matches the reduced factor") {
  const double C = 0.75;
  WaveSetup w0(C, 0.0);
  const double xi2 = wave_reference(w0.params).xi2_at_lambda2_zero();
  WaveSetup w(C, xi2);
  ReducedProblem rp = build_reduced(w.sys, w.dec);
  REQUIRE(rp.kernel_dim() == 2);

  SUBCASE("zero at the origin") {
    CHECK(bifurcation_function(rp, Vec::Zero(1), Vec::Zero(2), Vec::Zero(1))
              .norm() <= 1e-11);
  }
  SUBCASE("proportional to the kernel coordinate with the reduced factor") {
    for (int s = 0; s < 10; ++s) {
      const std::complex<double> z2 = 0.04 * std::polar(1.0, 0.7 * s);
      const double alpha = (s % 3 - 1) * 0.04;
      Vec eta(1);
      eta << (s % 2 ? -0.015 : 0.01);
      const Vec v0 = rp.V0_basis.transpose() *
                     v_coords(w.dec, w.sys.phase().inner, z2_offset(z2));
      Vec av(1);
      av << alpha;
      const Vec b = bifurcation_function(rp, eta, v0, av);

      // Reduced factor, in the parameterization where the unfolding measures
      // the offset of the full generator from a2 at the point.
      const Vec xi_full = generator_map(rp, eta, v0, av);
      const double n = w.ref.n_of_eta(eta(0));
      Eigen::Matrix<double, 6, 1> inv;
      inv << 0, std::norm(z2), n * n, 0, 0, 0;
      const double alpha_at_point = xi_full(1) - w.ref.a_at(2, inv);
      const double f2 = w.ref.f2(eta(0), std::norm(z2), alpha_at_point);
      const Vec expected = -f2 * v0;
      // The factor drops the fourth-mode feedback into a2, an O(X2^2) term.
      const double higher_order = 3.0 * std::pow(std::norm(z2), 2) * v0.norm();
      CHECK((b - expected).norm() <=
            1e-9 + 1e-6 * expected.norm() + higher_order);
    }
  }
  SUBCASE("zeros of the kernel equation recombine into critical points") {
    const std::complex<double> z2(0.05, 0.02);
    const Vec v0 = rp.V0_basis.transpose() *
                   v_coords(w.dec, w.sys.phase().inner, z2_offset(z2));
    const Vec eta = Vec::Zero(1);
    auto bcomp = [&](double a) {
      Vec av(1);
      av << a;
      return bifurcation_function(rp, eta, v0, av).dot(v0.normalized());
    };
    double lo = -0.05, hi = 0.05;
    REQUIRE(bcomp(lo) * bcomp(hi) < 0.0);
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      (bcomp(lo) * bcomp(mid) <= 0.0 ? hi : lo) = mid;
    }
    Vec av(1);
    av << 0.5 * (lo + hi);
    const Vec z = reduced_point(rp, eta, v0, av);
    const Vec xi_full = generator_map(rp, eta, v0, av);
    CHECK(w.sys.augmented_gradient(z, xi_full).norm() <= 10.0 * rp.newton.tol);
    // The rigid residual vanishes identically for the torus.
    const Vec rho = rigid_residual(w.sys.symmetry().structure_constants,
                                   w.sys.momentum(z), xi_full, w.dec.m_basis);
    CHECK(rho.norm() == 0.0);
  }
}

TEST_CASE("kernel equation symmetry") {
  SUBCASE("odd under the residual reflection at the simple crossing") {
    WaveSetup w(1.0, 0.4);
    ReducedProblem rp = build_reduced(w.sys, w.dec);
    REQUIRE(rp.kernel_dim() == 1);
    Vec v0(1), av(1), eta(1);
    v0 << 0.06;
    av << 0.0;
    eta << 0.01;
    const Vec bp = bifurcation_function(rp, eta, v0, av);
    const Vec bm = bifurcation_function(rp, eta, -v0, av);
    CHECK((bp + bm).norm() <= 1e-9 * (1.0 + bp.norm()));
    // Generator map is even in the kernel coordinate.
    const Vec xp = generator_map(rp, eta, v0, av);
    const Vec xm = generator_map(rp, eta, -v0, av);
    CHECK((xp - xm).norm() <= 1e-9);
  }
  SUBCASE("gradient structure at full isotropy") {
    Vec freqs(2);
    freqs << 1.0, 1.7;
    Mat quartic(2, 2);
    quartic << 0.25, 0.1, 0.1, 0.3;
    const System sys = oscillator_quartic_system(freqs, quartic);
    Vec xi(2);
    xi << 1.0, 0.9;  // kernel = first mode plane
    const SliceDecomposition dec = build_slice(sys, Vec::Zero(4), xi, 1e-7);
    ReducedProblem rp = build_reduced(sys, dec);
    REQUIRE(rp.kernel_dim() == 2);
    std::mt19937_64 rng(44);
    for (int s = 0; s < 4; ++s) {
      const Vec v0 = 0.1 * random_vec(rng, 2);
      const Vec alpha = 0.05 * random_vec(rng, 2);
      const double h = 1e-6;
      Mat jac(2, 2);
      for (int j = 0; j < 2; ++j) {
        Vec vp = v0, vm = v0;
        vp(j) += h;
        vm(j) -= h;
        jac.col(j) = (bifurcation_function(rp, Vec(0), vp, alpha) -
                      bifurcation_function(rp, Vec(0), vm, alpha)) /
                     (2.0 * h);
      }
      CHECK((jac - jac.transpose()).cwiseAbs().maxCoeff() <=
            1e-8 * (1.0 + jac.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("rigid residual from structure constants") {
  SUBCASE("torus brackets vanish identically") {
    const auto sc = StructureConstants::zero(2);
    Vec j(2), xi(2);
    j << 3.0, -1.0;
    xi << 0.5, 2.0;
    const Vec rho = rigid_residual(sc, j, xi, Mat::Identity(2, 2));
    CHECK(rho(0) == 0.0);
    CHECK(rho(1) == 0.0);
  }
  SUBCASE("coaxial momentum and generator") {
    const auto sc = StructureConstants::so3();
    Vec j(3), xi(3);
    j << 0, 0, 1;
    xi << 0, 0, 1;
    Mat m(3, 2);
    m << 1, 0, 0, 1, 0, 0;
    CHECK(rigid_residual(sc, j, xi, m).norm() <= 1e-15);
  }
  SUBCASE("transverse generator picks up the bracket pairing") {
    const auto sc = StructureConstants::so3();
    Vec j(3), xi(3);
    j << 0, 0, 1;
    xi << 1, 0, 0;
    Mat m(3, 2);
    m << 1, 0, 0, 1, 0, 0;
    const Vec rho = rigid_residual(sc, j, xi, m);
    CHECK(rho(0) == doctest::Approx(0.0));
    CHECK(rho(1) == doctest::Approx(-1.0).epsilon(1e-14));
  }
  SUBCASE("inconsistent constants are rejected") {
    auto sc = StructureConstants::zero(2);
    sc.at(0, 1, 0) = 1.0;  // breaks antisymmetry
    Vec j(2), xi(2);
    j.setZero();
    xi.setZero();
    CHECK_THROWS_AS(rigid_residual(sc, j, xi, Mat::Identity(2, 2)),
                    InvalidStructureConstants);
  }
}

TEST_CASE("transverse solve sees a near-identity jacobian at the origin") {
  WaveSetup w(0.8, 0.3);
  const Vec z_e = w.dec.base_point;
  // Residual of the transverse momentum equation as solve_beta poses it.
  auto residual = [&](double beta) {
    Vec omega = w.dec.generator + w.dec.m_basis * (Vec(1) << beta).finished();
    return (-w.dec.correction.transpose() *
            w.sys.augmented_gradient(z_e, omega))(0);
  };
  const double h = 1e-7;
  const double jac = (residual(h) - residual(-h)) / (2.0 * h);
  CHECK(jac == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("iterates that leave the chart abort the correction solve") {
  WaveSetup w(0.8, 0.3);
  ReducedProblem rp = build_reduced(w.sys, w.dec);
  Vec eta(1);
  eta << 2.0 * w.dec.validity_radius;
  CHECK_THROWS_AS(solve_v1(rp, eta, Vec::Zero(0), Vec::Zero(1)),
                  ChartExceeded);
}
