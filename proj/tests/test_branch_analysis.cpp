#include <doctest.h>

#include <cmath>
#include <complex>

#include "releq/branch.hpp"
#include "releq/errors.hpp"
#include "test_helpers.hpp"

using namespace releq;
using namespace releq::testing;

namespace {

// Wave family with every stability eigenvalue positive at the base point:
// a1 = 3 - 0.3 C^2, a3 = 2, b1 adjustable.
WaveResonanceParams stable_wave_params(double C, double b1) {
  using T = WaveResonanceParams::Term;
  WaveResonanceParams p;
  p.C = C;
  p.terms = WaveResonanceParams::symmetric_pairs({
      T{3.0, {1, 0, 0, 0, 0, 0}},
      T{2.0, {0, 0, 1, 0, 0, 0}},
      T{b1, {0, 0, 0, 0, 1, 0}},
      T{-0.3, {1, 0, 1, 0, 0, 0}},
  });
  return p;
}

Vec wave_direction_w() {
  Vec dir = Vec::Zero(10);
  dir(4) = 1.0;  // real third-mode amplitude
  return dir;
}

Vec wave_direction_xi2() {
  Vec dir = Vec::Zero(10);
  dir(9) = 1.0;
  return dir;
}

} // namespace

TEST_CASE("formal stability verdicts") {
  SUBCASE("definite quadratic energy at the origin") {
    Vec freqs(2);
    freqs << 1.0, 1.7;
    const System osc = oscillator_system(freqs);
    const StabilityReport rep = formal_stability(osc, Vec::Zero(4), Vec::Zero(2));
    CHECK(rep.verdict == Stability::definite_plus);
    CHECK(rep.dim_w == 4);
  }
  SUBCASE("empty stability space counts as stable") {
    Vec freqs(1);
    freqs << 1.3;
    const System osc = oscillator_system(freqs);
    Vec z(2);
    z << 0.8, 0.0;
    const StabilityReport rep = formal_stability(osc, z, freqs);
    CHECK(rep.verdict == Stability::definite_plus);
    CHECK(rep.dim_w == 0);
  }
  SUBCASE("wave base family: definite on one side of the crossing") {
    // lambda1+ = 2 - 2.6 C crosses zero at C = 10/13.
    for (double C : {0.6, 0.8}) {
      const auto params = stable_wave_params(C, -2.6);
      const System sys = wave_system(params);
      const StabilityReport rep = formal_stability(
          sys, wave_base_point(params), wave_base_generator(params, 0.2));
      if (C < 10.0 / 13.0)
        CHECK(rep.verdict == Stability::definite_plus);
      else
        CHECK(rep.verdict == Stability::indefinite);
    }
  }
  SUBCASE("spectrum matches the reference table") {
    const auto params = WaveResonanceParams::defaults(0.75);
    const System sys = wave_system(params);
    const WaveReference ref = wave_reference(params);
    const StabilityReport rep = formal_stability(
        sys, wave_base_point(params), wave_base_generator(params, 0.4));
    Vec expected(6);
    expected << ref.lambda1_plus, ref.lambda1_minus, ref.lambda2(0.4),
        ref.lambda2(0.4), ref.lambda4(0.4), ref.lambda4(0.4);
    std::sort(expected.data(), expected.data() + 6);
    REQUIRE(rep.eigs.size() == 6);
    for (int i = 0; i < 6; ++i)
      CHECK(rep.eigs(i) == doctest::Approx(expected(i)).epsilon(1e-9));
  }
}

TEST_CASE("continuation along the base family") {
  // Add a third-mode self-interaction so the generator law has curvature.
  auto params = WaveResonanceParams::defaults(0.8);
  params.terms.push_back({0.15, {0, 0, 2, 0, 0, 0}});
  params.terms.push_back({0.15, {0, 0, 0, 2, 0, 0}});
  const System sys = wave_system(params);
  const WaveReference ref = wave_reference(params);
  const Vec z0 = wave_base_point(params);
  const Vec xi0 = wave_base_generator(params, 0.4);

  ContinuationOptions opts;
  opts.step_size = 0.03;
  opts.n_steps = 10;
  const Branch branch = continue_branch(sys, z0, xi0, wave_direction_w(), opts);

  REQUIRE(branch.points.size() == 11);
  for (const BranchPoint& p : branch.points) {
    CHECK(p.residual <= 1e-10);
    // Stays on the pure third-mode family.
    for (int i : {0, 1, 2, 3, 5, 6, 7}) CHECK(std::abs(p.z(i)) <= 1e-9);
    // Generator follows half the third-mode coefficient at the point.
    Eigen::Matrix<double, 6, 1> inv;
    const double X3 = p.z(4) * p.z(4);
    inv << 0, 0, X3, 0, 0, 0;
    CHECK(p.xi(0) == doctest::Approx(0.5 * ref.a_at(3, inv)).epsilon(1e-9));
    CHECK(p.xi(1) == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(p.isotropy.text() == branch.points.front().isotropy.text());
  }
  // The amplitude actually advanced.
  CHECK(branch.points.back().z(4) > 0.8 + 0.2);
  CHECK(branch.folds.empty());
}

TEST_CASE("continuation of an oscillator ring") {
  Vec freqs(1);
  freqs << 1.3;
  const System osc = oscillator_system(freqs);
  Vec z0(2);
  z0 << 0.5, 0.0;
  Vec dir = Vec::Zero(3);
  dir(0) = 1.0;
  ContinuationOptions opts;
  opts.step_size = 0.05;
  opts.n_steps = 6;
  const Branch branch = continue_branch(osc, z0, freqs, dir, opts);
  for (const BranchPoint& p : branch.points) {
    CHECK(p.xi(0) == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(std::abs(p.z(1)) <= 1e-10);
  }
  CHECK(branch.points.back().z(0) > 0.75);
}

TEST_CASE("crossing detection and classification on the generator sweep") {
  const double C = 0.75;
  const auto params = WaveResonanceParams::defaults(C);
  const System sys = wave_system(params);
  const WaveReference ref = wave_reference(params);
  const Vec z0 = wave_base_point(params);

  SUBCASE("double crossing on the second mode plane") {
    const Vec xi0 = wave_base_generator(params, 1.05);
    ContinuationOptions opts;
    opts.step_size = 0.05;
    opts.n_steps = 10;  // sweeps xi2 over [1.05, 1.55]
    const Branch branch =
        continue_branch(sys, z0, xi0, wave_direction_xi2(), opts);
    const auto events = detect_crossings(sys, branch);
    REQUIRE(events.size() == 1);
    const CrossingEvent& ev = events[0];
    CHECK(ev.multiplicity == 2);
    CHECK(std::abs(ev.lambda) <= 1e-9);
    CHECK(ev.xi(1) ==
          doctest::Approx(ref.xi2_at_lambda2_zero()).epsilon(1e-8));
    // Kernel lives on the second mode plane.
    for (int c = 0; c < 2; ++c)
      for (int i : {0, 1, 4, 5, 6, 7}) CHECK(std::abs(ev.kernel(i, c)) <= 1e-8);
    CHECK(ev.kernel_isotropy.text() == "trivial");

    const Classification cls = classify_crossing(sys, ev);
    CHECK(cls.type == CrossingType::complex_circle);
    CHECK(cls.circle_weight == 1);
  }
  SUBCASE("double crossing on the fourth mode plane") {
    const Vec xi0 = wave_base_generator(params, 0.82);
    ContinuationOptions opts;
    opts.step_size = 0.05;
    opts.n_steps = 8;  // sweeps xi2 over [0.82, 1.22]
    const Branch branch =
        continue_branch(sys, z0, xi0, wave_direction_xi2(), opts);
    const auto events = detect_crossings(sys, branch);
    REQUIRE(events.size() == 1);
    const CrossingEvent& ev = events[0];
    CHECK(ev.multiplicity == 2);
    CHECK(ev.xi(1) ==
          doctest::Approx(ref.xi2_at_lambda4_zero()).epsilon(1e-8));
    for (int c = 0; c < 2; ++c)
      for (int i : {0, 1, 2, 3, 4, 5}) CHECK(std::abs(ev.kernel(i, c)) <= 1e-8);
    CHECK(ev.kernel_isotropy.torus_factors == std::vector<int>{2});

    const Classification cls = classify_crossing(sys, ev);
    CHECK(cls.type == CrossingType::complex_circle);
    CHECK(cls.circle_weight == 2);
  }
  SUBCASE("no crossings on a definite sweep segment") {
    const Vec xi0 = wave_base_generator(params, 0.1);
    ContinuationOptions opts;
    opts.step_size = 0.05;
    opts.n_steps = 6;  // stays below both crossing values
    const Branch branch =
        continue_branch(sys, z0, xi0, wave_direction_xi2(), opts);
    CHECK(detect_crossings(sys, branch).empty());
  }
}

TEST_CASE("pitchfork at the symmetric amplitude") {
  const auto params = WaveResonanceParams::defaults(0.9);
  const System sys = wave_system(params);
  const Vec z0 = wave_base_point(params);
  const Vec xi0 = wave_base_generator(params, 0.4);

  ContinuationOptions opts;
  opts.step_size = 0.04;
  opts.n_steps = 6;  // amplitude sweeps 0.9 -> 1.14
  const Branch branch = continue_branch(sys, z0, xi0, wave_direction_w(), opts);
  const auto events = detect_crossings(sys, branch);
  REQUIRE(events.size() == 1);
  const CrossingEvent& ev = events[0];
  CHECK(ev.multiplicity == 1);
  CHECK(ev.z(4) == doctest::Approx(1.0).epsilon(1e-7));
  // Kernel is the real first-mode direction.
  CHECK(std::abs(ev.kernel(0, 0)) > 0.5);

  const Classification cls = classify_crossing(sys, ev);
  CHECK(cls.type == CrossingType::pitchfork);

  std::vector<double> amps;
  for (int i = 0; i < 8; ++i)
    amps.push_back(std::sqrt(1e-3 + i * (1e-2 - 1e-3) / 7.0));
  const SwitchResult sw = switch_branch(sys, ev, cls, amps);
  REQUIRE(sw.branch.points.size() == amps.size());
  CHECK(sw.unfolding == "eta");
  // Leading coefficient of the amplitude shift per squared kernel amplitude.
  CHECK(sw.fitted_slope == doctest::Approx(0.25).epsilon(0.05));

  // The reflection maps the +s branch onto the -s branch pointwise.
  CrossingEvent ev_neg = ev;
  ev_neg.kernel = -ev.kernel;
  const SwitchResult sw_neg = switch_branch(sys, ev_neg, cls, amps);
  REQUIRE(sw_neg.branch.points.size() == amps.size());
  Vec theta(2);
  theta << M_PI, 0.0;
  const Mat g = sys.group_exp(theta);
  for (size_t i = 0; i < amps.size(); ++i) {
    const Vec mapped = g * sw.branch.points[i].z;
    CHECK((mapped - sw_neg.branch.points[i].z).norm() <= 1e-8);
    CHECK((sw.branch.points[i].xi - sw_neg.branch.points[i].xi).norm() <= 1e-8);
  }
}

TEST_CASE("circles of relative equilibria at the double crossings") {
  const double C = 0.75;
  const auto params = WaveResonanceParams::defaults(C);
  const System sys = wave_system(params);
  const Vec z0 = wave_base_point(params);
  std::vector<double> amps;
  for (int i = 0; i < 6; ++i)
    amps.push_back(std::sqrt(1e-3 + i * (1e-2 - 1e-3) / 5.0));

  auto sweep_event = [&](double xi2_start, int steps) {
    ContinuationOptions opts;
    opts.step_size = 0.05;
    opts.n_steps = steps;
    const Branch branch = continue_branch(
        sys, z0, wave_base_generator(params, xi2_start), wave_direction_xi2(),
        opts);
    const auto events = detect_crossings(sys, branch);
    REQUIRE(events.size() == 1);
    return events[0];
  };

  SUBCASE("second mode circle with trivial isotropy") {
    const CrossingEvent ev = sweep_event(1.05, 10);
    const Classification cls = classify_crossing(sys, ev);
    REQUIRE(cls.type == CrossingType::complex_circle);
    const SwitchResult sw = switch_branch(sys, ev, cls, amps);
    REQUIRE(!sw.branch.points.empty());
    CHECK(sw.unfolding == "alpha");
    // alpha(X2) ~ X2 / (2 C^2) for the reference family.
    CHECK(sw.fitted_slope ==
          doctest::Approx(1.0 / (2.0 * C * C)).epsilon(0.05));
    for (const BranchPoint& p : sw.branch.points) {
      // Whole circles of critical points: rotate through the acting circle.
      for (double t : {0.9, 2.2, 4.5}) {
        const Mat g = sys.group_exp(Vec::Unit(2, 1), t);
        CHECK(sys.augmented_gradient(g * p.z, p.xi).norm() <= 1e-8);
      }
      // Trivial residual isotropy: the half turn moves the point.
      const Mat half = sys.group_exp(Vec::Unit(2, 1), M_PI);
      CHECK((half * p.z - p.z).norm() > 1e-3);
    }
  }
  SUBCASE("fourth mode circle keeps the half-turn symmetry") {
    const CrossingEvent ev = sweep_event(0.82, 8);
    const Classification cls = classify_crossing(sys, ev);
    REQUIRE(cls.type == CrossingType::complex_circle);
    const SwitchResult sw = switch_branch(sys, ev, cls, amps);
    REQUIRE(!sw.branch.points.empty());
    for (const BranchPoint& p : sw.branch.points) {
      for (double t : {1.3, 3.1}) {
        const Mat g = sys.group_exp(Vec::Unit(2, 1), t);
        CHECK(sys.augmented_gradient(g * p.z, p.xi).norm() <= 1e-8);
      }
      const Mat half = sys.group_exp(Vec::Unit(2, 1), M_PI);
      CHECK((half * p.z - p.z).norm() <= 1e-8);
    }
  }
}

TEST_CASE("zero switch amplitude returns the crossing point itself") {
  const auto params = WaveResonanceParams::defaults(0.9);
  const System sys = wave_system(params);
  Vec dir = Vec::Zero(10);
  dir(4) = 1.0;
  ContinuationOptions opts;
  opts.step_size = 0.04;
  opts.n_steps = 6;
  const Branch branch = continue_branch(
      sys, wave_base_point(params), wave_base_generator(params, 0.4), dir, opts);
  const auto events = detect_crossings(sys, branch);
  REQUIRE(events.size() == 1);
  const Classification cls = classify_crossing(sys, events[0]);
  const SwitchResult sw = switch_branch(sys, events[0], cls, {0.0});
  REQUIRE(sw.branch.points.size() == 1);
  CHECK((sw.branch.points[0].z - events[0].z).norm() <= 1e-9);
}

TEST_CASE("fold kernel classifies as a saddle-node") {
  const System sys = fold_model_system();
  const Vec z_e = fold_model_point();
  const Vec xi = fold_model_generator();
  const SliceDecomposition dec = build_slice(sys, z_e, xi, 1e-7);
  const ReducedProblem rp = build_reduced(sys, dec);
  REQUIRE(rp.kernel_dim() == 1);

  CrossingEvent ev;
  ev.z = z_e;
  ev.xi = xi;
  ev.kernel = dec.V_basis * rp.V0_basis;
  ev.multiplicity = 1;
  const Classification cls = classify_crossing(sys, ev);
  CHECK(cls.type == CrossingType::saddle_node);
  // Folds do not branch; switching is refused.
  CHECK_THROWS_AS(switch_branch(sys, ev, cls, {0.01}), NoBranchFound);
}

TEST_CASE("persistence surface of the base family") {
  const double C = 0.75;
  const auto params = WaveResonanceParams::defaults(C);
  const System sys = wave_system(params);
  const Vec z_e = wave_base_point(params);
  const Vec xi = wave_base_generator(params, 0.4);

  std::vector<Vec> eta_grid, alpha_grid;
  for (int i = -3; i <= 3; ++i) {
    Vec e(1);
    e << i * 0.012;
    eta_grid.push_back(e);
  }
  for (int i = -2; i <= 2; ++i) {
    Vec a(1);
    a << i * 0.015;
    alpha_grid.push_back(a);
  }
  const PersistenceSurface surf =
      persistence_surface(sys, z_e, xi, eta_grid, alpha_grid);
  CHECK(surf.expected_rank == 2);
  REQUIRE(surf.samples.size() == 35);
  int rank_ok = 0;
  for (const auto& s : surf.samples) rank_ok += (s.rank == 2);
  CHECK(rank_ok == 35);

  // The alpha = 0 slice is symplectic: restricted form bounded away from zero.
  REQUIRE(surf.sigma_indices.size() == 7);
  for (double pf : surf.sigma_pfaffian) CHECK(std::abs(pf) > 0.5);

  // Momentum moves only transversally to the isotropy algebra on that slice.
  const Vec mu0 = sys.momentum(z_e);
  for (int idx : surf.sigma_indices) {
    const auto& s = surf.samples[idx];
    CHECK(std::abs((sys.momentum(s.z) - mu0)(1)) <= 1e-8);
  }

  // Stability persists across the slice when the base point is definite.
  const auto stable = stable_wave_params(0.6, -2.6);
  const System stable_sys = wave_system(stable);
  const PersistenceSurface stable_surf = persistence_surface(
      stable_sys, wave_base_point(stable), wave_base_generator(stable, 0.2),
      eta_grid, {Vec::Zero(1)});
  for (const auto& s : stable_surf.samples)
    CHECK(formal_stability(stable_sys, s.z, s.xi).verdict ==
          Stability::definite_plus);
}

TEST_CASE("persistence edge cases") {
  SUBCASE("full isotropy collapses the surface to the point") {
    Vec freqs(2);
    freqs << 1.0, 1.7;
    Mat quartic(2, 2);
    quartic << 0.25, 0.1, 0.1, 0.3;
    const System sys = oscillator_quartic_system(freqs, quartic);
    Vec xi(2);
    xi << 0.4, 0.9;
    const PersistenceSurface surf = persistence_surface(
        sys, Vec::Zero(4), xi, {Vec(0)}, {Vec::Zero(2)});
    CHECK(surf.expected_rank == 0);
    REQUIRE(surf.samples.size() == 1);
    CHECK(surf.samples[0].rank == 0);
    CHECK((surf.samples[0].z - Vec::Zero(4)).norm() <= 1e-12);
  }
  SUBCASE("oscillator ring reaches the full expected rank") {
    Vec freqs(2);
    freqs << 1.0, std::sqrt(2.0);
    const System sys = oscillator_system(freqs);
    Vec z(4);
    z << 0.7, 0.0, 0.4, 0.0;
    std::vector<Vec> eta_grid;
    for (double a : {-0.02, 0.0, 0.02})
      for (double b : {-0.02, 0.0, 0.02}) {
        Vec e(2);
        e << a, b;
        eta_grid.push_back(e);
      }
    const PersistenceSurface surf =
        persistence_surface(sys, z, freqs, eta_grid, {Vec(0)});
    CHECK(surf.expected_rank == 4);
    for (const auto& s : surf.samples) CHECK(s.rank == 4);
  }
  SUBCASE("a kernel on the slice is rejected") {
    const auto params = WaveResonanceParams::defaults(1.0);  // lambda1+ = 0
    const System sys = wave_system(params);
    CHECK_THROWS_AS(
        persistence_surface(sys, wave_base_point(params),
                            wave_base_generator(params, 0.4),
                            {Vec::Zero(1)}, {Vec::Zero(1)}),
        DegenerateKernel);
  }
}

TEST_CASE("kernel equation is orthogonal to the circle directions") {
  // At a double crossing the kernel equation value never points along the
  // acting circle.
  const double C = 0.75;
  const auto params = WaveResonanceParams::defaults(C);
  const System sys = wave_system(params);
  const double xi2 = wave_reference(params).xi2_at_lambda2_zero();
  const SliceDecomposition dec = build_slice(
      sys, wave_base_point(params), wave_base_generator(params, xi2), 1e-7);
  const ReducedProblem rp = build_reduced(sys, dec);
  REQUIRE(rp.kernel_dim() == 2);
  const Mat kernel_phase = dec.V_basis * rp.V0_basis;
  std::mt19937_64 rng(51);
  for (int s = 0; s < 6; ++s) {
    const Vec v0 = 0.05 * random_vec(rng, 2);
    Vec alpha(1);
    alpha << 0.02 * (s % 3 - 1);
    const Vec b = bifurcation_function(rp, Vec::Zero(1), v0, alpha);
    // Circle direction through v0 in kernel coordinates.
    const Vec orbit_dir = kernel_phase.transpose() * sys.phase().inner *
                          (sys.symmetry().generators[1] * (kernel_phase * v0));
    CHECK(std::abs(b.dot(orbit_dir)) <= 1e-8);
  }
}

TEST_CASE("isotropy labels") {
  const auto params = WaveResonanceParams::defaults(0.75);
  const System sys = wave_system(params);
  const WeightDecomposition wd = weight_decomposition(sys);
  REQUIRE(wd.integral);
  CHECK(wd.planes.size() == 4);

  CHECK(isotropy_of(sys, wd, wave_base_point(params)).text() == "S1 x Z2");

  // (0, z2, z3, 0) keeps the half turn of the first circle: weight 2 on the
  // third mode, no action on the second.
  Vec z24 = Vec::Zero(8);
  z24(2) = 0.3;
  z24(4) = 0.7;
  const IsotropyLabel mixed = isotropy_of(sys, wd, z24);
  CHECK(mixed.torus_rank == 0);
  CHECK(mixed.text() == "Z2");

  Vec zfull = Vec::Zero(8);
  zfull << 0.1, 0.0, 0.3, 0.0, 0.7, 0.0, 0.2, 0.0;
  CHECK(isotropy_of(sys, wd, zfull).text() == "trivial");

  Vec freqs(2);
  freqs << 1.0, 1.5;
  const System osc = oscillator_system(freqs);
  const WeightDecomposition owd = weight_decomposition(osc);
  Vec full(4);
  full << 0.5, 0.0, 0.3, 0.2;
  CHECK(isotropy_of(osc, owd, full).text() == "trivial");
  Vec partial(4);
  partial << 0.5, 0.0, 0.0, 0.0;
  CHECK(isotropy_of(osc, owd, partial).torus_rank == 1);
}

TEST_CASE("seed polishing finds nearby relative equilibria") {
  const auto params = WaveResonanceParams::defaults(0.8);
  const System sys = wave_system(params);
  Vec z0 = wave_base_point(params);
  z0(4) += 0.05;  // off the family along the amplitude
  Vec xi0 = wave_base_generator(params, 0.4);
  xi0(0) += 0.1;
  const BranchPoint bp = find_relative_equilibrium(sys, z0, xi0);
  CHECK(bp.residual <= 1e-9);
  CHECK(sys.check_relative_equilibrium(bp.z, bp.xi, 1.0, 1000).orbit_drift <=
        1e-5);
}

TEST_CASE("continuation into a fold direction fails loudly") {
  // The cubic potential has no solutions with a pinned nonzero offset along
  // the fold direction, so every halved step must fail.
  const System sys = fold_model_system();
  ContinuationOptions opts;
  opts.step_size = 0.05;
  opts.n_steps = 1;
  opts.newton.max_iter = 25;
  Vec dir = Vec::Zero(5);
  dir(2) = 1.0;  // the fold coordinate
  CHECK_THROWS_AS(continue_branch(sys, fold_model_point(),
                                  fold_model_generator(), dir, opts),
                  StepFailed);
}
