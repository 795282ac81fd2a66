#pragma once

#include <optional>
#include <string>
#include <vector>

#include "releq/isotropy.hpp"
#include "releq/reduction.hpp"
#include "releq/slice.hpp"
#include "releq/system.hpp"

namespace releq {

enum class Stability { definite_plus, definite_minus, indefinite, degenerate };

std::string to_string(Stability s);

struct StabilityReport {
  Stability verdict = Stability::degenerate;
  double min_abs_eig = 0.0;
  int dim_w = 0;
  Vec eigs;  // spectrum of the stability form, ascending
};

/// Spectrum of the second variation of h - J^xi on the complement of the
/// group orbit inside ker DJ(z); definiteness certifies formal stability.
/// dim W = 0 counts as definite_plus.
StabilityReport formal_stability(const System& sys, const Vec& z, const Vec& xi);

struct BranchPoint {
  Vec z;
  Vec xi;
  Vec mu;
  double arclength = 0.0;
  Vec eigs;  // stability form spectrum, ascending
  IsotropyLabel isotropy;
  Stability stability = Stability::degenerate;
  double residual = 0.0;
};

enum class BranchKind { persistence_sigma, pitchfork, saddle_node, complex_circle };

std::string to_string(BranchKind k);

struct Branch {
  int id = 0;
  BranchKind kind = BranchKind::persistence_sigma;
  std::vector<BranchPoint> points;
  std::optional<std::pair<int, double>> parent;  // (branch id, arclength)
  std::vector<int> folds;  // indices where the tangent generator component flips
};

struct ContinuationOptions {
  double step_size = 0.02;
  int n_steps = 50;
  double branch_tol = 1e-9;
  int max_halvings = 4;
  NewtonOptions newton;
};

/// Pseudo-arclength continuation of the augmented critical point system, with
/// group-orbit phase pins and re-verification of every accepted point.
Branch continue_branch(const System& sys, const Vec& z0, const Vec& xi0,
                       const Vec& direction, const ContinuationOptions& opts);

/// Minimal-norm Gauss-Newton solve of the pinned critical point system from a
/// seed; returns the verified point. Throws NewtonDiverged.
BranchPoint find_relative_equilibrium(const System& sys, const Vec& z0,
                                      const Vec& xi0,
                                      const NewtonOptions& newton = {},
                                      double branch_tol = 1e-9);

/// Assembles the diagnostic data (momentum, spectrum, isotropy, stability)
/// for a point already known to satisfy the branch tolerance.
BranchPoint make_branch_point(const System& sys, const WeightDecomposition& wd,
                              const Vec& z, const Vec& xi, double arclength,
                              double branch_tol);

struct CrossingEvent {
  int index = 0;          // segment start index within the branch
  double arclength = 0.0;
  Vec z;
  Vec xi;
  int eig_id = 0;         // sorted index of the crossing eigenvalue
  double lambda = 0.0;    // refined eigenvalue (|lambda| <= refine_tol)
  double lambda_slope = 0.0;  // crossing speed along the branch parameter
  int multiplicity = 1;
  Mat kernel;             // 2n x multiplicity, metric-orthonormal
  IsotropyLabel kernel_isotropy;  // under the stabilizer subtorus of z
};

/// Locates sign changes of the stability form spectrum along a branch and
/// refines each crossing by bisection to |lambda| <= refine_tol.
std::vector<CrossingEvent> detect_crossings(const System& sys,
                                            const Branch& branch,
                                            double refine_tol = 1e-9,
                                            const NewtonOptions& newton = {});

enum class CrossingType { pitchfork, saddle_node, complex_circle, unclassified };

std::string to_string(CrossingType t);

struct Classification {
  CrossingType type = CrossingType::unclassified;
  int circle_weight = 0;        // torus weight on the kernel plane
  Vec circle_direction;         // algebra direction generating the circle
  double eigenvalue_slope = 0;  // measured crossing speed (genericity diagnostic)
  bool fixed_space_trivial = true;  // kernel has no invariant vector under the
                                    // residual compact group
};

Classification classify_crossing(const System& sys, const CrossingEvent& event);

struct SwitchResult {
  Branch branch;
  double fitted_slope = 0.0;  // unfolding parameter per squared amplitude
  std::string unfolding;      // "eta" for pitchforks, "alpha" for circles
  std::vector<double> amplitudes;
  std::vector<double> unfolding_values;
};

/// Branches off a classified crossing: predictor along the kernel direction,
/// corrector restricted to the fixed-point subspace of the predictor isotropy,
/// with the unfolding parameter solved alongside.
SwitchResult switch_branch(const System& sys, const CrossingEvent& event,
                           const Classification& cls,
                           const std::vector<double>& amplitudes,
                           const NewtonOptions& newton = {},
                           double branch_tol = 1e-9);

struct SurfaceSample {
  Vec eta;
  Vec alpha;
  Vec z;
  Vec xi;
  int rank = 0;
};

struct PersistenceSurface {
  std::vector<SurfaceSample> samples;
  std::vector<int> sigma_indices;      // samples with alpha = 0
  std::vector<double> sigma_pfaffian;  // restricted symplectic form on those
  int expected_rank = 0;               // 2 (dim G - dim H)
};

/// Solves the nondegenerate slice equations over an (eta, alpha) grid and
/// reports the numerical rank of the sampled parameterization along with the
/// symplectic nondegeneracy of the alpha = 0 slice.
PersistenceSurface persistence_surface(const System& sys, const Vec& z_e,
                                       const Vec& xi,
                                       const std::vector<Vec>& eta_grid,
                                       const std::vector<Vec>& alpha_grid,
                                       const NewtonOptions& newton = {});

/// Pfaffian of a small antisymmetric matrix by recursive expansion.
double pfaffian(const Mat& a);

} // namespace releq
