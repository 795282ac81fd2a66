#pragma once

#include <optional>
#include <string>
#include <vector>

#include "releq/system.hpp"
#include "releq/types.hpp"

namespace releq {

/// Joint weight decomposition of commuting torus generators: phase space
/// splits into the common fixed subspace and two-dimensional planes on which
/// exp(A_theta) rotates with integer angular speeds w (one per generator).
struct WeightDecomposition {
  struct Plane {
    Mat basis;               // 2n x 2, orthonormal in the reference metric
    std::vector<int> weights; // one integer per generator
  };
  std::vector<Plane> planes;
  Mat fixed_basis;  // 2n x f, common kernel of all generators
  bool integral = true;  // weights rounded cleanly to integers
};

WeightDecomposition weight_decomposition(const System& sys, double tol = 1e-8);

/// Isotropy data of a phase point (or tangent vector) under the torus and the
/// finite group. The torus stabilizer is a closed subgroup T^r x Z_{d1} x ...;
/// its invariant factors come from the Smith normal form of the active weights.
struct IsotropyLabel {
  int torus_rank = 0;                 // dimension of the continuous stabilizer
  std::vector<int> torus_factors;     // invariant factors > 1 of the discrete part
  std::vector<int> finite_fixing;     // indices into finite_elements fixing the point
  bool certified = true;              // false if weights were not integral

  long discrete_order() const;
  std::string text() const;
  bool operator==(const IsotropyLabel&) const = default;
};

/// Isotropy of `u` under the full torus and finite group.
IsotropyLabel isotropy_of(const System& sys, const WeightDecomposition& wd,
                          const Vec& u, double tol = 1e-8);

/// Isotropy of `u` under the restriction of the torus to the subtorus
/// {theta = Q t} (columns of Q span the stabilizer algebra of a base point).
IsotropyLabel isotropy_of_restricted(const System& sys,
                                     const WeightDecomposition& wd, const Mat& q,
                                     const Vec& u, double tol = 1e-8);

/// Representatives of the discrete components of the torus stabilizer of `u`
/// (angles theta with exp(A_theta) u = u, one generator per invariant factor).
std::vector<Vec> stabilizer_component_generators(const System& sys,
                                                 const WeightDecomposition& wd,
                                                 const Vec& u, double tol = 1e-8);

/// Smith normal form helpers for small integer matrices: a = u d v with
/// unimodular u, v and d in Smith form. Returns the diagonal of d along with v
/// and its inverse (for solving congruences).
struct SmithForm {
  std::vector<long> divisors;             // elementary divisors, zeros trailing
  std::vector<std::vector<long>> v;       // right unimodular factor
  std::vector<std::vector<long>> v_inv;   // its inverse
  int rank = 0;
};
SmithForm smith_normal_form(std::vector<std::vector<long>> a);

} // namespace releq
