#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "releq/branch.hpp"
#include "releq/reduction.hpp"
#include "releq/slice.hpp"

namespace releq {

/// Formats a double so that identical values always print identically.
std::string format_double(double v);

/// CSV with one row per point: arclength, z components, xi components,
/// mu components, stability-form eigenvalues, isotropy, stability.
std::string branch_to_csv(const Branch& branch);

nlohmann::json branch_manifest(const Branch& branch, double branch_tol);
nlohmann::json slice_to_json(const SliceDecomposition& dec);
nlohmann::json reduced_to_json(const ReducedProblem& rp);
nlohmann::json crossing_to_json(const CrossingEvent& ev, const Classification& cls);

struct DiagramAxis {
  std::string kind = "arclength";  // arclength | xi | z | zpair | znorm | w
  int index = 0;
};

struct DiagramOptions {
  DiagramAxis x{"arclength", 0};
  DiagramAxis y{"znorm", 0};
  int width = 640;
  int height = 420;
};

/// Bifurcation diagram: one polyline per branch, solid where definite
/// (formally stable), dashed otherwise, legend from isotropy labels.
/// `reference` is subtracted for w-style axes.
std::string branches_to_svg(const std::vector<Branch>& branches,
                            const DiagramOptions& opts,
                            const Vec& reference = Vec());

double axis_value(const DiagramAxis& axis, const BranchPoint& p,
                  const Vec& reference);

} // namespace releq
