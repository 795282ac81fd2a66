#include "releq/branch_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "releq/model_io.hpp"

namespace releq {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string branch_to_csv(const Branch& branch) {
  std::ostringstream out;
  const int d = branch.points.empty() ? 0 : static_cast<int>(branch.points[0].z.size());
  const int k = branch.points.empty() ? 0 : static_cast<int>(branch.points[0].xi.size());
  const int ne = branch.points.empty() ? 0 : static_cast<int>(branch.points[0].eigs.size());
  out << "arclength";
  for (int i = 0; i < d; ++i) out << ",z" << i;
  for (int i = 0; i < k; ++i) out << ",xi" << i;
  for (int i = 0; i < k; ++i) out << ",mu" << i;
  for (int i = 0; i < ne; ++i) out << ",eig" << i;
  out << ",isotropy,stability\n";
  for (const BranchPoint& p : branch.points) {
    out << format_double(p.arclength);
    for (int i = 0; i < d; ++i) out << ',' << format_double(p.z(i));
    for (int i = 0; i < k; ++i) out << ',' << format_double(p.xi(i));
    for (int i = 0; i < k; ++i) out << ',' << format_double(p.mu(i));
    for (int i = 0; i < ne; ++i)
      out << ',' << format_double(i < p.eigs.size() ? p.eigs(i) : 0.0);
    out << ',' << p.isotropy.text() << ',' << to_string(p.stability) << '\n';
  }
  return out.str();
}

json branch_manifest(const Branch& branch, double branch_tol) {
  json j;
  j["id"] = branch.id;
  j["kind"] = to_string(branch.kind);
  j["points"] = branch.points.size();
  j["branch_tol"] = branch_tol;
  if (branch.parent)
    j["parent"] = {{"branch", branch.parent->first},
                   {"arclength", branch.parent->second}};
  if (!branch.folds.empty()) j["folds"] = branch.folds;
  if (!branch.points.empty()) {
    j["first_isotropy"] = branch.points.front().isotropy.text();
    double max_res = 0.0;
    for (const auto& p : branch.points) max_res = std::max(max_res, p.residual);
    j["max_residual"] = max_res;
  }
  return j;
}

json slice_to_json(const SliceDecomposition& dec) {
  json j;
  j["base_point"] = vector_to_json(dec.base_point);
  j["generator"] = vector_to_json(dec.generator);
  j["g_me_basis"] = matrix_to_json(dec.g_me_basis);
  j["m_basis"] = matrix_to_json(dec.m_basis);
  j["q_basis"] = matrix_to_json(dec.q_basis);
  j["V_basis"] = matrix_to_json(dec.V_basis);
  j["W_basis"] = matrix_to_json(dec.W_basis);
  j["correction"] = matrix_to_json(dec.correction);
  j["a_condition"] = dec.a_condition;
  j["validity_radius"] = dec.validity_radius;
  j["tol_rank"] = dec.tol_rank;
  return j;
}

json reduced_to_json(const ReducedProblem& rp) {
  json j;
  j["eigenvalues"] = vector_to_json(rp.eigenvalues);
  j["kernel_dim"] = rp.kernel_dim();
  j["kernel_tol"] = rp.kernel_tol;
  j["nondegenerate"] = rp.nondegenerate();
  return j;
}

json crossing_to_json(const CrossingEvent& ev, const Classification& cls) {
  json j;
  j["index"] = ev.index;
  j["arclength"] = ev.arclength;
  j["z"] = vector_to_json(ev.z);
  j["xi"] = vector_to_json(ev.xi);
  j["eig_id"] = ev.eig_id;
  j["lambda"] = ev.lambda;
  j["lambda_slope"] = ev.lambda_slope;
  j["multiplicity"] = ev.multiplicity;
  j["kernel_isotropy"] = ev.kernel_isotropy.text();
  j["type"] = to_string(cls.type);
  if (cls.type == CrossingType::complex_circle) {
    j["circle_weight"] = cls.circle_weight;
    j["circle_direction"] = vector_to_json(cls.circle_direction);
  }
  j["fixed_space_trivial"] = cls.fixed_space_trivial;
  return j;
}

double axis_value(const DiagramAxis& axis, const BranchPoint& p,
                  const Vec& reference) {
  if (axis.kind == "arclength") return p.arclength;
  if (axis.kind == "xi") return p.xi(axis.index);
  if (axis.kind == "z") return p.z(axis.index);
  if (axis.kind == "zpair") {
    const double x = p.z(2 * axis.index), y = p.z(2 * axis.index + 1);
    return std::sqrt(x * x + y * y);
  }
  if (axis.kind == "znorm") {
    if (reference.size() == p.z.size()) return (p.z - reference).norm();
    return p.z.norm();
  }
  if (axis.kind == "w") {
    if (reference.size() == p.z.size()) return (p.z - reference).norm();
    return p.z.norm();
  }
  return p.arclength;
}

namespace {

bool is_stable(Stability s) { return s == Stability::definite_plus ||
                                     s == Stability::definite_minus; }

const char* kPalette[] = {"#1b6ca8", "#c23b22", "#2e8540", "#7d3c98",
                          "#b7950b", "#148f77"};

} // namespace

std::string branches_to_svg(const std::vector<Branch>& branches,
                            const DiagramOptions& opts, const Vec& reference) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Branch& b : branches)
    for (const BranchPoint& p : b.points) {
      const double x = axis_value(opts.x, p, reference);
      const double y = axis_value(opts.y, p, reference);
      xmin = std::min(xmin, x); xmax = std::max(xmax, x);
      ymin = std::min(ymin, y); ymax = std::max(ymax, y);
    }
  if (xmin > xmax) { xmin = 0; xmax = 1; }
  if (ymin > ymax) { ymin = 0; ymax = 1; }
  if (xmax - xmin < 1e-12) { xmax += 0.5; xmin -= 0.5; }
  if (ymax - ymin < 1e-12) { ymax += 0.5; ymin -= 0.5; }

  const double mL = 50, mR = 14, mT = 14, mB = 36;
  const double pw = opts.width - mL - mR, ph = opts.height - mT - mB;
  auto px = [&](double x) { return mL + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return mT + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width
      << "\" height=\"" << opts.height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << mL << "\" y1=\"" << mT + ph << "\" x2=\"" << mL + pw
      << "\" y2=\"" << mT + ph << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << mL << "\" y1=\"" << mT << "\" x2=\"" << mL
      << "\" y2=\"" << mT + ph << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << mL + pw / 2 << "\" y=\"" << opts.height - 8
      << "\" font-size=\"12\" text-anchor=\"middle\">" << opts.x.kind
      << "</text>\n"
      << "<text x=\"14\" y=\"" << mT + ph / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << mT + ph / 2 << ")\">" << opts.y.kind << "</text>\n";

  int color_of = 0;
  double legend_y = mT + 14;
  for (const Branch& b : branches) {
    const char* color = kPalette[color_of % 6];
    ++color_of;
    // Split the polyline into stability-constant runs.
    size_t i = 0;
    while (i < b.points.size()) {
      size_t jend = i;
      const bool stable = is_stable(b.points[i].stability);
      while (jend + 1 < b.points.size() &&
             is_stable(b.points[jend + 1].stability) == stable)
        ++jend;
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\"";
      if (!stable) svg << " stroke-dasharray=\"5,4\"";
      svg << " points=\"";
      for (size_t p = i; p <= jend; ++p) {
        const double x = axis_value(opts.x, b.points[p], reference);
        const double y = axis_value(opts.y, b.points[p], reference);
        svg << px(x) << ',' << py(y) << ' ';
      }
      svg << "\"/>\n";
      i = (jend == i) ? i + 1 : jend;
      if (jend + 1 == b.points.size()) break;
    }
    const std::string label = to_string(b.kind) + " [" +
        (b.points.empty() ? std::string("-") : b.points.front().isotropy.text()) + "]";
    svg << "<line x1=\"" << mL + pw - 150 << "\" y1=\"" << legend_y - 4
        << "\" x2=\"" << mL + pw - 130 << "\" y2=\"" << legend_y - 4
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << mL + pw - 124 << "\" y=\"" << legend_y
        << "\" font-size=\"10\">" << label << "</text>\n";
    legend_y += 14;
  }
  svg << "</svg>\n";
  return svg.str();
}

} // namespace releq
