#include "releq/run.hpp"

#include <filesystem>
#include <fstream>

#include "releq/branch.hpp"
#include "releq/branch_io.hpp"
#include "releq/errors.hpp"
#include "releq/model_io.hpp"
#include "releq/models.hpp"
#include "releq/version.hpp"

namespace releq {

namespace fs = std::filesystem;
using nlohmann::json;

std::string config_hash(const json& config) {
  const std::string s = config.dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

struct Settings {
  NewtonOptions newton;
  double branch_tol = 1e-9;
  double tol_rank = 1e-7;
  double kernel_tol = 0.0;
  double step_size = 0.02;
  int n_steps = 50;
  double refine_tol = 1e-9;
  std::vector<double> amplitudes;
  uint64_t seed = 0x5eedULL;
};

Settings parse_numeric(const json& cfg) {
  Settings s;
  const json num = cfg.value("numeric", json::object());
  s.newton.tol = num.value("newton_tol", 1e-11);
  s.newton.max_iter = num.value("max_iter", 40);
  s.branch_tol = num.value("branch_tol", 1e-9);
  s.tol_rank = num.value("tol_rank", 1e-7);
  s.kernel_tol = num.value("kernel_tol", 0.0);
  s.step_size = num.value("step_size", 0.02);
  s.n_steps = num.value("n_steps", 50);
  s.refine_tol = num.value("refine_tol", 1e-9);
  s.seed = num.value("seed", uint64_t{0x5eed});
  if (num.contains("amplitudes"))
    for (const auto& a : num.at("amplitudes"))
      s.amplitudes.push_back(a.get<double>());
  else
    for (int i = 0; i < 8; ++i)
      s.amplitudes.push_back(std::sqrt(1e-3 + i * (1e-2 - 1e-3) / 7.0));
  for (double t : {s.newton.tol, s.branch_tol, s.tol_rank, s.step_size,
                   s.refine_tol})
    if (t <= 0.0) throw ConfigInvalid("tolerances and steps must be positive");
  if (s.kernel_tol < 0.0) throw ConfigInvalid("kernel_tol must be nonnegative");
  return s;
}

// Base relative equilibrium: explicit in the config, or the builtin default.
std::pair<Vec, Vec> resolve_point(const json& cfg, const System& sys) {
  if (cfg.contains("point")) {
    const json& p = cfg.at("point");
    Vec z = vector_from_json(p.at("z"));
    Vec xi = vector_from_json(p.at("xi"));
    if (z.size() != sys.dim() || xi.size() != sys.torus_rank())
      throw ConfigInvalid("point dimensions do not match the model");
    return {z, xi};
  }
  const json& ham = cfg.at("model").at("hamiltonian");
  if (ham.value("kind", "") == "builtin" &&
      ham.value("name", "") == "wave_resonance") {
    WaveResonanceParams wp;
    const json params = ham.value("params", json::object());
    wp.C = params.value("C", 1.0);
    if (params.contains("terms") || params.contains("pair_terms")) {
      // Re-ingest through the model loader for consistency.
      System tmp = system_from_json(cfg.at("model"));
    }
    WaveResonanceParams full = WaveResonanceParams::defaults(wp.C);
    const double xi2 = params.value("xi2", 0.0);
    return {wave_base_point(full), wave_base_generator(full, xi2)};
  }
  throw ConfigInvalid("analysis requires a 'point' {z, xi}");
}

Vec resolve_direction(const json& cfg, const System& sys, const Vec& z,
                      const Vec& xi, double tol_rank) {
  const int d = sys.dim();
  const int k = sys.torus_rank();
  Vec dir = Vec::Zero(d + k);
  if (!cfg.contains("direction")) {
    // Default: along the momentum-transverse directions of the slice.
    const SliceDecomposition dec = build_slice(sys, z, xi, tol_rank);
    if (dec.W_basis.cols() == 0)
      throw ConfigInvalid("no default continuation direction at this point");
    dir.head(d) = dec.W_basis.col(0);
    return dir;
  }
  const json& dj = cfg.at("direction");
  const std::string kind = dj.value("kind", "vector");
  if (kind == "w") {
    const SliceDecomposition dec = build_slice(sys, z, xi, tol_rank);
    const int idx = dj.value("index", 0);
    if (idx < 0 || idx >= dec.W_basis.cols())
      throw ConfigInvalid("direction index out of range for W");
    dir.head(d) = dec.W_basis.col(idx);
    return dir;
  }
  if (kind == "xi") {
    const int idx = dj.value("index", 0);
    if (idx < 0 || idx >= k) throw ConfigInvalid("direction index out of range");
    dir(d + idx) = 1.0;
    return dir;
  }
  if (kind == "vector") {
    const Vec v = vector_from_json(dj.at("values"));
    if (v.size() != d + k)
      throw ConfigInvalid("direction vector must have dimension 2n + k");
    return v;
  }
  throw ConfigInvalid("direction.kind must be w, xi, or vector");
}

std::vector<Vec> resolve_grid(const json& cfg, const char* key, int dims,
                              double fallback_halfwidth, int fallback_count) {
  std::vector<double> values;
  const json num = cfg.value("numeric", json::object());
  if (num.contains(key)) {
    const json& g = num.at(key);
    const double lo = g.value("min", -fallback_halfwidth);
    const double hi = g.value("max", fallback_halfwidth);
    const int count = g.value("count", fallback_count);
    if (count < 1 || hi < lo) throw ConfigInvalid("bad grid bounds");
    for (int i = 0; i < count; ++i)
      values.push_back(count == 1 ? 0.5 * (lo + hi)
                                  : lo + i * (hi - lo) / (count - 1));
  } else {
    for (int i = 0; i < fallback_count; ++i)
      values.push_back(-fallback_halfwidth +
                       i * 2.0 * fallback_halfwidth / (fallback_count - 1));
  }
  // Tensor grid over `dims` copies, capped to keep runs bounded.
  std::vector<Vec> grid;
  if (dims == 0) {
    grid.push_back(Vec(0));
    return grid;
  }
  std::vector<int> idx(dims, 0);
  while (true) {
    Vec v(dims);
    for (int j = 0; j < dims; ++j) v(j) = values[idx[j]];
    grid.push_back(v);
    if (grid.size() > 20000) throw ConfigInvalid("grid too large");
    int j = 0;
    for (; j < dims; ++j) {
      if (++idx[j] < static_cast<int>(values.size())) break;
      idx[j] = 0;
    }
    if (j == dims) break;
  }
  return grid;
}

DiagramOptions parse_diagram(const json& cfg) {
  DiagramOptions opts;
  const json out = cfg.value("output", json::object());
  if (out.contains("diagram")) {
    const json& dj = out.at("diagram");
    auto axis = [](const json& a, DiagramAxis def) {
      if (a.is_string()) return DiagramAxis{a.get<std::string>(), 0};
      DiagramAxis ax = def;
      ax.kind = a.value("kind", def.kind);
      ax.index = a.value("index", 0);
      return ax;
    };
    if (dj.contains("x")) opts.x = axis(dj.at("x"), opts.x);
    if (dj.contains("y")) opts.y = axis(dj.at("y"), opts.y);
  }
  return opts;
}

struct Emitter {
  fs::path dir;
  std::vector<std::string> formats;
  std::vector<std::string> written;   // absolute paths
  std::vector<std::string> names;     // file names, for the manifest

  bool wants(const std::string& f) const {
    return std::find(formats.begin(), formats.end(), f) != formats.end();
  }
  void write(const std::string& name, const std::string& content) {
    fs::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    out << content;
    written.push_back((dir / name).string());
    names.push_back(name);
  }
};

json point_to_json(const BranchPoint& p) {
  json j;
  j["z"] = vector_to_json(p.z);
  j["xi"] = vector_to_json(p.xi);
  j["mu"] = vector_to_json(p.mu);
  j["eigs"] = vector_to_json(p.eigs);
  j["isotropy"] = p.isotropy.text();
  j["stability"] = to_string(p.stability);
  j["residual"] = p.residual;
  return j;
}

} // namespace

RunResult run_analysis(const json& config,
                       const std::optional<std::string>& out_override,
                       const std::optional<uint64_t>& seed_override) {
  RunResult result;
  json manifest;
  Emitter emit;
  std::string analysis;
  Settings st;
  try {
    if (!config.contains("model")) throw ConfigInvalid("missing 'model'");
    analysis = config.value("analysis", "");
    const std::vector<std::string> known = {"find-re",  "reduce",    "continue",
                                            "persist",  "bifurcate", "stability"};
    if (std::find(known.begin(), known.end(), analysis) == known.end())
      throw ConfigInvalid("unknown analysis '" + analysis + "'");
    st = parse_numeric(config);
    if (seed_override) st.seed = *seed_override;

    const json out = config.value("output", json::object());
    emit.dir = out_override ? *out_override : out.value("directory", ".");
    emit.formats = {"csv", "json"};
    if (out.contains("formats")) {
      emit.formats.clear();
      for (const auto& f : out.at("formats"))
        emit.formats.push_back(f.get<std::string>());
    }
    if (analysis == "find-re") {
      if (!config.contains("seeds") || !config.at("seeds").is_array() ||
          config.at("seeds").empty())
        throw ConfigInvalid("find-re requires a nonempty 'seeds' array");
    }
  } catch (const ConfigInvalid& e) {
    result.exit_code = 2;
    result.error = e.what();
    return result;
  } catch (const json::exception& e) {
    result.exit_code = 2;
    result.error = std::string("config: ") + e.what();
    return result;
  }

  manifest["version"] = kVersion;
  manifest["analysis"] = analysis;
  manifest["config_hash"] = config_hash(config);
  manifest["seed"] = st.seed;
  manifest["tolerances"] = {{"newton_tol", st.newton.tol},
                            {"branch_tol", st.branch_tol},
                            {"tol_rank", st.tol_rank},
                            {"kernel_tol", st.kernel_tol},
                            {"refine_tol", st.refine_tol},
                            {"step_size", st.step_size}};

  try {
    System sys = system_from_json(config.at("model"));
    const WeightDecomposition wd = weight_decomposition(sys);

    if (analysis == "find-re") {
      Branch found;
      json details = json::array();
      for (const auto& seed : config.at("seeds")) {
        const Vec z0 = vector_from_json(seed.at("z"));
        const Vec xi0 = vector_from_json(seed.at("xi"));
        json rec;
        try {
          BranchPoint bp =
              find_relative_equilibrium(sys, z0, xi0, st.newton, st.branch_tol);
          const DriftReport drift =
              sys.check_relative_equilibrium(bp.z, bp.xi, 1.0, 1000);
          rec = point_to_json(bp);
          rec["orbit_drift"] = drift.orbit_drift;
          rec["momentum_drift"] = drift.momentum_drift;
          rec["verified"] = drift.orbit_drift <= 1e-5;
          if (drift.orbit_drift <= 1e-5) found.points.push_back(std::move(bp));
        } catch (const Error& e) {
          rec["error"] = e.what();
          rec["verified"] = false;
        }
        details.push_back(std::move(rec));
      }
      if (emit.wants("csv")) emit.write("equilibria.csv", branch_to_csv(found));
      if (emit.wants("json")) emit.write("equilibria.json", details.dump(2) + "\n");
    } else if (analysis == "reduce") {
      auto [z, xi] = resolve_point(config, sys);
      const SliceDecomposition dec = build_slice(sys, z, xi, st.tol_rank);
      const ReducedProblem rp = build_reduced(sys, dec, st.kernel_tol, st.newton);
      if (emit.wants("json")) {
        emit.write("slice.json", slice_to_json(dec).dump(2) + "\n");
        emit.write("spectrum.json", reduced_to_json(rp).dump(2) + "\n");
      }
    } else if (analysis == "continue") {
      auto [z, xi] = resolve_point(config, sys);
      const Vec dir = resolve_direction(config, sys, z, xi, st.tol_rank);
      ContinuationOptions copts;
      copts.step_size = st.step_size;
      copts.n_steps = st.n_steps;
      copts.branch_tol = st.branch_tol;
      copts.newton = st.newton;
      Branch branch = continue_branch(sys, z, xi, dir, copts);
      if (emit.wants("csv")) emit.write("branch_000.csv", branch_to_csv(branch));
      if (emit.wants("json"))
        emit.write("branch_000.json",
                   branch_manifest(branch, st.branch_tol).dump(2) + "\n");
      if (emit.wants("svg"))
        emit.write("diagram.svg",
                   branches_to_svg({branch}, parse_diagram(config), z));
    } else if (analysis == "persist") {
      auto [z, xi] = resolve_point(config, sys);
      const SliceDecomposition dec = build_slice(sys, z, xi, st.tol_rank);
      const auto eta_grid = resolve_grid(config, "eta_grid", dec.dim_m(), 0.04, 7);
      const auto alpha_grid =
          resolve_grid(config, "alpha_grid", dec.dim_gme(), 0.04, 5);
      const PersistenceSurface surf =
          persistence_surface(sys, z, xi, eta_grid, alpha_grid, st.newton);
      std::ostringstream csv;
      const int r = dec.dim_m(), d0 = dec.dim_gme();
      for (int i = 0; i < r; ++i) csv << (i ? "," : "") << "eta" << i;
      for (int i = 0; i < d0; ++i) csv << ",alpha" << i;
      for (int i = 0; i < sys.dim(); ++i) csv << ",z" << i;
      for (int i = 0; i < sys.torus_rank(); ++i) csv << ",xi" << i;
      csv << ",rank\n";
      int rank_ok = 0;
      for (const auto& s : surf.samples) {
        for (int i = 0; i < r; ++i)
          csv << (i ? "," : "") << format_double(s.eta(i));
        for (int i = 0; i < d0; ++i) csv << ',' << format_double(s.alpha(i));
        for (int i = 0; i < sys.dim(); ++i) csv << ',' << format_double(s.z(i));
        for (int i = 0; i < sys.torus_rank(); ++i)
          csv << ',' << format_double(s.xi(i));
        csv << ',' << s.rank << '\n';
        if (s.rank == surf.expected_rank) ++rank_ok;
      }
      if (emit.wants("csv")) emit.write("surface.csv", csv.str());
      json sigma;
      sigma["expected_rank"] = surf.expected_rank;
      sigma["rank_matches"] = rank_ok;
      sigma["samples"] = surf.samples.size();
      sigma["pfaffian"] = surf.sigma_pfaffian;
      double pf_min = surf.sigma_pfaffian.empty() ? 0.0 : 1e300;
      for (double p : surf.sigma_pfaffian) pf_min = std::min(pf_min, std::abs(p));
      sigma["min_abs_pfaffian"] = pf_min;
      if (emit.wants("json")) emit.write("sigma.json", sigma.dump(2) + "\n");
    } else if (analysis == "bifurcate") {
      auto [z, xi] = resolve_point(config, sys);
      const Vec dir = resolve_direction(config, sys, z, xi, st.tol_rank);
      ContinuationOptions copts;
      copts.step_size = st.step_size;
      copts.n_steps = st.n_steps;
      copts.branch_tol = st.branch_tol;
      copts.newton = st.newton;
      Branch main = continue_branch(sys, z, xi, dir, copts);
      main.id = 0;
      std::vector<Branch> all = {main};
      const auto events = detect_crossings(sys, main, st.refine_tol, st.newton);
      json evj = json::array();
      int next_id = 1;
      for (const auto& ev : events) {
        const Classification cls = classify_crossing(sys, ev);
        json e = crossing_to_json(ev, cls);
        if (cls.type == CrossingType::pitchfork ||
            cls.type == CrossingType::complex_circle) {
          try {
            SwitchResult sw = switch_branch(sys, ev, cls, st.amplitudes,
                                            st.newton, st.branch_tol);
            sw.branch.id = next_id++;
            sw.branch.parent = std::make_pair(main.id, ev.arclength);
            e["switched_branch"] = sw.branch.id;
            e["fitted_slope"] = sw.fitted_slope;
            e["unfolding"] = sw.unfolding;
            all.push_back(std::move(sw.branch));
          } catch (const Error& err) {
            e["switch_error"] = err.what();
          }
        }
        evj.push_back(std::move(e));
      }
      for (const Branch& b : all) {
        char name[40];
        std::snprintf(name, sizeof(name), "branch_%03d", b.id);
        if (emit.wants("csv"))
          emit.write(std::string(name) + ".csv", branch_to_csv(b));
        if (emit.wants("json"))
          emit.write(std::string(name) + ".json",
                     branch_manifest(b, st.branch_tol).dump(2) + "\n");
      }
      if (emit.wants("json")) emit.write("events.json", evj.dump(2) + "\n");
      if (emit.wants("svg"))
        emit.write("diagram.svg", branches_to_svg(all, parse_diagram(config), z));
    } else if (analysis == "stability") {
      if (!config.contains("points") || !config.at("points").is_array() ||
          config.at("points").empty())
        throw ConfigInvalid("stability requires a nonempty 'points' array");
      json rows = json::array();
      std::ostringstream csv;
      csv << "index,verdict,min_abs_eig,dim_w,residual\n";
      int idx = 0;
      for (const auto& pj : config.at("points")) {
        const Vec z = vector_from_json(pj.at("z"));
        const Vec xi = vector_from_json(pj.at("xi"));
        const StabilityReport rep = formal_stability(sys, z, xi);
        const double res = sys.augmented_gradient(z, xi).norm();
        json row;
        row["verdict"] = to_string(rep.verdict);
        row["min_abs_eig"] = rep.min_abs_eig;
        row["dim_w"] = rep.dim_w;
        row["eigs"] = vector_to_json(rep.eigs);
        row["residual"] = res;
        rows.push_back(std::move(row));
        csv << idx++ << ',' << to_string(rep.verdict) << ','
            << format_double(rep.min_abs_eig) << ',' << rep.dim_w << ','
            << format_double(res) << '\n';
      }
      if (emit.wants("csv")) emit.write("stability.csv", csv.str());
      if (emit.wants("json")) emit.write("stability.json", rows.dump(2) + "\n");
    }
    manifest["status"] = "ok";
  } catch (const ConfigInvalid& e) {
    result.exit_code = 2;
    result.error = e.what();
    return result;
  } catch (const Error& e) {
    manifest["status"] = "failed";
    manifest["error"] = e.what();
    result.exit_code = 1;
    result.error = e.what();
  } catch (const json::exception& e) {
    result.exit_code = 2;
    result.error = std::string("config: ") + e.what();
    return result;
  }

  manifest["files"] = emit.names;
  emit.write("manifest.json", manifest.dump(2) + "\n");
  result.files = emit.written;
  return result;
}

} // namespace releq
