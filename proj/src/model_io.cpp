#include "releq/model_io.hpp"

#include "releq/errors.hpp"
#include "releq/models.hpp"

namespace releq {

using nlohmann::json;

Mat matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigInvalid("matrix must be an array of row arrays");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols)
      throw ConfigInvalid("ragged matrix rows");
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vec vector_from_json(const json& j) {
  if (!j.is_array()) throw ConfigInvalid("vector must be an array");
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

namespace {

WaveResonanceParams wave_params_from_json(const json& params) {
  WaveResonanceParams wp;
  if (params.contains("C")) wp.C = params.at("C").get<double>();
  auto read_terms = [](const json& arr) {
    std::vector<WaveResonanceParams::Term> terms;
    for (const auto& t : arr) {
      WaveResonanceParams::Term term;
      term.coeff = t.at("coeff").get<double>();
      const auto& powers = t.at("powers");
      if (powers.size() != 6)
        throw ConfigInvalid("wave term powers must have six entries");
      for (int i = 0; i < 6; ++i) term.expo[i] = powers[i].get<int>();
      terms.push_back(term);
    }
    return terms;
  };
  if (params.contains("pair_terms"))
    wp.terms = WaveResonanceParams::symmetric_pairs(read_terms(params.at("pair_terms")));
  else if (params.contains("terms"))
    wp.terms = read_terms(params.at("terms"));
  else
    wp.terms = WaveResonanceParams::defaults(wp.C).terms;
  return wp;
}

System builtin_from_json(const json& ham) {
  const std::string name = ham.at("name").get<std::string>();
  const json params = ham.value("params", json::object());
  if (name == "wave_resonance") return wave_system(wave_params_from_json(params));
  if (name == "oscillator") {
    if (!params.contains("frequencies"))
      throw ConfigInvalid("oscillator needs params.frequencies");
    return oscillator_system(vector_from_json(params.at("frequencies")));
  }
  if (name == "oscillator_quartic") {
    if (!params.contains("frequencies") || !params.contains("quartic"))
      throw ConfigInvalid("oscillator_quartic needs frequencies and quartic");
    return oscillator_quartic_system(vector_from_json(params.at("frequencies")),
                                     matrix_from_json(params.at("quartic")));
  }
  if (name == "fold_model") return fold_model_system();
  throw ConfigInvalid("unknown builtin model '" + name + "'");
}

} // namespace

System system_from_json(const json& j) {
  try {
    const json& ham = j.at("hamiltonian");
    const std::string kind = ham.at("kind").get<std::string>();
    if (kind == "builtin") return builtin_from_json(ham);
    if (kind != "polynomial")
      throw ConfigInvalid("hamiltonian.kind must be 'polynomial' or 'builtin'");

    const int dim = j.at("dim").get<int>();
    if (dim <= 0 || dim % 2 != 0) throw ConfigInvalid("dim must be even positive");

    PhaseSpace phase;
    phase.dim = dim;
    const json& om = j.at("omega");
    if (om.is_string() && om.get<std::string>() == "standard")
      phase.omega = standard_omega(dim / 2);
    else
      phase.omega = matrix_from_json(om);
    phase.inner = j.contains("inner") ? matrix_from_json(j.at("inner"))
                                      : Mat::Identity(dim, dim);

    SymmetrySpec sym;
    for (const auto& g : j.at("torus_generators"))
      sym.generators.push_back(matrix_from_json(g));
    sym.torus_rank = static_cast<int>(sym.generators.size());
    sym.finite_elements.push_back(Mat::Identity(dim, dim));
    if (j.contains("finite_elements"))
      for (const auto& g : j.at("finite_elements")) {
        Mat gm = matrix_from_json(g);
        if ((gm - Mat::Identity(dim, dim)).cwiseAbs().maxCoeff() > 1e-14)
          sym.finite_elements.push_back(std::move(gm));
      }
    sym.structure_constants = StructureConstants::zero(sym.torus_rank);

    Polynomial p;
    p.nvars = dim;
    for (const auto& t : ham.at("terms")) {
      Polynomial::Term term;
      term.coeff = t.at("coeff").get<double>();
      const auto& mono = t.at("monomial");
      if (static_cast<int>(mono.size()) != dim)
        throw ConfigInvalid("monomial exponent list must have dim entries");
      term.expo.resize(dim);
      for (int i = 0; i < dim; ++i) term.expo[i] = mono[i].get<int>();
      p.terms.push_back(std::move(term));
    }
    System sys(std::move(phase), std::move(sym), p.to_hamiltonian(),
               j.value("name", std::string("polynomial")));
    sys.validate();
    return sys;
  } catch (const json::exception& e) {
    throw ConfigInvalid(std::string("model json: ") + e.what());
  }
}

} // namespace releq
