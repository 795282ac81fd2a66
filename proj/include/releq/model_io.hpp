#pragma once

#include <json.hpp>
#include <string>

#include "releq/system.hpp"

namespace releq {

/// Builds a system from its JSON description:
///   {"dim": 2n, "omega": "standard" | [[..]], "inner": [[..]]?,
///    "torus_generators": [[[..]]], "finite_elements": [[[..]]]?,
///    "hamiltonian": {"kind": "polynomial", "terms": [{"coeff": c,
///                    "monomial": [e0, .., e_{2n-1}]}]}
///                 | {"kind": "builtin", "name": "...", "params": {..}}}
/// Builtin names: wave_resonance (params: C, optional pair_terms/terms),
/// oscillator (params: frequencies), oscillator_quartic (frequencies,
/// quartic). Throws ConfigInvalid on malformed input and InvalidModel /
/// SymmetryViolation on contract violations.
System system_from_json(const nlohmann::json& j);

Mat matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Mat& m);
nlohmann::json vector_to_json(const Vec& v);
Vec vector_from_json(const nlohmann::json& j);

} // namespace releq
