#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "releq/types.hpp"

namespace releq {

struct RunResult {
  int exit_code = 0;  // 0 ok, 1 analysis failed, 2 config invalid
  std::vector<std::string> files;
  std::string error;
};

/// Executes one analysis described by a JSON config. Writes result files and
/// a manifest into the output directory. Config errors return exit code 2
/// without touching the filesystem; analysis errors return 1 and serialize
/// the error into the manifest.
RunResult run_analysis(const nlohmann::json& config,
                       const std::optional<std::string>& out_override = {},
                       const std::optional<uint64_t>& seed_override = {});

/// FNV-1a hash of the canonical config dump, hex-encoded.
std::string config_hash(const nlohmann::json& config);

} // namespace releq
