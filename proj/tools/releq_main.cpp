// Command line front end: ingest a model config, run one analysis, emit
// branch data and diagram files.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "releq/run.hpp"
#include "releq/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"relative equilibrium and bifurcation toolkit"};
  app.set_version_flag("--version", releq::kVersion);

  std::string analysis;
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;

  app.add_option("analysis", analysis,
                 "one of: find-re reduce continue persist bifurcate stability")
      ->required();
  app.add_option("--config", config_path, "path to the JSON config")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--seed", seed, "seed recorded in the manifest")
      ->each([&](const std::string&) { seed_set = true; });

  CLI11_PARSE(app, argc, argv);

  nlohmann::json config;
  try {
    std::ifstream in(config_path);
    config = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    std::cerr << "config parse error: " << e.what() << "\n";
    return 2;
  }
  config["analysis"] = analysis;

  releq::RunResult res = releq::run_analysis(
      config, out_dir.empty() ? std::nullopt : std::optional(out_dir),
      seed_set ? std::optional(seed) : std::nullopt);
  if (!res.error.empty()) std::cerr << res.error << "\n";
  for (const auto& f : res.files) std::cout << f << "\n";
  return res.exit_code;
}
