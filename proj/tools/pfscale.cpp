#include "pfscale/experiment/config.hpp"
#include "pfscale/experiment/runner.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

namespace ex = pfscale::experiment;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;
constexpr int kDiverged = 3;

int env_workers() {
  const char* value = std::getenv("PFSCALE_WORKERS");
  if (!value || !*value) return 0;
  char* end = nullptr;
  const long n = std::strtol(value, &end, 10);
  if (*end != '\0' || n < 0) throw ex::ConfigError("PFSCALE_WORKERS must be a non-negative integer",
                                                   "PFSCALE_WORKERS", 0);
  return static_cast<int>(n);
}

int run_command(const std::string& configPath, const std::optional<std::string>& out,
                const std::optional<std::uint64_t>& seed, const std::optional<int>& workers) {
  ex::ExperimentConfig config = ex::load_config(configPath);
  if (out) config.outDir = *out;
  if (seed) config.seed = *seed;
  if (workers) {
    config.workers = *workers;
  } else if (config.workers == 0) {
    config.workers = env_workers();
  }
  const ex::RunReport report = ex::run_experiment(config, &std::cerr);
  std::cout << "wrote " << report.files.size() << " files to " << config.outDir << '\n';
  for (const auto& f : report.files) std::cout << "  " << f << '\n';
  if (report.droppedPlotPoints > 0) {
    std::cout << report.droppedPlotPoints << " plot points dropped (see metadata.json)\n";
  }
  if (report.divergedTrials > 0) {
    std::cerr << report.divergedTrials << " of " << report.trialsReported << " trials diverged\n";
    return kDiverged;
  }
  return kOk;
}

int plot_command(const std::string& csvPath, const std::string& kind,
                 const std::optional<std::string>& out) {
  const ex::Kind k = ex::parse_kind(kind);
  const ex::SvgDocument doc = ex::plot_table(ex::read_csv(csvPath), k);
  const std::string target =
      out ? *out : std::filesystem::path(csvPath).replace_extension(".svg").string();
  std::ofstream file(target, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write '" + target + "'");
  file << doc.text;
  std::cout << "wrote " << target;
  if (doc.droppedPoints > 0) std::cout << " (" << doc.droppedPoints << " points dropped)";
  std::cout << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle filter dimensionality-scaling experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ex::code_version());

  std::string configPath;
  std::optional<std::string> outDir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", configPath, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", outDir, "Output directory (overrides [output] dir)");
  run->add_option("--seed", seed, "Master seed (overrides [experiment] seed)");
  run->add_option("--workers", workers, "Worker threads; 0 = OpenMP default")
      ->check(CLI::NonNegativeNumber);

  std::string csvPath;
  std::string kind;
  std::optional<std::string> svgOut;
  auto* plot = app.add_subcommand("plot", "Render an experiment CSV as SVG");
  plot->add_option("csv", csvPath, "CSV written by pfscale run")->required()->check(CLI::ExistingFile);
  plot->add_option("--kind", kind, "Experiment kind")
      ->required()
      ->check(CLI::IsMember({"ess-collapse", "stopping-scaling", "resampling-dip", "required-n"}));
  plot->add_option("--out", svgOut, "SVG path (default: next to the CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return run_command(configPath, outDir, seed, workers);
    return plot_command(csvPath, kind, svgOut);
  } catch (const ex::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
