#pragma once

#include "pfscale/bpf.hpp"
#include "pfscale/model.hpp"
#include "pfscale/trial.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfscale::experiment {

enum class Kind { EssCollapse, StoppingScaling, ResamplingDip, RequiredN };

std::string to_string(Kind kind);
Kind parse_kind(const std::string& text);

/// Malformed or incomplete configuration. `line` is 0 when the problem is a
/// missing key rather than a bad line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::string key, int line);

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

struct ExperimentConfig {
  Kind kind = Kind::EssCollapse;
  std::uint64_t seed = 0;
  int trials = 20;
  double dt = 0.01;
  double t1 = 5.0;
  int workers = 0;  // 0: PFSCALE_WORKERS or the OpenMP default

  LinearIsotropic coeffs{};

  std::vector<Index> dims;
  std::vector<Index> particles;
  std::vector<double> essLevels;  // n
  std::vector<double> epsilons;

  ResamplingPolicy policy = ResamplingPolicy::ess_threshold(0.1);
  std::vector<FilterKind> filters{FilterKind::Bpf, FilterKind::Fpf};
  double tauWindow = 0.2;

  int initialTrials = 4;
  int maxTrials = 32;
  Index maxParticles = 4096;
  double margin = 2.0;
  /// stopping-scaling only: also search the smallest N with T >= this.
  std::optional<double> collapseTarget;

  std::string outDir = "out";
  int recordEvery = 1;
  bool timing = false;

  std::size_t num_steps() const;
};

/// Default horizon per experiment when t1 is not given.
double default_horizon(Kind kind);

/// Line-oriented `key = value` text with `[section]` headers and `#`
/// comments. Lists are comma separated, optionally bracketed, and numeric
/// lists also accept `a..b step s`.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

nlohmann::json to_json(const ExperimentConfig& config);

}  // namespace pfscale::experiment
