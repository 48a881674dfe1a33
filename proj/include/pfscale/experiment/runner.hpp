#pragma once

#include "pfscale/experiment/config.hpp"
#include "pfscale/experiment/csv.hpp"
#include "pfscale/experiment/svg.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace pfscale::experiment {

struct RunReport {
  std::vector<std::string> files;  // relative to the output directory
  int trialsReported = 0;
  int divergedTrials = 0;
  int droppedPlotPoints = 0;
};

/// Runs the configured experiment and writes its CSV tables, SVG charts and
/// metadata.json into config.outDir. Progress lines go to `log` if given.
RunReport run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Chart for one of the tables run_experiment writes. Selects columns by
/// name, so both the per-trial and the aggregate tables of an experiment can
/// be plotted.
SvgDocument plot_table(const CsvTable& table, Kind kind);

std::string code_version();

}  // namespace pfscale::experiment
