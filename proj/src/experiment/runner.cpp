#include "pfscale/experiment/runner.hpp"

#include "pfscale/metrics.hpp"
#include "pfscale/search.hpp"
#include "pfscale/trial.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#ifndef PFSCALE_VERSION
#define PFSCALE_VERSION "dev"
#endif
#ifndef PFSCALE_GIT_HASH
#define PFSCALE_GIT_HASH "unknown"
#endif

namespace pfscale::experiment {

std::string code_version() { return std::string(PFSCALE_VERSION) + "+" + PFSCALE_GIT_HASH; }

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::string kNa = "na";

template <class Int>
std::string str(Int v) {
  return std::to_string(v);
}
std::string num(double v) { return format_number(v); }

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ';';
    out += num(values[i]);
  }
  return out;
}

class Run {
 public:
  Run(const ExperimentConfig& config, std::ostream* log)
      : config_(config), log_(log), dir_(config.outDir) {
    fs::create_directories(dir_);
    meta_["config"] = to_json(config);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CsvWriter csv(const std::string& name, std::vector<std::string> header) {
    report_.files.push_back(name);
    return CsvWriter(path(name), std::move(header));
  }

  void svg(const std::string& name, const SvgDocument& doc) {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path(name) + "'");
    out << doc.text;
    report_.files.push_back(name);
    report_.droppedPlotPoints += doc.droppedPoints;
    meta_["svgDroppedPoints"][name] = doc.droppedPoints;
  }

  void plot(const std::string& csvName, const std::string& svgName) {
    svg(svgName, plot_table(read_csv(path(csvName)), config_.kind));
  }

  void progress(const std::string& line) const {
    if (log_) *log_ << line << '\n' << std::flush;
  }

  void count(const std::vector<TrialResult>& results) {
    for (const auto& r : results) {
      ++report_.trialsReported;
      if (r.status == TrialResult::Status::Diverged) ++report_.divergedTrials;
    }
  }

  json& meta() { return meta_; }

  RunReport finish() {
    auto& m = meta_;
    m["experiment"] = to_string(config_.kind);
    m["codeVersion"] = code_version();
    m["seeds"] = {
        {"master", config_.seed},
        {"rule",
         "SplitMix64 stream tree; truth path of trial r at dimension D uses "
         "root.child(1).child(D).child(r) and the filter uses "
         "root.child(2).child(filter).child(D).child(N).child(r); particle j at step k draws "
         "from filterSeed.child(k+1).child(0).child(j)"}};
    m["knobs"] = {
        {"integrator", "euler-maruyama"},
        {"dt", config_.dt},
        {"weightUpdate", "exact stochastic exponential, h frozen at step start"},
        {"resamplingScheme", "multinomial, cumulative-sum inversion"},
        {"resamplingCheck", "post-reweight, after propagation, at the step's end time"},
        {"fixedIntervalBoundary", "inclusive"},
        {"mseAfterResampling", "evaluated post-reset with uniform weights"},
        {"fpfGain", "constant gain, frozen at step start, no inflation; N = 1 gives K = 0"},
        {"mseTimeAverage", "left Riemann sum from t = 0, no burn-in"},
        {"censoring", "censored first-passage trials excluded from means and counted"},
        {"tauWindow", config_.tauWindow},
        {"searchRule",
         "doubling then bisection; decide once |estimate - threshold| > margin * stderr, "
         "doubling trials up to max_trials, then fall back to the point estimate"},
        {"divergence", "trial stops; rows carry status=diverged"}};
    m["outputs"] = report_.files;
    m["trialsReported"] = report_.trialsReported;
    m["divergedTrials"] = report_.divergedTrials;
    std::ofstream out(path("metadata.json"), std::ios::binary);
    out << m.dump(2) << '\n';
    report_.files.push_back("metadata.json");
    return report_;
  }

  const ExperimentConfig& config() const { return config_; }
  int workers() const { return config_.workers; }

  TrialSpec spec(FilterKind kind, Index dim, Index n, int trial) const {
    TrialSpec s;
    s.model = LinearGaussianBenchmark{dim, config_.coeffs};
    s.dt = config_.dt;
    s.numSteps = config_.num_steps();
    s.particles = n;
    s.truthSeed = truth_seed(config_.seed, dim, trial);
    s.filterSeed = filter_seed(config_.seed, kind, dim, n, trial);
    s.policy = config_.policy;
    return s;
  }

  SearchConfig search() const {
    SearchConfig s;
    s.t1 = config_.t1;
    s.dt = config_.dt;
    s.initialTrials = config_.initialTrials;
    s.maxTrials = config_.maxTrials;
    s.maxParticles = config_.maxParticles;
    s.margin = config_.margin;
    s.bpfPolicy = config_.policy;
    s.collapseEss = config_.essLevels.empty() ? 10.0 : config_.essLevels.front();
    s.coeffs = config_.coeffs;
    s.masterSeed = config_.seed;
    s.workers = config_.workers;
    return s;
  }

 private:
  const ExperimentConfig& config_;
  std::ostream* log_;
  fs::path dir_;
  json meta_;
  RunReport report_;
};

std::string status_of(const TrialResult& r) { return to_string(r.status); }

std::string dn(Index d, Index n) { return "D=" + std::to_string(d) + " N=" + std::to_string(n); }

// ---------------------------------------------------------------- ess-collapse

void run_ess_collapse(Run& run) {
  const auto& c = run.config();
  const std::string seed = str(c.seed);
  auto trials = run.csv("ess-collapse.csv",
                        {"experiment", "D", "N", "trial", "seed", "t", "ess", "mse", "status"});
  auto means = run.csv("ess-collapse-mean.csv",
                       {"experiment", "D", "N", "trial", "seed", "t", "essMean", "essStderr",
                        "mseMean", "mseStderr", "trials", "status"});
  for (const Index d : c.dims) {
    for (const Index n : c.particles) {
      run.progress("ess-collapse " + dn(d, n));
      const auto results = run_trial_batch(
          FilterKind::Bpf, [&](int r) { return run.spec(FilterKind::Bpf, d, n, r); }, 0, c.trials,
          run.workers());
      run.count(results);
      std::size_t longest = 0;
      for (std::size_t r = 0; r < results.size(); ++r) {
        const auto& res = results[r];
        longest = std::max(longest, res.mse.size());
        for (std::size_t k = 0; k < res.mse.size(); k += static_cast<std::size_t>(c.recordEvery)) {
          trials.row({"ess-collapse", str(d), str(n), str((r)), seed,
                      num(res.mse.times[k]), num(res.ess.values[k]), num(res.mse.values[k]),
                      status_of(res)});
        }
      }
      for (std::size_t k = 0; k < longest; k += static_cast<std::size_t>(c.recordEvery)) {
        std::vector<double> ess;
        std::vector<double> mse;
        for (const auto& res : results) {
          if (k < res.mse.size()) {
            ess.push_back(res.ess.values[k]);
            mse.push_back(res.mse.values[k]);
          }
        }
        const auto [essMean, essSe] = mean_and_standard_error(ess);
        const auto [mseMean, mseSe] = mean_and_standard_error(mse);
        const bool complete = ess.size() == results.size();
        means.row({"ess-collapse", str(d), str(n), "all", seed, num(c.dt * static_cast<double>(k)),
                   num(essMean), num(essSe), num(mseMean), num(mseSe),
                   str((ess.size())), complete ? "ok" : "partial"});
      }
    }
  }
}

// ------------------------------------------------------------ stopping-scaling

struct StoppingCell {
  Index d;
  Index n;
  double level;
  StoppingTimeEstimate estimate;
  int diverged;
};

std::vector<StoppingCell> stopping_cells(Run& run, const std::vector<Index>& dims,
                                         const std::vector<Index>& sizes,
                                         const std::vector<double>& levels, CsvWriter* trialCsv) {
  const auto& c = run.config();
  const double lowest = *std::min_element(levels.begin(), levels.end());
  std::vector<StoppingCell> cells;
  for (const Index d : dims) {
    for (const Index n : sizes) {
      run.progress("stopping times " + dn(d, n));
      const auto results = run_trial_batch(
          FilterKind::Bpf,
          [&](int r) {
            TrialSpec s = run.spec(FilterKind::Bpf, d, n, r);
            s.policy = ResamplingPolicy::never();
            s.stopAtEss = lowest;
            return s;
          },
          0, c.trials, run.workers());
      run.count(results);
      for (const double level : levels) {
        std::vector<std::optional<double>> times;
        int diverged = 0;
        for (std::size_t r = 0; r < results.size(); ++r) {
          const auto& res = results[r];
          std::optional<double> t;
          if (res.status == TrialResult::Status::Ok) {
            t = first_passage_time(res.ess, level);
            times.push_back(t);
          } else {
            ++diverged;
          }
          if (trialCsv) {
            trialCsv->row({"stopping-scaling", str(d), str(n), num(level),
                           str((r)), str(c.seed), format_optional(t),
                           res.status == TrialResult::Status::Ok && !t ? "1" : "0",
                           status_of(res)});
          }
        }
        cells.push_back({d, n, level, summarize_stopping_times(times), diverged});
      }
    }
  }
  return cells;
}

std::string cell_status(const StoppingCell& cell) {
  if (cell.estimate.trials == 0) return "diverged";
  if (cell.estimate.censored == cell.estimate.trials) return "censored";
  return "ok";
}

void run_stopping_scaling(Run& run) {
  const auto& c = run.config();
  const std::string seed = str(c.seed);
  auto trials = run.csv("stopping-scaling-trials.csv",
                        {"experiment", "D", "N", "n", "trial", "seed", "T", "censored", "status"});
  const auto cells = stopping_cells(run, c.dims, c.particles, c.essLevels, &trials);

  auto table = run.csv("stopping-scaling.csv",
                       {"experiment", "D", "N", "n", "trial", "seed", "meanT", "stderrT", "trials",
                        "censored", "diverged", "status"});
  for (const auto& cell : cells) {
    table.row({"stopping-scaling", str(cell.d), str(cell.n), num(cell.level), "all", seed,
               num(cell.estimate.mean), num(cell.estimate.standardError),
               str((cell.estimate.trials)),
               str((cell.estimate.censored)),
               str((cell.diverged)), cell_status(cell)});
  }

  auto fits = run.csv("stopping-scaling-fits.csv",
                      {"experiment", "D", "N", "n", "trial", "seed", "kind", "coefficients",
                       "rSquared", "residualNorm", "points", "status"});
  auto usable = [](const StoppingCell& cell) {
    return cell.estimate.trials > 0 && cell.estimate.censored < cell.estimate.trials &&
           std::isfinite(cell.estimate.mean) && cell.estimate.mean > 0.0;
  };
  auto emit = [&](const std::string& d, const std::string& n, double level,
                  const std::vector<std::pair<double, double>>& points, ScalingFit::Kind kind) {
    if (points.size() < coefficient_count(kind) + 1) return;
    try {
      const ScalingFit fit = fit_scaling(points, kind);
      fits.row({"stopping-scaling", d, n, num(level), "all", seed, to_string(kind),
                join(fit.coefficients), num(fit.rSquared), num(fit.residualNorm),
                str((points.size())), "ok"});
    } catch (const InvalidInput&) {
      fits.row({"stopping-scaling", d, n, num(level), "all", seed, to_string(kind), kNa, kNa, kNa,
                str((points.size())), "rejected"});
    }
  };
  for (const double level : c.essLevels) {
    for (const Index n : c.particles) {
      std::vector<std::pair<double, double>> points;
      for (const auto& cell : cells) {
        if (cell.n == n && cell.level == level && usable(cell)) {
          points.emplace_back(static_cast<double>(cell.d), cell.estimate.mean);
        }
      }
      emit("all", str(n), level, points, ScalingFit::Kind::PowerLaw);
    }
    for (const Index d : c.dims) {
      std::vector<std::pair<double, double>> points;
      for (const auto& cell : cells) {
        if (cell.d == d && cell.level == level && usable(cell)) {
          points.emplace_back(static_cast<double>(cell.n), cell.estimate.mean);
        }
      }
      emit(str(d), "all", level, points, ScalingFit::Kind::LogLaw);
    }
  }
  table.close();
  run.plot("stopping-scaling.csv", "stopping-scaling.svg");

  // The T-versus-N view of the same table.
  {
    const CsvTable t = read_csv(run.path("stopping-scaling.csv"));
    std::map<std::string, PlotSeries> byD;
    std::vector<std::string> order;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const std::string key = "D=" + t.cell(i, "D") + " n=" + t.cell(i, "n");
      if (!byD.count(key)) {
        order.push_back(key);
        byD[key].label = key;
      }
      byD[key].x.push_back(std::stod(t.cell(i, "N")));
      byD[key].y.push_back(std::stod(t.cell(i, "meanT")));
    }
    std::vector<PlotSeries> series;
    for (const auto& key : order) series.push_back(byD[key]);
    run.svg("stopping-scaling-N.svg",
            emit_svg(series, {"Mean first-passage time vs ensemble size", "N", "T", true, false}));
  }

  if (c.collapseTarget) {
    auto sizes = run.csv("stopping-scaling-collapse.csv",
                         {"experiment", "D", "N", "n", "trial", "seed", "target", "Nrequired",
                          "trialsUsed", "status"});
    const SearchConfig search = run.search();
    PlotSeries curve;
    curve.label = "N for T >= " + num(*c.collapseTarget);
    for (const Index d : c.dims) {
      run.progress("collapse-size search D=" + std::to_string(d));
      const auto result = collapse_ensemble_size(d, *c.collapseTarget, search);
      const std::string nreq = result.particles ? str(*result.particles) : kNa;
      sizes.row({"stopping-scaling", str(d), nreq, num(search.collapseEss), "all", seed,
                 num(*c.collapseTarget), nreq, str((result.trialsUsed)),
                 result.reachable() ? "ok" : "unreachable"});
      if (result.particles) {
        curve.x.push_back(static_cast<double>(d));
        curve.y.push_back(static_cast<double>(*result.particles));
      }
    }
    if (curve.x.empty()) curve.style = PlotSeries::Style::Markers;
    run.svg("stopping-scaling-collapse.svg",
            emit_svg({curve}, {"Ensemble size for a target collapse time", "D", "N", false, true}));
  }
}

// -------------------------------------------------------------- resampling-dip

struct Segment {
  std::size_t begin;  // index into the MSE series
  std::size_t end;    // exclusive
};

std::vector<Segment> segments(const TrialResult& r, double dt) {
  std::vector<Segment> out;
  const std::size_t size = r.mse.size();
  for (std::size_t i = 0; i < r.resampleTimes.size(); ++i) {
    const auto begin = static_cast<std::size_t>(std::llround(r.resampleTimes[i] / dt));
    if (begin >= size) break;
    std::size_t end = size;
    if (i + 1 < r.resampleTimes.size()) {
      end = std::min(size, static_cast<std::size_t>(std::llround(r.resampleTimes[i + 1] / dt)));
    }
    if (end > begin) out.push_back({begin, end});
  }
  return out;
}

std::optional<TauEstimate> try_tau(const SeriesRecord& s, double window) {
  try {
    return tau_mse(s, window);
  } catch (const InvalidInput&) {
    return std::nullopt;
  }
}

std::string tau_cell(const std::optional<TauEstimate>& tau) {
  if (!tau) return kNa;
  if (tau->trend == TauEstimate::Trend::Degenerate) return "degenerate";
  return num(tau->tau);
}

void run_resampling_dip(Run& run) {
  const auto& c = run.config();
  const std::string seed = str(c.seed);
  auto rows = run.csv("resampling-dip.csv",
                      {"experiment", "D", "N", "trial", "seed", "resampleIndex", "tOffset", "mse",
                       "mseCentered", "tauMse", "status"});
  auto summary = run.csv("resampling-dip-tau.csv",
                         {"experiment", "D", "N", "trial", "seed", "tauMse", "slope", "trend",
                          "segments", "tauWindow", "n", "meanT", "stderrT", "censored", "status"});
  const double level = c.essLevels.empty() ? 10.0 : c.essLevels.front();

  for (const Index d : c.dims) {
    for (const Index n : c.particles) {
      run.progress("resampling-dip " + dn(d, n));
      const auto results = run_trial_batch(
          FilterKind::Bpf, [&](int r) { return run.spec(FilterKind::Bpf, d, n, r); }, 0, c.trials,
          run.workers());
      run.count(results);

      std::vector<double> pooledSum;
      std::vector<int> pooledCount;
      int segmentCount = 0;
      for (std::size_t r = 0; r < results.size(); ++r) {
        const auto& res = results[r];
        const auto segs = segments(res, c.dt);
        if (segs.empty()) continue;
        double total = 0.0;
        std::size_t points = 0;
        for (const auto& s : segs) {
          for (std::size_t k = s.begin; k < s.end; ++k) total += res.mse.values[k];
          points += s.end - s.begin;
        }
        const double average = total / static_cast<double>(points);
        for (std::size_t i = 0; i < segs.size(); ++i) {
          const auto& s = segs[i];
          SeriesRecord piece;
          for (std::size_t k = s.begin; k < s.end; ++k) {
            piece.times.push_back(res.mse.times[k]);
            piece.values.push_back(res.mse.values[k]);
          }
          const std::string tau = tau_cell(try_tau(piece, c.tauWindow));
          ++segmentCount;
          for (std::size_t k = s.begin; k < s.end; ++k) {
            const std::size_t j = k - s.begin;
            const double centered = res.mse.values[k] - average;
            if (pooledSum.size() <= j) {
              pooledSum.resize(j + 1, 0.0);
              pooledCount.resize(j + 1, 0);
            }
            pooledSum[j] += centered;
            ++pooledCount[j];
            if (j % static_cast<std::size_t>(c.recordEvery) == 0) {
              rows.row({"resampling-dip", str(d), str(n), str((r)), seed,
                        str((i)), num(c.dt * static_cast<double>(j)),
                        num(res.mse.values[k]), num(centered), tau, status_of(res)});
            }
          }
        }
      }

      SeriesRecord pooled;
      for (std::size_t j = 0; j < pooledSum.size(); ++j) {
        pooled.times.push_back(c.dt * static_cast<double>(j));
        pooled.values.push_back(pooledSum[j] / pooledCount[j]);
      }
      const auto tau = try_tau(pooled, c.tauWindow);
      for (std::size_t j = 0; j < pooled.size(); j += static_cast<std::size_t>(c.recordEvery)) {
        rows.row({"resampling-dip", str(d), str(n), "all", seed, "all", num(pooled.times[j]), kNa,
                  num(pooled.values[j]), tau_cell(tau), "ok"});
      }

      const auto cells = stopping_cells(run, {d}, {n}, {level}, nullptr);
      const auto& cell = cells.front();
      summary.row({"resampling-dip", str(d), str(n), "all", seed, tau_cell(tau),
                   tau ? num(tau->slope) : kNa, tau ? to_string(tau->trend) : kNa,
                   str((segmentCount)), num(c.tauWindow), num(level),
                   num(cell.estimate.mean), num(cell.estimate.standardError),
                   str((cell.estimate.censored)),
                   segmentCount == 0 ? "no-resampling" : cell_status(cell)});
    }
  }
  rows.close();
  summary.close();
  run.plot("resampling-dip.csv", "resampling-dip.svg");
  run.plot("resampling-dip-tau.csv", "resampling-dip-tau.svg");
}

// ------------------------------------------------------------------ required-n

double median_step_seconds(const Run& run, FilterKind kind, Index d, Index n) {
  TrialSpec s = run.spec(kind, d, n, 0);
  if (kind == FilterKind::Fpf) s.policy = ResamplingPolicy::never();
  s.recordSeries = false;
  s.timeSteps = true;
  s.exec = Exec::Serial;
  const TrialResult r = run_trial(kind, s);
  std::vector<double> half(r.stepSeconds.begin() + static_cast<std::ptrdiff_t>(r.stepSeconds.size() / 2),
                           r.stepSeconds.end());
  if (half.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::nth_element(half.begin(), half.begin() + static_cast<std::ptrdiff_t>(half.size() / 2), half.end());
  return half[half.size() / 2];
}

void run_required_n(Run& run) {
  const auto& c = run.config();
  const std::string seed = str(c.seed);
  auto table = run.csv("required-n.csv",
                       {"experiment", "filter", "D", "N", "epsilon", "trial", "seed", "Nrequired",
                        "trialsUsed", "estimate", "stderr", "medianStepSeconds", "status"});
  auto evals = run.csv("required-n-evaluations.csv",
                       {"experiment", "filter", "D", "N", "epsilon", "trial", "seed", "estimate",
                        "stderr", "trials", "diverged", "passed", "resolved", "status"});
  auto fits = run.csv("required-n-fits.csv",
                      {"experiment", "filter", "D", "N", "epsilon", "trial", "seed", "kind",
                       "coefficients", "rSquared", "residualNorm", "points", "status"});
  const SearchConfig search = run.search();
  for (const FilterKind kind : c.filters) {
    for (const double eps : c.epsilons) {
      std::vector<std::pair<double, double>> points;
      for (const Index d : c.dims) {
        run.progress("required-n " + to_string(kind) + " D=" + std::to_string(d) + " eps=" + num(eps));
        const auto result = required_ensemble_size(kind, d, eps, search);
        for (const auto& e : result.evaluations) {
          evals.row({"required-n", to_string(kind), str(d), str(e.particles), num(eps), "all", seed,
                     num(e.estimate), num(e.standardError), str((e.trials)),
                     str((e.diverged)), e.passed ? "1" : "0",
                     e.resolved ? "1" : "0", e.diverged > 0 ? "diverged" : "ok"});
        }
        std::string estimate = kNa;
        std::string stderrCell = kNa;
        if (result.particles) {
          for (const auto& e : result.evaluations) {
            if (e.particles == *result.particles) {
              estimate = num(e.estimate);
              stderrCell = num(e.standardError);
            }
          }
          points.emplace_back(static_cast<double>(d), static_cast<double>(*result.particles));
        }
        std::string timing = kNa;
        if (c.timing && result.particles) timing = num(median_step_seconds(run, kind, d, *result.particles));
        const std::string nreq = result.particles ? str(*result.particles) : kNa;
        table.row({"required-n", to_string(kind), str(d), nreq, num(eps), "all", seed, nreq,
                   str((result.trialsUsed)), estimate, stderrCell, timing,
                   result.reachable() ? "ok" : "unreachable"});
      }
      for (const auto fitKind : {ScalingFit::Kind::Affine, ScalingFit::Kind::ExpPlusAffine}) {
        if (points.size() < coefficient_count(fitKind) + 1) continue;
        try {
          const ScalingFit fit = fit_scaling(points, fitKind);
          fits.row({"required-n", to_string(kind), "all", "all", num(eps), "all", seed,
                    to_string(fitKind), join(fit.coefficients), num(fit.rSquared),
                    num(fit.residualNorm), str((points.size())), "ok"});
        } catch (const InvalidInput&) {
          fits.row({"required-n", to_string(kind), "all", "all", num(eps), "all", seed,
                    to_string(fitKind), kNa, kNa, kNa, str((points.size())),
                    "rejected"});
        }
      }
    }
  }
  table.close();
  run.plot("required-n.csv", "required-n.svg");
}

// ---------------------------------------------------------------------- plots

double parse_cell(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan" || s == kNa || s == "degenerate" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

// Groups rows by `label(row)` in first-appearance order and averages y over
// rows sharing the same (group, x).
std::vector<PlotSeries> grouped(const CsvTable& t, const std::function<bool(std::size_t)>& keep,
                                const std::function<std::string(std::size_t)>& label,
                                const std::string& xCol, const std::string& yCol) {
  if (!t.column(xCol) || !t.column(yCol)) {
    throw InvalidInput("table lacks column '" + (t.column(xCol) ? yCol : xCol) + "'");
  }
  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::pair<double, int>>> acc;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (!keep(i)) continue;
    const std::string key = label(i);
    if (!acc.count(key)) order.push_back(key);
    auto& slot = acc[key][parse_cell(t.cell(i, xCol))];
    slot.first += parse_cell(t.cell(i, yCol));
    ++slot.second;
  }
  std::vector<PlotSeries> out;
  for (const auto& key : order) {
    PlotSeries s;
    s.label = key;
    for (const auto& [x, sum] : acc[key]) {
      s.x.push_back(x);
      s.y.push_back(sum.first / sum.second);
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw InvalidInput("table has no plottable rows");
  return out;
}

}  // namespace

SvgDocument plot_table(const CsvTable& t, Kind kind) {
  auto all = [](std::size_t) { return true; };
  switch (kind) {
    case Kind::EssCollapse: {
      const bool mean = t.column("essMean").has_value();
      auto label = [&](std::size_t i) { return "D=" + t.cell(i, "D") + " N=" + t.cell(i, "N"); };
      auto series = grouped(t, all, label, "t", mean ? "essMean" : "ess");
      for (auto& s : series) s.style = PlotSeries::Style::Lines;
      return emit_svg(series, {"Effective sample size (trial mean)", "t", "ESS", false, true});
    }
    case Kind::StoppingScaling: {
      auto label = [&](std::size_t i) { return "N=" + t.cell(i, "N") + " n=" + t.cell(i, "n"); };
      auto series = grouped(t, all, label, "D", t.column("meanT") ? "meanT" : "T");
      std::vector<PlotSeries> withFits;
      for (const auto& s : series) {
        withFits.push_back(s);
        std::vector<std::pair<double, double>> points;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          if (std::isfinite(s.y[i]) && s.y[i] > 0.0) points.emplace_back(s.x[i], s.y[i]);
        }
        if (points.size() < 3) continue;
        const ScalingFit fit = fit_scaling(points, ScalingFit::Kind::PowerLaw);
        PlotSeries guide;
        guide.label = "fit D^" + format_number(std::round(fit.coefficients[1] * 100.0) / 100.0);
        guide.style = PlotSeries::Style::Lines;
        guide.dashed = true;
        for (const auto& p : points) {
          guide.x.push_back(p.first);
          guide.y.push_back(fit.predict(p.first));
        }
        withFits.push_back(std::move(guide));
      }
      return emit_svg(withFits, {"Mean first-passage time vs dimension", "D", "T", true, true});
    }
    case Kind::ResamplingDip: {
      if (!t.column("tOffset")) {
        auto label = [](std::size_t) { return std::string("tau_MSE"); };
        auto series = grouped(t, all, label, "D", "tauMse");
        auto meanT = grouped(t, all, [](std::size_t) { return std::string("mean T"); }, "D", "meanT");
        series.push_back(meanT.front());
        return emit_svg(series, {"Resampling benefit vs weight collapse", "D", "time", true, true});
      }
      auto pooled = [&](std::size_t i) { return t.cell(i, "resampleIndex") == "all"; };
      auto label = [&](std::size_t i) { return "D=" + t.cell(i, "D") + " N=" + t.cell(i, "N"); };
      auto series = grouped(t, pooled, label, "tOffset", "mseCentered");
      for (auto& s : series) s.style = PlotSeries::Style::Lines;
      return emit_svg(series, {"MSE after resampling (time average removed)", "t - t_r",
                               "MSE - mean", false, false});
    }
    case Kind::RequiredN: {
      auto label = [&](std::size_t i) { return t.cell(i, "filter") + " eps=" + t.cell(i, "epsilon"); };
      return emit_svg(grouped(t, all, label, "D", "Nrequired"),
                      {"Required ensemble size", "D", "N", false, true});
    }
  }
  throw InvalidInput("unknown experiment kind");
}

RunReport run_experiment(const ExperimentConfig& config, std::ostream* log) {
  Run run(config, log);
  switch (config.kind) {
    case Kind::EssCollapse:
      run_ess_collapse(run);
      run.plot("ess-collapse-mean.csv", "ess-collapse.svg");
      break;
    case Kind::StoppingScaling:
      run.meta()["policyNote"] = "stopping times are measured without resampling";
      run_stopping_scaling(run);
      break;
    case Kind::ResamplingDip: run_resampling_dip(run); break;
    case Kind::RequiredN:
      run.meta()["timingNote"] =
          "medianStepSeconds: one serial trial at the found N, median over its second half";
      run_required_n(run);
      break;
  }
  return run.finish();
}

}  // namespace pfscale::experiment
