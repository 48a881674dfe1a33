#pragma once

#include "pfscale/core.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pfscale {

/// A scalar trajectory on strictly increasing times. `endTime` closes the
/// last Riemann interval; without it the last interval repeats the previous
/// spacing.
struct SeriesRecord {
  std::vector<double> times;
  std::vector<double> values;
  std::optional<double> endTime;
  std::map<std::string, std::string> meta;

  void validate() const;
  std::size_t size() const noexcept { return values.size(); }
};

/// (1/D) |truth - estimate|^2.
double mse_instant(const Vector& truth, const Vector& estimate);

/// Left-endpoint Riemann sum of the series divided by its horizon.
double time_avg_mse(const SeriesRecord& series);

/// First time with value <= n, or nullopt if the series never gets there.
std::optional<double> first_passage_time(const SeriesRecord& essSeries, double n);

struct StoppingTimeEstimate {
  double mean = 0.0;           // over uncensored trials
  double standardError = 0.0;  // of that mean
  int trials = 0;
  int censored = 0;
};

/// Censored trials are counted, never imputed.
StoppingTimeEstimate summarize_stopping_times(const std::vector<std::optional<double>>& times);

struct TauEstimate {
  enum class Trend { Decreasing, Increasing, Degenerate };

  double tau = 0.0;  // 1/|slope|, 0 when degenerate
  double slope = 0.0;
  Trend trend = Trend::Degenerate;
};

std::string to_string(TauEstimate::Trend trend);

/// Least-squares slope of the segment over [t_r, t_r + fitWindow], t_r being
/// the segment's first time, and its inverse magnitude.
TauEstimate tau_mse(const SeriesRecord& segment, double fitWindow);

struct ScalingFit {
  /// PowerLaw:      y = c x^alpha             coefficients (c, alpha), fit in log-log
  /// LogLaw:        y = a + b log x           coefficients (a, b)
  /// ExpPlusAffine: y = a e^{b x} + c x + d   coefficients (a, b, c, d)
  /// Affine:        y = a + b x               coefficients (a, b)
  enum class Kind { PowerLaw, LogLaw, ExpPlusAffine, Affine };

  Kind kind = Kind::Affine;
  std::vector<double> coefficients;
  double residualNorm = 0.0;  // in the space the fit was done in
  double rSquared = 0.0;      // same space

  double predict(double x) const;
};

std::string to_string(ScalingFit::Kind kind);
std::size_t coefficient_count(ScalingFit::Kind kind);

ScalingFit fit_scaling(const std::vector<std::pair<double, double>>& points, ScalingFit::Kind kind);

/// Sample mean and standard error of the mean.
std::pair<double, double> mean_and_standard_error(const std::vector<double>& values);

}  // namespace pfscale
