#include "pfscale/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pfscale {

void SeriesRecord::validate() const {
  require(times.size() == values.size(), "SeriesRecord: times and values differ in length");
  for (std::size_t i = 1; i < times.size(); ++i) {
    require(times[i] > times[i - 1], "SeriesRecord: times must be strictly increasing");
  }
  if (endTime && !times.empty()) {
    require(*endTime > times.back(), "SeriesRecord: endTime must follow the last time");
  }
}

double mse_instant(const Vector& truth, const Vector& estimate) {
  require(truth.size() == estimate.size(), "mse_instant: dimension mismatch");
  require(truth.size() >= 1, "mse_instant: empty vectors");
  return (truth - estimate).squaredNorm() / static_cast<double>(truth.size());
}

double time_avg_mse(const SeriesRecord& series) {
  series.validate();
  require(!series.values.empty(), "time_avg_mse: empty series");
  const std::size_t n = series.size();
  if (n == 1) return series.values[0];
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    integral += series.values[k] * (series.times[k + 1] - series.times[k]);
  }
  const double lastWidth = series.endTime ? *series.endTime - series.times[n - 1]
                                          : series.times[n - 1] - series.times[n - 2];
  integral += series.values[n - 1] * lastWidth;
  return integral / (series.times[n - 1] + lastWidth - series.times[0]);
}

std::optional<double> first_passage_time(const SeriesRecord& essSeries, double n) {
  require(n >= 1.0, "first_passage_time: n must be at least 1");
  require(essSeries.times.size() == essSeries.values.size(),
          "first_passage_time: times and values differ in length");
  for (std::size_t k = 0; k < essSeries.size(); ++k) {
    if (essSeries.values[k] <= n) return essSeries.times[k];
  }
  return std::nullopt;
}

std::pair<double, double> mean_and_standard_error(const std::vector<double>& values) {
  if (values.empty()) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

StoppingTimeEstimate summarize_stopping_times(const std::vector<std::optional<double>>& times) {
  std::vector<double> observed;
  StoppingTimeEstimate out;
  out.trials = static_cast<int>(times.size());
  for (const auto& t : times) {
    if (t) {
      observed.push_back(*t);
    } else {
      ++out.censored;
    }
  }
  if (!observed.empty()) {
    const auto [mean, se] = mean_and_standard_error(observed);
    out.mean = mean;
    out.standardError = se;
  } else {
    out.mean = std::numeric_limits<double>::infinity();
  }
  return out;
}

std::string to_string(TauEstimate::Trend trend) {
  switch (trend) {
    case TauEstimate::Trend::Decreasing: return "decreasing";
    case TauEstimate::Trend::Increasing: return "increasing";
    case TauEstimate::Trend::Degenerate: return "degenerate";
  }
  return "degenerate";
}

TauEstimate tau_mse(const SeriesRecord& segment, double fitWindow) {
  segment.validate();
  require(fitWindow > 0.0, "tau_mse: fit window must be positive");
  require(!segment.times.empty(), "tau_mse: empty segment");
  const double start = segment.times.front();
  const double slack = 1e-9 * std::max(1.0, fitWindow);
  require(start + fitWindow <= segment.times.back() + slack,
          "tau_mse: fit window extends past the end of the series");

  std::vector<double> t;
  std::vector<double> y;
  for (std::size_t k = 0; k < segment.size(); ++k) {
    if (segment.times[k] - start > fitWindow + slack) break;
    t.push_back(segment.times[k] - start);
    y.push_back(segment.values[k]);
  }
  require(t.size() >= 3, "tau_mse: fit window holds fewer than 3 points");

  const double n = static_cast<double>(t.size());
  const double tMean = std::accumulate(t.begin(), t.end(), 0.0) / n;
  const double yMean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    sxy += (t[k] - tMean) * (y[k] - yMean);
    sxx += (t[k] - tMean) * (t[k] - tMean);
  }
  TauEstimate out;
  out.slope = sxy / sxx;
  if (std::abs(out.slope) < 1e-9) return out;
  out.tau = 1.0 / std::abs(out.slope);
  out.trend = out.slope < 0.0 ? TauEstimate::Trend::Decreasing : TauEstimate::Trend::Increasing;
  return out;
}

std::string to_string(ScalingFit::Kind kind) {
  switch (kind) {
    case ScalingFit::Kind::PowerLaw: return "powerLaw";
    case ScalingFit::Kind::LogLaw: return "logLaw";
    case ScalingFit::Kind::ExpPlusAffine: return "expPlusAffine";
    case ScalingFit::Kind::Affine: return "affine";
  }
  return "affine";
}

std::size_t coefficient_count(ScalingFit::Kind kind) {
  return kind == ScalingFit::Kind::ExpPlusAffine ? 4 : 2;
}

double ScalingFit::predict(double x) const {
  const auto& c = coefficients;
  switch (kind) {
    case Kind::PowerLaw: return c[0] * std::pow(x, c[1]);
    case Kind::LogLaw: return c[0] + c[1] * std::log(x);
    case Kind::ExpPlusAffine: return c[0] * std::exp(c[1] * x) + c[2] * x + c[3];
    case Kind::Affine: return c[0] + c[1] * x;
  }
  return 0.0;
}

namespace {

struct LinearFit {
  Vector beta;
  double residualNorm;
};

LinearFit least_squares(const Matrix& design, const Vector& y) {
  const Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (qr.rank() < design.cols()) throw InvalidInput("fit_scaling: rank-deficient design");
  LinearFit out;
  out.beta = qr.solve(y);
  out.residualNorm = (design * out.beta - y).norm();
  return out;
}

double r_squared(const Vector& y, double residualNorm) {
  const double ssTot = (y.array() - y.mean()).square().sum();
  if (ssTot == 0.0) return residualNorm == 0.0 ? 1.0 : 0.0;
  return 1.0 - residualNorm * residualNorm / ssTot;
}

Matrix exp_affine_design(const Vector& x, double rate) {
  Matrix design(x.size(), 3);
  design.col(0) = (rate * x.array()).exp().matrix();
  design.col(1) = x;
  design.col(2).setOnes();
  return design;
}

// Residual of the inner linear problem; +inf when the exponential column is
// numerically collinear with the affine ones.
double projected_residual(const Vector& x, const Vector& y, double rate) {
  const Matrix design = exp_affine_design(x, rate);
  if (!design.allFinite()) return std::numeric_limits<double>::infinity();
  const Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (qr.rank() < 3) return std::numeric_limits<double>::infinity();
  return (design * qr.solve(y) - y).norm();
}

// Variable projection: for fixed rate b the model is linear in (a, c, d), so
// only b is searched. Coarse scan over b * max|x| in [-20, 20], then golden
// section around each of the best few grid points.
ScalingFit fit_exp_plus_affine(const Vector& x, const Vector& y) {
  const double scale = x.cwiseAbs().maxCoeff();
  require(scale > 0.0, "fit_scaling: all x are zero");
  std::vector<std::pair<double, double>> grid;
  for (int i = -200; i <= 200; ++i) {
    if (i == 0) continue;
    const double rate = 0.1 * i / scale;
    grid.emplace_back(projected_residual(x, y, rate), rate);
  }
  std::sort(grid.begin(), grid.end());
  require(std::isfinite(grid.front().first), "fit_scaling: rank-deficient design");

  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double bestRate = grid.front().second;
  double bestResidual = grid.front().first;
  const std::size_t starts = std::min<std::size_t>(3, grid.size());
  for (std::size_t s = 0; s < starts; ++s) {
    double lo = grid[s].second - 0.1 / scale;
    double hi = grid[s].second + 0.1 / scale;
    double a = hi - phi * (hi - lo);
    double b = lo + phi * (hi - lo);
    double fa = projected_residual(x, y, a);
    double fb = projected_residual(x, y, b);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
      if (fa < fb) {
        hi = b;
        b = a;
        fb = fa;
        a = hi - phi * (hi - lo);
        fa = projected_residual(x, y, a);
      } else {
        lo = a;
        a = b;
        fa = fb;
        b = lo + phi * (hi - lo);
        fb = projected_residual(x, y, b);
      }
    }
    const double rate = 0.5 * (lo + hi);
    const double residual = projected_residual(x, y, rate);
    if (residual < bestResidual) {
      bestResidual = residual;
      bestRate = rate;
    }
  }
  const LinearFit inner = least_squares(exp_affine_design(x, bestRate), y);
  ScalingFit fit;
  fit.kind = ScalingFit::Kind::ExpPlusAffine;
  fit.coefficients = {inner.beta[0], bestRate, inner.beta[1], inner.beta[2]};
  fit.residualNorm = inner.residualNorm;
  fit.rSquared = r_squared(y, inner.residualNorm);
  return fit;
}

}  // namespace

ScalingFit fit_scaling(const std::vector<std::pair<double, double>>& points, ScalingFit::Kind kind) {
  require(points.size() >= coefficient_count(kind) + 1, "fit_scaling: too few points");
  const Index n = static_cast<Index>(points.size());
  Vector x(n);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    x[i] = points[static_cast<std::size_t>(i)].first;
    y[i] = points[static_cast<std::size_t>(i)].second;
  }
  require(x.allFinite() && y.allFinite(), "fit_scaling: non-finite input");

  if (kind == ScalingFit::Kind::ExpPlusAffine) return fit_exp_plus_affine(x, y);

  Matrix design(n, 2);
  design.col(0).setOnes();
  Vector target = y;
  switch (kind) {
    case ScalingFit::Kind::PowerLaw:
      require((x.array() > 0.0).all() && (y.array() > 0.0).all(),
              "fit_scaling: power law needs positive data");
      design.col(1) = x.array().log().matrix();
      target = y.array().log().matrix();
      break;
    case ScalingFit::Kind::LogLaw:
      require((x.array() > 0.0).all(), "fit_scaling: log law needs positive x");
      design.col(1) = x.array().log().matrix();
      break;
    default:
      design.col(1) = x;
      break;
  }
  const LinearFit lin = least_squares(design, target);
  ScalingFit fit;
  fit.kind = kind;
  fit.residualNorm = lin.residualNorm;
  fit.rSquared = r_squared(target, lin.residualNorm);
  if (kind == ScalingFit::Kind::PowerLaw) {
    fit.coefficients = {std::exp(lin.beta[0]), lin.beta[1]};
  } else {
    fit.coefficients = {lin.beta[0], lin.beta[1]};
  }
  return fit;
}

}  // namespace pfscale
