#include "sigforecast/forecast.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace sigforecast {
namespace {

constexpr double kMinScale = 1e-8;
// Calibration looks at no more than this many most recent windows.
constexpr int kMaxCalibrationWindows = 20;

std::vector<double> normal_quantiles(std::span<const double> levels) {
  const boost::math::normal standard;
  std::vector<double> z(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] < 1.0)) throw ArgumentError("quantile levels must lie in (0, 1)");
    if (i > 0 && !(levels[i] > levels[i - 1])) throw ArgumentError("quantile levels must be strictly increasing");
    z[i] = levels[i] == 0.5 ? 0.0 : boost::math::quantile(standard, levels[i]);
  }
  return z;
}

struct RawForecast {
  Vector mean;    // de-standardized
  Vector stddev;  // de-standardized, beta = 1
};

RawForecast forecast_raw(const Model& model, std::span<const double> observed) {
  if (observed.empty()) throw ArgumentError("predict: observed series is empty");
  const Standardizer st = Standardizer::fit(observed);
  const std::vector<double> z = st.apply(observed);
  const HeadPredictive hp = predict_heads(model, lag_augment(z, model.config().lags));
  RawForecast out;
  out.mean = (hp.means.array() * st.scale + st.mean).matrix();
  out.stddev = ((hp.vars.array() + hp.noise_var).sqrt() * st.scale).matrix();
  return out;
}

QuantileForecast to_quantiles(const RawForecast& raw, std::span<const double> levels, double beta) {
  const std::vector<double> z = normal_quantiles(levels);
  QuantileForecast out;
  out.levels.assign(levels.begin(), levels.end());
  out.mean = raw.mean;
  out.stddev = beta * raw.stddev;
  out.values.resize(raw.mean.size(), static_cast<Eigen::Index>(levels.size()));
  for (Eigen::Index h = 0; h < raw.mean.size(); ++h)
    for (std::size_t q = 0; q < levels.size(); ++q) out.values(h, q) = out.mean[h] + z[q] * out.stddev[h];
  return out;
}

}  // namespace

std::vector<double> default_quantile_levels() {
  std::vector<double> v;
  for (int i = 1; i <= 9; ++i) v.push_back(i / 10.0);
  return v;
}

std::vector<double> default_calibration_grid() {
  std::vector<double> v;
  for (int i = 1; i <= 20; ++i) v.push_back(i / 10.0);
  return v;
}

RowMatrix lag_augment(std::span<const double> y, int lags) {
  if (lags < 0) throw ArgumentError("lag_augment: lags must be >= 0");
  const Eigen::Index T = static_cast<Eigen::Index>(y.size());
  RowMatrix x = RowMatrix::Zero(T, lags + 1);
  for (Eigen::Index t = 0; t < T; ++t)
    for (int j = 0; j <= lags && j <= t; ++j) x(t, j) = y[t - j];
  return x;
}

Standardizer Standardizer::fit(std::span<const double> y) {
  Standardizer s;
  if (y.empty()) return s;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  // Exact for a constant series; the floored scale would magnify rounding.
  if (*lo == *hi) {
    s.mean = *lo;
    s.scale = kMinScale;
    return s;
  }
  s.mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - s.mean) * (v - s.mean);
  s.scale = std::max(kMinScale, std::sqrt(ss / static_cast<double>(y.size() - 1)));
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> y) const {
  std::vector<double> z(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) z[i] = (y[i] - mean) / scale;
  return z;
}

std::vector<double> Standardizer::invert(std::span<const double> z) const {
  std::vector<double> y(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) y[i] = z[i] * scale + mean;
  return y;
}

HorizonTargets build_targets(std::span<const double> y, int horizon) {
  if (horizon < 1) throw ArgumentError("build_targets: horizon must be >= 1");
  const Eigen::Index T = static_cast<Eigen::Index>(y.size());
  HorizonTargets out;
  out.values = RowMatrix::Zero(T, horizon);
  out.mask.setConstant(T, horizon, false);
  for (Eigen::Index l = 0; l < T; ++l)
    for (int h = 1; h <= horizon && l + h < T; ++h) {
      out.values(l, h - 1) = y[l + h];
      out.mask(l, h - 1) = true;
    }
  return out;
}

SeriesBatch make_batch(std::span<const double> raw, int lags) {
  const std::vector<double> z = Standardizer::fit(raw).apply(raw);
  return {lag_augment(z, lags), z};
}

TrainResult train(const std::vector<std::vector<double>>& series, const ModelConfig& config,
                  const TrainOptions& options) {
  if (series.empty()) throw DataError("train: empty training set");
  config.validate();
  std::vector<SeriesBatch> batches;
  std::vector<RowMatrix> inputs;
  std::vector<Standardizer> scalers;
  std::size_t total_pairs = 0;
  for (const auto& s : series) {
    if (s.size() < 2) throw DataError("train: every series needs at least two values");
    scalers.push_back(Standardizer::fit(s));
    batches.push_back(make_batch(s, config.lags));
    inputs.push_back(batches.back().inputs);
    total_pairs += supervised_pairs(s.size(), config.horizon);
  }

  Model model = Model::initialize(config, inputs, 1.0);
  const long steps = std::max<long>(static_cast<long>(options.epochs) * static_cast<long>(series.size()),
                                    options.min_steps);
  Adam adam(options.learning_rate);
  std::vector<double> trace;
  trace.reserve(steps > 0 ? steps : 0);
  // The last model whose objective and gradient came out finite.
  Model last_good = model;
  for (long step = 0; step < steps; ++step) {
    const SeriesBatch& batch = batches[step % batches.size()];
    Evaluation ev;
    try {
      ev = evaluate(model, batch, total_pairs, true);
      if (!std::isfinite(ev.terms.value)) throw NumericalError("objective is not finite");
    } catch (const NumericalError& e) {
      throw TrainingAborted(std::string(e.what()) + " at step " + std::to_string(step), std::move(last_good), step);
    }
    last_good = model;
    ParameterSet loss_grad = ev.gradient;
    for (ParameterBlock& b : loss_grad.blocks)
      for (double& v : b.values) v = -v;
    adam.step(model.params(), loss_grad);
    const std::string bad = model.params().first_nonfinite();
    if (!bad.empty()) {
      throw TrainingAborted("parameter block '" + bad + "' became non-finite at step " + std::to_string(step),
                            std::move(last_good), step);
    }
    trace.push_back(-ev.terms.value);
    if (options.on_step) options.on_step(step, -ev.terms.value);
  }
  return {std::move(model), std::move(trace), std::move(scalers)};
}

QuantileForecast predict(const Model& model, std::span<const double> observed, std::span<const double> levels,
                         double beta) {
  if (!(beta > 0.0)) throw ArgumentError("predict: beta must be positive");
  return to_quantiles(forecast_raw(model, observed), levels, beta);
}

double calibrate(const Model& model, std::span<const double> observed, std::span<const double> grid,
                 std::span<const double> levels) {
  if (grid.empty()) throw ArgumentError("calibrate: empty grid");
  if (grid.size() == 1) return grid[0];
  const long T = static_cast<long>(observed.size());
  const long H = model.config().horizon;
  std::vector<long> origins;
  for (long o = T - H; o >= 2 && static_cast<int>(origins.size()) < kMaxCalibrationWindows; o -= H) origins.push_back(o);
  if (origins.empty()) {
    std::cerr << "warning: series of length " << T << " is too short to calibrate horizon " << H
              << "; using beta = 1\n";
    return 1.0;
  }
  std::vector<RawForecast> raws;
  for (long o : origins) raws.push_back(forecast_raw(model, observed.subspan(0, o)));

  double best_beta = grid[0];
  double best = std::numeric_limits<double>::infinity();
  for (double beta : grid) {
    CrpsParts total;
    for (std::size_t w = 0; w < origins.size(); ++w) {
      const QuantileForecast f = to_quantiles(raws[w], levels, beta);
      total += crps_parts(f.values, observed.subspan(origins[w], H), levels);
    }
    if (total.abs_sum == 0.0) return 1.0;
    const double v = total.value();
    if (v < best) {
      best = v;
      best_beta = beta;
    }
  }
  return best_beta;
}

double pinball(double q, double y, double tau) { return (tau - (y < q ? 1.0 : 0.0)) * (y - q); }

CrpsParts& CrpsParts::operator+=(const CrpsParts& other) {
  loss += other.loss;
  abs_sum += other.abs_sum;
  levels = std::max(levels, other.levels);
  return *this;
}

double CrpsParts::value() const {
  if (abs_sum == 0.0) throw DataError("CRPS is undefined when every actual value is zero");
  return loss / (static_cast<double>(levels) * abs_sum);
}

CrpsParts crps_parts(const RowMatrix& quantiles, std::span<const double> actuals, std::span<const double> levels) {
  if (quantiles.rows() != static_cast<Eigen::Index>(actuals.size()) ||
      quantiles.cols() != static_cast<Eigen::Index>(levels.size())) {
    throw ArgumentError("crps: forecast shape does not match actuals and levels");
  }
  CrpsParts p;
  p.levels = levels.size();
  for (std::size_t t = 0; t < actuals.size(); ++t) {
    p.abs_sum += std::abs(actuals[t]);
    for (std::size_t q = 0; q < levels.size(); ++q) p.loss += 2.0 * pinball(quantiles(t, q), actuals[t], levels[q]);
  }
  return p;
}

double crps(const std::vector<RowMatrix>& quantiles, const std::vector<std::vector<double>>& actuals,
            std::span<const double> levels) {
  if (quantiles.size() != actuals.size()) throw ArgumentError("crps: series counts differ");
  CrpsParts total;
  total.levels = levels.size();
  for (std::size_t s = 0; s < quantiles.size(); ++s) total += crps_parts(quantiles[s], actuals[s], levels);
  return total.value();
}

QuantileForecast seasonal_naive(std::span<const double> series, int season, int horizon,
                                std::span<const double> levels) {
  if (series.empty()) throw ArgumentError("seasonal_naive: empty series");
  if (season < 1) throw ArgumentError("seasonal_naive: season must be >= 1");
  if (horizon < 1) throw ArgumentError("seasonal_naive: horizon must be >= 1");
  const long T = static_cast<long>(series.size());
  QuantileForecast out;
  out.levels.assign(levels.begin(), levels.end());
  out.mean.resize(horizon);
  out.stddev = Vector::Zero(horizon);
  out.values.resize(horizon, static_cast<Eigen::Index>(levels.size()));
  for (long h = 1; h <= horizon; ++h) {
    double v = series[T - 1];
    if (T >= season) {
      const long back = season * ((h + season - 1) / season);
      v = series[T - 1 + h - back];
    }
    out.mean[h - 1] = v;
    out.values.row(h - 1).setConstant(v);
  }
  return out;
}

}  // namespace sigforecast
