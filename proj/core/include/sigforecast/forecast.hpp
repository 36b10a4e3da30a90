#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sigforecast/errors.hpp"
#include "sigforecast/matrix.hpp"
#include "sigforecast/model.hpp"

namespace sigforecast {

std::vector<double> default_quantile_levels();     // 0.1, ..., 0.9
std::vector<double> default_calibration_grid();    // 0.1, ..., 2.0

// Row t = (y_t, y_{t-1}, ..., y_{t-lags}), zero before the start.
RowMatrix lag_augment(std::span<const double> y, int lags);

struct Standardizer {
  double mean = 0.0;
  double scale = 1.0;  // sample std, floored at 1e-8

  static Standardizer fit(std::span<const double> y);
  std::vector<double> apply(std::span<const double> y) const;
  std::vector<double> invert(std::span<const double> z) const;
};

// values(l, h-1) = y[l + h] where defined; mask marks the defined pairs.
struct HorizonTargets {
  RowMatrix values;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> mask;
  std::size_t count() const { return static_cast<std::size_t>(mask.count()); }
};
HorizonTargets build_targets(std::span<const double> y, int horizon);

// Standardized, lag-augmented batch for one raw series.
SeriesBatch make_batch(std::span<const double> raw, int lags);

struct TrainOptions {
  double learning_rate = 1e-3;
  int epochs = 200;
  long min_steps = 20000;
  // Called after every optimizer step with the step index and loss.
  std::function<void(long, double)> on_step;
};

struct TrainResult {
  Model model;
  std::vector<double> trace;  // loss (negative objective) per step
  std::vector<Standardizer> scalers;
};

// Thrown when the objective or a gradient stops being finite.
class TrainingAborted : public NumericalError {
 public:
  TrainingAborted(const std::string& what, Model last_finite, long step)
      : NumericalError(what), last_finite(std::move(last_finite)), step(step) {}
  Model last_finite;
  long step;
};

// Steps = max(epochs * #series, min_steps); one full series per step, in order.
TrainResult train(const std::vector<std::vector<double>>& series, const ModelConfig& config,
                  const TrainOptions& options);

struct QuantileForecast {
  std::vector<double> levels;
  RowMatrix values;  // [H x #levels]
  Vector mean;       // [H]
  Vector stddev;     // [H], predictive (latent + noise), calibrated
};

// Forecast after the last observed value. beta scales the predictive stds.
QuantileForecast predict(const Model& model, std::span<const double> observed, std::span<const double> levels,
                         double beta = 1.0);

// Rolling-origin choice of the std multiplier that minimises CRPS on the
// observed part. Returns 1 when the series is too short.
double calibrate(const Model& model, std::span<const double> observed, std::span<const double> grid,
                 std::span<const double> levels);

double pinball(double q, double y, double tau);

struct CrpsParts {
  double loss = 0.0;     // sum of 2 * pinball over points and levels
  double abs_sum = 0.0;  // sum of |y|
  std::size_t levels = 0;
  CrpsParts& operator+=(const CrpsParts& other);
  double value() const;  // throws DataError when abs_sum is 0
};
CrpsParts crps_parts(const RowMatrix& quantiles, std::span<const double> actuals, std::span<const double> levels);
double crps(const std::vector<RowMatrix>& quantiles, const std::vector<std::vector<double>>& actuals,
            std::span<const double> levels);

// y_hat[T + h] = y[T + h - season * ceil(h / season)], every level equal.
QuantileForecast seasonal_naive(std::span<const double> series, int season, int horizon,
                                std::span<const double> levels);

}  // namespace sigforecast
