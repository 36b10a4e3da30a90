#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sigforecast/forecast.hpp"
#include "sigforecast/model.hpp"

namespace sigforecast {

// Everything a training / evaluation run reads from a config file.
struct RunConfig {
  ModelConfig model;
  double lr = 1e-3;
  int epochs = 200;
  long min_steps = 20000;
  std::vector<double> quantiles = default_quantile_levels();
  std::vector<double> calibration_grid = default_calibration_grid();
  int season = 0;  // 0: from the dataset frequency
};

// Plain "key = value" lines; '#' starts a comment; lists are comma separated.
// Keys: D, M, lags, W, lr, epochs, min_steps, penalty_weight, mode, quantiles,
// calibration_grid, season, seed, variational, shared_covariance.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// 24 for hourly data, 7 for daily, 1 otherwise.
int default_season(const std::string& freq);

}  // namespace sigforecast
