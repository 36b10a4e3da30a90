#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sigforecast::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

struct TrainArgs {
  std::string data;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string trace;  // empty: <out>.trace.csv
  bool calibrate = true;
  long log_every = 0;
};

struct PredictArgs {
  std::string model;
  std::string data;
  std::string out;
  std::string band;  // empty: <out stem>_band.csv
};

struct EvaluateArgs {
  std::string model;
  std::string data;
  std::string out;        // per-series CRPS CSV, optional
  std::string forecasts;  // quantile CSV of the scored forecasts, optional
  bool seasonal_naive = false;
  int season = 0;  // 0: checkpoint value, then the dataset frequency
};

struct BenchArgs {
  std::vector<long> lengths = {1000, 10000, 100000};
  int features = 200;
  int levels = 5;
  int lags = 9;
  int window = 32;
  int threads = 0;
  int repeats = 1;
  std::uint64_t seed = 0;
  std::string out;  // empty: stdout
};

struct SynthArgs {
  std::string out;
  std::uint64_t seed = 0;
  int n_train = 700;
  int horizon = 100;
  std::vector<double> periods;
  std::vector<double> amplitudes;
  std::string csv;
};

int run_train(const TrainArgs& args);
int run_predict(const PredictArgs& args);
int run_evaluate(const EvaluateArgs& args);
int run_bench(const BenchArgs& args);
int run_synth(const SynthArgs& args);

}  // namespace sigforecast::cli
