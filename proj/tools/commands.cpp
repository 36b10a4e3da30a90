#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "sigforecast/checkpoint.hpp"
#include "sigforecast/config.hpp"
#include "sigforecast/dataio.hpp"
#include "sigforecast/errors.hpp"
#include "sigforecast/forecast.hpp"
#include "sigforecast/memory.hpp"
#include "sigforecast/parallel.hpp"

namespace sigforecast::cli {
namespace fs = std::filesystem;
namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Series to forecast from: the test split minus its scored tail, or the
// whole training series when there is no test split.
struct Target {
  std::string item_id;
  std::vector<double> observed;
  std::vector<double> actual;  // empty when nothing is held out
};

std::vector<Target> forecast_targets(const Dataset& ds, int horizon, bool need_actuals) {
  std::vector<Target> out;
  if (ds.test.empty()) {
    if (need_actuals) throw DataError("dataset has no test split to score");
    for (const DatasetRecord& r : ds.train) out.push_back({r.item_id, r.target, {}});
    return out;
  }
  for (const DatasetRecord& r : ds.test) {
    if (r.target.size() <= static_cast<std::size_t>(horizon)) {
      throw DataError("test series '" + r.item_id + "' is not longer than the horizon " + std::to_string(horizon));
    }
    const auto cut = r.target.end() - horizon;
    out.push_back({r.item_id, {r.target.begin(), cut}, {cut, r.target.end()}});
  }
  return out;
}

struct Loaded {
  ModelBundle bundle;
  std::vector<double> levels;
  std::vector<double> grid;
  int season = 0;
};

Loaded load_model(const std::string& path) {
  const Checkpoint ck = Checkpoint::load(path);
  Loaded l{from_checkpoint(ck), default_quantile_levels(), default_calibration_grid(), 0};
  if (ck.contains("run/quantiles")) l.levels = ck.reals("run/quantiles");
  if (ck.contains("run/calibration_grid")) l.grid = ck.reals("run/calibration_grid");
  if (ck.contains("run/season")) l.season = static_cast<int>(ck.integers("run/season").at(0));
  return l;
}

// Stored per-series scales apply when the series line up with training;
// otherwise each observed prefix is calibrated on the spot.
std::vector<double> betas_for(const Loaded& l, const std::vector<Target>& targets) {
  if (l.bundle.betas.size() == targets.size()) return l.bundle.betas;
  std::vector<double> out;
  for (const Target& t : targets) out.push_back(calibrate(l.bundle.model, t.observed, l.grid, l.levels));
  return out;
}

void check_horizon(const Loaded& l, const Dataset& ds) {
  if (!ds.test.empty() && ds.metadata.prediction_length != l.bundle.model.config().horizon) {
    throw DataError("dataset prediction_length " + std::to_string(ds.metadata.prediction_length) +
                    " differs from the model horizon " + std::to_string(l.bundle.model.config().horizon));
  }
}

void write_quantiles(std::ostream& out, const std::vector<Target>& targets, const std::vector<QuantileForecast>& fc) {
  out << "item_id,h,t,level,value\n";
  for (std::size_t s = 0; s < targets.size(); ++s) {
    const long t0 = static_cast<long>(targets[s].observed.size());
    for (Eigen::Index h = 0; h < fc[s].values.rows(); ++h)
      for (std::size_t q = 0; q < fc[s].levels.size(); ++q)
        out << targets[s].item_id << ',' << h + 1 << ',' << t0 + h << ',' << num(fc[s].levels[q]) << ','
            << num(fc[s].values(h, static_cast<Eigen::Index>(q))) << '\n';
  }
}

std::string default_band_path(const std::string& out) {
  fs::path p(out);
  return (p.parent_path() / (p.stem().string() + "_band.csv")).string();
}

}  // namespace

int run_train(const TrainArgs& args) {
  RunConfig cfg = args.config.empty() ? parse_config("") : load_config(args.config);
  if (args.seed) cfg.model.seed = *args.seed;
  const Dataset ds = load_dataset(args.data);
  cfg.model.horizon = ds.metadata.prediction_length;

  std::vector<std::vector<double>> series;
  for (const DatasetRecord& r : ds.train) series.push_back(r.target);

  TrainOptions opt;
  opt.learning_rate = cfg.lr;
  opt.epochs = cfg.epochs;
  opt.min_steps = cfg.min_steps;
  const std::string trace_path = args.trace.empty() ? args.out + ".trace.csv" : args.trace;
  std::ofstream trace = open_csv(trace_path);
  trace << "step,loss\n";
  opt.on_step = [&](long step, double loss) {
    trace << step << ',' << num(loss) << '\n';
    if (args.log_every > 0 && step % args.log_every == 0) std::cerr << "step " << step << " loss " << loss << '\n';
  };

  const auto save = [&](ModelBundle bundle) {
    Checkpoint ck = to_checkpoint(bundle);
    ck.put("run/quantiles", cfg.quantiles);
    ck.put("run/calibration_grid", cfg.calibration_grid);
    ck.put("run/season", std::vector<std::int64_t>{cfg.season});
    ck.save(args.out);
  };

  TrainResult result = [&] {
    try {
      return train(series, cfg.model, opt);
    } catch (const TrainingAborted& e) {
      std::vector<Standardizer> scalers;
      for (const auto& s : series) scalers.push_back(Standardizer::fit(s));
      save({e.last_finite, std::move(scalers), {}});
      std::cerr << "training aborted: " << e.what() << "\nlast finite model written to " << args.out << '\n';
      throw;
    }
  }();

  std::vector<double> betas;
  if (args.calibrate)
    for (const auto& s : series) betas.push_back(calibrate(result.model, s, cfg.calibration_grid, cfg.quantiles));
  save({std::move(result.model), std::move(result.scalers), std::move(betas)});
  std::cerr << "trained " << result.trace.size() << " steps; final loss "
            << (result.trace.empty() ? 0.0 : result.trace.back()) << '\n';
  return kOk;
}

int run_predict(const PredictArgs& args) {
  const Loaded l = load_model(args.model);
  const Dataset ds = load_dataset(args.data);
  check_horizon(l, ds);
  const std::vector<Target> targets = forecast_targets(ds, l.bundle.model.config().horizon, false);
  const std::vector<double> betas = betas_for(l, targets);

  std::vector<QuantileForecast> fc;
  for (std::size_t s = 0; s < targets.size(); ++s)
    fc.push_back(predict(l.bundle.model, targets[s].observed, l.levels, betas[s]));

  std::ofstream out = open_csv(args.out);
  write_quantiles(out, targets, fc);
  std::ofstream band = open_csv(args.band.empty() ? default_band_path(args.out) : args.band);
  band << "item_id,t,mean,lower,upper,actual\n";
  for (std::size_t s = 0; s < targets.size(); ++s) {
    const long t0 = static_cast<long>(targets[s].observed.size());
    for (Eigen::Index h = 0; h < fc[s].mean.size(); ++h) {
      const double m = fc[s].mean[h], w = 3.0 * fc[s].stddev[h];
      band << targets[s].item_id << ',' << t0 + h << ',' << num(m) << ',' << num(m - w) << ',' << num(m + w) << ',';
      if (!targets[s].actual.empty()) band << num(targets[s].actual[h]);
      band << '\n';
    }
  }
  return kOk;
}

int run_evaluate(const EvaluateArgs& args) {
  const Loaded l = load_model(args.model);
  const Dataset ds = load_dataset(args.data);
  check_horizon(l, ds);
  const int H = l.bundle.model.config().horizon;
  const std::vector<Target> targets = forecast_targets(ds, H, true);
  const std::vector<double> betas = betas_for(l, targets);

  std::vector<QuantileForecast> fc;
  std::vector<RowMatrix> quantiles;
  std::vector<std::vector<double>> actuals;
  for (std::size_t s = 0; s < targets.size(); ++s) {
    fc.push_back(predict(l.bundle.model, targets[s].observed, l.levels, betas[s]));
    quantiles.push_back(fc.back().values);
    actuals.push_back(targets[s].actual);
  }
  const double score = crps(quantiles, actuals, l.levels);
  std::cout << "crps," << num(score) << '\n';

  if (!args.forecasts.empty()) {
    std::ofstream f = open_csv(args.forecasts);
    write_quantiles(f, targets, fc);
  }
  std::ofstream per;
  if (!args.out.empty()) {
    per = open_csv(args.out);
    per << "item_id,crps,beta\n";
    for (std::size_t s = 0; s < targets.size(); ++s)
      per << targets[s].item_id << ',' << num(crps({quantiles[s]}, {actuals[s]}, l.levels)) << ',' << num(betas[s]) << '\n';
  }

  if (args.seasonal_naive) {
    const int season = args.season > 0 ? args.season : l.season > 0 ? l.season : default_season(ds.metadata.freq);
    std::vector<RowMatrix> naive;
    for (const Target& t : targets) naive.push_back(seasonal_naive(t.observed, season, H, l.levels).values);
    std::cout << "seasonal_naive_crps," << num(crps(naive, actuals, l.levels)) << '\n';
    std::cout << "seasonal_naive_season," << season << '\n';
  }
  return kOk;
}

int run_bench(const BenchArgs& args) {
  if (args.threads > 0) set_thread_cap(args.threads);
  if (args.repeats < 1) throw ArgumentError("bench: repeats must be >= 1");
  ModelConfig c;
  c.levels = args.levels;
  c.features = args.features;
  c.lags = args.lags;
  c.window = args.window;
  c.seed = args.seed;
  c.validate();

  std::ofstream file;
  if (!args.out.empty()) file = open_csv(args.out);
  std::ostream& out = args.out.empty() ? std::cout : file;
  out << "L,seconds,peak_bytes,threads\n";
  for (long L : args.lengths) {
    if (L < 1) throw ArgumentError("bench: lengths must be positive");
    std::mt19937_64 rng(args.seed + static_cast<std::uint64_t>(L));
    std::normal_distribution<double> normal;
    RowMatrix x(L, c.input_dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    const Model model = Model::initialize(c, {x}, 1.0);
    const MapParameters mp = model.map_parameters();

    double best = 0.0;
    std::size_t peak = 0;
    for (int r = 0; r < args.repeats; ++r) {
      reset_peak_memory();
      const std::size_t base = memory_stats().current_bytes;
      const auto start = std::chrono::steady_clock::now();
      const RowMatrix phi = feature_map(x, mp.view());
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      peak = std::max(peak, memory_stats().peak_bytes - base + static_cast<std::size_t>(phi.size()) * sizeof(double));
      best = r == 0 ? secs : std::min(best, secs);
    }
    out << L << ',' << num(best) << ',' << peak << ',' << thread_count() << '\n';
  }
  return kOk;
}

int run_synth(const SynthArgs& args) {
  const Dataset ds = synth_multisin({args.n_train, args.horizon, args.seed, args.periods, args.amplitudes});
  write_dataset(args.out, ds);
  if (!args.csv.empty()) {
    std::ofstream csv = open_csv(args.csv);
    export_csv(csv, ds.test);
  }
  return kOk;
}

}  // namespace sigforecast::cli
