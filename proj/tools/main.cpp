#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "sigforecast/errors.hpp"

using namespace sigforecast;
using namespace sigforecast::cli;

int main(int argc, char** argv) {
  CLI::App app{"Signature-feature probabilistic forecasting"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* tr = app.add_subcommand("train", "fit a model to the training split of a dataset");
  tr->add_option("--data", train.data, "dataset directory")->required();
  tr->add_option("--config", train.config, "key = value config file");
  tr->add_option("--seed", train.seed, "overrides the config seed");
  tr->add_option("--out", train.out, "checkpoint path")->required();
  tr->add_option("--trace", train.trace, "objective trace CSV (default <out>.trace.csv)");
  tr->add_flag("!--no-calibrate", train.calibrate, "skip per-series scale calibration");
  tr->add_option("--log-every", train.log_every, "print the loss every N steps");

  PredictArgs pred;
  auto* pr = app.add_subcommand("predict", "write quantile and mean +- 3 sd band forecasts");
  pr->add_option("--model", pred.model, "checkpoint")->required();
  pr->add_option("--data", pred.data, "dataset directory")->required();
  pr->add_option("--out", pred.out, "quantile CSV")->required();
  pr->add_option("--band", pred.band, "band CSV (default <out stem>_band.csv)");

  EvaluateArgs eval;
  auto* ev = app.add_subcommand("evaluate", "score the test split with CRPS");
  ev->add_option("--model", eval.model, "checkpoint")->required();
  ev->add_option("--data", eval.data, "dataset directory")->required();
  ev->add_option("--out", eval.out, "per-series CRPS CSV");
  ev->add_option("--forecasts", eval.forecasts, "quantile CSV of the scored forecasts");
  ev->add_flag("--seasonal-naive", eval.seasonal_naive, "also score the seasonal naive baseline");
  ev->add_option("--season", eval.season, "seasonal naive period")->check(CLI::PositiveNumber);

  BenchArgs bench;
  auto* be = app.add_subcommand("bench", "time the feature pass over sequence lengths");
  be->add_option("--lengths", bench.lengths, "sequence lengths")->delimiter(',');
  be->add_option("--D", bench.features, "features per level")->check(CLI::PositiveNumber);
  be->add_option("--M", bench.levels, "levels")->check(CLI::PositiveNumber);
  be->add_option("--lags", bench.lags, "input lags (d = lags + 1)")->check(CLI::NonNegativeNumber);
  be->add_option("--W", bench.window, "frac-diff window")->check(CLI::PositiveNumber);
  be->add_option("--threads", bench.threads, "thread cap (0: default)")->check(CLI::NonNegativeNumber);
  be->add_option("--repeats", bench.repeats, "timed repeats; the fastest is reported");
  be->add_option("--seed", bench.seed);
  be->add_option("--out", bench.out, "CSV path (default stdout)");

  SynthArgs synth;
  auto* sy = app.add_subcommand("synth", "generate the multi-sinusoid dataset");
  sy->add_option("--out", synth.out, "dataset directory")->required();
  sy->add_option("--seed", synth.seed);
  sy->add_option("--n-train", synth.n_train)->check(CLI::PositiveNumber);
  sy->add_option("--horizon", synth.horizon)->check(CLI::PositiveNumber);
  sy->add_option("--periods", synth.periods)->delimiter(',');
  sy->add_option("--amplitudes", synth.amplitudes)->delimiter(',');
  sy->add_option("--csv", synth.csv, "also export the full series as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*tr) return run_train(train);
    if (*pr) return run_predict(pred);
    if (*ev) return run_evaluate(eval);
    if (*be) return run_bench(bench);
    if (*sy) return run_synth(synth);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const FormatError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kData;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
