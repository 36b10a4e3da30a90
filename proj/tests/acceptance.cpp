// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when
// any criterion fails.
//
// SIGFORECAST_FULL_ACCEPTANCE=1 runs the synthetic forecasting check at the
// full default model size and step floor instead of the desk-scale setting.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "sigforecast/checkpoint.hpp"
#include "sigforecast/dataio.hpp"
#include "sigforecast/forecast.hpp"
#include "sigforecast/memory.hpp"
#include "sigforecast/oracle.hpp"
#include "sigforecast/parallel.hpp"
#include "support.hpp"

using namespace sigforecast;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

double level_bound(const RowMatrix& x, int m) {
  double total = 0.0;
  for (Eigen::Index i = 1; i < x.rows(); ++i) total += (x.row(i) - x.row(i - 1)).norm();
  return std::pow(total, m) / std::tgamma(m + 1.0);
}

FracDiffOrders unit_orders(std::size_t D) { return FracDiffOrders(std::vector<double>(D, 1.0), 4); }

// Fixed pair of 2-D sequences of length 5.
void fixed_pair(RowMatrix& x, RowMatrix& y) {
  x.resize(5, 2);
  y.resize(5, 2);
  x << 0.0, 0.0, 0.3, -0.2, 0.9, 0.1, 1.2, 0.6, 0.8, 1.1;
  y << 0.1, 0.5, -0.4, 0.2, -0.3, -0.6, 0.4, -0.9, 1.0, -0.5;
}

double level2_estimate(const RowMatrix& x, const RowMatrix& y, int D, std::uint64_t seed) {
  const FeatureLevels fx = rfsf(sftest::prior_activations(x, 2, D, seed), unit_orders(D));
  const FeatureLevels fy = rfsf(sftest::prior_activations(y, 2, D, seed), unit_orders(D));
  return unnormalized_inner(fx, fy, 2);
}

Outcome signatures() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> len(1, 6), lvl(1, 3), dim(1, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int L = len(rng), M = lvl(rng), d = dim(rng);
    const RowMatrix x = sftest::random_matrix(L, d, rng);
    const auto a = oracle::exact_signature(x, M), b = oracle::signature_by_enumeration(x, M);
    for (int m = 1; m <= M; ++m) {
      const double scale = std::max(sftest::max_abs(b.levels[m]), level_bound(x, m));
      const double err = sftest::max_abs_diff(a.levels[m], b.levels[m]);
      worst = std::max(worst, scale > 0.0 ? err / scale : err);
    }
  }
  RowMatrix p(3, 1);
  p << 0, 1, 2;
  const auto s = oracle::exact_signature(p, 2);
  const bool hand = s.levels[1][0] == 2.0 && s.levels[2][0] == 2.0;
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && hand && secs < 10.0,
          fmt("max rel err %.2e over 100 instances; path (0,1,2) gives S1=%g S2=%g; %.2fs", worst, s.levels[1][0],
              s.levels[2][0], secs)};
}

Outcome unbiasedness() {
  const auto t0 = std::chrono::steady_clock::now();
  RowMatrix x, y;
  fixed_pair(x, y);
  const double exact = oracle::exact_sig_kernel_level(x, y, 2, oracle::BaseKernel::gaussian({1.0, 1.0}));
  std::vector<double> est(1000);
  for (int b = 0; b < 1000; ++b) est[b] = level2_estimate(x, y, 8, 1000 + b);
  const double m = mean_of(est), se = sd_of(est) / std::sqrt(1000.0);
  const double secs = seconds_since(t0);
  return {std::abs(m - exact) < 3.0 * se && secs < 120.0,
          fmt("mean %.5f vs exact %.5f, |diff| = %.2f SE (D = 8, 1000 bases); %.2fs", m, exact, std::abs(m - exact) / se,
              secs)};
}

Outcome mc_rate() {
  const auto t0 = std::chrono::steady_clock::now();
  RowMatrix x, y;
  fixed_pair(x, y);
  std::vector<double> logd, logsd;
  for (int D : {8, 32, 128, 512}) {
    std::vector<double> est(400);
    for (int b = 0; b < 400; ++b) est[b] = level2_estimate(x, y, D, 50000 + 1000 * D + b);
    logd.push_back(std::log(D));
    logsd.push_back(std::log(sd_of(est)));
  }
  const double mx = mean_of(logd), my = mean_of(logsd);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < logd.size(); ++i) {
    sxy += (logd[i] - mx) * (logsd[i] - my);
    sxx += (logd[i] - mx) * (logd[i] - mx);
  }
  const double slope = sxy / sxx, secs = seconds_since(t0);
  return {slope >= -0.65 && slope <= -0.35 && secs < 300.0,
          fmt("log sd vs log D slope %.3f over D in {8,32,128,512}, 400 bases each; %.2fs", slope, secs)};
}

Outcome scan() {
  std::mt19937_64 rng(1004);
  const std::size_t L = 100000, D = 256;
  const Array3 a = sftest::random_array(1, L, D, rng);
  const DecayVector lam(sftest::uniform_values(D, rng, 1e-6, 1.0 - 1e-6));
  const Array3 ref = geometric_scan_sequential(a, lam);
  double worst = 0.0;
  for (int blocks : {0, 8, 64, 999}) worst = std::max(worst, sftest::rel_diff(geometric_scan(a, lam, {blocks}).values(), ref.values()));
  const Array3 unit = geometric_scan(a, DecayVector::unit(D), {8});
  const Array3 sums = cumsum(a, Axis::Time, {8});
  const bool exact = std::equal(unit.values().begin(), unit.values().end(), sums.values().begin());
  return {worst <= 1e-12 && exact,
          fmt("blocked vs sequential rel err %.2e (L = 1e5, D = 256); unit decay == cumsum: %s", worst,
              exact ? "bit-exact" : "differs")};
}

Outcome reductions() {
  std::mt19937_64 rng(1005);
  const std::size_t D = 12;
  const RowMatrix x = sftest::random_matrix(200, 3, rng);
  const Array3 u = sftest::prior_activations(x, 3, D, 77);
  const FracDiffOrders q(sftest::uniform_values(D, rng, 0.1, 0.9), 16);
  const double decay = sftest::rel_diff(rfdsf(u, q, DecayVector::unit(D)).p.values(), rfsf(u, q).p.values());

  const Array3 a = sftest::random_array(2, 300, D, rng);
  const Array3 first = frac_diff(a, FracDiffOrders(std::vector<double>(D, 1.0), 16));
  const Array3 same = frac_diff(a, FracDiffOrders(std::vector<double>(D, 0.0), 16));
  double diff_err = 0.0;
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t l = 0; l < 300; ++l)
      for (std::size_t k = 0; k < D; ++k)
        diff_err = std::max(diff_err, std::abs(first(m, l, k) - (a(m, l, k) - (l > 0 ? a(m, l - 1, k) : 0.0))));
  const double id_err = sftest::max_abs_diff(same.values(), a.values());
  return {decay <= 1e-12 && diff_err <= 1e-12 && id_err <= 1e-12,
          fmt("unit decay vs undecayed %.2e; q = 1 vs first difference %.2e; q = 0 vs identity %.2e", decay, diff_err,
              id_err)};
}

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const SeriesBatch batch = sftest::audit_batch(16, 1, 3);
  int checked = 0, failed = 0;
  double worst = 0.0;
  for (bool variational : {true, false})
    for (ObjectiveMode mode : {ObjectiveMode::Elbo, ObjectiveMode::Ppgpr, ObjectiveMode::PpgprPenalty}) {
      ModelConfig c;
      c.levels = 2;
      c.features = 4;
      c.lags = 1;
      c.window = 4;
      c.horizon = 2;
      c.variational = variational;
      c.penalty_weight = 0.05;
      c.seed = 7;
      for (const auto& a : sftest::audit_gradients(sftest::audit_model(c, batch, 11), batch, mode)) {
        ++checked;
        if (!a.pass) ++failed;
        if (a.numeric_norm > 1e-9) worst = std::max(worst, a.error_norm / a.numeric_norm);
      }
    }
  const double secs = seconds_since(t0);
  return {failed == 0 && secs < 60.0,
          fmt("%d of %d blocks within 1e-4 (worst rel err %.2e) across 3 modes; %.2fs", checked - failed, checked, worst,
              secs)};
}

Outcome closed_forms() {
  std::mt19937_64 rng(1007);
  const double y = 0.8, mean = 0.1, var = 0.6, noise = 0.4;
  const int n = 1000000;
  std::normal_distribution<double> f(mean, std::sqrt(var));
  double s1 = 0.0, s2 = 0.0, p1 = 0.0, p2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = y - f(rng);
    const double lp = -0.5 * std::log(2.0 * std::numbers::pi * noise) - d * d / (2.0 * noise);
    s1 += lp;
    s2 += lp * lp;
    p1 += std::exp(lp);
    p2 += std::exp(2.0 * lp);
  }
  const double ml = s1 / n, sel = std::sqrt((s2 / n - ml * ml) / n);
  const double mp = p1 / n, sep = std::sqrt((p2 / n - mp * mp) / n);
  const double ze = std::abs(elbo_point(y, mean, var, noise).value - ml) / sel;
  const double zp = std::abs(std::exp(ppgpr_point(y, mean, var, noise).value) - mp) / sep;

  std::uniform_real_distribution<double> u(-3, 3), v(1e-4, 4);
  int dominated = 0;
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), m = u(rng), s = v(rng), nv = v(rng);
    if (ppgpr_point(a, m, s, nv).value >= elbo_point(a, m, s, nv).value) ++dominated;
  }
  return {ze < 3.0 && zp < 3.0 && dominated == 1000,
          fmt("elbo %.2f SE, ppgpr %.2f SE from 1e6-sample MC; ppgpr >= elbo on %d/1000", ze, zp, dominated)};
}

Outcome elbo_bound() {
  std::mt19937_64 rng(1008);
  int held = 0;
  double tightest = -1e300;
  for (int trial = 0; trial < 50; ++trial) {
    ModelConfig c;
    c.levels = std::uniform_int_distribution<int>(1, 3)(rng);
    c.features = std::uniform_int_distribution<int>(2, 8)(rng);
    c.lags = 1;
    c.window = 4;
    c.horizon = std::uniform_int_distribution<int>(1, 2)(rng);
    c.variational = false;
    c.shared_covariance = false;
    c.mode = ObjectiveMode::Elbo;
    const int N = std::uniform_int_distribution<int>(6, 32)(rng);
    const SeriesBatch batch = sftest::audit_batch(N, c.lags, 3000 + trial);
    const Model m = sftest::audit_model(c, batch, 4000 + trial);
    const RowMatrix phi = feature_map(batch.inputs, m.map_parameters().view());
    const double bound = sftest::log_marginal(phi, batch.targets, c.horizon, m.noise_var());
    const double elbo = evaluate(m, batch, 0, ObjectiveMode::Elbo, false).terms.value;
    if (elbo <= bound + 1e-9) ++held;
    tightest = std::max(tightest, elbo - bound);
  }
  return {held == 50, fmt("elbo <= log marginal on %d/50 instances (max elbo - bound %.3g)", held, tightest)};
}

Outcome synthetic() {
  const auto t0 = std::chrono::steady_clock::now();
  const bool full = std::getenv("SIGFORECAST_FULL_ACCEPTANCE") != nullptr;
  const Dataset ds = synth_multisin({});
  const auto& train_y = ds.train[0].target;
  const auto& all = ds.test[0].target;
  const int H = ds.metadata.prediction_length;

  ModelConfig c;
  c.horizon = H;
  TrainOptions opt;
  if (!full) {
    c.features = 32;
    c.levels = 3;
    opt.min_steps = 3000;
  }
  const TrainResult r = train({train_y}, c, opt);
  const auto levels = default_quantile_levels();
  const double beta = calibrate(r.model, train_y, default_calibration_grid(), levels);
  const QuantileForecast f = predict(r.model, train_y, levels, beta);
  const std::vector<double> actual(all.end() - H, all.end());

  const auto periods = default_synth_periods();
  const auto amps = default_synth_amplitudes();
  const int season = static_cast<int>(periods[std::max_element(amps.begin(), amps.end()) - amps.begin()]);
  const double model_crps = crps({f.values}, {actual}, levels);
  const double naive_crps = crps({seasonal_naive(train_y, season, H, levels).values}, {actual}, levels);
  int inside = 0;
  for (int h = 0; h < H; ++h)
    if (std::abs(actual[h] - f.mean[h]) <= 3.0 * f.stddev[h]) ++inside;
  const double coverage = static_cast<double>(inside) / H;
  const double secs = seconds_since(t0);
  return {model_crps < naive_crps && coverage >= 0.9 && secs < 900.0,
          fmt("%s (D=%d, M=%d, %ld steps): CRPS %.4g vs seasonal naive (season %d) %.3g; %.0f%% inside mean +- 3 sd; %.0fs",
              full ? "full scale" : "desk scale", c.features, c.levels, static_cast<long>(r.trace.size()), model_crps, season,
              naive_crps, 100.0 * coverage, secs)};
}

// Resident-set high-water mark in bytes, reset to the current level first
// when the kernel allows it.
long rss_hwm() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("VmHWM:", 0) == 0) return std::stol(line.substr(6)) * 1024;
  return -1;
}

long rss_now() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("VmRSS:", 0) == 0) return std::stol(line.substr(6)) * 1024;
  return -1;
}

bool reset_hwm() {
  std::ofstream out("/proc/self/clear_refs");
  out << "5";
  out.flush();
  return static_cast<bool>(out);
}

Outcome throughput() {
  ModelConfig c;
  c.levels = 5;
  c.features = 200;
  c.lags = 9;
  std::vector<double> secs;
  std::size_t tracked = 0;
  long rss = -1;
  for (long L : {1000L, 10000L, 100000L}) {
    std::mt19937_64 rng(1010 + L);
    const RowMatrix x = sftest::random_matrix(L, c.input_dim(), rng);
    const Model m = Model::initialize(c, {x}, 1.0);
    const MapParameters mp = m.map_parameters();
    double best = 1e300;
    for (int rep = 0; rep < (L < 100000 ? 3 : 1); ++rep) {
      reset_peak_memory();
      const std::size_t base = memory_stats().current_bytes;
      const bool hwm = L == 10000 && reset_hwm();
      const long before = rss_now();
      const auto t0 = std::chrono::steady_clock::now();
      const RowMatrix phi = feature_map(x, mp.view());
      best = std::min(best, seconds_since(t0));
      if (L == 10000) {
        tracked = std::max(tracked, memory_stats().peak_bytes - base + phi.size() * sizeof(double));
        if (hwm) rss = std::max(rss, rss_hwm() - before);
      }
    }
    secs.push_back(best);
  }
  const double r1 = secs[1] / secs[0] / 10.0, r2 = secs[2] / secs[1] / 10.0;
  // A doubling costing 1.6x to 2.6x corresponds to 0.8 to 1.3 per unit of L.
  const bool linear = r1 >= 0.8 && r1 <= 1.3 && r2 >= 0.8 && r2 <= 1.3;
  const std::size_t peak = rss > 0 ? std::max<std::size_t>(tracked, rss) : tracked;
  return {secs[1] < 1.0 && peak < (1ul << 30) && linear,
          fmt("L = 1e4, D = 200, M = 5, d = 10: %.3fs on %d thread(s), peak %.0f MB (arrays %.0f MB); time per step "
              "relative to the previous decade %.2f, %.2f (L = 1e3, 1e4, 1e5: %.3fs, %.3fs, %.3fs)",
              secs[1], thread_count(), peak / 1048576.0, tracked / 1048576.0, r1, r2, secs[0], secs[1], secs[2])};
}

Outcome crps_identity() {
  const auto levels = default_quantile_levels();
  const double v = crps({RowMatrix::Zero(1, 9)}, {{2.0}}, levels);
  return {v == 1.0, fmt("zero quantiles against y = 2 give %.17g", v)};
}

Outcome determinism() {
  const Dataset ds = synth_multisin({200, 20, 8, {}, {}});
  ModelConfig c;
  c.features = 8;
  c.levels = 3;
  c.lags = 4;
  c.window = 8;
  c.horizon = 20;
  c.seed = 12;
  TrainOptions opt;
  opt.epochs = 0;
  opt.min_steps = 60;
  const auto run = [&](std::uint64_t seed) {
    ModelConfig cc = c;
    cc.seed = seed;
    TrainResult r = train({ds.train[0].target}, cc, opt);
    std::ostringstream ck;
    to_checkpoint({r.model, r.scalers, {1.0}}).write(ck);
    const QuantileForecast f = predict(r.model, ds.train[0].target, default_quantile_levels());
    std::ostringstream csv;
    csv.precision(17);
    for (Eigen::Index i = 0; i < f.values.size(); ++i) csv << f.values.data()[i] << '\n';
    return std::make_pair(ck.str(), csv.str());
  };
  const auto a = run(12), b = run(12), other = run(13);
  const bool same = a == b, differs = a.first != other.first;
  return {same && differs, fmt("same seed: checkpoint %s, forecasts %s; different seed changes checkpoint: %s",
                               a.first == b.first ? "identical" : "differs", a.second == b.second ? "identical" : "differs",
                               differs ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"signature oracle equivalence", signatures},
      {"feature map unbiasedness", unbiasedness},
      {"Monte Carlo rate", mc_rate},
      {"scan correctness", scan},
      {"forgetting reductions", reductions},
      {"gradient audit", gradients},
      {"objective closed forms", closed_forms},
      {"ELBO bound", elbo_bound},
      {"synthetic forecasting", synthetic},
      {"throughput", throughput},
      {"CRPS identity", crps_identity},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << (i + 1 < 10 ? " " : "") << i + 1 << ' ' << (o.pass ? "PASS" : "FAIL") << "  "
              << criteria[i].first << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failures) << " of " << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
