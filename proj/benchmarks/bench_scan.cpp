#include <benchmark/benchmark.h>

#include <random>

#include "sigforecast/arrayops.hpp"
#include "sigforecast/model.hpp"
#include "sigforecast/sigfeatures.hpp"

using namespace sigforecast;

namespace {

Array3 noise(std::size_t M, std::size_t L, std::size_t D) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::vector<double> v(M * L * D);
  for (double& x : v) x = normal(rng);
  return Array3(M, L, D, v);
}

DecayVector decays(std::size_t D) {
  std::vector<double> lambda(D);
  for (std::size_t k = 0; k < D; ++k) lambda[k] = 0.9 + 0.1 * static_cast<double>(k) / static_cast<double>(D);
  return DecayVector(lambda);
}

void BM_ScanSequential(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const Array3 a = noise(1, L, 256);
  const DecayVector lambda = decays(256);
  for (auto _ : state) benchmark::DoNotOptimize(geometric_scan_sequential(a, lambda));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(L * 256));
}
BENCHMARK(BM_ScanSequential)->RangeMultiplier(10)->Range(1000, 100000)->Unit(benchmark::kMillisecond);

void BM_ScanBlocked(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const Array3 a = noise(1, L, 256);
  const DecayVector lambda = decays(256);
  const ScanOptions opt{static_cast<int>(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(geometric_scan(a, lambda, opt));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(L * 256));
}
BENCHMARK(BM_ScanBlocked)
    ->ArgsProduct({{1000, 10000, 100000}, {0, 8, 64}})
    ->Unit(benchmark::kMillisecond);

struct Setup {
  RowMatrix x;
  Model model;
};

Setup setup(long L, int D, int M) {
  ModelConfig c;
  c.features = D;
  c.levels = M;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  RowMatrix x(L, c.input_dim());
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  Model model = Model::initialize(c, {x}, 1.0);
  return {std::move(x), std::move(model)};
}

void BM_FeatureMap(benchmark::State& state) {
  const Setup s = setup(state.range(0), 200, 5);
  const MapParameters mp = s.model.map_parameters();
  for (auto _ : state) benchmark::DoNotOptimize(feature_map(s.x, mp.view()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FeatureMap)->RangeMultiplier(10)->Range(1000, 100000)->Unit(benchmark::kMillisecond);

void BM_FeaturePassBackward(benchmark::State& state) {
  const Setup s = setup(state.range(0), 64, 3);
  const MapParameters mp = s.model.map_parameters();
  for (auto _ : state) {
    const FeaturePass pass(s.x, mp.view());
    const RowMatrix ones = RowMatrix::Ones(pass.features().rows(), pass.features().cols());
    benchmark::DoNotOptimize(pass.backward(ones));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FeaturePassBackward)->RangeMultiplier(10)->Range(1000, 10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
