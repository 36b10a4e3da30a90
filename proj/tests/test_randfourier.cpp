#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "sigforecast/errors.hpp"
#include "sigforecast/randfourier.hpp"
#include "support.hpp"

using namespace sigforecast;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

SpectralParams unit_params(const RandomBasis& b) {
  SpectralParams p = SpectralParams::zeros(b.levels, b.input_dim, b.features);
  std::fill(p.lengthscales.begin(), p.lengthscales.end(), 1.0);
  std::fill(p.freq_stds.begin(), p.freq_stds.end(), 1.0);
  std::fill(p.shape_a.begin(), p.shape_a.end(), 1.0);
  std::fill(p.shape_b.begin(), p.shape_b.end(), 1.0);
  return p;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

// One-sample Kolmogorov-Smirnov distance against U(0, 2 pi).
double ks_uniform(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = v[i] / kTwoPi;
    d = std::max({d, std::abs((i + 1) / n - f), std::abs(f - i / n)});
  }
  return d;
}

// (2/D) sum_k cos(w_k x + b_k) cos(w_k y + b_k) for a prior basis of the given seed.
double rff_kernel_estimate(const RowMatrix& xy, int D, std::uint64_t seed) {
  const RandomBasis b = sample_basis(1, static_cast<int>(xy.cols()), D, seed);
  const SpectralParams p = unit_params(b);
  const RowMatrix u = rff_eval(xy, reparam_frequencies(b, p, SpectralMode::Prior),
                               reparam_phases(b, p, SpectralMode::Prior));
  return 2.0 / D * u.row(0).dot(u.row(1));
}

}  // namespace

TEST(SampleBasis, Deterministic) {
  const RandomBasis a = sample_basis(2, 3, 5, 42), b = sample_basis(2, 3, 5, 42), c = sample_basis(2, 3, 5, 43);
  EXPECT_EQ(a.normals, b.normals);
  EXPECT_EQ(a.phase_uniforms, b.phase_uniforms);
  EXPECT_EQ(a.gamma_normals, b.gamma_normals);
  EXPECT_EQ(a.gamma_uniforms, b.gamma_uniforms);
  EXPECT_NE(a.normals, c.normals);
  EXPECT_EQ(a.normals.size(), 30u);
  EXPECT_EQ(a.phase_uniforms.size(), 10u);
  EXPECT_EQ(a.gamma_normals.size(), 20u);
  EXPECT_EQ(a.gamma_uniforms.size(), 20u * kShapeAugmentation);
  EXPECT_THROW(sample_basis(0, 1, 1, 0), ArgumentError);
}

TEST(SampleBasis, NormalMoments) {
  const RandomBasis b = sample_basis(10, 10, 10000, 7);
  ASSERT_EQ(b.normals.size(), 1000000u);
  EXPECT_LT(std::abs(mean_of(b.normals)), 4.0 / std::sqrt(1e6));
  const double var = variance_of(b.normals);
  EXPECT_GE(var, 0.99);
  EXPECT_LE(var, 1.01);
  for (double u : b.gamma_uniforms) ASSERT_TRUE(u > 0.0 && u < 1.0);
  for (double u : b.phase_uniforms) ASSERT_TRUE(u >= 0.0 && u < 1.0);
}

TEST(ReparamFrequencies, Identities) {
  const RandomBasis b = sample_basis(2, 3, 4, 1);
  SpectralParams p = unit_params(b);
  EXPECT_EQ(reparam_frequencies(b, p, SpectralMode::Variational), b.normals);

  std::fill(p.lengthscales.begin(), p.lengthscales.end(), 2.0);
  const auto prior = reparam_frequencies(b, p, SpectralMode::Prior);
  for (std::size_t i = 0; i < prior.size(); ++i) EXPECT_EQ(prior[i], b.normals[i] / 2.0);

  std::fill(p.freq_means.begin(), p.freq_means.end(), 3.0);
  std::fill(p.freq_stds.begin(), p.freq_stds.end(), 1e-300);
  for (double w : reparam_frequencies(b, p, SpectralMode::Variational)) EXPECT_EQ(w, 3.0);

  p.freq_stds[0] = 0.0;
  EXPECT_THROW(reparam_frequencies(b, p, SpectralMode::Variational), ArgumentError);
  p = unit_params(b);
  p.lengthscales[1] = -1.0;
  EXPECT_THROW(reparam_frequencies(b, p, SpectralMode::Prior), ArgumentError);
}

TEST(ReparamPhases, PriorRange) {
  const RandomBasis b = sample_basis(3, 1, 2000, 5);
  const auto ph = reparam_phases(b, unit_params(b), SpectralMode::Prior);
  for (std::size_t i = 0; i < ph.size(); ++i) {
    ASSERT_GE(ph[i], 0.0);
    ASSERT_LT(ph[i], kTwoPi);
    EXPECT_EQ(ph[i], kTwoPi * b.phase_uniforms[i]);
  }
}

TEST(ReparamPhases, UniformShapesPassKolmogorovSmirnov) {
  const RandomBasis b = sample_basis(1, 1, 100000, 17);
  const auto ph = reparam_phases(b, unit_params(b), SpectralMode::Variational);
  for (double v : ph) ASSERT_TRUE(v >= 0.0 && v <= kTwoPi);
  EXPECT_LT(ks_uniform(ph), 0.02);
}

TEST(ReparamPhases, BetaMoments) {
  const RandomBasis b = sample_basis(1, 1, 100000, 18);
  SpectralParams p = unit_params(b);
  std::fill(p.shape_a.begin(), p.shape_a.end(), 2.0);
  std::fill(p.shape_b.begin(), p.shape_b.end(), 5.0);
  std::vector<double> frac = reparam_phases(b, p, SpectralMode::Variational);
  for (double& v : frac) v /= kTwoPi;
  // Beta(2, 5): mean 2/7, variance 10 / (49 * 8).
  const double mean = 2.0 / 7.0, var = 10.0 / (49.0 * 8.0);
  EXPECT_LT(std::abs(mean_of(frac) - mean), 4.0 * std::sqrt(var / frac.size()));
  EXPECT_NEAR(variance_of(frac), var, 0.03 * var);
}

TEST(ReparamPhases, ContinuousInShapes) {
  const RandomBasis b = sample_basis(2, 1, 500, 19);
  SpectralParams p = unit_params(b);
  std::mt19937_64 rng(1);
  p.shape_a = sftest::uniform_values(p.shape_a.size(), rng, 0.3, 4.0);
  p.shape_b = sftest::uniform_values(p.shape_b.size(), rng, 0.3, 4.0);
  const auto base = reparam_phases(b, p, SpectralMode::Variational);
  SpectralParams q = p;
  for (double& a : q.shape_a) a += 1e-6;
  for (double& v : q.shape_b) v -= 1e-6;
  const auto moved = reparam_phases(b, q, SpectralMode::Variational);
  const double change = sftest::max_abs_diff(base, moved);
  EXPECT_GT(change, 0.0);
  EXPECT_LT(change, 1e-4);
  p.shape_a[0] = 0.0;
  EXPECT_THROW(reparam_phases(b, p, SpectralMode::Variational), ArgumentError);
}

TEST(ReparamGamma, MomentsAndShapeDerivative) {
  const RandomBasis b = sample_basis(1, 1, 100000, 20);
  for (double shape : {0.4, 1.0, 3.5}) {
    std::vector<double> g(b.features);
    for (int k = 0; k < b.features; ++k) {
      const std::span<const double> u(b.gamma_uniforms.data() + k * kShapeAugmentation, kShapeAugmentation);
      g[k] = std::exp(reparam_gamma(b.gamma_normals[k], u, shape).log_value);
    }
    EXPECT_LT(std::abs(mean_of(g) - shape), 4.0 * std::sqrt(shape / g.size())) << shape;
    EXPECT_NEAR(variance_of(g), shape, 0.05 * shape) << shape;
  }
  const std::span<const double> u(b.gamma_uniforms.data(), kShapeAugmentation);
  const double h = 1e-6, a = 1.7;
  const GammaDraw g = reparam_gamma(b.gamma_normals[0], u, a);
  const double fd = (reparam_gamma(b.gamma_normals[0], u, a + h).log_value -
                     reparam_gamma(b.gamma_normals[0], u, a - h).log_value) /
                    (2 * h);
  EXPECT_NEAR(g.dlog_dshape, fd, 1e-7);
}

TEST(RffEval, Examples) {
  const RowMatrix zero = RowMatrix::Zero(3, 2);
  const std::vector<double> omega = {0.3, -1.0, 2.0, 0.5, 0.1, 7.0};
  const RowMatrix u = rff_eval(zero, omega, std::vector<double>(3, 0.0));
  EXPECT_EQ(u.cwiseAbs().minCoeff(), 1.0);
  EXPECT_EQ(u.maxCoeff(), 1.0);

  RowMatrix one(1, 1);
  one(0, 0) = 1.0;
  const double pi = std::numbers::pi;
  EXPECT_NEAR(rff_eval(one, std::vector<double>{pi}, std::vector<double>{pi / 2})(0, 0), 0.0, 1e-15);

  std::mt19937_64 rng(3);
  const RowMatrix x = sftest::random_matrix(50, 2, rng, 10.0);
  const RowMatrix r = rff_eval(x, omega, std::vector<double>{1, 2, 3});
  EXPECT_LE(r.cwiseAbs().maxCoeff(), 1.0);

  EXPECT_THROW(rff_eval(x, std::vector<double>(5, 0.0), std::vector<double>(3, 0.0)), ArgumentError);
}

TEST(RffEval, KernelEstimateIsUnbiased) {
  RowMatrix xy(2, 2);
  xy << 0.2, -0.4, 1.0, 0.3;
  const double exact = std::exp(-0.5 * (xy.row(0) - xy.row(1)).squaredNorm());
  const int bases = 600, D = 16;
  std::vector<double> est(bases);
  for (int s = 0; s < bases; ++s) est[s] = rff_kernel_estimate(xy, D, 5000 + s);
  const double se = std::sqrt(variance_of(est) / bases);
  EXPECT_LT(std::abs(mean_of(est) - exact), 3.0 * se);
}

TEST(RffEval, EstimatorSpreadShrinksAsInverseRoot) {
  RowMatrix xy(2, 2);
  xy << 0.0, 0.5, -0.7, 0.1;
  std::vector<double> logd, logsd;
  for (int D : {8, 32, 128, 512}) {
    std::vector<double> est(300);
    for (int s = 0; s < 300; ++s) est[s] = rff_kernel_estimate(xy, D, 90000 + s);
    logd.push_back(std::log(D));
    logsd.push_back(0.5 * std::log(variance_of(est)));
  }
  const double mx = mean_of(logd), my = mean_of(logsd);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < logd.size(); ++i) {
    sxy += (logd[i] - mx) * (logsd[i] - my);
    sxx += (logd[i] - mx) * (logd[i] - mx);
  }
  const double slope = sxy / sxx;
  EXPECT_GE(slope, -0.65);
  EXPECT_LE(slope, -0.35);
}

TEST(MedianHeuristic, ValuesAndFloor) {
  RowMatrix x(4, 2);
  x << 0, 5, 1, 5, 3, 5, 7, 5;
  // Pairwise distances in the first column: 1 3 7 2 6 4, upper median 4.
  const auto ell = median_heuristic(x);
  EXPECT_EQ(ell[0], 4.0);
  EXPECT_EQ(ell[1], 1e-3);
}

TEST(InitialSpectralParams, StartsAtPriorDraw) {
  const RandomBasis b = sample_basis(2, 2, 3, 4);
  const std::vector<double> ell = {0.5, 1.0, 2.0, 4.0};
  const SpectralParams p = initial_spectral_params(b, ell);
  EXPECT_EQ(reparam_frequencies(b, p, SpectralMode::Prior), p.freq_means);
  for (double s : p.freq_stds) EXPECT_EQ(s, 1e-2);
  for (double a : p.shape_a) EXPECT_EQ(a, 1.0);
  EXPECT_THROW(initial_spectral_params(b, std::vector<double>{1.0}), ArgumentError);
}
