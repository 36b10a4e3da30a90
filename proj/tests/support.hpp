#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sigforecast/array3.hpp"
#include "sigforecast/matrix.hpp"
#include "sigforecast/model.hpp"
#include "sigforecast/randfourier.hpp"

namespace sftest {

using sigforecast::Array3;
using sigforecast::RowMatrix;

inline std::vector<double> uniform_values(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

inline Array3 random_array(std::size_t m, std::size_t l, std::size_t d, std::mt19937_64& rng) {
  return Array3(m, l, d, uniform_values(m * l * d, rng));
}

inline RowMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  RowMatrix x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  return x;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

// Normwise relative difference max|a - b| / max|b| (absolute when b is 0).
inline double rel_diff(std::span<const double> a, std::span<const double> b) {
  const double scale = max_abs(b);
  const double diff = max_abs_diff(a, b);
  return scale > 0.0 ? diff / scale : diff;
}

struct BlockAudit {
  std::string name;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
  double error_norm = 0.0;
  bool pass = false;
};

// Central differences of the objective against the reverse-mode gradient,
// block by block.
inline std::vector<BlockAudit> audit_gradients(const sigforecast::Model& model, const sigforecast::SeriesBatch& batch,
                                               sigforecast::ObjectiveMode mode, double step = 1e-5,
                                               double tolerance = 1e-4) {
  using namespace sigforecast;
  const Evaluation base = evaluate(model, batch, 0, mode, true);
  std::vector<BlockAudit> out;
  for (std::size_t b = 0; b < base.gradient.blocks.size(); ++b) {
    BlockAudit a;
    a.name = base.gradient.blocks[b].name;
    const auto& g = base.gradient.blocks[b].values;
    double an = 0.0, nn = 0.0, en = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      Model plus = model, minus = model;
      plus.params().at(b).values[i] += step;
      minus.params().at(b).values[i] -= step;
      const double fd = (evaluate(plus, batch, 0, mode, false).terms.value -
                         evaluate(minus, batch, 0, mode, false).terms.value) /
                        (2.0 * step);
      an += g[i] * g[i];
      nn += fd * fd;
      en += (fd - g[i]) * (fd - g[i]);
    }
    a.analytic_norm = std::sqrt(an);
    a.numeric_norm = std::sqrt(nn);
    a.error_norm = std::sqrt(en);
    a.pass = a.numeric_norm > 1e-9 ? a.error_norm <= tolerance * a.numeric_norm : a.error_norm <= 1e-9;
    out.push_back(a);
  }
  return out;
}

// A small model whose parameters are moved away from their initial values so
// that no gradient block is trivially zero.
inline sigforecast::Model audit_model(sigforecast::ModelConfig config, const sigforecast::SeriesBatch& batch,
                                      std::uint64_t seed) {
  using namespace sigforecast;
  Model model = Model::initialize(config, {batch.inputs}, 1.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  auto& p = model.params();
  for (double& v : p.at(block::WeightMean).values) v = 0.5 * n(rng);
  const std::size_t F = config.width();
  auto& chol = p.at(block::WeightChol).values;
  for (std::size_t c = 0; c < chol.size() / (F * F); ++c)
    for (std::size_t i = 0; i < F; ++i)
      for (std::size_t j = 0; j <= i; ++j) chol[c * F * F + i * F + j] = i == j ? std::log(0.3) + 0.2 * n(rng) : 0.1 * n(rng);
  for (double& v : p.at(block::LogLengthscale).values) v += 0.2 * n(rng);
  for (double& v : p.at(block::FreqMean).values) v += 0.1 * n(rng);
  for (double& v : p.at(block::LogFreqStd).values) v = std::log(0.2) + 0.2 * n(rng);
  for (double& v : p.at(block::LogShapeA).values) v = 0.3 * n(rng);
  for (double& v : p.at(block::LogShapeB).values) v = 0.3 * n(rng);
  for (double& v : p.at(block::DecayLogit).values) v = 1.5 + 0.5 * n(rng);
  for (double& v : p.at(block::OrderLogit).values) v = 0.5 * n(rng);
  p.at(block::LogNoiseVar).values[0] = std::log(0.3);
  return model;
}

inline sigforecast::SeriesBatch audit_batch(int steps, int lags, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> y(steps);
  for (int t = 0; t < steps; ++t) y[t] = std::sin(0.4 * t) + 0.3 * n(rng);
  sigforecast::SeriesBatch batch;
  batch.targets = y;
  batch.inputs = RowMatrix::Zero(steps, lags + 1);
  for (int t = 0; t < steps; ++t)
    for (int j = 0; j <= lags && j <= t; ++j) batch.inputs(t, j) = y[t - j];
  return batch;
}

// Prior-mode RFF activations for x under the frozen basis of the given seed.
inline Array3 prior_activations(const RowMatrix& x, int M, int D, std::uint64_t seed, double lengthscale = 1.0) {
  using namespace sigforecast;
  const int d = static_cast<int>(x.cols());
  const RandomBasis basis = sample_basis(M, d, D, seed);
  const std::vector<double> ell(static_cast<std::size_t>(M) * d, lengthscale);
  const SpectralParams sp = initial_spectral_params(basis, ell);
  return rff_levels(x, reparam_frequencies(basis, sp, SpectralMode::Prior),
                    reparam_phases(basis, sp, SpectralMode::Prior), M, D);
}

// Exact log evidence of y_h = Phi_h w_h + noise with w_h ~ N(0, I), summed
// over heads; Phi_h keeps the rows whose h-step target exists.
inline double log_marginal(const RowMatrix& phi, const std::vector<double>& y, int horizon, double noise_var) {
  double total = 0.0;
  const Eigen::Index T = phi.rows();
  for (int h = 1; h <= horizon; ++h) {
    const Eigen::Index n = T - h;
    if (n <= 0) continue;
    const RowMatrix p = phi.topRows(n);
    sigforecast::Vector t(n);
    for (Eigen::Index l = 0; l < n; ++l) t[l] = y[l + h];
    RowMatrix k = p * p.transpose();
    k.diagonal().array() += noise_var;
    const Eigen::LLT<RowMatrix> llt(k);
    const sigforecast::Vector alpha = llt.solve(t);
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    total += -0.5 * (t.dot(alpha) + logdet + n * std::log(2.0 * std::numbers::pi));
  }
  return total;
}

}  // namespace sftest
