#include "sigforecast/randfourier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "sigforecast/errors.hpp"

namespace sigforecast {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_dims(int levels, int input_dim, int features) {
  if (levels < 1 || input_dim < 1 || features < 1) {
    throw ArgumentError("basis dimensions must be >= 1 (got M=" + std::to_string(levels) +
                        ", d=" + std::to_string(input_dim) + ", D=" + std::to_string(features) + ")");
  }
}

double open_uniform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double v = 0.0;
  while (v <= 0.0) v = u(rng);
  return v;
}

// Accepted proposal normal of the Marsaglia-Tsang sampler for Gamma(shape).
double marsaglia_tsang_normal(std::mt19937_64& rng, double shape) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double eps = normal(rng);
    const double v = 1.0 + c * eps;
    if (v <= 0.0) continue;
    const double v3 = v * v * v;
    const double u = open_uniform(rng);
    if (std::log(u) < 0.5 * eps * eps + d - d * v3 + d * std::log(v3)) return eps;
  }
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

RandomBasis sample_basis(int levels, int input_dim, int features, std::uint64_t seed) {
  require_dims(levels, input_dim, features);
  RandomBasis basis;
  basis.levels = levels;
  basis.input_dim = input_dim;
  basis.features = features;
  basis.seed = seed;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const std::size_t md = static_cast<std::size_t>(levels) * features;
  basis.normals.resize(static_cast<std::size_t>(levels) * input_dim * features);
  for (double& v : basis.normals) v = normal(rng);
  basis.phase_uniforms.resize(md);
  for (double& v : basis.phase_uniforms) v = uniform(rng);

  // Outcomes are accepted draws at the initial shape Beta(1, 1), so the
  // reparameterized phases are exactly uniform at initialisation.
  const double init_shape = 1.0 + kShapeAugmentation;
  basis.gamma_normals.resize(2 * md);
  for (double& v : basis.gamma_normals) v = marsaglia_tsang_normal(rng, init_shape);
  basis.gamma_uniforms.resize(2 * md * kShapeAugmentation);
  for (double& v : basis.gamma_uniforms) v = open_uniform(rng);
  return basis;
}

SpectralParams SpectralParams::zeros(int levels, int input_dim, int features) {
  SpectralParams p;
  p.levels = levels;
  p.input_dim = input_dim;
  p.features = features;
  const std::size_t md = static_cast<std::size_t>(levels) * features;
  const std::size_t mdd = static_cast<std::size_t>(levels) * input_dim * features;
  p.lengthscales.assign(static_cast<std::size_t>(levels) * input_dim, 0.0);
  p.freq_means.assign(mdd, 0.0);
  p.freq_stds.assign(mdd, 0.0);
  p.shape_a.assign(md, 0.0);
  p.shape_b.assign(md, 0.0);
  return p;
}

void SpectralParams::validate() const {
  auto positive = [](const std::vector<double>& v, const char* name) {
    for (double x : v) {
      if (!(x > 0.0) || !std::isfinite(x)) {
        throw ArgumentError(std::string("SpectralParams: ") + name + " must be positive and finite");
      }
    }
  };
  positive(lengthscales, "lengthscales");
  positive(freq_stds, "freq_stds");
  positive(shape_a, "shape_a");
  positive(shape_b, "shape_b");
  for (double x : freq_means) {
    if (!std::isfinite(x)) throw ArgumentError("SpectralParams: non-finite frequency mean");
  }
}

SpectralParams initial_spectral_params(const RandomBasis& basis, std::span<const double> lengthscales) {
  const int M = basis.levels, d = basis.input_dim, D = basis.features;
  if (lengthscales.size() != static_cast<std::size_t>(M) * d) {
    throw ArgumentError("initial_spectral_params: expected M*d lengthscales");
  }
  SpectralParams p = SpectralParams::zeros(M, d, D);
  p.lengthscales.assign(lengthscales.begin(), lengthscales.end());
  std::fill(p.freq_stds.begin(), p.freq_stds.end(), 1e-2);
  std::fill(p.shape_a.begin(), p.shape_a.end(), 1.0);
  std::fill(p.shape_b.begin(), p.shape_b.end(), 1.0);
  p.validate();
  p.freq_means = reparam_frequencies(basis, p, SpectralMode::Prior);
  return p;
}

std::vector<double> median_heuristic(const RowMatrix& x, int max_points) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  const std::size_t d = static_cast<std::size_t>(x.cols());
  std::vector<double> out(d, 1.0);
  if (n < 2) return out;
  const std::size_t stride = std::max<std::size_t>(1, n / std::max(2, max_points));
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n; i += stride) rows.push_back(i);
  std::vector<double> dist;
  for (std::size_t j = 0; j < d; ++j) {
    dist.clear();
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t b = a + 1; b < rows.size(); ++b)
        dist.push_back(std::abs(x(rows[a], j) - x(rows[b], j)));
    auto mid = dist.begin() + static_cast<long>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    out[j] = std::max(1e-3, *mid);
  }
  return out;
}

std::vector<double> reparam_frequencies(const RandomBasis& basis, const SpectralParams& params,
                                        SpectralMode mode) {
  const int M = basis.levels, d = basis.input_dim, D = basis.features;
  std::vector<double> omega(basis.normals.size());
  for (int m = 0; m < M; ++m)
    for (int i = 0; i < d; ++i) {
      const double ell = params.lengthscales[m * d + i];
      if (!(ell > 0.0)) throw ArgumentError("reparam_frequencies: non-positive lengthscale");
      for (int k = 0; k < D; ++k) {
        const std::size_t idx = (static_cast<std::size_t>(m) * d + i) * D + k;
        const double eps = basis.normals[idx];
        if (mode == SpectralMode::Prior) {
          omega[idx] = eps / ell;
        } else {
          const double sd = params.freq_stds[idx];
          if (!(sd > 0.0)) throw ArgumentError("reparam_frequencies: non-positive std");
          omega[idx] = params.freq_means[idx] + sd * eps;
        }
      }
    }
  return omega;
}

void reparam_frequencies_vjp(const RandomBasis& basis, const SpectralParams& params, SpectralMode mode,
                             std::span<const double> grad_freq, SpectralParams& grad) {
  const int M = basis.levels, d = basis.input_dim, D = basis.features;
  for (int m = 0; m < M; ++m)
    for (int i = 0; i < d; ++i) {
      const double ell = params.lengthscales[m * d + i];
      double acc = 0.0;
      for (int k = 0; k < D; ++k) {
        const std::size_t idx = (static_cast<std::size_t>(m) * d + i) * D + k;
        const double g = grad_freq[idx];
        const double eps = basis.normals[idx];
        if (mode == SpectralMode::Prior) {
          acc -= g * eps / (ell * ell);
        } else {
          grad.freq_means[idx] += g;
          grad.freq_stds[idx] += g * eps;
        }
      }
      grad.lengthscales[m * d + i] += acc;
    }
}

GammaDraw reparam_gamma(double normal, std::span<const double> uniforms, double shape) {
  if (!(shape > 0.0)) throw ArgumentError("reparam_gamma: non-positive shape");
  const double boosted = shape + kShapeAugmentation;
  const double s = std::sqrt(9.0 * boosted - 3.0);
  const double v = 1.0 + normal / s;
  const double base = boosted - 1.0 / 3.0;
  double log_value = std::log(base) + 3.0 * std::log(v);
  const double dv = -9.0 * normal / (2.0 * s * s * s);
  double dlog = 1.0 / base + 3.0 * dv / v;
  for (std::size_t i = 0; i < uniforms.size(); ++i) {
    const double denom = shape + static_cast<double>(i);
    const double lu = std::log(uniforms[i]);
    log_value += lu / denom;
    dlog -= lu / (denom * denom);
  }
  return {log_value, dlog};
}

namespace {

struct PhaseDraw {
  double fraction;  // Ga / (Ga + Gb)
  double dlog_a;    // d log Ga / d a
  double dlog_b;
};

PhaseDraw beta_draw(const RandomBasis& basis, std::size_t idx, double a, double b) {
  const std::size_t md = basis.phase_uniforms.size();
  const std::size_t B = kShapeAugmentation;
  std::span<const double> ua(basis.gamma_uniforms.data() + idx * B, B);
  std::span<const double> ub(basis.gamma_uniforms.data() + (md + idx) * B, B);
  const GammaDraw ga = reparam_gamma(basis.gamma_normals[idx], ua, a);
  const GammaDraw gb = reparam_gamma(basis.gamma_normals[md + idx], ub, b);
  return {sigmoid(ga.log_value - gb.log_value), ga.dlog_dshape, gb.dlog_dshape};
}

}  // namespace

std::vector<double> reparam_phases(const RandomBasis& basis, const SpectralParams& params,
                                   SpectralMode mode) {
  const std::size_t md = basis.phase_uniforms.size();
  std::vector<double> phases(md);
  for (std::size_t idx = 0; idx < md; ++idx) {
    if (mode == SpectralMode::Prior) {
      phases[idx] = kTwoPi * basis.phase_uniforms[idx];
    } else {
      const double a = params.shape_a[idx], b = params.shape_b[idx];
      if (!(a > 0.0) || !(b > 0.0)) throw ArgumentError("reparam_phases: non-positive shape");
      phases[idx] = kTwoPi * beta_draw(basis, idx, a, b).fraction;
    }
  }
  return phases;
}

void reparam_phases_vjp(const RandomBasis& basis, const SpectralParams& params, SpectralMode mode,
                        std::span<const double> grad_phase, SpectralParams& grad) {
  if (mode == SpectralMode::Prior) return;
  const std::size_t md = basis.phase_uniforms.size();
  for (std::size_t idx = 0; idx < md; ++idx) {
    const PhaseDraw draw = beta_draw(basis, idx, params.shape_a[idx], params.shape_b[idx]);
    const double dx = kTwoPi * draw.fraction * (1.0 - draw.fraction) * grad_phase[idx];
    grad.shape_a[idx] += dx * draw.dlog_a;
    grad.shape_b[idx] -= dx * draw.dlog_b;
  }
}

RowMatrix rff_eval(const RowMatrix& x, std::span<const double> omega, std::span<const double> phase) {
  const auto d = x.cols();
  const auto D = static_cast<Eigen::Index>(phase.size());
  if (omega.size() != static_cast<std::size_t>(d * D)) {
    throw ArgumentError("rff_eval: frequency matrix must be [d x D] with d = " + std::to_string(d));
  }
  Eigen::Map<const RowMatrix> om(omega.data(), d, D);
  Eigen::Map<const Eigen::RowVectorXd> b(phase.data(), D);
  RowMatrix z = x * om;
  z.rowwise() += b;
  return z.array().cos().matrix();
}

Array3 rff_levels(const RowMatrix& x, std::span<const double> frequencies, std::span<const double> phases,
                  int levels, int features) {
  const std::size_t L = static_cast<std::size_t>(x.rows());
  const std::size_t d = static_cast<std::size_t>(x.cols());
  const std::size_t D = static_cast<std::size_t>(features);
  if (frequencies.size() != levels * d * D || phases.size() != levels * D) {
    throw ArgumentError("rff_levels: parameter shapes do not match [M x d x D] / [M x D]");
  }
  Array3 u(levels, L, D);
  for (int m = 0; m < levels; ++m) {
    const RowMatrix level = rff_eval(x, frequencies.subspan(m * d * D, d * D), phases.subspan(m * D, D));
    std::copy(level.data(), level.data() + L * D, u.level(m).data());
  }
  return u;
}

}  // namespace sigforecast
