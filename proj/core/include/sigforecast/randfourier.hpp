#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sigforecast/array3.hpp"
#include "sigforecast/matrix.hpp"

namespace sigforecast {

// Shape augmentation depth for the Gamma reparameterization.
inline constexpr int kShapeAugmentation = 10;

// Frozen raw randomness behind the frequencies and phases of every level.
// Created once per model; immutable afterwards.
struct RandomBasis {
  int levels = 0;      // M
  int input_dim = 0;   // d
  int features = 0;    // D
  std::uint64_t seed = 0;

  std::vector<double> normals;         // [M x d x D] standard normal
  std::vector<double> phase_uniforms;  // [M x D] in [0, 1), prior-mode phases
  // Accepted Marsaglia-Tsang normals for the two Gamma variates of each
  // phase, [2 x M x D] (first block: shape a, second block: shape b).
  std::vector<double> gamma_normals;
  // Augmentation uniforms in (0, 1), [2 x M x D x kShapeAugmentation].
  std::vector<double> gamma_uniforms;
};

RandomBasis sample_basis(int levels, int input_dim, int features, std::uint64_t seed);

enum class SpectralMode { Prior, Variational };

// Distributional parameters of the frequencies and phases (natural domain).
struct SpectralParams {
  int levels = 0;
  int input_dim = 0;
  int features = 0;
  std::vector<double> lengthscales;  // [M x d]
  std::vector<double> freq_means;    // [M x d x D]
  std::vector<double> freq_stds;     // [M x d x D]
  std::vector<double> shape_a;       // [M x D]
  std::vector<double> shape_b;       // [M x D]

  // All-zero parameters with the dimensions of the basis (gradient holder).
  static SpectralParams zeros(int levels, int input_dim, int features);
  void validate() const;
};

// Variational parameters started at the prior draw: means = eps / lengthscale,
// stds = 1e-2, Beta(1, 1) phases.
SpectralParams initial_spectral_params(const RandomBasis& basis, std::span<const double> lengthscales);

// Per-dimension median pairwise distance of (a subsample of) the rows of x,
// floored at 1e-3.
std::vector<double> median_heuristic(const RowMatrix& x, int max_points = 256);

// Prior: omega = eps / lengthscale. Variational: omega = mean + std * eps.
// Returns [M x d x D].
std::vector<double> reparam_frequencies(const RandomBasis& basis, const SpectralParams& params,
                                        SpectralMode mode);
// Prior: 2 pi u. Variational: 2 pi Ga / (Ga + Gb). Returns [M x D].
std::vector<double> reparam_phases(const RandomBasis& basis, const SpectralParams& params,
                                   SpectralMode mode);

// Accumulate the pullback of d(objective)/d(frequencies) into grad.
void reparam_frequencies_vjp(const RandomBasis& basis, const SpectralParams& params, SpectralMode mode,
                             std::span<const double> grad_freq, SpectralParams& grad);
void reparam_phases_vjp(const RandomBasis& basis, const SpectralParams& params, SpectralMode mode,
                        std::span<const double> grad_phase, SpectralParams& grad);

struct GammaDraw {
  double log_value;    // log G
  double dlog_dshape;  // d log G / d shape
};

// Shape-augmented Marsaglia-Tsang transform of frozen outcomes:
// G = h(eps, shape + B) * prod_i u_i^{1 / (shape + i - 1)}.
GammaDraw reparam_gamma(double normal, std::span<const double> uniforms, double shape);

// cos(x_l . omega_k + b_k) for every row of x. omega is [d x D] row-major.
RowMatrix rff_eval(const RowMatrix& x, std::span<const double> omega, std::span<const double> phase);

// Activations of all levels, [M x L x D].
Array3 rff_levels(const RowMatrix& x, std::span<const double> frequencies, std::span<const double> phases,
                  int levels, int features);

}  // namespace sigforecast
