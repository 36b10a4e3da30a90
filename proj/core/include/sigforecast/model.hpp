#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "sigforecast/matrix.hpp"
#include "sigforecast/randfourier.hpp"
#include "sigforecast/sigfeatures.hpp"
#include "sigforecast/vargp.hpp"

namespace sigforecast {

struct ModelConfig {
  int levels = 5;      // M
  int features = 200;  // D
  int lags = 9;
  int window = 32;     // frac-diff window W
  int horizon = 1;     // number of heads H
  bool variational = true;        // learn q(Omega), q(B); otherwise they stay at the prior draw
  bool shared_covariance = true;  // one weight covariance for all heads
  ObjectiveMode mode = ObjectiveMode::PpgprPenalty;
  double penalty_weight = 0.01;
  std::uint64_t seed = 0;

  int input_dim() const noexcept { return lags + 1; }
  int width() const noexcept { return levels * features + 1; }
  void validate() const;
};

// Block order of the parameter and gradient sets.
namespace block {
enum : std::size_t {
  WeightMean,     // [F x H]
  WeightChol,     // [C x F x F] lower triangular, log diagonal; C = 1 or H
  LogNoiseVar,    // [1]
  LogLengthscale, // [M x d]
  FreqMean,       // [M x d x D]
  LogFreqStd,     // [M x d x D]
  LogShapeA,      // [M x D]
  LogShapeB,      // [M x D]
  DecayLogit,     // [D]
  OrderLogit,     // [D]
  Count
};
}  // namespace block

// Owning storage behind a FeatureParams view.
struct MapParameters {
  int levels = 0;
  int features = 0;
  int window = 1;
  std::vector<double> frequencies;
  std::vector<double> phases;
  std::vector<double> orders;
  std::vector<double> decay;

  FeatureParams view() const { return {levels, features, window, frequencies, phases, orders, decay}; }
};

class Model {
 public:
  Model(ModelConfig config, RandomBasis basis, ParameterSet params);

  // Fresh model: basis from config.seed, lengthscales from the median
  // heuristic over all training inputs.
  static Model initialize(const ModelConfig& config, const std::vector<RowMatrix>& inputs, double target_variance);

  const ModelConfig& config() const noexcept { return config_; }
  const RandomBasis& basis() const noexcept { return basis_; }
  const ParameterSet& params() const noexcept { return params_; }
  ParameterSet& params() noexcept { return params_; }

  SpectralMode spectral_mode() const noexcept {
    return config_.variational ? SpectralMode::Variational : SpectralMode::Prior;
  }
  SpectralParams spectral() const;
  MapParameters map_parameters() const;
  WeightPosterior posterior() const;
  double noise_var() const;

 private:
  ModelConfig config_;
  RandomBasis basis_;
  ParameterSet params_;
};

// One full series: lag-augmented standardized inputs and the standardized
// targets (targets[t] is the value at step t).
struct SeriesBatch {
  RowMatrix inputs;
  std::vector<double> targets;
};

// Number of (step, head) pairs with a defined target.
std::size_t supervised_pairs(std::size_t steps, int horizon);

struct ObjectiveTerms {
  double datafit = 0.0;
  double kl_weights = 0.0;
  double kl_frequencies = 0.0;
  double kl_phases = 0.0;
  double penalty = 0.0;
  double kl_scale = 1.0;
  double value = 0.0;
};

struct Evaluation {
  ObjectiveTerms terms;
  ParameterSet gradient;  // d value / d raw parameters; empty unless requested
};

// Objective of one batch. KL terms are scaled by the batch share of
// total_pairs (0 means the batch is the whole training set).
Evaluation evaluate(const Model& model, const SeriesBatch& batch, std::size_t total_pairs, ObjectiveMode mode,
                    bool with_gradient);
inline Evaluation evaluate(const Model& model, const SeriesBatch& batch, std::size_t total_pairs,
                           bool with_gradient) {
  return evaluate(model, batch, total_pairs, model.config().mode, with_gradient);
}

// Per-head latent mean and variance at the last step of inputs.
struct HeadPredictive {
  Vector means;
  Vector vars;
  double noise_var = 0.0;
};
HeadPredictive predict_heads(const Model& model, const RowMatrix& inputs);

double sigmoid(double x);
double logit(double p);

}  // namespace sigforecast
