#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sigforecast/matrix.hpp"
#include "sigforecast/randfourier.hpp"

namespace sigforecast {

enum class ObjectiveMode { Elbo, Ppgpr, PpgprPenalty };

ObjectiveMode parse_objective_mode(std::string_view name);
std::string_view to_string(ObjectiveMode mode);

// q(w_h) = N(mean.col(h), L L^T). Either one factor shared by every head or
// one per head.
struct WeightPosterior {
  RowMatrix mean;              // [F x H]
  std::vector<RowMatrix> chol;  // lower triangular, positive diagonal, [F x F]

  Eigen::Index width() const noexcept { return mean.rows(); }
  Eigen::Index heads() const noexcept { return mean.cols(); }
  bool shared() const noexcept { return chol.size() == 1; }
  const RowMatrix& chol_for(Eigen::Index head) const { return shared() ? chol[0] : chol.at(head); }
  void validate() const;
};

// Latent mean and variance per row of phi; observation noise is added by the
// caller.
struct PredictiveDistribution {
  Vector means;
  Vector vars;
};

PredictiveDistribution predictive(const RowMatrix& phi, const WeightPosterior& posterior, Eigen::Index head);

// Sum over points of E_q[log N(y | f, noise_var)].
double elbo_datafit(std::span<const double> y, const PredictiveDistribution& pred, double noise_var);
// Sum over points of log N(y | mu, var + noise_var).
double ppgpr_datafit(std::span<const double> y, const PredictiveDistribution& pred, double noise_var);

// Per-point data fit and its partial derivatives.
struct PointFit {
  double value;
  double d_mean;
  double d_var;    // latent variance
  double d_noise;  // noise variance
};
PointFit elbo_point(double y, double mean, double var, double noise_var);
PointFit ppgpr_point(double y, double mean, double var, double noise_var);

// KL(N(mean, var) || N(0, prior_var)).
double kl_normal(double mean, double var, double prior_var);
// KL(Beta(a, b) || U(0, 1)) = -H(Beta(a, b)).
double kl_beta_uniform(double a, double b);
struct BetaKlGrad {
  double d_a;
  double d_b;
};
BetaKlGrad kl_beta_uniform_grad(double a, double b);

// Against the standard normal prior over the full width, summed over heads.
double kl_weights(const WeightPosterior& posterior);
// Frequencies against N(0, lengthscale^-2) per input dimension.
double kl_frequencies(const SpectralParams& params);
// Phases against U(0, 2 pi); the scale cancels.
double kl_phases(const SpectralParams& params);

// Named flat parameter (or gradient) blocks in a fixed order.
struct ParameterBlock {
  std::string name;
  std::vector<double> values;
};

class ParameterSet {
 public:
  std::vector<ParameterBlock> blocks;

  ParameterBlock& at(std::size_t id) { return blocks.at(id); }
  const ParameterBlock& at(std::size_t id) const { return blocks.at(id); }
  const ParameterBlock* find(std::string_view name) const;
  std::size_t total_size() const;
  ParameterSet zeros_like() const;
  // Name of the first block holding a non-finite value, or empty.
  std::string first_nonfinite() const;
};

// Adam minimising a loss; moments are kept per parameter entry.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::span<double> params, std::span<const double> grads);
  // Applies one step to every block of params with the matching block of grads.
  void step(ParameterSet& params, const ParameterSet& grads);
  long steps() const noexcept { return t_; }
  double learning_rate() const noexcept { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace sigforecast
