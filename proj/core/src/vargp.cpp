#include "sigforecast/vargp.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <numbers>

#include "sigforecast/errors.hpp"

namespace sigforecast {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

}  // namespace

ObjectiveMode parse_objective_mode(std::string_view name) {
  if (name == "elbo") return ObjectiveMode::Elbo;
  if (name == "ppgpr") return ObjectiveMode::Ppgpr;
  if (name == "ppgpr_penalty" || name == "ppgpr+penalty") return ObjectiveMode::PpgprPenalty;
  throw ArgumentError("unknown objective mode '" + std::string(name) + "' (expected elbo, ppgpr or ppgpr_penalty)");
}

std::string_view to_string(ObjectiveMode mode) {
  switch (mode) {
    case ObjectiveMode::Elbo:
      return "elbo";
    case ObjectiveMode::Ppgpr:
      return "ppgpr";
    case ObjectiveMode::PpgprPenalty:
      return "ppgpr_penalty";
  }
  return "?";
}

void WeightPosterior::validate() const {
  if (chol.empty()) throw ArgumentError("WeightPosterior: no Cholesky factor");
  if (!shared() && static_cast<Eigen::Index>(chol.size()) != heads()) {
    throw ArgumentError("WeightPosterior: need one Cholesky factor per head or a single shared one");
  }
  for (const RowMatrix& l : chol) {
    if (l.rows() != width() || l.cols() != width()) throw ArgumentError("WeightPosterior: Cholesky shape mismatch");
    for (Eigen::Index i = 0; i < l.rows(); ++i)
      if (!(l(i, i) > 0.0)) throw ArgumentError("WeightPosterior: Cholesky diagonal must be positive");
  }
}

PredictiveDistribution predictive(const RowMatrix& phi, const WeightPosterior& posterior, Eigen::Index head) {
  if (phi.cols() != posterior.width()) {
    throw ArgumentError("predictive: features have " + std::to_string(phi.cols()) + " columns, posterior width is " +
                        std::to_string(posterior.width()));
  }
  if (head < 0 || head >= posterior.heads()) throw ArgumentError("predictive: head out of range");
  const RowMatrix& l = posterior.chol_for(head);
  PredictiveDistribution out;
  out.means = phi * posterior.mean.col(head);
  const RowMatrix a = phi * l.triangularView<Eigen::Lower>();
  out.vars = a.rowwise().squaredNorm();
  return out;
}

PointFit elbo_point(double y, double mean, double var, double noise_var) {
  const double r = y - mean;
  const double value = -0.5 * (kLog2Pi + std::log(noise_var)) - (r * r + var) / (2.0 * noise_var);
  return {value, r / noise_var, -0.5 / noise_var,
          -0.5 / noise_var + (r * r + var) / (2.0 * noise_var * noise_var)};
}

PointFit ppgpr_point(double y, double mean, double var, double noise_var) {
  const double r = y - mean;
  const double s = var + noise_var;
  const double value = -0.5 * (kLog2Pi + std::log(s)) - r * r / (2.0 * s);
  const double ds = -0.5 / s + r * r / (2.0 * s * s);
  return {value, r / s, ds, ds};
}

double elbo_datafit(std::span<const double> y, const PredictiveDistribution& pred, double noise_var) {
  if (!(noise_var > 0.0)) throw ArgumentError("elbo_datafit: noise variance must be positive");
  if (static_cast<Eigen::Index>(y.size()) != pred.means.size()) throw ArgumentError("elbo_datafit: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += elbo_point(y[i], pred.means[i], pred.vars[i], noise_var).value;
  return total;
}

double ppgpr_datafit(std::span<const double> y, const PredictiveDistribution& pred, double noise_var) {
  if (!(noise_var > 0.0)) throw ArgumentError("ppgpr_datafit: noise variance must be positive");
  if (static_cast<Eigen::Index>(y.size()) != pred.means.size()) throw ArgumentError("ppgpr_datafit: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += ppgpr_point(y[i], pred.means[i], pred.vars[i], noise_var).value;
  return total;
}

double kl_normal(double mean, double var, double prior_var) {
  return 0.5 * (std::log(prior_var / var) + (var + mean * mean) / prior_var - 1.0);
}

double kl_beta_uniform(double a, double b) {
  using boost::math::digamma;
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double entropy = log_beta - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b) + (a + b - 2.0) * digamma(a + b);
  return -entropy;
}

BetaKlGrad kl_beta_uniform_grad(double a, double b) {
  using boost::math::trigamma;
  const double t_ab = trigamma(a + b);
  return {(a - 1.0) * trigamma(a) - (a + b - 2.0) * t_ab, (b - 1.0) * trigamma(b) - (a + b - 2.0) * t_ab};
}

double kl_weights(const WeightPosterior& posterior) {
  posterior.validate();
  const double F = static_cast<double>(posterior.width());
  double total = 0.0;
  for (Eigen::Index h = 0; h < posterior.heads(); ++h) {
    const RowMatrix& l = posterior.chol_for(h);
    const double trace = l.triangularView<Eigen::Lower>().toDenseMatrix().squaredNorm();
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    total += 0.5 * (trace + posterior.mean.col(h).squaredNorm() - F - logdet);
  }
  return total;
}

double kl_frequencies(const SpectralParams& params) {
  const int M = params.levels, d = params.input_dim, D = params.features;
  double total = 0.0;
  for (int m = 0; m < M; ++m)
    for (int i = 0; i < d; ++i) {
      const double ell = params.lengthscales[m * d + i];
      const double prior_var = 1.0 / (ell * ell);
      for (int k = 0; k < D; ++k) {
        const std::size_t idx = (static_cast<std::size_t>(m) * d + i) * D + k;
        const double sd = params.freq_stds[idx];
        total += kl_normal(params.freq_means[idx], sd * sd, prior_var);
      }
    }
  return total;
}

double kl_phases(const SpectralParams& params) {
  double total = 0.0;
  for (std::size_t i = 0; i < params.shape_a.size(); ++i) total += kl_beta_uniform(params.shape_a[i], params.shape_b[i]);
  return total;
}

const ParameterBlock* ParameterSet::find(std::string_view name) const {
  for (const ParameterBlock& b : blocks)
    if (b.name == name) return &b;
  return nullptr;
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const ParameterBlock& b : blocks) n += b.values.size();
  return n;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  for (const ParameterBlock& b : blocks) out.blocks.push_back({b.name, std::vector<double>(b.values.size(), 0.0)});
  return out;
}

std::string ParameterSet::first_nonfinite() const {
  for (const ParameterBlock& b : blocks)
    for (double v : b.values)
      if (!std::isfinite(v)) return b.name;
  return {};
}

Adam::Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (!(lr > 0.0)) throw ArgumentError("Adam: learning rate must be positive");
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) throw ArgumentError("Adam: parameter and gradient sizes differ");
  if (m_.empty()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  }
  if (m_.size() != params.size()) throw ArgumentError("Adam: parameter count changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

void Adam::step(ParameterSet& params, const ParameterSet& grads) {
  if (params.blocks.size() != grads.blocks.size()) throw ArgumentError("Adam: block layouts differ");
  std::vector<double> flat_params, flat_grads;
  flat_params.reserve(params.total_size());
  flat_grads.reserve(params.total_size());
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    if (params.blocks[b].values.size() != grads.blocks[b].values.size()) {
      throw ArgumentError("Adam: block '" + params.blocks[b].name + "' size differs from its gradient");
    }
    flat_params.insert(flat_params.end(), params.blocks[b].values.begin(), params.blocks[b].values.end());
    flat_grads.insert(flat_grads.end(), grads.blocks[b].values.begin(), grads.blocks[b].values.end());
  }
  step(flat_params, flat_grads);
  std::size_t offset = 0;
  for (ParameterBlock& b : params.blocks) {
    std::copy(flat_params.begin() + offset, flat_params.begin() + offset + b.values.size(), b.values.begin());
    offset += b.values.size();
  }
}

}  // namespace sigforecast
