#include "sigforecast/model.hpp"

#include <cmath>
#include <string>

#include "sigforecast/errors.hpp"

namespace sigforecast {
namespace {

constexpr const char* kBlockNames[block::Count] = {
    "weight_mean", "weight_chol", "log_noise_var", "log_lengthscale", "freq_mean",
    "log_freq_std", "log_shape_a", "log_shape_b", "decay_logit", "order_logit",
};

// Positive parameters stored as logs; leaving double range is a numerical failure.
std::vector<double> exp_of(const std::vector<double>& v, const char* name) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i]);
    if (!(out[i] > 0.0 && std::isfinite(out[i])))
      throw NumericalError(std::string(name) + " left the representable range");
  }
  return out;
}

std::vector<double> sigmoid_of(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
  return out;
}

std::size_t expected_size(const ModelConfig& c, std::size_t id) {
  const std::size_t M = c.levels, D = c.features, d = c.input_dim(), F = c.width(), H = c.horizon;
  switch (id) {
    case block::WeightMean:
      return F * H;
    case block::WeightChol:
      return (c.shared_covariance ? 1 : H) * F * F;
    case block::LogNoiseVar:
      return 1;
    case block::LogLengthscale:
      return M * d;
    case block::FreqMean:
    case block::LogFreqStd:
      return M * d * D;
    case block::LogShapeA:
    case block::LogShapeB:
      return M * D;
    default:
      return D;
  }
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

void ModelConfig::validate() const {
  if (levels < 1) throw ArgumentError("config: M must be >= 1");
  if (features < 1) throw ArgumentError("config: D must be >= 1");
  if (lags < 0) throw ArgumentError("config: lags must be >= 0");
  if (window < 1) throw ArgumentError("config: W must be >= 1");
  if (horizon < 1) throw ArgumentError("config: horizon must be >= 1");
  if (!(penalty_weight >= 0.0)) throw ArgumentError("config: penalty_weight must be >= 0");
}

Model::Model(ModelConfig config, RandomBasis basis, ParameterSet params)
    : config_(config), basis_(std::move(basis)), params_(std::move(params)) {
  config_.validate();
  if (basis_.levels != config_.levels || basis_.features != config_.features ||
      basis_.input_dim != config_.input_dim()) {
    throw ArgumentError("Model: random basis dimensions do not match the config");
  }
  if (params_.blocks.size() != block::Count) throw ArgumentError("Model: wrong number of parameter blocks");
  for (std::size_t id = 0; id < block::Count; ++id) {
    const ParameterBlock& b = params_.blocks[id];
    if (b.name != kBlockNames[id]) throw ArgumentError("Model: unexpected parameter block '" + b.name + "'");
    if (b.values.size() != expected_size(config_, id)) {
      throw ArgumentError("Model: block '" + b.name + "' has " + std::to_string(b.values.size()) +
                          " values, expected " + std::to_string(expected_size(config_, id)));
    }
  }
}

Model Model::initialize(const ModelConfig& config, const std::vector<RowMatrix>& inputs, double target_variance) {
  config.validate();
  const int M = config.levels, D = config.features, d = config.input_dim();
  const std::size_t F = config.width();
  RandomBasis basis = sample_basis(M, d, D, config.seed);

  std::vector<double> scale(d, 1.0);
  Eigen::Index rows = 0;
  for (const RowMatrix& x : inputs) rows += x.rows();
  if (rows >= 2) {
    RowMatrix all(rows, d);
    Eigen::Index at = 0;
    for (const RowMatrix& x : inputs) {
      if (x.cols() != d) throw ArgumentError("Model::initialize: input dimension mismatch");
      all.middleRows(at, x.rows()) = x;
      at += x.rows();
    }
    scale = median_heuristic(all);
  }
  std::vector<double> lengthscales;
  for (int m = 0; m < M; ++m) lengthscales.insert(lengthscales.end(), scale.begin(), scale.end());
  const SpectralParams sp = initial_spectral_params(basis, lengthscales);

  ParameterSet params;
  for (std::size_t id = 0; id < block::Count; ++id) {
    params.blocks.push_back({kBlockNames[id], std::vector<double>(expected_size(config, id), 0.0)});
  }
  auto& chol = params.at(block::WeightChol).values;
  for (std::size_t c = 0; c < chol.size() / (F * F); ++c)
    for (std::size_t i = 0; i < F; ++i) chol[c * F * F + i * F + i] = std::log(1e-2);
  const double noise = 0.1 * (target_variance > 0.0 ? target_variance : 1.0);
  params.at(block::LogNoiseVar).values[0] = std::log(noise);
  for (std::size_t i = 0; i < lengthscales.size(); ++i)
    params.at(block::LogLengthscale).values[i] = std::log(lengthscales[i]);
  params.at(block::FreqMean).values = sp.freq_means;
  for (std::size_t i = 0; i < sp.freq_stds.size(); ++i) params.at(block::LogFreqStd).values[i] = std::log(sp.freq_stds[i]);
  // Shapes start at 1 (log 0), orders at sigmoid(0) = 0.5.
  std::fill(params.at(block::DecayLogit).values.begin(), params.at(block::DecayLogit).values.end(), logit(0.99));
  return Model(config, std::move(basis), std::move(params));
}

SpectralParams Model::spectral() const {
  SpectralParams sp;
  sp.levels = config_.levels;
  sp.input_dim = config_.input_dim();
  sp.features = config_.features;
  sp.lengthscales = exp_of(params_.at(block::LogLengthscale).values, kBlockNames[block::LogLengthscale]);
  sp.freq_means = params_.at(block::FreqMean).values;
  sp.freq_stds = exp_of(params_.at(block::LogFreqStd).values, kBlockNames[block::LogFreqStd]);
  sp.shape_a = exp_of(params_.at(block::LogShapeA).values, kBlockNames[block::LogShapeA]);
  sp.shape_b = exp_of(params_.at(block::LogShapeB).values, kBlockNames[block::LogShapeB]);
  return sp;
}

MapParameters Model::map_parameters() const {
  const SpectralParams sp = spectral();
  MapParameters mp;
  mp.levels = config_.levels;
  mp.features = config_.features;
  mp.window = config_.window;
  mp.frequencies = reparam_frequencies(basis_, sp, spectral_mode());
  mp.phases = reparam_phases(basis_, sp, spectral_mode());
  mp.orders = sigmoid_of(params_.at(block::OrderLogit).values);
  mp.decay = sigmoid_of(params_.at(block::DecayLogit).values);
  return mp;
}

WeightPosterior Model::posterior() const {
  const Eigen::Index F = config_.width(), H = config_.horizon;
  WeightPosterior post;
  post.mean = Eigen::Map<const RowMatrix>(params_.at(block::WeightMean).values.data(), F, H);
  const auto& raw = params_.at(block::WeightChol).values;
  const std::size_t count = raw.size() / static_cast<std::size_t>(F * F);
  for (std::size_t c = 0; c < count; ++c) {
    Eigen::Map<const RowMatrix> r(raw.data() + c * F * F, F, F);
    RowMatrix l = r.triangularView<Eigen::StrictlyLower>();
    for (Eigen::Index i = 0; i < F; ++i) l(i, i) = std::exp(r(i, i));
    post.chol.push_back(std::move(l));
  }
  return post;
}

double Model::noise_var() const { return std::exp(params_.at(block::LogNoiseVar).values[0]); }

std::size_t supervised_pairs(std::size_t steps, int horizon) {
  std::size_t n = 0;
  for (int h = 1; h <= horizon; ++h)
    if (steps > static_cast<std::size_t>(h)) n += steps - h;
  return n;
}

Evaluation evaluate(const Model& model, const SeriesBatch& batch, std::size_t total_pairs, ObjectiveMode mode,
                    bool with_gradient) {
  const ModelConfig& cfg = model.config();
  const Eigen::Index T = batch.inputs.rows();
  const int H = cfg.horizon;
  if (batch.inputs.cols() != cfg.input_dim()) throw ArgumentError("evaluate: input dimension does not match the model");
  if (static_cast<Eigen::Index>(batch.targets.size()) != T) throw ArgumentError("evaluate: targets/inputs length mismatch");
  const std::size_t pairs = supervised_pairs(T, H);
  if (total_pairs == 0) total_pairs = pairs;

  Evaluation out;
  ObjectiveTerms& terms = out.terms;
  terms.kl_scale = total_pairs > 0 ? static_cast<double>(pairs) / static_cast<double>(total_pairs) : 1.0;
  const double scale = terms.kl_scale;

  const SpectralParams sp = model.spectral();
  const MapParameters mp = model.map_parameters();
  const FeaturePass pass(batch.inputs, mp.view());
  const RowMatrix& phi = pass.features();
  const WeightPosterior post = model.posterior();
  const double noise = model.noise_var();
  const double alpha = mode == ObjectiveMode::PpgprPenalty ? cfg.penalty_weight : 0.0;

  const RowMatrix means = phi * post.mean;
  const std::size_t C = post.chol.size();
  std::vector<RowMatrix> a(C);
  std::vector<Vector> vars(C);
  for (std::size_t c = 0; c < C; ++c) {
    a[c] = phi * post.chol[c].triangularView<Eigen::Lower>();
    vars[c] = a[c].rowwise().squaredNorm();
  }

  RowMatrix mean_bar = RowMatrix::Zero(T, H);
  std::vector<Vector> var_bar(C, Vector::Zero(T));
  double noise_bar = 0.0;
  for (int h = 1; h <= H; ++h) {
    const std::size_t c = C == 1 ? 0 : static_cast<std::size_t>(h - 1);
    for (Eigen::Index l = 0; l + h < T; ++l) {
      const double y = batch.targets[l + h];
      const double var = vars[c][l];
      const PointFit f = mode == ObjectiveMode::Elbo ? elbo_point(y, means(l, h - 1), var, noise)
                                                     : ppgpr_point(y, means(l, h - 1), var, noise);
      terms.datafit += f.value;
      mean_bar(l, h - 1) += f.d_mean;
      var_bar[c][l] += f.d_var - alpha;
      noise_bar += f.d_noise;
      terms.penalty += alpha * var;
    }
  }
  terms.kl_weights = kl_weights(post);
  if (cfg.variational) {
    terms.kl_frequencies = kl_frequencies(sp);
    terms.kl_phases = kl_phases(sp);
  }
  terms.value = terms.datafit - scale * (terms.kl_weights + terms.kl_frequencies + terms.kl_phases) - terms.penalty;
  if (!std::isfinite(terms.value)) throw NumericalError("objective is not finite");
  if (!with_gradient) return out;

  ParameterSet g = model.params().zeros_like();
  const Eigen::Index F = cfg.width();

  // Readout.
  Eigen::Map<RowMatrix>(g.at(block::WeightMean).values.data(), F, H) =
      phi.transpose() * mean_bar - scale * post.mean;
  RowMatrix phi_bar = mean_bar * post.mean.transpose();
  const double heads_per_factor = C == 1 ? static_cast<double>(H) : 1.0;
  for (std::size_t c = 0; c < C; ++c) {
    const RowMatrix& l = post.chol[c];
    const RowMatrix abar = 2.0 * (var_bar[c].asDiagonal() * a[c]);
    RowMatrix lbar = phi.transpose() * abar;
    phi_bar.noalias() += abar * l.triangularView<Eigen::Lower>().transpose();
    lbar -= scale * heads_per_factor * l;
    double* raw = g.at(block::WeightChol).values.data() + c * F * F;
    for (Eigen::Index i = 0; i < F; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) raw[i * F + j] = lbar(i, j);
      raw[i * F + i] = (lbar(i, i) + scale * heads_per_factor / l(i, i)) * l(i, i);
    }
  }
  g.at(block::LogNoiseVar).values[0] = noise_bar * noise;

  // Spectral KL terms.
  SpectralParams sg = SpectralParams::zeros(sp.levels, sp.input_dim, sp.features);
  if (cfg.variational) {
    const int M = sp.levels, d = sp.input_dim, D = sp.features;
    for (int m = 0; m < M; ++m)
      for (int i = 0; i < d; ++i) {
        const double ell = sp.lengthscales[m * d + i];
        double ell_bar = 0.0;
        for (int k = 0; k < D; ++k) {
          const std::size_t idx = (static_cast<std::size_t>(m) * d + i) * D + k;
          const double mu = sp.freq_means[idx], sd = sp.freq_stds[idx];
          sg.freq_means[idx] -= scale * mu * ell * ell;
          sg.freq_stds[idx] -= scale * (-1.0 / sd + sd * ell * ell);
          ell_bar -= scale * (-1.0 / ell + ell * (sd * sd + mu * mu));
        }
        sg.lengthscales[m * d + i] += ell_bar;
      }
    for (std::size_t i = 0; i < sp.shape_a.size(); ++i) {
      const BetaKlGrad kg = kl_beta_uniform_grad(sp.shape_a[i], sp.shape_b[i]);
      sg.shape_a[i] -= scale * kg.d_a;
      sg.shape_b[i] -= scale * kg.d_b;
    }
  }

  // Feature map.
  const FeatureGradients fg = pass.backward(phi_bar);
  reparam_frequencies_vjp(model.basis(), sp, model.spectral_mode(), fg.frequencies, sg);
  reparam_phases_vjp(model.basis(), sp, model.spectral_mode(), fg.phases, sg);
  for (std::size_t i = 0; i < sg.lengthscales.size(); ++i)
    g.at(block::LogLengthscale).values[i] = sg.lengthscales[i] * sp.lengthscales[i];
  g.at(block::FreqMean).values = sg.freq_means;
  for (std::size_t i = 0; i < sg.freq_stds.size(); ++i)
    g.at(block::LogFreqStd).values[i] = sg.freq_stds[i] * sp.freq_stds[i];
  for (std::size_t i = 0; i < sg.shape_a.size(); ++i) {
    g.at(block::LogShapeA).values[i] = sg.shape_a[i] * sp.shape_a[i];
    g.at(block::LogShapeB).values[i] = sg.shape_b[i] * sp.shape_b[i];
  }
  for (std::size_t k = 0; k < mp.decay.size(); ++k) {
    g.at(block::DecayLogit).values[k] = fg.decay[k] * mp.decay[k] * (1.0 - mp.decay[k]);
    g.at(block::OrderLogit).values[k] = fg.orders[k] * mp.orders[k] * (1.0 - mp.orders[k]);
  }

  const std::string bad = g.first_nonfinite();
  if (!bad.empty()) throw NumericalError("non-finite gradient in parameter block '" + bad + "'");
  out.gradient = std::move(g);
  return out;
}

HeadPredictive predict_heads(const Model& model, const RowMatrix& inputs) {
  if (inputs.rows() < 1) throw ArgumentError("predict_heads: empty input sequence");
  if (inputs.cols() != model.config().input_dim()) throw ArgumentError("predict_heads: input dimension mismatch");
  const MapParameters mp = model.map_parameters();
  const RowMatrix phi = feature_map(inputs, mp.view());
  const RowMatrix last = phi.bottomRows(1);
  const WeightPosterior post = model.posterior();
  HeadPredictive out;
  out.means.resize(post.heads());
  out.vars.resize(post.heads());
  for (Eigen::Index h = 0; h < post.heads(); ++h) {
    const PredictiveDistribution pd = predictive(last, post, h);
    out.means[h] = pd.means[0];
    out.vars[h] = pd.vars[0];
  }
  out.noise_var = model.noise_var();
  return out;
}

}  // namespace sigforecast
