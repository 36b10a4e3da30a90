#include "sigforecast/arrayops.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "sigforecast/errors.hpp"
#include "sigforecast/parallel.hpp"

namespace sigforecast {

DecayVector::DecayVector(std::vector<double> lambda) : lambda_(std::move(lambda)) {
  for (double v : lambda_) {
    if (!(v > 0.0 && v <= 1.0)) {
      throw ArgumentError("DecayVector: decay factors must lie in (0, 1], got " + std::to_string(v));
    }
  }
}

DecayVector DecayVector::pow(int p) const {
  std::vector<double> out(lambda_.size());
  for (std::size_t k = 0; k < lambda_.size(); ++k) {
    double acc = 1.0;
    for (int i = 0; i < p; ++i) acc *= lambda_[k];
    out[k] = acc;
  }
  // Underflow to zero is the intended limit of forgetting but violates the
  // open lower bound, so construct without re-validation.
  DecayVector result = DecayVector::unit(0);
  result.lambda_ = std::move(out);
  return result;
}

FracDiffOrders::FracDiffOrders(std::vector<double> orders, int window_size)
    : q(std::move(orders)), window(window_size) {
  if (window < 1) throw ArgumentError("FracDiffOrders: window must be >= 1");
  for (double v : q) {
    if (!std::isfinite(v)) throw ArgumentError("FracDiffOrders: non-finite order");
    if (v < 0.0 || v > 1.0) {
      std::cerr << "[sigforecast] warning: fractional differencing order " << v
                << " outside [0, 1]\n";
    }
  }
}

namespace {

// Sign of Gamma(x) for x not a non-positive integer.
double gamma_sign(double x) {
  if (x > 0.0) return 1.0;
  return (static_cast<long>(std::floor(x)) % 2 != 0) ? -1.0 : 1.0;
}

bool is_pole(double x) { return x <= 0.0 && x == std::floor(x); }

}  // namespace

std::vector<double> frac_diff_weights(double q, int window) {
  if (window < 1) throw ArgumentError("frac_diff_weights: window must be >= 1");
  std::vector<double> w(window, 0.0);
  w[0] = 1.0;
  const double log_num = std::lgamma(q + 1.0);
  const double sign_num = gamma_sign(q + 1.0);
  for (int k = 1; k < window; ++k) {
    const double x = q - k + 1.0;
    if (is_pole(x)) continue;
    const double log_abs = log_num - std::lgamma(k + 1.0) - std::lgamma(x);
    const double alt = (k % 2 == 0) ? 1.0 : -1.0;
    w[k] = alt * sign_num * gamma_sign(x) * std::exp(log_abs);
  }
  return w;
}

std::vector<double> frac_diff_weight_derivatives(double q, int window) {
  if (window < 1) throw ArgumentError("frac_diff_weight_derivatives: window must be >= 1");
  std::vector<double> dw(window, 0.0);
  double w = 1.0;
  for (int k = 1; k < window; ++k) {
    const double factor = (k - 1.0 - q) / k;
    dw[k] = dw[k - 1] * factor - w / k;
    w *= factor;
  }
  return dw;
}

std::vector<double> frac_diff_weight_table(const FracDiffOrders& orders) {
  const std::size_t channels = orders.q.size();
  std::vector<double> table(static_cast<std::size_t>(orders.window) * channels);
  for (std::size_t k = 0; k < channels; ++k) {
    const auto w = frac_diff_weights(orders.q[k], orders.window);
    for (int j = 0; j < orders.window; ++j) table[j * channels + k] = w[j];
  }
  return table;
}

namespace kernels {

void scan_sequential(double* data, std::size_t steps, std::size_t channels, const double* decay,
                     bool reverse) {
  if (steps < 2) return;
  for (std::size_t i = 1; i < steps; ++i) {
    const std::size_t cur = reverse ? steps - 1 - i : i;
    const std::size_t prev = reverse ? cur + 1 : cur - 1;
    double* y = data + cur * channels;
    const double* yp = data + prev * channels;
#pragma omp simd
    for (std::size_t k = 0; k < channels; ++k) y[k] += decay[k] * yp[k];
  }
}

void scan(double* data, std::size_t steps, std::size_t channels, const double* decay, int blocks,
          bool reverse) {
  if (blocks <= 0) blocks = thread_count();
  std::size_t nb = std::clamp<std::size_t>(static_cast<std::size_t>(blocks), 1, std::max<std::size_t>(steps, 1));
  if (nb == 1) {
    scan_sequential(data, steps, channels, decay, reverse);
    return;
  }
  const std::size_t chunk = (steps + nb - 1) / nb;
  nb = (steps + chunk - 1) / chunk;
  auto row = [&](std::size_t i) { return data + (reverse ? steps - 1 - i : i) * channels; };

  // Local scans with zero carry-in.
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t begin = b * chunk;
    const std::size_t end = std::min(steps, begin + chunk);
    for (std::size_t i = begin + 1; i < end; ++i) {
      double* y = row(i);
      const double* yp = row(i - 1);
#pragma omp simd
      for (std::size_t k = 0; k < channels; ++k) y[k] += decay[k] * yp[k];
    }
  }

  // Carry into block b is the full scan value at the end of block b-1:
  // carry_b = decay^{len_{b-1}} * carry_{b-1} + local_last_{b-1}.
  std::vector<double> carries(nb * channels, 0.0);
  for (std::size_t b = 1; b < nb; ++b) {
    const std::size_t prev_begin = (b - 1) * chunk;
    const std::size_t prev_len = std::min(steps, prev_begin + chunk) - prev_begin;
    const double* last = row(prev_begin + prev_len - 1);
    const double* cin = carries.data() + (b - 1) * channels;
    double* cout = carries.data() + b * channels;
    for (std::size_t k = 0; k < channels; ++k) {
      cout[k] = std::pow(decay[k], static_cast<double>(prev_len)) * cin[k] + last[k];
    }
  }

#pragma omp parallel for schedule(static)
  for (std::size_t b = 1; b < nb; ++b) {
    const std::size_t begin = b * chunk;
    const std::size_t end = std::min(steps, begin + chunk);
    const double* carry = carries.data() + b * channels;
    std::vector<double> power(decay, decay + channels);
    for (std::size_t i = begin; i < end; ++i) {
      double* y = row(i);
#pragma omp simd
      for (std::size_t k = 0; k < channels; ++k) {
        y[k] += power[k] * carry[k];
        power[k] *= decay[k];
      }
    }
  }
}

void frac_diff(const double* in, double* out, std::size_t steps, std::size_t channels,
               const double* weights, int window) {
#pragma omp parallel for schedule(static)
  for (std::size_t l = 0; l < steps; ++l) {
    double* o = out + l * channels;
    const double* src = in + l * channels;
#pragma omp simd
    for (std::size_t k = 0; k < channels; ++k) o[k] = weights[k] * src[k];
    const std::size_t taps = std::min<std::size_t>(window, l + 1);
    for (std::size_t j = 1; j < taps; ++j) {
      const double* w = weights + j * channels;
      const double* s = in + (l - j) * channels;
#pragma omp simd
      for (std::size_t k = 0; k < channels; ++k) o[k] += w[k] * s[k];
    }
  }
}

void frac_diff_adjoint(const double* grad_out, double* grad_in, std::size_t steps,
                       std::size_t channels, const double* weights, int window) {
#pragma omp parallel for schedule(static)
  for (std::size_t l = 0; l < steps; ++l) {
    double* g = grad_in + l * channels;
    const double* src = grad_out + l * channels;
#pragma omp simd
    for (std::size_t k = 0; k < channels; ++k) g[k] = weights[k] * src[k];
    const std::size_t taps = std::min<std::size_t>(window, steps - l);
    for (std::size_t j = 1; j < taps; ++j) {
      const double* w = weights + j * channels;
      const double* s = grad_out + (l + j) * channels;
#pragma omp simd
      for (std::size_t k = 0; k < channels; ++k) g[k] += w[k] * s[k];
    }
  }
}

void frac_diff_weight_grad(const double* grad_out, const double* in, double* grad_weights,
                           std::size_t steps, std::size_t channels, int window) {
#pragma omp parallel for schedule(static)
  for (int j = 0; j < window; ++j) {
    double* gw = grad_weights + static_cast<std::size_t>(j) * channels;
    for (std::size_t l = j; l < steps; ++l) {
      const double* go = grad_out + l * channels;
      const double* s = in + (l - j) * channels;
#pragma omp simd
      for (std::size_t k = 0; k < channels; ++k) gw[k] += go[k] * s[k];
    }
  }
}

}  // namespace kernels

namespace {

void check_axis(Axis axis) {
  const int a = static_cast<int>(axis);
  if (a < 0 || a > 2) throw ArgumentError("invalid axis " + std::to_string(a));
}

void check_channels(const Array3& a, std::size_t expected, const char* what) {
  if (a.channels() != expected) {
    throw ArgumentError(std::string(what) + ": channel count " + std::to_string(a.channels()) +
                        " does not match parameter length " + std::to_string(expected));
  }
}

}  // namespace

Array3 slice_sum(const Array3& a, Axis axis) {
  check_axis(axis);
  const std::size_t M = a.levels(), L = a.steps(), D = a.channels();
  Array3 out(axis == Axis::Level ? 1 : M, axis == Axis::Time ? 1 : L, axis == Axis::Channel ? 1 : D);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t k = 0; k < D; ++k) {
        out(axis == Axis::Level ? 0 : m, axis == Axis::Time ? 0 : l, axis == Axis::Channel ? 0 : k) +=
            a(m, l, k);
      }
    }
  }
  return out;
}

Array3 cumsum(const Array3& a, Axis axis, ScanOptions options) {
  check_axis(axis);
  if (axis == Axis::Time) return geometric_scan(a, DecayVector::unit(a.channels()), options);
  Array3 out = a;
  const std::size_t M = a.levels(), L = a.steps(), D = a.channels();
  if (axis == Axis::Level) {
    for (std::size_t m = 1; m < M; ++m)
      for (std::size_t l = 0; l < L; ++l)
        for (std::size_t k = 0; k < D; ++k) out(m, l, k) += out(m - 1, l, k);
  } else {
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t l = 0; l < L; ++l)
        for (std::size_t k = 1; k < D; ++k) out(m, l, k) += out(m, l, k - 1);
  }
  return out;
}

Array3 geometric_scan(const Array3& a, const DecayVector& lambda, ScanOptions options) {
  check_channels(a, lambda.size(), "geometric_scan");
  Array3 out = a;
  for (std::size_t m = 0; m < out.levels(); ++m) {
    kernels::scan(out.level(m).data(), out.steps(), out.channels(), lambda.values().data(),
                  options.blocks);
  }
  return out;
}

Array3 geometric_scan_sequential(const Array3& a, const DecayVector& lambda) {
  check_channels(a, lambda.size(), "geometric_scan_sequential");
  Array3 out = a;
  for (std::size_t m = 0; m < out.levels(); ++m) {
    kernels::scan_sequential(out.level(m).data(), out.steps(), out.channels(), lambda.values().data());
  }
  return out;
}

Array3 frac_diff(const Array3& a, const FracDiffOrders& orders) {
  check_channels(a, orders.q.size(), "frac_diff");
  const auto table = frac_diff_weight_table(orders);
  Array3 out(a.levels(), a.steps(), a.channels());
  for (std::size_t m = 0; m < a.levels(); ++m) {
    kernels::frac_diff(a.level(m).data(), out.level(m).data(), a.steps(), a.channels(), table.data(),
                       orders.window);
  }
  return out;
}

Array3 shift(const Array3& a, int m, Axis axis) {
  check_axis(axis);
  if (m < 1) throw ArgumentError("shift: m must be >= 1");
  Array3 out(a.levels(), a.steps(), a.channels());
  const long s = m;
  for (std::size_t i = 0; i < a.levels(); ++i)
    for (std::size_t l = 0; l < a.steps(); ++l)
      for (std::size_t k = 0; k < a.channels(); ++k) {
        const long li = static_cast<long>(i) - (axis == Axis::Level ? s : 0);
        const long ll = static_cast<long>(l) - (axis == Axis::Time ? s : 0);
        const long lk = static_cast<long>(k) - (axis == Axis::Channel ? s : 0);
        out(i, l, k) = a.at_or_zero(li, ll, lk);
      }
  return out;
}

Array3 hadamard(const Array3& a, const Array3& b) {
  if (!a.same_shape(b)) throw ArgumentError("hadamard: shape mismatch");
  Array3 out = a;
  double* o = out.data();
  const double* x = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] *= x[i];
  return out;
}

}  // namespace sigforecast
