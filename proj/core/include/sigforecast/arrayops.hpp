#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sigforecast/array3.hpp"

namespace sigforecast {

// Channelwise decay factors, each in (0, 1].
class DecayVector {
 public:
  explicit DecayVector(std::vector<double> lambda);
  static DecayVector unit(std::size_t channels) { return DecayVector(std::vector<double>(channels, 1.0)); }

  std::size_t size() const noexcept { return lambda_.size(); }
  std::span<const double> values() const noexcept { return lambda_; }
  double operator[](std::size_t k) const noexcept { return lambda_[k]; }
  // Elementwise power lambda^p.
  DecayVector pow(int p) const;

 private:
  std::vector<double> lambda_;
};

// Channelwise fractional differencing orders with a finite filter window.
struct FracDiffOrders {
  FracDiffOrders(std::vector<double> orders, int window);

  std::vector<double> q;
  int window;
};

// Filter taps w_k = (-1)^k binom(q, k), k = 0..window-1, evaluated through
// log-gamma differences (poles of the denominator give exact zeros).
std::vector<double> frac_diff_weights(double q, int window);
// d w_k / d q, from the differentiated product recurrence
// w_k = w_{k-1} (k - 1 - q) / k.
std::vector<double> frac_diff_weight_derivatives(double q, int window);

struct ScanOptions {
  // Number of time blocks for the parallel scan; 0 picks one per thread.
  int blocks = 0;
};

// Sum over one axis; the reduced axis keeps extent 1.
Array3 slice_sum(const Array3& a, Axis axis);
// Inclusive running sum along an axis. Along Axis::Time this is exactly the
// geometric scan with unit decay.
Array3 cumsum(const Array3& a, Axis axis, ScanOptions options = {});
// y[l, k] = lambda_k * y[l-1, k] + a[l, k] along the time axis of every level.
Array3 geometric_scan(const Array3& a, const DecayVector& lambda, ScanOptions options = {});
// Straight sequential recurrence, the reference for geometric_scan.
Array3 geometric_scan_sequential(const Array3& a, const DecayVector& lambda);
// out[l, k] = sum_{j<W} w_j(q_k) a[l-j, k], zero padded before the first step.
Array3 frac_diff(const Array3& a, const FracDiffOrders& orders);
// out[..., i, ...] = a[..., i - m, ...], zeros shifted in.
Array3 shift(const Array3& a, int m, Axis axis);
Array3 hadamard(const Array3& a, const Array3& b);

// Raw kernels over a single [steps x channels] slab. These are what the
// feature pipeline calls directly; the Array3 functions above wrap them.
namespace kernels {

// In-place y_l = decay * y_{l-1} + u_l (or the time-reversed recurrence
// y_l = decay * y_{l+1} + u_l when reverse is set). The blocked variant scans
// each block independently, combines block carries with the associative
// operator (a1, b1) o (a2, b2) = (a1 a2, a2 b1 + b2) and patches the blocks.
void scan(double* data, std::size_t steps, std::size_t channels, const double* decay, int blocks,
          bool reverse = false);
void scan_sequential(double* data, std::size_t steps, std::size_t channels, const double* decay,
                     bool reverse = false);

// weights laid out [window x channels].
void frac_diff(const double* in, double* out, std::size_t steps, std::size_t channels,
               const double* weights, int window);
// Adjoint of frac_diff: grad_in[l] = sum_j w_j grad_out[l + j].
void frac_diff_adjoint(const double* grad_out, double* grad_in, std::size_t steps,
                       std::size_t channels, const double* weights, int window);
// grad_weights[j, k] += sum_l grad_out[l, k] * in[l - j, k].
void frac_diff_weight_grad(const double* grad_out, const double* in, double* grad_weights,
                           std::size_t steps, std::size_t channels, int window);

}  // namespace kernels

// Per-channel weights for a whole FracDiffOrders, laid out [window x channels].
std::vector<double> frac_diff_weight_table(const FracDiffOrders& orders);

}  // namespace sigforecast
