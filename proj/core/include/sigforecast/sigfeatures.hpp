#pragma once

#include <span>
#include <vector>

#include "sigforecast/array3.hpp"
#include "sigforecast/arrayops.hpp"
#include "sigforecast/matrix.hpp"

namespace sigforecast {

// Unscaled per-step level features P_1..P_M, [M x L x D].
struct FeatureLevels {
  Array3 p;

  int levels() const noexcept { return static_cast<int>(p.levels()); }
  std::size_t steps() const noexcept { return p.steps(); }
  std::size_t features() const noexcept { return p.channels(); }
};

// sqrt(2^m / D): the per-level factor that is folded in before normalisation.
double level_scale(int m, std::size_t features);

// Scaled level norm below which a block is treated as exactly zero.
inline constexpr double kZeroBlockNorm = 1e-12;

// Fractional increments of RFF activations. Every level is anchored at its
// first step before the zero-padded difference, so the first row is zero and a
// constant sequence has no increments at q = 1.
Array3 increments(const Array3& u, const FracDiffOrders& orders);

// Level recursion over precomputed increments. Unit decay gives the
// undecayed features bit for bit.
FeatureLevels signature_levels(const Array3& v, const DecayVector& lambda, ScanOptions options = {});

FeatureLevels rfsf(const Array3& u, const FracDiffOrders& orders, ScanOptions options = {});
FeatureLevels rfdsf(const Array3& u, const FracDiffOrders& orders, const DecayVector& lambda,
                    ScanOptions options = {});

// [L x (M D + 1)]: constant 1, then each level block scaled to unit norm (or
// left at zero when its norm vanishes).
RowMatrix assemble(const FeatureLevels& levels);

// <Phi_m(x), Phi_m(y)> on the final rows with the level scale applied; m is
// 1-based.
double unnormalized_inner(const FeatureLevels& x, const FeatureLevels& y, int m);

// Everything the feature map depends on besides the input sequence.
struct FeatureParams {
  int levels = 0;
  int features = 0;
  int window = 1;
  std::span<const double> frequencies;  // [M x d x D]
  std::span<const double> phases;       // [M x D]
  std::span<const double> orders;       // q, [D]
  std::span<const double> decay;        // lambda, [D]
};

struct FeatureGradients {
  std::vector<double> frequencies;
  std::vector<double> phases;
  std::vector<double> orders;
  std::vector<double> decay;
};

// Full map from an input sequence [L x d] to assembled features, keeping what
// the reverse pass needs.
class FeaturePass {
 public:
  FeaturePass(const RowMatrix& x, const FeatureParams& params, ScanOptions options = {});

  const RowMatrix& features() const noexcept { return phi_; }
  const FeatureLevels& levels() const noexcept { return levels_; }
  // Pullback of d(objective)/d(features) onto the map parameters.
  FeatureGradients backward(const RowMatrix& phi_bar) const;

 private:
  RowMatrix x_;
  int levels_count_;
  int features_;
  std::vector<double> frequencies_;
  std::vector<double> phases_;
  std::vector<double> orders_;
  std::vector<double> decay_;
  int window_;
  ScanOptions options_;

  Array3 anchored_;    // U - U[0]
  Array3 increments_;  // V
  std::vector<Array3> lists_;  // per level m: its m summands before the scan, [m x L x D]
  FeatureLevels levels_;
  RowMatrix phi_;
};

// Forward-only feature map. Streams over time in tiles of tile_steps rows so
// the working set besides the output stays in cache for any sequence length.
RowMatrix feature_map(const RowMatrix& x, const FeatureParams& params, std::size_t tile_steps = 64);

}  // namespace sigforecast
