#include "sigforecast/sigfeatures.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sigforecast/errors.hpp"
#include "sigforecast/parallel.hpp"
#include "sigforecast/randfourier.hpp"

namespace sigforecast {
namespace {

// powers[j * D + k] = lambda_k^j for j = 0..levels.
std::vector<double> decay_powers(std::span<const double> lambda, int levels) {
  const std::size_t D = lambda.size();
  std::vector<double> powers((levels + 1) * D, 1.0);
  for (int j = 1; j <= levels; ++j)
    for (std::size_t k = 0; k < D; ++k) powers[j * D + k] = powers[(j - 1) * D + k] * lambda[k];
  return powers;
}

void anchor_in_place(Array3& u) {
  const std::size_t L = u.steps(), D = u.channels();
  for (std::size_t m = 0; m < u.levels(); ++m) {
    double* a = u.level(m).data();
    for (std::size_t l = L; l-- > 0;)
      for (std::size_t k = 0; k < D; ++k) a[l * D + k] -= a[k];
  }
}

// P_1 = scan(V_1, lambda); for higher levels the summand list is updated in
// place (highest index first) and its sum scanned with lambda^m.
void run_levels(const Array3& v, const std::vector<double>& powers, int blocks, Array3& p,
                std::vector<Array3>* lists) {
  const std::size_t M = v.levels(), L = v.steps(), D = v.channels();
  const std::size_t n = L * D;
  p = Array3(M, L, D);
  if (M == 0 || n == 0) return;

  std::vector<std::vector<double>> r;
  r.reserve(M);
  r.emplace_back(v.level(0).begin(), v.level(0).end());
  std::copy(r[0].begin(), r[0].end(), p.level(0).data());
  kernels::scan(p.level(0).data(), L, D, powers.data() + D, blocks);
  if (lists) {
    lists->clear();
    Array3 first(1, L, D);
    std::copy(r[0].begin(), r[0].end(), first.data());
    lists->push_back(std::move(first));
  }

  for (std::size_t m = 1; m < M; ++m) {
    const double* vm = v.level(m).data();
    r.emplace_back(n, 0.0);
    for (std::size_t q = m; q >= 1; --q) {
      const double inv = 1.0 / static_cast<double>(q + 1);
      const double* src = r[q - 1].data();
      double* dst = r[q].data();
#pragma omp parallel for schedule(static) if (n > 65536)
      for (std::size_t i = 0; i < n; ++i) dst[i] = inv * src[i] * vm[i];
    }
    const double* lam = powers.data() + m * D;
    const double* prev = p.level(m - 1).data();
    double* r0 = r[0].data();
    for (std::size_t k = 0; k < D; ++k) r0[k] = 0.0;
#pragma omp parallel for schedule(static) if (n > 65536)
    for (std::size_t l = 1; l < L; ++l)
      for (std::size_t k = 0; k < D; ++k) r0[l * D + k] = lam[k] * prev[(l - 1) * D + k] * vm[l * D + k];

    double* out = p.level(m).data();
#pragma omp parallel for schedule(static) if (n > 65536)
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t q = 0; q <= m; ++q) s += r[q][i];
      out[i] = s;
    }
    kernels::scan(out, L, D, powers.data() + (m + 1) * D, blocks);

    if (lists) {
      Array3 saved(m + 1, L, D);
      for (std::size_t q = 0; q <= m; ++q) std::copy(r[q].begin(), r[q].end(), saved.level(q).data());
      lists->push_back(std::move(saved));
    }
  }
}

void check_params(const RowMatrix& x, const FeatureParams& params) {
  const std::size_t M = params.levels, D = params.features, d = x.cols();
  if (params.levels < 1 || params.features < 1) throw ArgumentError("feature map needs M >= 1 and D >= 1");
  if (params.window < 1) throw ArgumentError("frac-diff window must be >= 1");
  if (x.rows() < 1) throw ArgumentError("feature map needs at least one step");
  if (params.frequencies.size() != M * d * D) {
    throw ArgumentError("frequencies: expected " + std::to_string(M * d * D) + " values, got " +
                        std::to_string(params.frequencies.size()));
  }
  if (params.phases.size() != M * D) throw ArgumentError("phases: expected M*D values");
  if (params.orders.size() != D) throw ArgumentError("orders: expected D values");
  if (params.decay.size() != D) throw ArgumentError("decay: expected D values");
}

}  // namespace

double level_scale(int m, std::size_t features) {
  return std::sqrt(std::ldexp(1.0, m) / static_cast<double>(features));
}

Array3 increments(const Array3& u, const FracDiffOrders& orders) {
  Array3 anchored = u;
  anchor_in_place(anchored);
  return frac_diff(anchored, orders);
}

FeatureLevels signature_levels(const Array3& v, const DecayVector& lambda, ScanOptions options) {
  if (v.levels() < 1) throw ArgumentError("signature_levels: need at least one level");
  if (lambda.size() != v.channels()) {
    throw ArgumentError("signature_levels: decay has " + std::to_string(lambda.size()) + " channels, increments have " +
                        std::to_string(v.channels()));
  }
  FeatureLevels out;
  run_levels(v, decay_powers(lambda.values(), static_cast<int>(v.levels())), options.blocks, out.p, nullptr);
  return out;
}

FeatureLevels rfsf(const Array3& u, const FracDiffOrders& orders, ScanOptions options) {
  return signature_levels(increments(u, orders), DecayVector::unit(u.channels()), options);
}

FeatureLevels rfdsf(const Array3& u, const FracDiffOrders& orders, const DecayVector& lambda,
                    ScanOptions options) {
  return signature_levels(increments(u, orders), lambda, options);
}

RowMatrix assemble(const FeatureLevels& levels) {
  const std::size_t M = levels.p.levels(), L = levels.p.steps(), D = levels.p.channels();
  RowMatrix phi = RowMatrix::Zero(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(M * D + 1));
#pragma omp parallel for schedule(static) if (L * M * D > 65536)
  for (std::size_t l = 0; l < L; ++l) {
    phi(l, 0) = 1.0;
    for (std::size_t m = 0; m < M; ++m) {
      const double c = level_scale(static_cast<int>(m) + 1, D);
      const auto row = levels.p.row(m, l);
      double norm2 = 0.0;
      for (double v : row) norm2 += (c * v) * (c * v);
      const double norm = std::sqrt(norm2);
      if (norm < kZeroBlockNorm) continue;
      for (std::size_t k = 0; k < D; ++k) phi(l, 1 + m * D + k) = c * row[k] / norm;
    }
  }
  return phi;
}

double unnormalized_inner(const FeatureLevels& x, const FeatureLevels& y, int m) {
  if (m < 1 || m > x.levels() || m > y.levels()) {
    throw ArgumentError("unnormalized_inner: level " + std::to_string(m) + " out of range");
  }
  if (x.features() != y.features()) throw ArgumentError("unnormalized_inner: feature widths differ");
  if (x.steps() == 0 || y.steps() == 0) return 0.0;
  const auto a = x.p.row(m - 1, x.steps() - 1);
  const auto b = y.p.row(m - 1, y.steps() - 1);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  const double c = level_scale(m, x.features());
  return c * c * s;
}

FeaturePass::FeaturePass(const RowMatrix& x, const FeatureParams& params, ScanOptions options)
    : x_(x),
      levels_count_(params.levels),
      features_(params.features),
      frequencies_(params.frequencies.begin(), params.frequencies.end()),
      phases_(params.phases.begin(), params.phases.end()),
      orders_(params.orders.begin(), params.orders.end()),
      decay_(params.decay.begin(), params.decay.end()),
      window_(params.window),
      options_(options) {
  check_params(x, params);
  DecayVector lambda(decay_);
  anchored_ = rff_levels(x_, frequencies_, phases_, levels_count_, features_);
  anchor_in_place(anchored_);
  increments_ = frac_diff(anchored_, FracDiffOrders(orders_, window_));
  run_levels(increments_, decay_powers(lambda.values(), levels_count_), options_.blocks, levels_.p, &lists_);
  phi_ = assemble(levels_);
}

FeatureGradients FeaturePass::backward(const RowMatrix& phi_bar) const {
  const std::size_t M = levels_count_, D = features_, L = x_.rows(), d = x_.cols();
  const std::size_t n = L * D;
  if (phi_bar.rows() != phi_.rows() || phi_bar.cols() != phi_.cols()) {
    throw ArgumentError("FeaturePass::backward: gradient shape does not match the features");
  }
  const std::vector<double> powers = decay_powers(decay_, levels_count_);
  FeatureGradients grad;
  grad.decay.assign(D, 0.0);
  grad.orders.assign(D, 0.0);

  // Normalisation: phi = s / |s| with s = c P.
  Array3 pbar(M, L, D);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t m = 0; m < M; ++m) {
      const double c = level_scale(static_cast<int>(m) + 1, D);
      const auto row = levels_.p.row(m, l);
      double norm2 = 0.0;
      for (double v : row) norm2 += (c * v) * (c * v);
      const double norm = std::sqrt(norm2);
      if (norm < kZeroBlockNorm) continue;
      double dot = 0.0;
      for (std::size_t k = 0; k < D; ++k) dot += phi_(l, 1 + m * D + k) * phi_bar(l, 1 + m * D + k);
      auto out = pbar.row(m, l);
      for (std::size_t k = 0; k < D; ++k)
        out[k] = c * (phi_bar(l, 1 + m * D + k) - phi_(l, 1 + m * D + k) * dot) / norm;
    }

  // Level recursion, top level first. extra[q] holds what level m+1 sends
  // back to summand q of level m.
  Array3 vbar(M, L, D);
  std::vector<std::vector<double>> extra;
  std::vector<double> sbar(n);
  for (std::size_t m = M; m-- > 0;) {
    const double* mu = powers.data() + (m + 1) * D;
    const double* pm = levels_.p.level(m).data();
    std::copy(pbar.level(m).begin(), pbar.level(m).end(), sbar.begin());
    kernels::scan(sbar.data(), L, D, mu, options_.blocks, /*reverse=*/true);
    for (std::size_t k = 0; k < D; ++k) {
      double acc = 0.0;
      for (std::size_t l = 1; l < L; ++l) acc += sbar[l * D + k] * pm[(l - 1) * D + k];
      grad.decay[k] += acc * static_cast<double>(m + 1) * powers[m * D + k];
    }

    double* vb = vbar.level(m).data();
    auto summand_bar = [&](std::size_t q, std::size_t i) {
      return extra.empty() ? sbar[i] : sbar[i] + extra[q][i];
    };
    if (m == 0) {
      for (std::size_t i = 0; i < n; ++i) vb[i] += summand_bar(0, i);
      break;
    }

    const double* vm = increments_.level(m).data();
    const Array3& prev_list = lists_[m - 1];
    std::vector<std::vector<double>> next_extra(m, std::vector<double>(n, 0.0));
    for (std::size_t q = m; q >= 1; --q) {
      const double inv = 1.0 / static_cast<double>(q + 1);
      const double* src = prev_list.level(q - 1).data();
      double* ne = next_extra[q - 1].data();
      for (std::size_t i = 0; i < n; ++i) {
        const double g = inv * summand_bar(q, i);
        ne[i] += g * vm[i];
        vb[i] += g * src[i];
      }
    }
    const double* lam = powers.data() + m * D;
    const double* prev = levels_.p.level(m - 1).data();
    double* prev_bar = pbar.level(m - 1).data();
    for (std::size_t k = 0; k < D; ++k) {
      double acc = 0.0;
      for (std::size_t l = 1; l < L; ++l) {
        const std::size_t i = l * D + k;
        const double g = summand_bar(0, i);
        prev_bar[i - D] += lam[k] * g * vm[i];
        vb[i] += lam[k] * prev[i - D] * g;
        acc += g * prev[i - D] * vm[i];
      }
      grad.decay[k] += acc * static_cast<double>(m) * powers[(m - 1) * D + k];
    }
    extra = std::move(next_extra);
  }

  // Fractional difference and anchoring.
  const std::vector<double> weights = frac_diff_weight_table(FracDiffOrders(orders_, window_));
  std::vector<double> weight_bar(static_cast<std::size_t>(window_) * D, 0.0);
  Array3 ubar(M, L, D);
  for (std::size_t m = 0; m < M; ++m) {
    kernels::frac_diff_adjoint(vbar.level(m).data(), ubar.level(m).data(), L, D, weights.data(), window_);
    kernels::frac_diff_weight_grad(vbar.level(m).data(), anchored_.level(m).data(), weight_bar.data(), L, D,
                                   window_);
    double* ub = ubar.level(m).data();
    for (std::size_t k = 0; k < D; ++k) {
      double total = 0.0;
      for (std::size_t l = 0; l < L; ++l) total += ub[l * D + k];
      ub[k] -= total;
    }
  }
  for (std::size_t k = 0; k < D; ++k) {
    const std::vector<double> dw = frac_diff_weight_derivatives(orders_[k], window_);
    double acc = 0.0;
    for (int j = 0; j < window_; ++j) acc += weight_bar[j * D + k] * dw[j];
    grad.orders[k] = acc;
  }

  // Random Fourier features: U = cos(X Omega + b).
  grad.frequencies.assign(M * d * D, 0.0);
  grad.phases.assign(M * D, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    Eigen::Map<const RowMatrix> omega(frequencies_.data() + m * d * D, d, D);
    Eigen::Map<const Eigen::RowVectorXd> b(phases_.data() + m * D, D);
    RowMatrix z = x_ * omega;
    z.rowwise() += b;
    Eigen::Map<const RowMatrix> ub(ubar.level(m).data(), L, D);
    const RowMatrix zbar = -(z.array().sin() * ub.array()).matrix();
    Eigen::Map<RowMatrix>(grad.frequencies.data() + m * d * D, d, D) = x_.transpose() * zbar;
    // Plain loop: Eigen's column sum into an unaligned destination changes
    // summation order with the buffer address.
    double* gp = grad.phases.data() + m * D;
    for (Eigen::Index l = 0; l < zbar.rows(); ++l)
      for (Eigen::Index k = 0; k < zbar.cols(); ++k) gp[k] += zbar(l, k);
  }
  return grad;
}

namespace {

// One channel range [k0, k0 + width) of the streamed feature map. Every stage
// is channelwise, so ranges run independently; in time only the frac-diff
// window and the scan carries cross a tile boundary.
class ChannelStream {
 public:
  ChannelStream(const RowMatrix& x, const FeatureParams& params, const std::vector<double>& taps,
                const std::vector<double>& powers, std::size_t k0, std::size_t width, std::size_t tile)
      : x_(x), p_(params), taps_(taps), powers_(powers), k0_(k0), c_(width), tile_(tile),
        M_(params.levels), D_(params.features), hist_(params.window - 1),
        u_((hist_ + tile) * width * M_), u0_(M_ * width), v_(tile * width), r_(M_ * tile * width),
        pt_(M_ * tile * width), carry_(M_ * width) {}

  void run(RowMatrix& phi) {
    const std::size_t L = static_cast<std::size_t>(x_.rows());
    for (std::size_t l0 = 0; l0 < L; l0 += tile_) step(l0, std::min(L, l0 + tile_), phi);
  }

 private:
  double* ubuf(std::size_t m) { return u_.data() + m * (hist_ + tile_) * c_; }
  double* r(std::size_t q) { return r_.data() + q * tile_ * c_; }
  double* pt(std::size_t m) { return pt_.data() + m * tile_ * c_; }

  // Anchored lift of rows [l0, l1) for level m, written after the history rows.
  void lift(std::size_t m, std::size_t l0, std::size_t l1) {
    const std::size_t n = l1 - l0, d = static_cast<std::size_t>(x_.cols());
    const double* om = p_.frequencies.data() + m * d * D_ + k0_;
    const double* b = p_.phases.data() + m * D_ + k0_;
    // Rows padded to whole SIMD packets: Eigen's vector cos and the scalar
    // remainder disagree in the last bit, and which values land in the
    // remainder would otherwise depend on the tile and chunk shape.
    const std::size_t w = (c_ + 15) / 16 * 16;
    RowMatrix z = RowMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(w));
    for (std::size_t i = 0; i < n; ++i) {
      double* zi = z.data() + i * w;
      for (std::size_t j = 0; j < d; ++j) {
        const double xj = x_(static_cast<Eigen::Index>(l0 + i), static_cast<Eigen::Index>(j));
        const double* oj = om + j * D_;
        for (std::size_t k = 0; k < c_; ++k) zi[k] += xj * oj[k];
      }
      for (std::size_t k = 0; k < c_; ++k) zi[k] += b[k];
    }
    z = z.array().cos().matrix();
    double* u = ubuf(m) + hist_ * c_;
    double* u0 = u0_.data() + m * c_;
    if (l0 == 0) std::copy(z.data(), z.data() + c_, u0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < c_; ++k) u[i * c_ + k] = z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) - u0[k];
  }

  void frac_diff_rows(std::size_t m, std::size_t l0, std::size_t l1) {
    const double* a = ubuf(m) + hist_ * c_;  // a - j * c_ reaches into the history
    for (std::size_t l = l0; l < l1; ++l) {
      const std::size_t i = l - l0;
      double* o = v_.data() + i * c_;
      for (std::size_t k = 0; k < c_; ++k) o[k] = taps_[k0_ + k] * a[i * c_ + k];
      const std::size_t n = std::min<std::size_t>(p_.window, l + 1);
      for (std::size_t j = 1; j < n; ++j) {
        const double* w = taps_.data() + j * D_ + k0_;
        const double* src = a + (static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(j)) * static_cast<std::ptrdiff_t>(c_);
        for (std::size_t k = 0; k < c_; ++k) o[k] += w[k] * src[k];
      }
    }
  }

  void step(std::size_t l0, std::size_t l1, RowMatrix& phi) {
    const std::size_t n = l1 - l0;
    for (std::size_t m = 0; m < M_; ++m) {
      lift(m, l0, l1);
      frac_diff_rows(m, l0, l1);
      const double* vm = v_.data();
      if (m == 0) {
        std::copy(vm, vm + n * c_, r(0));
        std::copy(vm, vm + n * c_, pt(0));
      } else {
        for (std::size_t q = m; q >= 1; --q) {
          const double inv = 1.0 / static_cast<double>(q + 1);
          const double* src = r(q - 1);
          double* dst = r(q);
          for (std::size_t i = 0; i < n * c_; ++i) dst[i] = inv * src[i] * vm[i];
        }
        const double* lam = powers_.data() + m * D_ + k0_;
        const double* prev = pt(m - 1);
        const double* prev_carry = carry_.data() + (m - 1) * c_;
        double* r0 = r(0);
        for (std::size_t i = 0; i < n; ++i) {
          const double* pp = i > 0 ? prev + (i - 1) * c_ : prev_carry;
          for (std::size_t k = 0; k < c_; ++k)
            r0[i * c_ + k] = l0 + i == 0 ? 0.0 : lam[k] * pp[k] * vm[i * c_ + k];
        }
        double* out = pt(m);
        for (std::size_t i = 0; i < n * c_; ++i) {
          double s = 0.0;
          for (std::size_t q = 0; q <= m; ++q) s += r(q)[i];
          out[i] = s;
        }
      }
      // Scan, continuing from the previous tile. The carry of level m - 1 was
      // read above, so it is safe to advance it after level m - 1 finished.
      const double* lam = powers_.data() + (m + 1) * D_ + k0_;
      double* y = pt(m);
      double* carry = carry_.data() + m * c_;
      for (std::size_t i = 0; i < n; ++i) {
        if (l0 + i > 0) {
          const double* yp = i > 0 ? y + (i - 1) * c_ : carry;
          for (std::size_t k = 0; k < c_; ++k) y[i * c_ + k] += lam[k] * yp[k];
        }
      }
      if (m > 0) std::copy(pt(m - 1) + (n - 1) * c_, pt(m - 1) + n * c_, carry_.data() + (m - 1) * c_);
      const double scale = level_scale(static_cast<int>(m) + 1, D_);
      for (std::size_t i = 0; i < n; ++i) {
        double* row = phi.data() + (l0 + i) * static_cast<std::size_t>(phi.cols()) + 1 + m * D_ + k0_;
        for (std::size_t k = 0; k < c_; ++k) row[k] = scale * y[i * c_ + k];
      }
      std::copy(ubuf(m) + n * c_, ubuf(m) + (hist_ + n) * c_, ubuf(m));
    }
    std::copy(pt(M_ - 1) + (n - 1) * c_, pt(M_ - 1) + n * c_, carry_.data() + (M_ - 1) * c_);
  }

  const RowMatrix& x_;
  const FeatureParams& p_;
  const std::vector<double>& taps_;
  const std::vector<double>& powers_;
  std::size_t k0_, c_, tile_, M_, D_, hist_;
  std::vector<double> u_, u0_, v_, r_, pt_, carry_;
};

}  // namespace

RowMatrix feature_map(const RowMatrix& x, const FeatureParams& params, std::size_t tile_steps) {
  check_params(x, params);
  if (tile_steps < 1) throw ArgumentError("feature_map: tile_steps must be >= 1");
  const std::size_t M = params.levels, D = params.features, L = static_cast<std::size_t>(x.rows());
  const std::vector<double> taps = frac_diff_weight_table(
      FracDiffOrders(std::vector<double>(params.orders.begin(), params.orders.end()), params.window));
  const std::vector<double> powers =
      decay_powers(DecayVector(std::vector<double>(params.decay.begin(), params.decay.end())).values(), params.levels);

  RowMatrix phi(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(M * D + 1));
  const std::size_t threads = static_cast<std::size_t>(thread_count());
  const std::size_t width = threads <= 1 ? D : std::max<std::size_t>(8, (D + threads - 1) / threads);
  const std::size_t chunks = (D + width - 1) / width;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t k0 = c * width;
    ChannelStream(x, params, taps, powers, k0, std::min(width, D - k0), tile_steps).run(phi);
  }

#pragma omp parallel for schedule(static) if (L * M * D > 65536)
  for (std::size_t l = 0; l < L; ++l) {
    phi(l, 0) = 1.0;
    for (std::size_t m = 0; m < M; ++m) {
      double* row = phi.data() + l * (M * D + 1) + 1 + m * D;
      double norm2 = 0.0;
      for (std::size_t k = 0; k < D; ++k) norm2 += row[k] * row[k];
      const double norm = std::sqrt(norm2);
      if (norm < kZeroBlockNorm) {
        std::fill(row, row + D, 0.0);
        continue;
      }
      for (std::size_t k = 0; k < D; ++k) row[k] /= norm;
    }
  }
  return phi;
}

}  // namespace sigforecast
