#include "sigforecast/oracle.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "sigforecast/errors.hpp"

namespace sigforecast::oracle {
namespace {

constexpr double kMaxTensorEntries = 1e6;
constexpr double kMaxKernelPairs = 1e7;

double count_tuples(long n, int m) {
  // Non-decreasing m-tuples drawn from n values: binom(n + m - 1, m).
  if (m == 0) return 1.0;
  if (n <= 0) return 0.0;
  return std::round(std::exp(std::lgamma(double(n + m)) - std::lgamma(double(m + 1)) - std::lgamma(double(n))));
}

// Calls f on every non-decreasing tuple of length m with entries in [lo, hi].
void for_each_tuple(int m, int lo, int hi, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> idx(m, lo);
  if (m == 0) {
    f(idx);
    return;
  }
  if (hi < lo) return;
  for (;;) {
    f(idx);
    int p = m - 1;
    while (p >= 0 && idx[p] == hi) --p;
    if (p < 0) return;
    ++idx[p];
    for (int q = p + 1; q < m; ++q) idx[q] = idx[p];
  }
}

// 1 / i!: product over distinct entries of (multiplicity)!.
double inverse_repetition_weight(const std::vector<int>& idx) {
  std::map<int, int> counts;
  for (int i : idx) ++counts[i];
  double denom = 1.0;
  for (const auto& [value, count] : counts) denom *= std::tgamma(count + 1.0);
  return 1.0 / denom;
}

std::size_t ipow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

void check_signature_size(const RowMatrix& x, int max_level) {
  if (x.rows() < 1) throw ArgumentError("signature needs at least one point");
  if (max_level < 1) throw ArgumentError("signature needs max_level >= 1");
  if (std::pow(double(x.cols()), max_level) > kMaxTensorEntries) {
    throw ResourceError("signature: d^M = " + std::to_string(std::pow(double(x.cols()), max_level)) +
                        " exceeds the size guard");
  }
}

std::vector<double> increment(const RowMatrix& x, Eigen::Index l) {
  std::vector<double> dx(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) dx[j] = x(l, j) - x(l - 1, j);
  return dx;
}

}  // namespace

SignatureTensors exact_signature(const RowMatrix& x, int max_level) {
  check_signature_size(x, max_level);
  const std::size_t d = x.cols();
  SignatureTensors sig;
  sig.dim = static_cast<int>(d);
  sig.levels.resize(max_level + 1);
  sig.levels[0] = {1.0};
  for (int m = 1; m <= max_level; ++m) sig.levels[m].assign(ipow(d, m), 0.0);

  for (Eigen::Index l = 1; l < x.rows(); ++l) {
    const std::vector<double> dx = increment(x, l);
    // powers[p] = dx^{(x) p} / p!
    std::vector<std::vector<double>> powers(max_level + 1);
    powers[0] = {1.0};
    for (int p = 1; p <= max_level; ++p) {
      powers[p].resize(ipow(d, p));
      for (std::size_t a = 0; a < powers[p - 1].size(); ++a)
        for (std::size_t j = 0; j < d; ++j) powers[p][a * d + j] = powers[p - 1][a] * dx[j] / p;
    }
    // Update high levels first so each reads the previous step's lower levels.
    for (int m = max_level; m >= 1; --m) {
      std::vector<double>& out = sig.levels[m];
      for (int p = 1; p <= m; ++p) {
        const std::vector<double>& lower = sig.levels[m - p];
        const std::vector<double>& pw = powers[p];
        for (std::size_t a = 0; a < lower.size(); ++a)
          for (std::size_t b = 0; b < pw.size(); ++b) out[a * pw.size() + b] += lower[a] * pw[b];
      }
    }
  }
  return sig;
}

SignatureTensors signature_by_enumeration(const RowMatrix& x, int max_level) {
  check_signature_size(x, max_level);
  const std::size_t d = x.cols();
  const int K = static_cast<int>(x.rows()) - 1;
  SignatureTensors sig;
  sig.dim = static_cast<int>(d);
  sig.levels.resize(max_level + 1);
  sig.levels[0] = {1.0};
  for (int m = 1; m <= max_level; ++m) {
    std::vector<double>& out = sig.levels[m];
    out.assign(ipow(d, m), 0.0);
    for_each_tuple(m, 1, K, [&](const std::vector<int>& idx) {
      const double w = inverse_repetition_weight(idx);
      for (std::size_t flat = 0; flat < out.size(); ++flat) {
        double prod = w;
        std::size_t rest = flat;
        for (int p = m - 1; p >= 0; --p) {
          const std::size_t j = rest % d;
          rest /= d;
          prod *= x(idx[p], j) - x(idx[p] - 1, j);
        }
        out[flat] += prod;
      }
    });
  }
  return sig;
}

double BaseKernel::operator()(const double* a, const double* b, int dim) const {
  if (kind == Kind::Linear) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += a[i] * b[i];
    return s;
  }
  if (lengthscales.size() != static_cast<std::size_t>(dim)) {
    throw ArgumentError("Gaussian base kernel needs one lengthscale per dimension");
  }
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double r = (a[i] - b[i]) / lengthscales[i];
    s += r * r;
  }
  return std::exp(-0.5 * s);
}

double exact_sig_kernel_level(const RowMatrix& x, const RowMatrix& y, int m, const BaseKernel& base) {
  if (x.cols() != y.cols()) throw ArgumentError("signature kernel: sequences differ in dimension");
  if (x.rows() < 1 || y.rows() < 1) throw ArgumentError("signature kernel: empty sequence");
  if (m < 0) throw ArgumentError("signature kernel: negative level");
  if (m == 0) return 1.0;
  const int K = static_cast<int>(x.rows()) - 1;
  const int L = static_cast<int>(y.rows()) - 1;
  if (count_tuples(K, m) * count_tuples(L, m) > kMaxKernelPairs) {
    throw ResourceError("signature kernel: enumeration exceeds the size guard");
  }
  const int dim = static_cast<int>(x.cols());
  // Gram matrix of the base kernel and its second-order differences over
  // increment indices 1..K x 1..L.
  RowMatrix gram(K + 1, L + 1);
  for (int i = 0; i <= K; ++i)
    for (int j = 0; j <= L; ++j) gram(i, j) = base(&x(i, 0), &y(j, 0), dim);
  RowMatrix delta = RowMatrix::Zero(K + 1, L + 1);
  for (int i = 1; i <= K; ++i)
    for (int j = 1; j <= L; ++j) delta(i, j) = gram(i, j) - gram(i - 1, j) - gram(i, j - 1) + gram(i - 1, j - 1);

  std::vector<std::vector<int>> tuples_y;
  for_each_tuple(m, 1, L, [&](const std::vector<int>& j) { tuples_y.push_back(j); });
  std::vector<double> weights_y;
  for (const auto& j : tuples_y) weights_y.push_back(inverse_repetition_weight(j));

  double total = 0.0;
  for_each_tuple(m, 1, K, [&](const std::vector<int>& i) {
    const double wi = inverse_repetition_weight(i);
    for (std::size_t t = 0; t < tuples_y.size(); ++t) {
      double prod = wi * weights_y[t];
      for (int p = 0; p < m; ++p) prod *= delta(i[p], tuples_y[t][p]);
      total += prod;
    }
  });
  return total;
}

double exact_sig_kernel(const RowMatrix& x, const RowMatrix& y, int max_level, const BaseKernel& base) {
  double total = 0.0;
  for (int m = 0; m <= max_level; ++m) total += exact_sig_kernel_level(x, y, m, base);
  return total;
}

FeatureLevels direct_rfsf(const Array3& v, std::span<const double> decay) {
  const std::size_t M = v.levels(), L = v.steps(), D = v.channels();
  if (M < 1) throw ArgumentError("direct_rfsf: need at least one level");
  if (L > 12 || M > 4) throw ResourceError("direct_rfsf: limited to L <= 12 and M <= 4");
  if (!decay.empty() && decay.size() != D) throw ArgumentError("direct_rfsf: decay must have D entries");

  FeatureLevels out;
  out.p = Array3(M, L, D);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t m = 1; m <= M; ++m)
      for_each_tuple(static_cast<int>(m), 0, static_cast<int>(l), [&](const std::vector<int>& idx) {
        const double w = inverse_repetition_weight(idx);
        for (std::size_t k = 0; k < D; ++k) {
          double prod = w;
          for (std::size_t p = 0; p < m; ++p) {
            prod *= v(p, idx[p], k);
            if (!decay.empty()) prod *= std::pow(decay[k], double(l - idx[p]));
          }
          out.p(m - 1, l, k) += prod;
        }
      });
  return out;
}

}  // namespace sigforecast::oracle
