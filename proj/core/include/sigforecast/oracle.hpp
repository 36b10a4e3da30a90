#pragma once

#include <span>
#include <vector>

#include "sigforecast/array3.hpp"
#include "sigforecast/matrix.hpp"
#include "sigforecast/sigfeatures.hpp"

// Brute-force references for tests and benchmarks. Everything here is
// exponential in the truncation level and guarded by size limits.
namespace sigforecast::oracle {

// levels[m] is the flattened d^m tensor (row-major multi-index); levels[0] = {1}.
struct SignatureTensors {
  int dim = 0;
  std::vector<std::vector<double>> levels;
};

// Extends the signature one increment at a time (Chen's relation).
SignatureTensors exact_signature(const RowMatrix& x, int max_level);
// Same quantity by enumerating every non-decreasing index tuple.
SignatureTensors signature_by_enumeration(const RowMatrix& x, int max_level);

struct BaseKernel {
  enum class Kind { Linear, Gaussian };
  Kind kind = Kind::Linear;
  std::vector<double> lengthscales;  // Gaussian only; one per input dimension

  static BaseKernel linear() { return {}; }
  static BaseKernel gaussian(std::vector<double> ell) { return {Kind::Gaussian, std::move(ell)}; }
  double operator()(const double* a, const double* b, int dim) const;
};

// Level-m signature kernel by enumeration over index tuples of both sequences.
double exact_sig_kernel_level(const RowMatrix& x, const RowMatrix& y, int m, const BaseKernel& base);
// Truncated kernel: sum of levels 0..max_level.
double exact_sig_kernel(const RowMatrix& x, const RowMatrix& y, int max_level, const BaseKernel& base);

// Unscaled level features by direct summation over index tuples of the
// increments v [M x L x D]. Empty decay means no forgetting.
FeatureLevels direct_rfsf(const Array3& v, std::span<const double> decay = {});

}  // namespace sigforecast::oracle
