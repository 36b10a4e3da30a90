#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sigforecast/memory.hpp"

namespace sigforecast {

// Axes of an Array3. Channels are always the last (contiguous) axis.
enum class Axis : int { Level = 0, Time = 1, Channel = 2 };

// Dense real array with shape [levels x steps x channels], row-major.
// A two-dimensional [steps x channels] slice is an Array3 with one level.
class Array3 {
 public:
  using Storage = std::vector<double, TrackingAllocator<double>>;

  Array3() = default;
  // Zero-initialised.
  Array3(std::size_t levels, std::size_t steps, std::size_t channels);
  // Takes ownership of values; throws ArgumentError on size mismatch or
  // non-finite entries.
  Array3(std::size_t levels, std::size_t steps, std::size_t channels,
         std::span<const double> values);

  // Convenience for a single-level [steps x channels] array from rows.
  static Array3 from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t levels() const noexcept { return levels_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t extent(Axis axis) const;

  double& operator()(std::size_t m, std::size_t l, std::size_t k) noexcept {
    return data_[(m * steps_ + l) * channels_ + k];
  }
  double operator()(std::size_t m, std::size_t l, std::size_t k) const noexcept {
    return data_[(m * steps_ + l) * channels_ + k];
  }
  // Out-of-bounds reads (negative or past the end) return zero.
  double at_or_zero(long m, long l, long k) const noexcept;

  std::span<double> level(std::size_t m) noexcept {
    return {data_.data() + m * steps_ * channels_, steps_ * channels_};
  }
  std::span<const double> level(std::size_t m) const noexcept {
    return {data_.data() + m * steps_ * channels_, steps_ * channels_};
  }
  std::span<double> row(std::size_t m, std::size_t l) noexcept {
    return {data_.data() + (m * steps_ + l) * channels_, channels_};
  }
  std::span<const double> row(std::size_t m, std::size_t l) const noexcept {
    return {data_.data() + (m * steps_ + l) * channels_, channels_};
  }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<const double> values() const noexcept { return {data_.data(), data_.size()}; }

  bool same_shape(const Array3& other) const noexcept {
    return levels_ == other.levels_ && steps_ == other.steps_ && channels_ == other.channels_;
  }
  bool all_finite() const noexcept;

 private:
  std::size_t levels_ = 0;
  std::size_t steps_ = 0;
  std::size_t channels_ = 0;
  Storage data_;
};

}  // namespace sigforecast
