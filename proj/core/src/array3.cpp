#include "sigforecast/array3.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sigforecast/errors.hpp"

namespace sigforecast {

Array3::Array3(std::size_t levels, std::size_t steps, std::size_t channels)
    : levels_(levels), steps_(steps), channels_(channels), data_(levels * steps * channels, 0.0) {}

Array3::Array3(std::size_t levels, std::size_t steps, std::size_t channels,
               std::span<const double> values)
    : levels_(levels), steps_(steps), channels_(channels) {
  if (values.size() != levels * steps * channels) {
    throw ArgumentError("Array3: expected " + std::to_string(levels * steps * channels) +
                        " values, got " + std::to_string(values.size()));
  }
  data_.assign(values.begin(), values.end());
  if (!all_finite()) throw ArgumentError("Array3: non-finite entry");
}

Array3 Array3::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t steps = rows.size();
  const std::size_t channels = steps ? rows.front().size() : 0;
  std::vector<double> flat;
  flat.reserve(steps * channels);
  for (const auto& r : rows) {
    if (r.size() != channels) throw ArgumentError("Array3::from_rows: ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Array3(1, steps, channels, flat);
}

std::size_t Array3::extent(Axis axis) const {
  switch (axis) {
    case Axis::Level:
      return levels_;
    case Axis::Time:
      return steps_;
    case Axis::Channel:
      return channels_;
  }
  throw ArgumentError("Array3: invalid axis");
}

double Array3::at_or_zero(long m, long l, long k) const noexcept {
  if (m < 0 || l < 0 || k < 0) return 0.0;
  if (static_cast<std::size_t>(m) >= levels_ || static_cast<std::size_t>(l) >= steps_ ||
      static_cast<std::size_t>(k) >= channels_) {
    return 0.0;
  }
  return (*this)(m, l, k);
}

bool Array3::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace sigforecast
