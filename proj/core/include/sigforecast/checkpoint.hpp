#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "sigforecast/forecast.hpp"
#include "sigforecast/model.hpp"

namespace sigforecast {

// Named arrays in a little-endian binary container:
//   "SIGFCKPT" | u32 version | u32 count | entries
// where each entry is u8 kind | u32 name length | name | u64 count | payload
// (f64 values, i64 values or raw bytes).
class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;
  using Entry = std::variant<std::vector<double>, std::vector<std::int64_t>, std::string>;

  void put(const std::string& name, std::vector<double> values) { entries_[name] = std::move(values); }
  void put(const std::string& name, std::vector<std::int64_t> values) { entries_[name] = std::move(values); }
  void put(const std::string& name, std::string text) { entries_[name] = std::move(text); }

  bool contains(const std::string& name) const { return entries_.count(name) > 0; }
  const std::vector<double>& reals(const std::string& name) const;
  const std::vector<std::int64_t>& integers(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

  void write(std::ostream& out) const;
  static Checkpoint read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  std::map<std::string, Entry> entries_;
};

// A trained model with the per-series bookkeeping that travels with it.
struct ModelBundle {
  Model model;
  std::vector<Standardizer> scalers;  // training-series statistics
  std::vector<double> betas;          // calibration per series, empty if not calibrated
};

Checkpoint to_checkpoint(const ModelBundle& bundle);
ModelBundle from_checkpoint(const Checkpoint& checkpoint);

}  // namespace sigforecast
