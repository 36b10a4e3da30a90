#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace sigforecast {

struct DatasetRecord {
  std::string item_id;
  std::string start;
  std::vector<double> target;
};

struct DatasetMetadata {
  std::string freq = "H";
  int prediction_length = 1;
};

// A dataset directory holds train.jsonl, test.jsonl and metadata.txt. Test
// records are full series whose last prediction_length values are scored.
struct Dataset {
  DatasetMetadata metadata;
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> test;
};

std::vector<DatasetRecord> parse_jsonlines(std::istream& in, const std::string& source = "<stream>");
std::vector<DatasetRecord> load_jsonlines(const std::filesystem::path& path);
void write_jsonlines(const std::filesystem::path& path, const std::vector<DatasetRecord>& records);

DatasetMetadata load_metadata(const std::filesystem::path& path);
void write_metadata(const std::filesystem::path& path, const DatasetMetadata& metadata);

Dataset load_dataset(const std::filesystem::path& dir);
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);

// Columns item_id, t, value.
void export_csv(std::ostream& out, const std::vector<DatasetRecord>& records);

struct SynthOptions {
  int n_train = 700;
  int horizon = 100;
  std::uint64_t seed = 0;
  std::vector<double> periods;     // empty: defaults
  std::vector<double> amplitudes;  // empty: defaults
};
std::vector<double> default_synth_periods();
std::vector<double> default_synth_amplitudes();

// One series: y_t = sum_j a_j sin(2 pi t / P_j + phi_j), phases drawn from the seed.
Dataset synth_multisin(const SynthOptions& options);

}  // namespace sigforecast
