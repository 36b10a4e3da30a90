#include "sigforecast/dataio.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "sigforecast/errors.hpp"

namespace sigforecast {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<DatasetRecord> parse_jsonlines(std::istream& in, const std::string& source) {
  std::vector<DatasetRecord> records;
  std::string line;
  long number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(number);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object() || !j.contains("target") || !j["target"].is_array()) {
      throw DataError(where + ": record needs a \"target\" array");
    }
    DatasetRecord r;
    r.item_id = j.contains("item_id") && j["item_id"].is_string() ? j["item_id"].get<std::string>()
                                                                   : "series_" + std::to_string(records.size());
    if (j.contains("start")) {
      if (!j["start"].is_string()) throw DataError(where + ": \"start\" must be a string");
      r.start = j["start"].get<std::string>();
    }
    for (const auto& v : j["target"]) {
      if (!v.is_number()) throw DataError(where + ": non-numeric target value " + v.dump());
      const double x = v.get<double>();
      if (!std::isfinite(x)) throw DataError(where + ": non-finite target value");
      r.target.push_back(x);
    }
    if (r.target.empty()) throw DataError(where + ": empty target");
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError(source + ": dataset is empty");
  return records;
}

std::vector<DatasetRecord> load_jsonlines(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_jsonlines(in, path.string());
}

void write_jsonlines(const std::filesystem::path& path, const std::vector<DatasetRecord>& records) {
  std::ofstream out = open_output(path);
  for (const DatasetRecord& r : records) {
    nlohmann::json j;
    j["item_id"] = r.item_id;
    j["start"] = r.start;
    j["target"] = r.target;
    out << j.dump() << '\n';
  }
}

DatasetMetadata load_metadata(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  DatasetMetadata meta;
  bool have_length = false;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find_first_of("=:");
    if (eq == std::string::npos) throw DataError(path.string() + ": expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "freq") {
      meta.freq = value;
    } else if (key == "prediction_length") {
      try {
        meta.prediction_length = std::stoi(value);
      } catch (const std::exception&) {
        throw DataError(path.string() + ": prediction_length is not an integer");
      }
      have_length = true;
    }
  }
  if (!have_length || meta.prediction_length < 1) throw DataError(path.string() + ": missing or invalid prediction_length");
  return meta;
}

void write_metadata(const std::filesystem::path& path, const DatasetMetadata& metadata) {
  std::ofstream out = open_output(path);
  out << "freq=" << metadata.freq << "\nprediction_length=" << metadata.prediction_length << "\n";
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.metadata = load_metadata(dir / "metadata.txt");
  ds.train = load_jsonlines(dir / "train.jsonl");
  if (std::filesystem::exists(dir / "test.jsonl")) ds.test = load_jsonlines(dir / "test.jsonl");
  return ds;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  write_metadata(dir / "metadata.txt", dataset.metadata);
  write_jsonlines(dir / "train.jsonl", dataset.train);
  if (!dataset.test.empty()) write_jsonlines(dir / "test.jsonl", dataset.test);
}

void export_csv(std::ostream& out, const std::vector<DatasetRecord>& records) {
  out << "item_id,t,value\n";
  std::ostringstream line;
  line.precision(17);
  for (const DatasetRecord& r : records)
    for (std::size_t t = 0; t < r.target.size(); ++t) {
      line.str({});
      line << r.item_id << ',' << t << ',' << r.target[t] << '\n';
      out << line.str();
    }
}

std::vector<double> default_synth_periods() { return {200.0, 100.0, 20.0, 10.0}; }
std::vector<double> default_synth_amplitudes() { return {1.0, 0.5, 0.5, 0.25}; }

Dataset synth_multisin(const SynthOptions& options) {
  if (options.n_train < 1) throw ArgumentError("synth: n_train must be >= 1");
  if (options.horizon < 1) throw ArgumentError("synth: horizon must be >= 1");
  const std::vector<double> periods = options.periods.empty() ? default_synth_periods() : options.periods;
  const std::vector<double> amps = options.amplitudes.empty() ? default_synth_amplitudes() : options.amplitudes;
  if (periods.size() != amps.size()) throw ArgumentError("synth: periods and amplitudes differ in length");
  for (double p : periods)
    if (!(p > 0.0)) throw ArgumentError("synth: periods must be positive");

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<double> phases(periods.size());
  for (double& p : phases) p = uniform(rng);

  const int T = options.n_train + options.horizon;
  std::vector<double> y(T, 0.0);
  for (int t = 0; t < T; ++t)
    for (std::size_t j = 0; j < periods.size(); ++j)
      y[t] += amps[j] * std::sin(2.0 * std::numbers::pi * t / periods[j] + phases[j]);

  Dataset ds;
  ds.metadata.freq = "H";
  ds.metadata.prediction_length = options.horizon;
  ds.test.push_back({"multisin", "2000-01-01 00:00:00", y});
  ds.train.push_back({"multisin", "2000-01-01 00:00:00", std::vector<double>(y.begin(), y.begin() + options.n_train)});
  return ds;
}

}  // namespace sigforecast
