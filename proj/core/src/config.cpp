#include "sigforecast/config.hpp"

#include <charconv>
#include <fstream>
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

double to_real(const std::string& v, const std::string& where) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw ArgumentError(where + ": '" + v + "' is not a number");
  return out;
}

long to_integer(const std::string& v, const std::string& where) {
  long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ArgumentError(where + ": '" + v + "' is not an integer");
  }
  return out;
}

bool to_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ArgumentError(where + ": '" + v + "' is not a boolean");
}

std::vector<double> to_list(const std::string& v, const std::string& where) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_real(trim(item), where));
  if (out.empty()) throw ArgumentError(where + ": empty list");
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::stringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(number);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ArgumentError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "D") {
      cfg.model.features = static_cast<int>(to_integer(value, where));
    } else if (key == "M") {
      cfg.model.levels = static_cast<int>(to_integer(value, where));
    } else if (key == "lags") {
      cfg.model.lags = static_cast<int>(to_integer(value, where));
    } else if (key == "W") {
      cfg.model.window = static_cast<int>(to_integer(value, where));
    } else if (key == "lr") {
      cfg.lr = to_real(value, where);
    } else if (key == "epochs") {
      cfg.epochs = static_cast<int>(to_integer(value, where));
    } else if (key == "min_steps") {
      cfg.min_steps = to_integer(value, where);
    } else if (key == "penalty_weight") {
      cfg.model.penalty_weight = to_real(value, where);
    } else if (key == "mode") {
      cfg.model.mode = parse_objective_mode(value);
    } else if (key == "quantiles") {
      cfg.quantiles = to_list(value, where);
    } else if (key == "calibration_grid") {
      cfg.calibration_grid = to_list(value, where);
    } else if (key == "season") {
      cfg.season = static_cast<int>(to_integer(value, where));
    } else if (key == "seed") {
      cfg.model.seed = static_cast<std::uint64_t>(to_integer(value, where));
    } else if (key == "variational") {
      cfg.model.variational = to_bool(value, where);
    } else if (key == "shared_covariance") {
      cfg.model.shared_covariance = to_bool(value, where);
    } else {
      throw ArgumentError(where + ": unknown key '" + key + "'");
    }
  }
  cfg.model.validate();
  if (!(cfg.lr > 0.0)) throw ArgumentError(source + ": lr must be positive");
  if (cfg.epochs < 0 || cfg.min_steps < 0) throw ArgumentError(source + ": epochs and min_steps must be >= 0");
  if (cfg.season < 0) throw ArgumentError(source + ": season must be >= 0");
  for (std::size_t i = 0; i < cfg.quantiles.size(); ++i) {
    if (!(cfg.quantiles[i] > 0.0 && cfg.quantiles[i] < 1.0) || (i > 0 && !(cfg.quantiles[i] > cfg.quantiles[i - 1]))) {
      throw ArgumentError(source + ": quantiles must be strictly increasing in (0, 1)");
    }
  }
  for (double b : cfg.calibration_grid)
    if (!(b > 0.0)) throw ArgumentError(source + ": calibration_grid entries must be positive");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

int default_season(const std::string& freq) {
  if (freq == "H" || freq == "h" || freq == "1H") return 24;
  if (freq == "D" || freq == "d" || freq == "1D") return 7;
  return 1;
}

}  // namespace sigforecast
