#pragma once

// Flat key=value configuration for ScenarioConfig plus CLI output options.
// Keys match the ScenarioConfig field names; q_upsilon takes two
// comma-separated values (position, velocity).

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "beamtrack/simulator.hpp"

namespace beamtrack {

struct CliConfig {
  ScenarioConfig scenario;
  std::string output_dir = "out";
  bool write_csv = true;
  bool write_json = true;
  std::vector<double> quantiles = {0.1, 0.5, 0.9};
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::BadConfig, "key '" + key + "' expects a number, got '" + value + "'");
  }
}

inline long long parse_int(const std::string& key, const std::string& value) {
  long long v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(Errc::BadConfig, "key '" + key + "' expects an integer, got '" + value + "'");
  }
  return v;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split(value, ',')) out.push_back(parse_double(key, item));
  return out;
}

inline std::string join(const std::vector<double>& values) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
  return os.str();
}

}  // namespace detail

/// Applies one key=value setting. Unknown keys are a configuration error.
inline void apply_setting(CliConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  using detail::parse_double;
  using detail::parse_int;
  const std::string key = detail::trim(raw_key);
  const std::string value = detail::trim(raw_value);
  ScenarioConfig& s = cfg.scenario;

  const std::map<std::string, Index*> ints = {
      {"L", &s.L},     {"M_T", &s.M_T}, {"M_R", &s.M_R}, {"N_T", &s.N_T}, {"N_R", &s.N_R},
      {"first_N_T", &s.first_N_T}, {"first_N_R", &s.first_N_R}, {"num_runs", &s.num_runs},
  };
  const std::map<std::string, double*> doubles = {
      {"rho_db", &s.rho_db},
      {"beta", &s.beta},
      {"T_S", &s.T_S},
      {"frame_length", &s.frame_length},
      {"fine_step", &s.fine_step},
      {"sigma_vdot", &s.sigma_vdot},
      {"init_pos_var", &s.init_pos_var},
      {"init_vel_var", &s.init_vel_var},
      {"init_gain_var", &s.init_gain_var},
      {"d_over_lambda", &s.d_over_lambda},
      {"eta", &s.ukf.eta},
      {"kappa", &s.ukf.kappa},
      {"mu", &s.ukf.mu},
  };

  if (auto it = ints.find(key); it != ints.end()) {
    *it->second = static_cast<Index>(parse_int(key, value));
  } else if (auto dt = doubles.find(key); dt != doubles.end()) {
    *dt->second = parse_double(key, value);
  } else if (key == "seed") {
    const long long v = parse_int(key, value);
    if (v < 0) throw Error(Errc::BadConfig, "seed must be nonnegative");
    s.seed = static_cast<std::uint64_t>(v);
  } else if (key == "q_upsilon") {
    const auto q = detail::parse_list(key, value);
    if (q.size() != 2) throw Error(Errc::BadConfig, "q_upsilon expects 'position,velocity'");
    s.q_position = q[0];
    s.q_velocity = q[1];
  } else if (key == "path_beta") {
    s.path_beta = detail::parse_list(key, value);
  } else if (key == "weights") {
    const auto w = detail::parse_list(key, value);
    s.weights = Eigen::Map<const RealVector>(w.data(), static_cast<Index>(w.size()));
  } else if (key == "arms") {
    s.arms = Arms{false, false, false};
    for (const auto& arm : detail::split(value, ',')) {
      if (arm == "tracked") {
        s.arms.tracked = true;
      } else if (arm == "one_shot") {
        s.arms.one_shot = true;
      } else if (arm == "predicted") {
        s.arms.predicted = true;
      } else {
        throw Error(Errc::BadConfig, "unknown arm '" + arm + "'");
      }
    }
  } else if (key == "beams") {
    if (value == "adaptive") {
      s.beams = ScenarioConfig::Beams::adaptive;
    } else if (value == "dft_grid") {
      s.beams = ScenarioConfig::Beams::dft_grid;
    } else if (value == "random_unit") {
      s.beams = ScenarioConfig::Beams::random_unit;
    } else {
      throw Error(Errc::BadConfig, "unknown beam strategy '" + value + "'");
    }
  } else if (key == "output_dir") {
    if (value.empty()) throw Error(Errc::BadConfig, "output_dir may not be empty");
    cfg.output_dir = value;
  } else if (key == "formats") {
    cfg.write_csv = cfg.write_json = false;
    for (const auto& f : detail::split(value, ',')) {
      if (f == "csv") {
        cfg.write_csv = true;
      } else if (f == "json") {
        cfg.write_json = true;
      } else {
        throw Error(Errc::BadConfig, "unknown output format '" + f + "'");
      }
    }
  } else if (key == "quantiles") {
    cfg.quantiles = detail::parse_list(key, value);
    for (double q : cfg.quantiles) {
      if (!(q >= 0.0 && q <= 1.0)) throw Error(Errc::BadConfig, "quantiles must lie in [0, 1]");
    }
    if (cfg.quantiles.empty()) throw Error(Errc::BadConfig, "quantiles may not be empty");
  } else {
    throw Error(Errc::BadConfig, "unknown key '" + key + "'");
  }
}

/// Parses a "key=value" override.
inline void apply_override(CliConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw Error(Errc::BadConfig, "expected key=value, got '" + assignment + "'");
  apply_setting(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

/// Parses config text: one key=value per line, '#' starts a comment.
inline void apply_config_text(CliConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    try {
      apply_override(cfg, line);
    } catch (const Error& e) {
      throw Error(Errc::BadConfig, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline void load_config_file(CliConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::BadConfig, "cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str());
}

/// Every effective setting as key/value strings, in a fixed order.
inline std::vector<std::pair<std::string, std::string>> effective_settings(const CliConfig& cfg) {
  const ScenarioConfig& s = cfg.scenario;
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  std::vector<double> weights(s.weights.data(), s.weights.data() + s.weights.size());
  if (weights.empty()) weights.assign(static_cast<std::size_t>(6 * s.L), 1.0);
  std::string arms;
  if (s.arms.tracked) arms += "tracked,";
  if (s.arms.one_shot) arms += "one_shot,";
  if (s.arms.predicted) arms += "predicted,";
  if (!arms.empty()) arms.pop_back();
  std::string formats = std::string(cfg.write_csv ? "csv" : "") + (cfg.write_csv && cfg.write_json ? "," : "") +
                        (cfg.write_json ? "json" : "");
  return {
      {"L", std::to_string(s.L)},
      {"M_T", std::to_string(s.M_T)},
      {"M_R", std::to_string(s.M_R)},
      {"N_T", std::to_string(s.N_T)},
      {"N_R", std::to_string(s.N_R)},
      {"first_N_T", std::to_string(s.first_tx_beams())},
      {"first_N_R", std::to_string(s.first_rx_beams())},
      {"rho_db", num(s.rho_db)},
      {"beta", num(s.beta)},
      {"path_beta", detail::join(s.path_beta)},
      {"T_S", num(s.T_S)},
      {"frame_length", num(s.frame_length)},
      {"fine_step", num(s.fine_step)},
      {"sigma_vdot", num(s.sigma_vdot)},
      {"init_pos_var", num(s.init_pos_var)},
      {"init_vel_var", num(s.init_vel_var)},
      {"init_gain_var", num(s.init_gain_var)},
      {"q_upsilon", num(s.q_position) + "," + num(s.q_velocity)},
      {"d_over_lambda", num(s.d_over_lambda)},
      {"seed", std::to_string(s.seed)},
      {"num_runs", std::to_string(s.num_runs)},
      {"eta", num(s.ukf.eta)},
      {"kappa", num(s.ukf.kappa)},
      {"mu", num(s.ukf.mu)},
      {"weights", detail::join(weights)},
      {"arms", arms},
      {"beams", s.beams == ScenarioConfig::Beams::adaptive   ? "adaptive"
                : s.beams == ScenarioConfig::Beams::dft_grid ? "dft_grid"
                                                             : "random_unit"},
      {"output_dir", cfg.output_dir},
      {"formats", formats},
      {"quantiles", detail::join(cfg.quantiles)},
  };
}

}  // namespace beamtrack
