#pragma once

// simulate: config -> runs -> paths.csv, esnr.csv, aggregate.csv, summary.json.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamtrack/config.hpp"
#include "beamtrack/simulator.hpp"

namespace beamtrack {

inline constexpr const char* kCsvHeader = "# beamtrack-csv v1";

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_runtime = 2, exit_selftest = 3 };

namespace detail {

using Json = nlohmann::ordered_json;

inline std::string fmt_num(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "" : (v > 0 ? "inf" : "-inf");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline double to_db(double ratio) { return 10.0 * std::log10(ratio); }

inline std::string fmt_db(double ratio) { return std::isnan(ratio) ? "" : fmt_num(to_db(ratio)); }

/// Thread cap from BEAMTRACK_THREADS; unset means the machine default (0).
inline unsigned thread_cap() {
  const char* env = std::getenv("BEAMTRACK_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  const long long v = parse_int("BEAMTRACK_THREADS", env);
  if (v < 1) throw Error(Errc::BadConfig, "BEAMTRACK_THREADS must be a positive integer");
  return static_cast<unsigned>(v);
}

inline void write_paths_csv(const std::filesystem::path& file, const std::vector<RunRecord>& runs) {
  std::ofstream out(file, std::ios::binary);
  out << kCsvHeader << "\nrun,t_s,path,true_aod_v,est_aod_v,true_aoa_v,est_aoa_v\n";
  for (const auto& r : runs) {
    for (const auto& s : r.steps) {
      for (std::size_t l = 0; l < s.paths.size(); ++l) {
        const auto& p = s.paths[l];
        out << r.run_index << ',' << fmt_num(s.t) << ',' << l << ',' << fmt_num(p.true_aod) << ','
            << fmt_num(p.est_aod) << ',' << fmt_num(p.true_aoa) << ',' << fmt_num(p.est_aoa) << '\n';
      }
    }
  }
  if (!out) throw Error(Errc::BadConfig, "failed writing " + file.string());
}

inline void write_esnr_csv(const std::filesystem::path& file, const std::vector<RunRecord>& runs) {
  std::ofstream out(file, std::ios::binary);
  out << kCsvHeader << "\nrun,t_s,loss_tracked_db,loss_oneshot_db,pred_gain_db\n";
  for (const auto& r : runs) {
    for (const auto& s : r.steps) {
      out << r.run_index << ',' << fmt_num(s.t) << ',' << fmt_db(s.loss_tracked) << ',' << fmt_db(s.loss_oneshot)
          << ',' << fmt_db(s.pred_gain) << '\n';
    }
  }
  if (!out) throw Error(Errc::BadConfig, "failed writing " + file.string());
}

inline void write_aggregate_csv(const std::filesystem::path& file, const RunSummary& summary) {
  std::ofstream out(file, std::ios::binary);
  out << kCsvHeader << "\nt_s";
  for (const auto& m : summary.metrics) {
    const bool db = m.name != "aod_error";
    for (double q : summary.levels) out << ',' << m.name << (db ? "_db" : "") << "_q" << fmt_num(q);
  }
  out << '\n';
  for (std::size_t i = 0; i < summary.times.size(); ++i) {
    out << fmt_num(summary.times[i]);
    for (const auto& m : summary.metrics) {
      const bool db = m.name != "aod_error";
      for (Index q = 0; q < m.values.cols(); ++q) {
        const double v = m.values(static_cast<Index>(i), q);
        out << ',' << (db ? fmt_db(v) : fmt_num(v));
      }
    }
    out << '\n';
  }
  if (!out) throw Error(Errc::BadConfig, "failed writing " + file.string());
}

/// Median of a step metric pooled over every fine step with t >= t_min in the non-diverged runs.
template <class Getter>
double pooled_median(const std::vector<RunRecord>& runs, double t_min, bool skip_observations, Getter get) {
  std::vector<double> values;
  for (const auto& r : runs) {
    if (r.diverged) continue;
    for (const auto& s : r.steps) {
      if (s.t < t_min || (skip_observations && s.observation_instant)) continue;
      values.push_back(get(s));
    }
  }
  return median(std::move(values));
}

inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(); }

inline Json build_summary(const CliConfig& cfg, const std::vector<RunRecord>& runs) {
  Json j;
  j["format"] = "beamtrack-summary v1";
  Json config = Json::object();
  for (const auto& [k, v] : effective_settings(cfg)) config[k] = v;
  j["config"] = config;

  Json seeds = Json::array();
  Json failures = Json::array();
  Index diverged = 0;
  for (const auto& r : runs) {
    seeds.push_back(r.seed);
    if (r.diverged) {
      ++diverged;
      failures.push_back({{"run", r.run_index}, {"seed", r.seed}, {"reason", r.failure}});
    }
  }
  j["runs"] = {{"requested", runs.size()},
               {"completed", static_cast<Index>(runs.size()) - diverged},
               {"diverged", diverged},
               {"seeds", seeds},
               {"failures", failures}};

  auto arm = [&](double t_min) {
    auto db = [](double v) { return json_number(std::isfinite(v) ? to_db(v) : v); };
    return Json{
        {"t_min_s", t_min},
        {"loss_tracked_db", db(pooled_median(runs, t_min, false, [](const StepRow& s) { return s.loss_tracked; }))},
        {"loss_oneshot_db", db(pooled_median(runs, t_min, false, [](const StepRow& s) { return s.loss_oneshot; }))},
        {"loss_predicted_db",
         db(pooled_median(runs, t_min, false, [](const StepRow& s) { return s.loss_predicted; }))},
        {"pred_gain_db", db(pooled_median(runs, t_min, true, [](const StepRow& s) { return s.pred_gain; }))},
        {"aod_error_v", json_number(pooled_median(runs, t_min, false, mean_abs_aod_error))},
    };
  };
  j["medians"] = {{"all", arm(0.0)}, {"after_0p5ms", arm(5e-4)}, {"after_1ms", arm(1e-3)}};
  return j;
}

}  // namespace detail

struct SimulateRequest {
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
};

/// Parses and validates everything before any output is created.
inline CliConfig resolve_config(const SimulateRequest& req) {
  CliConfig cfg;
  if (req.config_path) load_config_file(cfg, *req.config_path);
  for (const auto& o : req.overrides) apply_override(cfg, o);
  validate(cfg.scenario);
  if (!cfg.scenario.arms.any()) throw Error(Errc::BadConfig, "at least one arm must be enabled");
  if (!cfg.write_csv && !cfg.write_json) throw Error(Errc::BadConfig, "no output format selected");
  return cfg;
}

inline int cmd_simulate(const SimulateRequest& req, std::ostream& err = std::cerr) {
  CliConfig cfg;
  unsigned threads = 0;
  std::filesystem::path dir;
  try {
    cfg = resolve_config(req);
    threads = detail::thread_cap();
    dir = cfg.output_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
      throw Error(Errc::BadConfig, "cannot create output directory '" + dir.string() + "'");
    }
  } catch (const Error& e) {
    err << "beamtrack: config error: " << e.what() << '\n';
    return exit_config;
  }

  try {
    const std::vector<RunRecord> runs = run_batch(cfg.scenario, threads);
    Index diverged = 0;
    for (const auto& r : runs) {
      if (r.diverged) {
        ++diverged;
        err << "beamtrack: run " << r.run_index << " (seed " << r.seed << ") diverged: " << r.failure << '\n';
      }
    }
    if (cfg.write_csv) {
      detail::write_paths_csv(dir / "paths.csv", runs);
      detail::write_esnr_csv(dir / "esnr.csv", runs);
      if (diverged < static_cast<Index>(runs.size())) {
        detail::write_aggregate_csv(dir / "aggregate.csv", aggregate_runs(runs, cfg.quantiles));
      }
    }
    if (cfg.write_json) {
      std::ofstream out(dir / "summary.json", std::ios::binary);
      out << detail::build_summary(cfg, runs).dump(2) << '\n';
      if (!out) throw Error(Errc::BadConfig, "failed writing summary.json");
    }
    if (diverged == static_cast<Index>(runs.size())) {
      err << "beamtrack: all " << diverged << " runs diverged\n";
      return exit_runtime;
    }
  } catch (const std::exception& e) {
    err << "beamtrack: runtime failure: " << e.what() << '\n';
    return exit_runtime;
  }
  return exit_ok;
}

}  // namespace beamtrack
