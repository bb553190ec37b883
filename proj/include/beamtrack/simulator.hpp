#pragma once

// Monte Carlo link simulation: scenario draw, fine-grained truth evolution,
// periodic adaptive sounding with UKF tracking, and SNR-loss metrics.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "beamtrack/beam_design.hpp"
#include "beamtrack/channel_model.hpp"
#include "beamtrack/dynamics.hpp"
#include "beamtrack/sounding.hpp"
#include "beamtrack/ukf.hpp"

namespace beamtrack {

struct Arms {
  bool tracked = true;
  bool one_shot = true;
  bool predicted = true;

  bool any() const { return tracked || one_shot || predicted; }
};

struct ScenarioConfig {
  Index L = 4;
  Index M_T = 16;
  Index M_R = 16;
  Index N_T = 6;
  Index N_R = 6;
  /// Beam counts for the first sounding; 0 means same as N_T / N_R.
  Index first_N_T = 0;
  Index first_N_R = 0;
  double rho_db = 10.0;
  double beta = 0.905;
  std::vector<double> path_beta;  ///< optional per-path override of beta
  double T_S = 1e-4;
  double frame_length = 5e-3;
  double fine_step = 1e-6;
  double sigma_vdot = 100.0 * std::sqrt(2.0 / std::numbers::pi);
  double init_pos_var = 0.1;
  double init_vel_var = 1e6;
  double init_gain_var = 0.01;
  double q_position = 1e-4;
  double q_velocity = 1e2;
  double d_over_lambda = 0.5;
  std::uint64_t seed = 1;
  Index num_runs = 20;
  UkfParams ukf;
  RealVector weights;  ///< diagonal of W; empty means identity
  Arms arms;
  /// Sounding strategy: adaptive design, or a fixed baseline as a control arm.
  enum class Beams { adaptive, dft_grid, random_unit } beams = Beams::adaptive;

  double rho() const { return std::pow(10.0, rho_db / 10.0); }
  ArrayGeometry tx() const { return {M_T, d_over_lambda}; }
  ArrayGeometry rx() const { return {M_R, d_over_lambda}; }
  Index first_tx_beams() const { return first_N_T > 0 ? first_N_T : N_T; }
  Index first_rx_beams() const { return first_N_R > 0 ? first_N_R : N_R; }

  DynamicsModel dynamics() const {
    DynamicsModel m;
    m.num_paths = L;
    m.beta = beta;
    m.path_beta = path_beta;
    m.step = T_S;
    m.q_position = q_position;
    m.q_velocity = q_velocity;
    return m;
  }

  Index steps_per_observation() const { return std::llround(T_S / fine_step); }
  Index num_fine_steps() const { return std::llround(frame_length / fine_step); }
  Index num_observations() const { return std::llround(frame_length / T_S); }
};

namespace detail {

inline bool is_integral_ratio(double num, double den) {
  const double r = num / den;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, std::abs(r)) && std::round(r) >= 1.0;
}

}  // namespace detail

inline void validate(const ScenarioConfig& cfg) {
  auto fail = [](const std::string& what) { throw Error(Errc::BadConfig, what); };
  if (cfg.L < 1) fail("L must be >= 1");
  if (cfg.M_T < 1 || cfg.M_R < 1) fail("array sizes must be >= 1");
  if (cfg.N_T < 1 || cfg.N_R < 1) fail("beam counts must be >= 1");
  if (cfg.N_T * cfg.N_R > 2 * cfg.M_T * cfg.M_R) fail("N_T N_R exceeds the channel dimension");
  if (cfg.first_tx_beams() * cfg.first_rx_beams() > 2 * cfg.M_T * cfg.M_R) fail("first-period beam count too large");
  if (cfg.first_tx_beams() > cfg.M_T || cfg.first_rx_beams() > cfg.M_R || cfg.N_T > cfg.M_T || cfg.N_R > cfg.M_R) {
    fail("beam counts may not exceed antenna counts");
  }
  if (!(cfg.beta > 0.0 && cfg.beta <= 1.0)) fail("beta must lie in (0, 1]");
  if (!cfg.path_beta.empty() && static_cast<Index>(cfg.path_beta.size()) != cfg.L) fail("path_beta needs L values");
  for (double b : cfg.path_beta) {
    if (!(b > 0.0 && b <= 1.0)) fail("path_beta values must lie in (0, 1]");
  }
  if (!(cfg.T_S > 0.0) || !(cfg.fine_step > 0.0) || !(cfg.frame_length > 0.0)) fail("time steps must be positive");
  if (!detail::is_integral_ratio(cfg.T_S, cfg.fine_step)) fail("fine_step must divide T_S");
  if (!detail::is_integral_ratio(cfg.frame_length, cfg.T_S)) fail("frame_length must be a multiple of T_S");
  if (std::isnan(cfg.rho_db)) fail("rho_db must be a number");
  if (cfg.sigma_vdot < 0.0 || cfg.init_pos_var < 0.0 || cfg.init_vel_var < 0.0 || cfg.init_gain_var < 0.0) {
    fail("variances must be nonnegative");
  }
  if (cfg.q_position < 0.0 || cfg.q_velocity < 0.0) fail("q_upsilon must be nonnegative");
  if (!(cfg.d_over_lambda > 0.0)) fail("d_over_lambda must be positive");
  if (cfg.num_runs < 1) fail("num_runs must be >= 1");
  if (cfg.weights.size() != 0 && (cfg.weights.size() != 6 * cfg.L || !(cfg.weights.minCoeff() > 0.0))) {
    fail("weights must list 6L strictly positive values");
  }
  if (!(6.0 * static_cast<double>(cfg.L) + cfg.ukf.lambda(6 * cfg.L) > 0.0)) fail("UKF scaling gives 6L + lambda <= 0");
  if (!cfg.arms.any()) fail("at least one arm must be enabled");
}

namespace detail {

template <class Rng>
double normal(Rng& rng, double mean, double variance) {
  if (variance <= 0.0) return mean;
  std::normal_distribution<double> dist(mean, std::sqrt(variance));
  return dist(rng);
}

template <class Rng>
Complex complex_normal(Rng& rng, double variance) {
  const double re = normal(rng, 0.0, variance / 2.0);
  const double im = normal(rng, 0.0, variance / 2.0);
  return {re, im};
}

template <class Rng>
double rayleigh(Rng& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = 1.0 - uniform(rng);  // (0, 1]
  return sigma * std::sqrt(-2.0 * std::log(u));
}

template <class Rng>
double signed_rayleigh(Rng& rng, double sigma) {
  const double magnitude = rayleigh(rng, sigma);
  std::bernoulli_distribution flip(0.5);
  return flip(rng) ? -magnitude : magnitude;
}

template <class Rng>
double uniform_virtual_position(Rng& rng) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi / 2, std::numbers::pi / 2);
  for (;;) {
    const double theta = angle(rng);
    if (std::abs(std::abs(theta) - std::numbers::pi / 2) > 1e-9) return angle_to_virtual(theta);
  }
}

}  // namespace detail

struct Scenario {
  ChannelState truth;
  ChannelState estimate;
  RealMatrix covariance;
};

/// Unfiltered estimate with the initial-estimate statistics: positions
/// perturbed, velocities drawn zero-mean, gains perturbed.
template <class Rng>
ChannelState draw_initial_estimate(const ChannelState& truth, const ScenarioConfig& cfg, Rng& rng) {
  ChannelState est(truth.num_paths());
  for (Index l = 0; l < truth.num_paths(); ++l) {
    est.set_gain(l, truth.gain(l) + detail::complex_normal(rng, cfg.init_gain_var));
    const double tx_pos = detail::normal(rng, truth.tx_position(l), cfg.init_pos_var);
    const double tx_vel = detail::normal(rng, 0.0, cfg.init_vel_var);
    const double rx_pos = detail::normal(rng, truth.rx_position(l), cfg.init_pos_var);
    const double rx_vel = detail::normal(rng, 0.0, cfg.init_vel_var);
    est.set_tx(l, tx_pos, tx_vel);
    est.set_rx(l, rx_pos, rx_vel);
  }
  return est;
}

inline RealMatrix initial_covariance(const ScenarioConfig& cfg) {
  const Index n = 6 * cfg.L;
  RealVector diag(n);
  for (Index l = 0; l < cfg.L; ++l) {
    diag(2 * l) = diag(2 * l + 1) = cfg.init_gain_var / 2.0;
    for (Index side = 1; side <= 2; ++side) {
      diag(2 * side * cfg.L + 2 * l) = cfg.init_pos_var;
      diag(2 * side * cfg.L + 2 * l + 1) = cfg.init_vel_var;
    }
  }
  return diag.asDiagonal();
}

template <class Rng>
Scenario generate_scenario(const ScenarioConfig& cfg, Rng& rng) {
  validate(cfg);
  Scenario s;
  s.truth = ChannelState(cfg.L);
  for (Index l = 0; l < cfg.L; ++l) {
    s.truth.set_gain(l, detail::complex_normal(rng, 1.0));
    const double tx_pos = detail::uniform_virtual_position(rng);
    const double tx_vel = detail::signed_rayleigh(rng, cfg.sigma_vdot);
    const double rx_pos = detail::uniform_virtual_position(rng);
    const double rx_vel = detail::signed_rayleigh(rng, cfg.sigma_vdot);
    s.truth.set_tx(l, tx_pos, tx_vel);
    s.truth.set_rx(l, rx_pos, rx_vel);
  }
  s.estimate = draw_initial_estimate(s.truth, cfg, rng);
  s.covariance = initial_covariance(cfg);
  return s;
}

// ---------------------------------------------------------------------------
// SNR loss

/// Dominant singular pair of H: H f = s z with unit f, z.
struct DominantBeams {
  ComplexVector f;
  ComplexVector z;
  double gain_sq = 0.0;  ///< |H|_2^2
};

inline DominantBeams dominant_beams(const ComplexMatrix& h) {
  if (h.size() == 0 || h.norm() == 0.0) throw Error(Errc::ZeroChannel, "channel is zero");
  const ComplexMatrix gram = h.adjoint() * h;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(gram);
  const Index top = gram.rows() - 1;
  DominantBeams out;
  out.f = eig.eigenvectors().col(top);
  out.gain_sq = std::max(0.0, eig.eigenvalues()(top));
  const ComplexVector hf = h * out.f;
  out.z = hf / hf.norm();
  return out;
}

inline double spectral_norm_sq(const ComplexMatrix& h) { return dominant_beams(h).gain_sq; }

/// |z^H H f|^2 / |H|_2^2 for beams f, z.
inline double beam_gain_ratio(const ComplexMatrix& h_true, double true_norm_sq, const DominantBeams& beams) {
  return std::norm(beams.z.dot(h_true * beams.f)) / true_norm_sq;
}

/// SNR with beams chosen from the estimated channel relative to perfect CSI.
inline double snr_loss_ratio(const ComplexMatrix& h_true, const ComplexMatrix& h_est) {
  if (h_true.rows() != h_est.rows() || h_true.cols() != h_est.cols()) {
    throw Error(Errc::DimensionMismatch, "true and estimated channels differ in size");
  }
  const double norm_sq = spectral_norm_sq(h_true);
  if (!(norm_sq > 0.0)) throw Error(Errc::ZeroChannel, "true channel is zero");
  return beam_gain_ratio(h_true, norm_sq, dominant_beams(h_est));
}

// ---------------------------------------------------------------------------
// Run records

struct PathSample {
  double true_aod = 0.0;
  double est_aod = 0.0;
  double true_aoa = 0.0;
  double est_aoa = 0.0;
};

struct StepRow {
  double t = 0.0;
  bool observation_instant = false;
  std::vector<PathSample> paths;
  double loss_tracked = std::numeric_limits<double>::quiet_NaN();
  double loss_oneshot = std::numeric_limits<double>::quiet_NaN();
  double loss_predicted = std::numeric_limits<double>::quiet_NaN();
  double pred_gain = std::numeric_limits<double>::quiet_NaN();
};

struct ObservationRow {
  Index k = 0;
  double t = 0.0;
  double weighted_trace = 0.0;  ///< trace(W R_k) after the update
  double innovation_norm = 0.0;
  double rank_one_residual = 0.0;
  bool fallback_beams = false;
};

struct RunRecord {
  Index run_index = 0;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::string failure;
  std::vector<StepRow> steps;
  std::vector<ObservationRow> observations;
};

inline std::uint64_t run_seed(const ScenarioConfig& cfg, Index run_index) {
  return cfg.seed + static_cast<std::uint64_t>(run_index);
}

namespace detail {

enum class Stream : std::uint32_t { scenario = 0, truth = 1, observation = 2, one_shot = 3 };

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream s) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s)};
  return std::mt19937_64(seq);
}

inline bool state_diverged(const ChannelState& x) { return !x.finite() || x.vector().norm() > 1e9; }

}  // namespace detail

/// One frame: truth advances every fine step; every T_S the tracker predicts,
/// designs beams from its prior, sounds and updates. Metrics are computed at
/// every fine step with the held posterior and with its forward prediction.
inline RunRecord run_frame(const ScenarioConfig& cfg, Index run_index = 0) {
  validate(cfg);
  RunRecord rec;
  rec.run_index = run_index;
  rec.seed = run_seed(cfg, run_index);

  auto scenario_rng = detail::make_stream(rec.seed, detail::Stream::scenario);
  auto truth_rng = detail::make_stream(rec.seed, detail::Stream::truth);
  auto obs_rng = detail::make_stream(rec.seed, detail::Stream::observation);
  auto oneshot_rng = detail::make_stream(rec.seed, detail::Stream::one_shot);

  const ArrayGeometry tx = cfg.tx();
  const ArrayGeometry rx = cfg.rx();
  const DynamicsModel model = cfg.dynamics();
  const double rho = cfg.rho();
  const TransitionPair fine_tp = build_transition(model, cfg.fine_step);
  const TransitionPair obs_tp = build_transition(model, cfg.T_S);
  const Index per_obs = cfg.steps_per_observation();
  const Index num_steps = cfg.num_fine_steps();
  const RealVector weights = cfg.weights.size() == 0 ? RealVector::Ones(6 * cfg.L) : cfg.weights;

  Scenario scen = generate_scenario(cfg, scenario_rng);
  ChannelState truth = scen.truth;
  TrackerState tracker{scen.estimate, scen.covariance, 0};

  DominantBeams held_beams;
  DominantBeams oneshot_beams;
  rec.steps.reserve(static_cast<std::size_t>(num_steps));
  rec.observations.reserve(static_cast<std::size_t>(cfg.num_observations()));

  try {
    for (Index j = 0; j < num_steps; ++j) {
      const double t = static_cast<double>(j) * cfg.fine_step;
      const Index offset = j % per_obs;
      if (offset == 0) {
        const Index k = j / per_obs;
        if (k > 0) tracker = predict(tracker, obs_tp);
        tracker.k = k;

        const UnscentedStats stats = channel_statistics(tracker, tx, rx, cfg.ukf);
        BeamRequest req;
        req.tx = tx;
        req.rx = rx;
        req.num_tx_beams = k == 0 ? cfg.first_tx_beams() : cfg.N_T;
        req.num_rx_beams = k == 0 ? cfg.first_rx_beams() : cfg.N_R;
        req.rho = rho;
        req.weights = weights;
        BeamDesignOutput beams;
        if (cfg.beams == ScenarioConfig::Beams::adaptive) {
          beams = design_beams(stats, req);
        } else {
          const auto kind =
              cfg.beams == ScenarioConfig::Beams::dft_grid ? BaselineKind::dft_grid : BaselineKind::random_unit;
          beams.F = baseline_beams(kind, cfg.M_T, req.num_tx_beams, &obs_rng);
          beams.Z = baseline_beams(kind, cfg.M_R, req.num_rx_beams, &obs_rng);
          beams.fallback = true;
        }
        const SoundingPlan plan = build_plan(beams.F, beams.Z);
        const Observation y = observe(plan, real_channel_vector(truth, tx, rx), rho, obs_rng, k);
        const UpdateResult upd = ukf_update(tracker.estimate.vector(), tracker.covariance, stats, plan.G_real,
                                            y.y_real, observation_noise_variance(rho));
        tracker.estimate = ChannelState(cfg.L, upd.mean);
        tracker.covariance = upd.covariance;

        ObservationRow row;
        row.k = k;
        row.t = t;
        row.weighted_trace = (weights.asDiagonal() * tracker.covariance).trace();
        row.innovation_norm = upd.innovation.norm();
        row.rank_one_residual = beams.rank_one_residual;
        row.fallback_beams = beams.fallback;
        rec.observations.push_back(row);

        if (detail::state_diverged(tracker.estimate)) {
          rec.diverged = true;
          rec.failure = "tracker state diverged at k=" + std::to_string(k);
          return rec;
        }
        held_beams = dominant_beams(channel_matrix(tracker.estimate, tx, rx));
        if (cfg.arms.one_shot) {
          oneshot_beams = dominant_beams(channel_matrix(draw_initial_estimate(truth, cfg, oneshot_rng), tx, rx));
        }
      }

      const double horizon = static_cast<double>(offset) * cfg.fine_step;
      const ChannelState predicted = forward_predict_state(tracker.estimate, model, horizon);
      const ComplexMatrix h_true = channel_matrix(truth, tx, rx);
      const double true_norm_sq = spectral_norm_sq(h_true);

      StepRow row;
      row.t = t;
      row.observation_instant = offset == 0;
      row.paths.resize(static_cast<std::size_t>(cfg.L));
      for (Index l = 0; l < cfg.L; ++l) {
        auto& p = row.paths[static_cast<std::size_t>(l)];
        p.true_aod = truth.tx_position(l);
        p.true_aoa = truth.rx_position(l);
        p.est_aod = predicted.tx_position(l);
        p.est_aoa = predicted.rx_position(l);
      }
      if (true_norm_sq > 0.0) {
        const double held = beam_gain_ratio(h_true, true_norm_sq, held_beams);
        if (cfg.arms.tracked) row.loss_tracked = held;
        if (cfg.arms.one_shot) row.loss_oneshot = beam_gain_ratio(h_true, true_norm_sq, oneshot_beams);
        if (cfg.arms.predicted) {
          row.loss_predicted =
              offset == 0 ? held
                          : beam_gain_ratio(h_true, true_norm_sq, dominant_beams(channel_matrix(predicted, tx, rx)));
          row.pred_gain = row.loss_predicted / held;
        }
      }
      rec.steps.push_back(std::move(row));

      truth = advance_truth(truth, fine_tp, truth_rng);
    }
  } catch (const Error& e) {
    rec.diverged = true;
    rec.failure = e.what();
  }
  return rec;
}

/// Runs cfg.num_runs frames on up to `threads` workers (0 = hardware default).
/// Results are ordered by run index regardless of scheduling.
inline std::vector<RunRecord> run_batch(const ScenarioConfig& cfg, unsigned threads = 0) {
  validate(cfg);
  const auto runs = static_cast<std::size_t>(cfg.num_runs);
  std::vector<RunRecord> out(runs);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, runs));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs; i = next++) out[i] = run_frame(cfg, static_cast<Index>(i));
  };
  if (threads <= 1) {
    worker();
    return out;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation

/// Linear-interpolation quantile of the finite entries of `values`.
inline double quantile(std::vector<double> values, double level) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = level * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

inline double mean_abs_aod_error(const StepRow& row) {
  double sum = 0.0;
  for (const auto& p : row.paths) sum += std::abs(p.est_aod - p.true_aod);
  return row.paths.empty() ? 0.0 : sum / static_cast<double>(row.paths.size());
}

struct MetricSeries {
  std::string name;
  RealMatrix values;  ///< time x quantile level
};

struct RunSummary {
  std::vector<double> times;
  std::vector<double> levels;
  std::vector<MetricSeries> metrics;
  Index used_runs = 0;
  Index diverged_runs = 0;

  const MetricSeries& metric(const std::string& name) const {
    for (const auto& m : metrics) {
      if (m.name == name) return m;
    }
    throw Error(Errc::EmptyInput, "no metric named " + name);
  }
};

/// Per-time quantiles of every step metric across non-diverged runs.
inline RunSummary aggregate_runs(const std::vector<RunRecord>& records,
                                 const std::vector<double>& levels = {0.1, 0.5, 0.9}) {
  if (records.empty()) throw Error(Errc::EmptyInput, "no run records to aggregate");
  std::vector<const RunRecord*> used;
  RunSummary out;
  out.levels = levels;
  for (const auto& r : records) {
    if (r.diverged) {
      ++out.diverged_runs;
    } else {
      used.push_back(&r);
    }
  }
  out.used_runs = static_cast<Index>(used.size());
  if (used.empty()) return out;

  const std::size_t steps = used.front()->steps.size();
  for (const auto* r : used) {
    if (r->steps.size() != steps) throw Error(Errc::DimensionMismatch, "runs differ in length");
  }
  using Getter = double (*)(const StepRow&);
  const std::vector<std::pair<std::string, Getter>> getters = {
      {"loss_tracked", [](const StepRow& s) { return s.loss_tracked; }},
      {"loss_oneshot", [](const StepRow& s) { return s.loss_oneshot; }},
      {"loss_predicted", [](const StepRow& s) { return s.loss_predicted; }},
      {"pred_gain", [](const StepRow& s) { return s.pred_gain; }},
      {"aod_error", [](const StepRow& s) { return mean_abs_aod_error(s); }},
  };
  out.times.resize(steps);
  for (std::size_t i = 0; i < steps; ++i) out.times[i] = used.front()->steps[i].t;
  for (const auto& [name, get] : getters) {
    MetricSeries series{name, RealMatrix(static_cast<Index>(steps), static_cast<Index>(levels.size()))};
    std::vector<double> column(used.size());
    for (std::size_t i = 0; i < steps; ++i) {
      for (std::size_t r = 0; r < used.size(); ++r) column[r] = get(used[r]->steps[i]);
      for (std::size_t q = 0; q < levels.size(); ++q) {
        series.values(static_cast<Index>(i), static_cast<Index>(q)) = quantile(column, levels[q]);
      }
    }
    out.metrics.push_back(std::move(series));
  }
  return out;
}

}  // namespace beamtrack
