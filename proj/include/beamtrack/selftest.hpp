#pragma once

// Numeric invariant suite behind `beamtrack selftest`.

#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "beamtrack/beam_design.hpp"
#include "beamtrack/dynamics.hpp"
#include "beamtrack/ukf.hpp"

namespace beamtrack {

struct SelftestOptions {
  /// Added to every non-central sigma weight. Nonzero values must make the suite fail.
  double weight_perturbation = 0.0;
  std::uint64_t seed = 20240611;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double error = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;
};

namespace selftest {

inline RealMatrix random_psd(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  RealMatrix g(n, n);
  for (Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  return symmetrize(g * g.transpose() / static_cast<double>(n) + 1e-3 * RealMatrix::Identity(n, n));
}

inline RealVector random_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  RealVector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline ComplexMatrix random_unit_columns(Index m, Index n, std::mt19937_64& rng) {
  return baseline_beams(BaselineKind::random_unit, m, n, &rng);
}

/// Largest reconstruction error of mean and covariance over 50 sets of dimension 24.
inline double sigma_moment_error(const SelftestOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const RealVector mean = random_vector(24, rng);
    const RealMatrix cov = random_psd(24, rng);
    SigmaSet set = sigma_points(mean, cov, UkfParams{});
    set.w_mean.tail(set.count() - 1).array() += opt.weight_perturbation;
    set.w_cov.tail(set.count() - 1).array() += opt.weight_perturbation;
    const RealMatrix offsets = set.points.rightCols(set.count() - 1).colwise() - mean;
    const RealVector m = mean + offsets * set.w_mean.tail(set.count() - 1);
    const RealMatrix d = set.points.colwise() - m;
    const RealMatrix c = d * set.w_cov.asDiagonal() * d.transpose();
    worst = std::max({worst, (m - mean).cwiseAbs().maxCoeff(), (c - cov).cwiseAbs().maxCoeff()});
  }
  return worst;
}

/// Largest gap between the unscented filter and a textbook Kalman filter on a
/// linear measurement over 100 predict/update cycles.
inline double ukf_vs_kf_error(const SelftestOptions& opt) {
  std::mt19937_64 rng(opt.seed + 1);
  DynamicsModel model;
  model.beta = 0.9;
  model.step = 1.0;
  model.q_position = 1e-2;
  model.q_velocity = 1e-2;
  const TransitionPair tp = build_transition(model, 0.1);
  const Index n = 6;
  RealMatrix h(8, n);
  for (Index i = 0; i < h.size(); ++i) h.data()[i] = std::normal_distribution<double>()(rng);
  const RealMatrix g = complex_to_real_stacked(random_unit_columns(4, 4, rng));
  const double noise_var = 0.05;
  const RealMatrix gh = g * h;

  RealVector truth = 0.1 * random_vector(n, rng);
  RealVector x_ukf = truth + 0.1 * random_vector(n, rng);
  RealMatrix p_ukf = RealMatrix::Identity(n, n);
  RealVector x_kf = x_ukf;
  RealMatrix p_kf = p_ukf;
  std::normal_distribution<double> noise(0.0, std::sqrt(noise_var));

  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    truth = tp.A * truth + tp.noise_factor * random_vector(n, rng);
    RealVector y = gh * truth;
    for (Index i = 0; i < y.size(); ++i) y(i) += noise(rng);

    x_ukf = tp.A * x_ukf;
    p_ukf = advance_covariance(p_ukf, tp);
    SigmaSet set = sigma_points(x_ukf, p_ukf, UkfParams{});
    set.w_mean.tail(set.count() - 1).array() += opt.weight_perturbation;
    set.w_cov.tail(set.count() - 1).array() += opt.weight_perturbation;
    const UnscentedStats stats = unscented_statistics(set, [&](const RealVector& x) { return RealVector(h * x); });
    const UpdateResult r = ukf_update(x_ukf, p_ukf, stats, g, y, noise_var);
    x_ukf = r.mean;
    p_ukf = r.covariance;

    x_kf = tp.A * x_kf;
    p_kf = tp.A * p_kf * tp.A.transpose() + tp.Q;
    const RealMatrix s = gh * p_kf * gh.transpose() + noise_var * RealMatrix::Identity(y.size(), y.size());
    const RealMatrix gain = p_kf * gh.transpose() * s.inverse();
    x_kf += gain * (y - gh * x_kf);
    p_kf = (RealMatrix::Identity(n, n) - gain * gh) * p_kf;

    worst = std::max({worst, (x_ukf - x_kf).cwiseAbs().maxCoeff(), (p_ukf - p_kf).cwiseAbs().maxCoeff()});
  }
  return worst;
}

/// Worst 1 - |<recovered, true>| over beam columns for exact Kronecker inputs.
inline double kronecker_recovery_error(const SelftestOptions& opt) {
  std::mt19937_64 rng(opt.seed + 2);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix f0 = random_unit_columns(16, 6, rng);
    const ComplexMatrix z0 = random_unit_columns(16, 6, rng);
    const ComplexMatrix v = kron(f0.conjugate(), z0);
    const BeamDesignOutput out = kronecker_beams(v, 16, 6, 16, 6);
    for (Index c = 0; c < 6; ++c) {
      worst = std::max(worst, 1.0 - std::abs(out.F.col(c).dot(f0.col(c))));
      worst = std::max(worst, 1.0 - std::abs(out.Z.col(c).dot(z0.col(c))));
    }
  }
  return worst;
}

}  // namespace selftest

inline std::vector<CheckResult> run_selftest(const SelftestOptions& opt = {}) {
  struct Spec {
    const char* name;
    double tolerance;
    std::function<double(const SelftestOptions&)> run;
  };
  const std::vector<Spec> specs = {
      {"sigma-point moments", 1e-9, selftest::sigma_moment_error},
      {"UKF matches KF on linear map", 1e-8, selftest::ukf_vs_kf_error},
      {"Kronecker beam recovery", 1e-9, selftest::kronecker_recovery_error},
  };
  std::vector<CheckResult> results;
  for (const auto& s : specs) {
    CheckResult r{s.name, false, 0.0, s.tolerance, 0.0};
    const auto start = std::chrono::steady_clock::now();
    try {
      r.error = s.run(opt);
      r.passed = std::isfinite(r.error) && r.error <= s.tolerance;
    } catch (const std::exception& e) {
      r.error = std::numeric_limits<double>::infinity();
      r.name += std::string(" (") + e.what() + ")";
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back(r);
  }
  return results;
}

/// Prints a pass/fail table; 0 when every check passes, 3 otherwise.
inline int cmd_selftest(const SelftestOptions& opt = {}, std::ostream& out = std::cout) {
  bool ok = true;
  out << std::left << std::setw(34) << "check" << std::setw(8) << "result" << std::setw(14) << "error"
      << std::setw(12) << "tolerance"
      << "seconds\n";
  for (const auto& r : run_selftest(opt)) {
    ok = ok && r.passed;
    out << std::left << std::setw(34) << r.name << std::setw(8) << (r.passed ? "PASS" : "FAIL") << std::setw(14)
        << std::setprecision(3) << std::scientific << r.error << std::setw(12) << r.tolerance << std::fixed
        << std::setprecision(3) << r.seconds << '\n';
    out.unsetf(std::ios::floatfield);
  }
  return ok ? 0 : 3;
}

}  // namespace beamtrack
