#pragma once

// Additive-noise unscented Kalman filter over the channel state.
//
// The generic pieces (sigma_points, unscented_statistics, ukf_update) take an
// arbitrary measurement function so they can be checked against a linear
// Kalman filter. The channel-specific overloads plug in the real-stacked
// channel vector.

#include <cmath>
#include <cstdint>
#include <string>

#include "beamtrack/channel_model.hpp"
#include "beamtrack/dynamics.hpp"
#include "beamtrack/numerics.hpp"
#include "beamtrack/sounding.hpp"

namespace beamtrack {

struct UkfParams {
  double eta = 1e-3;   ///< sigma-point spread
  double kappa = 0.0;  ///< secondary scaling
  double mu = 2.0;     ///< prior-distribution term in the zeroth covariance weight

  double lambda(Index n) const {
    const double dn = static_cast<double>(n);
    return eta * eta * (dn + kappa) - dn;
  }
};

struct TrackerState {
  ChannelState estimate;
  RealMatrix covariance;
  std::int64_t k = 0;
};

/// 2n + 1 points stored column-wise. Points i and i + n are mirrored about
/// column 0, which is the mean.
struct SigmaSet {
  RealMatrix points;
  RealVector w_mean;
  RealVector w_cov;

  Index count() const { return points.cols(); }
};

/// Sample statistics of sigma points pushed through a measurement function.
struct UnscentedStats {
  RealMatrix transformed;  ///< zeta_i, one column per sigma point
  RealVector mean;         ///< h_hat
  RealMatrix covariance;   ///< Pi_hat
  RealMatrix cross;        ///< R^(xh), state x measurement
};

struct UpdateResult {
  RealVector mean;
  RealMatrix covariance;
  RealVector innovation;
  RealMatrix innovation_cov;
};

/// Symmetrizes and repairs tiny negative eigenvalues. Eigenvalues in
/// [-tol, 0) become 1e-12, anything below -tol is an error. tol is
/// 1e-9 * max(1, |R|_F).
inline RealMatrix condition_covariance(const RealMatrix& r) {
  RealMatrix sym = symmetrize(r);
  if (!sym.allFinite()) throw Error(Errc::IndefiniteCovariance, "covariance has non-finite entries");
  const double tol = 1e-9 * std::max(1.0, sym.norm());
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(sym);
  if (eig.info() != Eigen::Success) throw Error(Errc::IndefiniteCovariance, "eigensolve failed");
  const RealVector& values = eig.eigenvalues();
  if (values.minCoeff() >= 0.0) return sym;
  if (values.minCoeff() < -tol) {
    throw Error(Errc::IndefiniteCovariance,
                "covariance eigenvalue " + std::to_string(values.minCoeff()) + " below tolerance");
  }
  RealVector repaired = values;
  for (Index i = 0; i < repaired.size(); ++i) {
    if (repaired(i) < 0.0) repaired(i) = 1e-12;
  }
  return symmetrize(eig.eigenvectors() * repaired.asDiagonal() * eig.eigenvectors().transpose());
}

inline SigmaSet sigma_points(const RealVector& mean, const RealMatrix& cov, const UkfParams& params) {
  const Index n = mean.size();
  if (cov.rows() != n || cov.cols() != n) {
    throw Error(Errc::DimensionMismatch, "covariance does not match the mean");
  }
  const double lambda = params.lambda(n);
  const double spread = params.eta * params.eta * (static_cast<double>(n) + params.kappa);  // n + lambda
  if (!(spread > 0.0)) throw Error(Errc::BadScaling, "n + lambda must be positive");

  RealMatrix root;
  try {
    root = matrix_sqrt_psd(spread * cov);
  } catch (const Error& e) {
    throw Error(Errc::IndefiniteCovariance, e.what());
  }

  SigmaSet set;
  set.points.resize(n, 2 * n + 1);
  set.points.col(0) = mean;
  for (Index i = 0; i < n; ++i) {
    set.points.col(1 + i) = mean + root.col(i);
    set.points.col(1 + n + i) = mean - root.col(i);
  }
  const double w = 1.0 / (2.0 * spread);
  set.w_mean = RealVector::Constant(2 * n + 1, w);
  set.w_cov = RealVector::Constant(2 * n + 1, w);
  set.w_mean(0) = lambda / spread;
  set.w_cov(0) = lambda / spread + (1.0 - params.eta * params.eta + params.mu);
  return set;
}

/// zeta_i = h(chi_i) and the weighted mean, covariance and state cross-covariance.
template <class MeasurementFn>
UnscentedStats unscented_statistics(const SigmaSet& sigma, MeasurementFn&& h) {
  const Index count = sigma.count();
  const RealVector mean_state = sigma.points.col(0);

  UnscentedStats stats;
  RealVector first = h(sigma.points.col(0));
  stats.transformed.resize(first.size(), count);
  stats.transformed.col(0) = first;
  for (Index i = 1; i < count; ++i) stats.transformed.col(i) = h(sigma.points.col(i));

  // Weights sum to one, so the mean is taken relative to zeta_0. With small eta
  // w_0 is about -1/eta^2 and the plain weighted sum loses ~12 digits.
  const RealMatrix spread = stats.transformed.rightCols(count - 1).colwise() - first;
  stats.mean = first + spread * sigma.w_mean.tail(count - 1);
  const RealMatrix dz = stats.transformed.colwise() - stats.mean;
  const RealMatrix dx = sigma.points.colwise() - mean_state;
  const RealMatrix weighted_dz = dz * sigma.w_cov.asDiagonal();
  stats.covariance = symmetrize(weighted_dz * dz.transpose());
  stats.cross = dx * weighted_dz.transpose();
  return stats;
}

/// Kalman update with observation y = G_real h + v, v ~ N(0, noise_var I).
inline UpdateResult ukf_update(const RealVector& prior_mean, const RealMatrix& prior_cov,
                               const UnscentedStats& stats, const RealMatrix& g_real,
                               const RealVector& y, double noise_var) {
  if (g_real.cols() != stats.mean.size() || g_real.rows() != y.size()) {
    throw Error(Errc::DimensionMismatch, "observation operator does not match measurement statistics");
  }
  const Index m = y.size();
  UpdateResult out;
  out.innovation = y - g_real * stats.mean;
  out.innovation_cov = symmetrize(g_real * stats.covariance * g_real.transpose() +
                                  noise_var * RealMatrix::Identity(m, m));

  Eigen::LLT<RealMatrix> llt(out.innovation_cov);
  if (llt.info() != Eigen::Success) {
    out.innovation_cov += 1e-12 * RealMatrix::Identity(m, m);
    llt.compute(out.innovation_cov);
    if (llt.info() != Eigen::Success) {
      throw Error(Errc::SingularInnovation, "innovation covariance is not invertible");
    }
  }
  // K = R^(xh) G^T S^-1, computed as (S^-1 G R^(xh)^T)^T
  const RealMatrix cross_obs = stats.cross * g_real.transpose();
  const RealMatrix gain = llt.solve(cross_obs.transpose()).transpose();
  out.mean = prior_mean + gain * out.innovation;
  out.covariance = condition_covariance(prior_cov - gain * cross_obs.transpose());
  return out;
}

/// Sigma points, measurement statistics and update in one call.
template <class MeasurementFn>
UpdateResult ukf_update(const RealVector& prior_mean, const RealMatrix& prior_cov, const RealMatrix& g_real,
                        const RealVector& y, double noise_var, const UkfParams& params,
                        MeasurementFn&& h) {
  const SigmaSet sigma = sigma_points(prior_mean, prior_cov, params);
  const UnscentedStats stats = unscented_statistics(sigma, std::forward<MeasurementFn>(h));
  return ukf_update(prior_mean, prior_cov, stats, g_real, y, noise_var);
}

// ---------------------------------------------------------------------------
// Channel-specific tracker

/// A priori step: x <- A x, R <- A R A^T + Q.
inline TrackerState predict(const TrackerState& ts, const TransitionPair& tp) {
  TrackerState out;
  out.estimate = advance_mean(ts.estimate, tp);
  out.covariance = advance_covariance(ts.covariance, tp);
  out.k = ts.k + 1;
  return out;
}

/// Sigma-point statistics of the real channel vector under the tracker prior.
inline UnscentedStats channel_statistics(const TrackerState& prior, const ArrayGeometry& tx,
                                         const ArrayGeometry& rx, const UkfParams& params) {
  const Index paths = prior.estimate.num_paths();
  const SigmaSet sigma = sigma_points(prior.estimate.vector(), prior.covariance, params);
  return unscented_statistics(sigma, [&](const RealVector& x) {
    return real_channel_vector(ChannelState(paths, x), tx, rx);
  });
}

/// Posterior from precomputed channel statistics of the same prior.
inline TrackerState update(const TrackerState& prior, const UnscentedStats& stats, const SoundingPlan& plan,
                           const Observation& y) {
  const UpdateResult r = ukf_update(prior.estimate.vector(), prior.covariance, stats, plan.G_real, y.y_real,
                                    observation_noise_variance(y.snr));
  TrackerState out;
  out.estimate = ChannelState(prior.estimate.num_paths(), r.mean);
  out.covariance = r.covariance;
  out.k = prior.k;
  return out;
}

inline TrackerState update(const TrackerState& prior, const SoundingPlan& plan, const Observation& y,
                           const UkfParams& params, const ArrayGeometry& tx, const ArrayGeometry& rx) {
  return update(prior, channel_statistics(prior, tx, rx, params), plan, y);
}

/// Estimated state advanced noiselessly by horizon seconds.
inline ChannelState forward_predict_state(const ChannelState& estimate, const DynamicsModel& model,
                                          double horizon) {
  if (horizon < 0.0) throw Error(Errc::NonpositiveStep, "prediction horizon must be nonnegative");
  if (horizon == 0.0) return estimate;
  return advance_mean(estimate, build_transition(model, horizon));
}

inline ComplexMatrix forward_predict_channel(const TrackerState& ts, const DynamicsModel& model, double horizon,
                                             const ArrayGeometry& tx, const ArrayGeometry& rx) {
  return channel_matrix(forward_predict_state(ts.estimate, model, horizon), tx, rx);
}

}  // namespace beamtrack
