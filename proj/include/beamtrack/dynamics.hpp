#pragma once

// First-order virtual-position motion plus Gauss-Markov path gains.

#include <cmath>
#include <random>
#include <vector>

#include "beamtrack/channel_model.hpp"
#include "beamtrack/numerics.hpp"

namespace beamtrack {

struct DynamicsModel {
  Index num_paths = 1;
  /// Gain correlation over one reference step, shared by all paths unless
  /// path_beta is non-empty.
  double beta = 0.905;
  std::vector<double> path_beta;
  /// Reference step T_S in seconds.
  double step = 1e-4;
  /// Diagonal of the per-path (position, velocity) process noise over one reference step.
  double q_position = 1e-4;
  double q_velocity = 1e2;

  double beta_of(Index l) const {
    return path_beta.empty() ? beta : path_beta.at(static_cast<std::size_t>(l));
  }
};

/// Discrete transition x' = A x + u, u ~ N(0, Q), over dt seconds.
struct TransitionPair {
  RealMatrix A;
  RealMatrix Q;
  RealMatrix noise_factor;  ///< S with S S^T = Q
  double dt = 0.0;
};

inline void validate(const DynamicsModel& model) {
  if (model.num_paths < 1) throw Error(Errc::BadConfig, "dynamics needs at least one path");
  if (!(model.step > 0.0)) throw Error(Errc::NonpositiveStep, "reference step must be positive");
  if (!model.path_beta.empty() && static_cast<Index>(model.path_beta.size()) != model.num_paths) {
    throw Error(Errc::BadConfig, "path_beta must list one beta per path");
  }
  for (Index l = 0; l < model.num_paths; ++l) {
    const double b = model.beta_of(l);
    if (!(b > 0.0 && b <= 1.0)) throw Error(Errc::BadConfig, "beta must lie in (0, 1]");
  }
  if (model.q_position < 0.0 || model.q_velocity < 0.0) {
    throw Error(Errc::BadConfig, "virtual-position process noise must be nonnegative");
  }
}

/// Builds A(dt) and Q(dt). The gain block uses beta^(dt/T_S) with the exact
/// Gauss-Markov variance (1 - beta_dt^2)/2; the position blocks scale their
/// noise linearly in dt/T_S.
inline TransitionPair build_transition(const DynamicsModel& model, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::NonpositiveStep, "transition step must be positive");
  validate(model);
  const Index paths = model.num_paths;
  const Index n = 6 * paths;
  const double ratio = dt / model.step;

  TransitionPair tp;
  tp.dt = dt;
  tp.A = RealMatrix::Zero(n, n);
  tp.Q = RealMatrix::Zero(n, n);
  for (Index l = 0; l < paths; ++l) {
    const double beta_dt = std::pow(model.beta_of(l), ratio);
    const double q_gain = (1.0 - beta_dt * beta_dt) / 2.0;
    for (Index c = 0; c < 2; ++c) {
      tp.A(2 * l + c, 2 * l + c) = beta_dt;
      tp.Q(2 * l + c, 2 * l + c) = q_gain;
    }
  }
  for (Index side = 1; side <= 2; ++side) {
    for (Index l = 0; l < paths; ++l) {
      const Index p = 2 * side * paths + 2 * l;
      tp.A(p, p) = 1.0;
      tp.A(p, p + 1) = dt;
      tp.A(p + 1, p + 1) = 1.0;
      tp.Q(p, p) = ratio * model.q_position;
      tp.Q(p + 1, p + 1) = ratio * model.q_velocity;
    }
  }
  // Q is diagonal
  tp.noise_factor = tp.Q.diagonal().cwiseSqrt().asDiagonal();
  return tp;
}

namespace detail {

inline void require_dims(const TransitionPair& tp, Index n) {
  if (tp.A.rows() != n || tp.A.cols() != n || tp.Q.rows() != n) {
    throw Error(Errc::DimensionMismatch, "transition does not match the state dimension");
  }
}

}  // namespace detail

inline ChannelState advance_mean(const ChannelState& x, const TransitionPair& tp) {
  detail::require_dims(tp, x.dim());
  return ChannelState(x.num_paths(), tp.A * x.vector());
}

/// x' = A x + u with u drawn from N(0, Q).
template <class Rng>
ChannelState advance_truth(const ChannelState& x, const TransitionPair& tp, Rng& rng) {
  detail::require_dims(tp, x.dim());
  std::normal_distribution<double> normal(0.0, 1.0);
  RealVector w(x.dim());
  for (Index i = 0; i < w.size(); ++i) w(i) = normal(rng);
  return ChannelState(x.num_paths(), tp.A * x.vector() + tp.noise_factor * w);
}

/// A R A^T + Q, symmetrized.
inline RealMatrix advance_covariance(const RealMatrix& r, const TransitionPair& tp) {
  if (r.rows() != tp.A.rows() || r.cols() != tp.A.cols()) {
    throw Error(Errc::DimensionMismatch, "covariance does not match the transition");
  }
  return symmetrize(tp.A * r * tp.A.transpose() + tp.Q);
}

}  // namespace beamtrack
