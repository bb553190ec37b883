#pragma once

// Multipath channel as a function of the tracked state.
//
// State layout for L paths (length 6L):
//   [ Re a_1, Im a_1, ..., Re a_L, Im a_L,            gains
//     uT_1, uT_1', ..., uT_L, uT_L',                  Tx virtual position / velocity
//     uR_1, uR_1', ..., uR_L, uR_L' ]                 Rx virtual position / velocity

#include <cmath>
#include <numbers>

#include "beamtrack/numerics.hpp"

namespace beamtrack {

/// Uniform linear array.
struct ArrayGeometry {
  Index num_antennas = 1;
  double d_over_lambda = 0.5;
};

class ChannelState {
 public:
  ChannelState() = default;

  explicit ChannelState(Index num_paths) : paths_(num_paths), x_(RealVector::Zero(6 * num_paths)) {
    if (num_paths < 1) throw Error(Errc::DimensionMismatch, "ChannelState needs at least one path");
  }

  ChannelState(Index num_paths, RealVector x) : paths_(num_paths), x_(std::move(x)) {
    if (num_paths < 1 || x_.size() != 6 * num_paths) {
      throw Error(Errc::DimensionMismatch, "ChannelState vector must have length 6L");
    }
  }

  static ChannelState from_vector(RealVector x) {
    if (x.size() == 0 || x.size() % 6 != 0) {
      throw Error(Errc::DimensionMismatch, "state length must be a positive multiple of 6");
    }
    const Index paths = x.size() / 6;
    return ChannelState(paths, std::move(x));
  }

  Index num_paths() const { return paths_; }
  Index dim() const { return x_.size(); }

  const RealVector& vector() const { return x_; }
  RealVector& vector() { return x_; }

  static Index gain_index(Index l) { return 2 * l; }
  Index tx_position_index(Index l) const { return 2 * paths_ + 2 * l; }
  Index tx_velocity_index(Index l) const { return 2 * paths_ + 2 * l + 1; }
  Index rx_position_index(Index l) const { return 4 * paths_ + 2 * l; }
  Index rx_velocity_index(Index l) const { return 4 * paths_ + 2 * l + 1; }

  Complex gain(Index l) const { return {x_(gain_index(l)), x_(gain_index(l) + 1)}; }
  double tx_position(Index l) const { return x_(tx_position_index(l)); }
  double tx_velocity(Index l) const { return x_(tx_velocity_index(l)); }
  double rx_position(Index l) const { return x_(rx_position_index(l)); }
  double rx_velocity(Index l) const { return x_(rx_velocity_index(l)); }

  void set_gain(Index l, Complex g) {
    x_(gain_index(l)) = g.real();
    x_(gain_index(l) + 1) = g.imag();
  }
  void set_tx(Index l, double position, double velocity) {
    x_(tx_position_index(l)) = position;
    x_(tx_velocity_index(l)) = velocity;
  }
  void set_rx(Index l, double position, double velocity) {
    x_(rx_position_index(l)) = position;
    x_(rx_velocity_index(l)) = velocity;
  }

  bool finite() const { return x_.allFinite(); }

 private:
  Index paths_ = 0;
  RealVector x_;
};

/// Normalized spatial angle nu = (d/lambda) * u / sqrt(1 + u^2).
inline double virtual_to_spatial(double upsilon, double d_over_lambda) {
  return d_over_lambda * upsilon / std::sqrt(1.0 + upsilon * upsilon);
}

inline double virtual_to_spatial(double upsilon, const ArrayGeometry& geom) {
  return virtual_to_spatial(upsilon, geom.d_over_lambda);
}

/// u = tan(theta); rejects theta within 1e-9 of an odd multiple of pi/2.
inline double angle_to_virtual(double theta) {
  const double k = (theta - std::numbers::pi / 2) / std::numbers::pi;
  if (std::abs(k - std::round(k)) * std::numbers::pi < 1e-9) {
    throw Error(Errc::SingularAngle, "angle is too close to +-pi/2");
  }
  return std::tan(theta);
}

/// Entries exp(-j 2 pi m nu), m = 1..M.
inline ComplexVector steering_vector(double nu, Index num_antennas) {
  ComplexVector a(num_antennas);
  for (Index m = 0; m < num_antennas; ++m) {
    a(m) = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(m + 1) * nu);
  }
  return a;
}

/// H = sum_l alpha_l a(nu_R,l) a(nu_T,l)^H, of size M_R x M_T.
inline ComplexMatrix channel_matrix(const ChannelState& x, const ArrayGeometry& tx,
                                    const ArrayGeometry& rx) {
  ComplexMatrix h = ComplexMatrix::Zero(rx.num_antennas, tx.num_antennas);
  for (Index l = 0; l < x.num_paths(); ++l) {
    const ComplexVector a_t = steering_vector(virtual_to_spatial(x.tx_position(l), tx), tx.num_antennas);
    const ComplexVector a_r = steering_vector(virtual_to_spatial(x.rx_position(l), rx), rx.num_antennas);
    h.noalias() += x.gain(l) * a_r * a_t.adjoint();
  }
  return h;
}

/// [Re vec(H); Im vec(H)] with column-major vec.
inline RealVector real_channel_vector(const ChannelState& x, const ArrayGeometry& tx,
                                      const ArrayGeometry& rx) {
  return stack_real_imag(vec(channel_matrix(x, tx, rx)));
}

}  // namespace beamtrack
