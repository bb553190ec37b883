#pragma once

// Observation operators built from sounding beams, and noisy observations.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <random>

#include "beamtrack/numerics.hpp"

namespace beamtrack {

/// Transmit beams F (M_T x N_T) and receive beams Z (M_R x N_R), with the
/// derived observation matrix G = F^T kron Z^H and its real-stacked form.
struct SoundingPlan {
  ComplexMatrix F;
  ComplexMatrix Z;
  ComplexMatrix G;
  RealMatrix G_real;

  Index num_soundings() const { return G.rows(); }
};

struct Observation {
  RealVector y_real;
  double snr = 1.0;  ///< linear rho
  std::int64_t time_index = 0;
};

namespace detail {

inline void normalize_beam_columns(ComplexMatrix& beams, const char* name) {
  for (Index c = 0; c < beams.cols(); ++c) {
    const double norm = beams.col(c).norm();
    const double err = std::abs(norm - 1.0);
    if (err <= 1e-6) continue;
    if (err <= 1e-3 && norm > 0.0) {
      std::clog << "beamtrack: renormalizing " << name << " column " << c << " (norm " << norm << ")\n";
      beams.col(c) /= norm;
      continue;
    }
    throw Error(Errc::NotUnitNorm, std::string(name) + " column " + std::to_string(c) +
                                       " has norm " + std::to_string(norm));
  }
}

}  // namespace detail

inline SoundingPlan build_plan(ComplexMatrix f, ComplexMatrix z) {
  if (f.size() == 0 || z.size() == 0) throw Error(Errc::EmptyBeamSet, "beam sets must be non-empty");
  detail::normalize_beam_columns(f, "F");
  detail::normalize_beam_columns(z, "Z");
  SoundingPlan plan;
  plan.G = kron(f.transpose(), z.adjoint());
  plan.G_real = complex_to_real_stacked(plan.G);
  plan.F = std::move(f);
  plan.Z = std::move(z);
  return plan;
}

/// Per-component variance of the real observation noise, 1/(2 rho).
inline double observation_noise_variance(double rho) {
  if (!(rho > 0.0)) throw Error(Errc::NonpositiveSnr, "SNR must be positive");
  return std::isinf(rho) ? 0.0 : 1.0 / (2.0 * rho);
}

/// y = G_real h + v, v ~ N(0, I/(2 rho)). rho = +inf disables noise.
template <class Rng>
Observation observe(const SoundingPlan& plan, const RealVector& h_real, double rho, Rng& rng,
                    std::int64_t time_index = 0) {
  if (h_real.size() != plan.G_real.cols()) {
    throw Error(Errc::DimensionMismatch, "channel vector does not match the sounding plan");
  }
  const double variance = observation_noise_variance(rho);
  Observation obs;
  obs.snr = rho;
  obs.time_index = time_index;
  obs.y_real = plan.G_real * h_real;
  if (variance > 0.0) {
    std::normal_distribution<double> noise(0.0, std::sqrt(variance));
    for (Index i = 0; i < obs.y_real.size(); ++i) obs.y_real(i) += noise(rng);
  }
  return obs;
}

/// Z^H H F, the N_R x N_T matrix of noiseless sounding outputs.
inline ComplexMatrix noiseless_response(const SoundingPlan& plan, const ComplexMatrix& h) {
  if (h.rows() != plan.Z.rows() || h.cols() != plan.F.rows()) {
    throw Error(Errc::DimensionMismatch, "channel does not match the sounding plan");
  }
  return plan.Z.adjoint() * h * plan.F;
}

}  // namespace beamtrack
