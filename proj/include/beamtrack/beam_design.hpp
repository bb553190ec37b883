#pragma once

// Adaptive sounding-beam selection.
//
// The unconstrained optimum picks the rows of G_real as the top generalized
// eigenvectors of (R_xh^T W^-1 R_xh, Pi_hat + I/(2 rho)). Those real
// directions are mapped to complex ones and projected onto a single
// Kronecker product conj(F) kron Z with unit-norm beam columns.

#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include "beamtrack/channel_model.hpp"
#include "beamtrack/numerics.hpp"
#include "beamtrack/sounding.hpp"
#include "beamtrack/ukf.hpp"

namespace beamtrack {

enum class BeamConstraint { unit_norm };

enum class BaselineKind { dft_grid, random_unit };

struct BeamDesignInput {
  RealMatrix cross_cov;    ///< R^(xh), n x 2 M_R M_T
  RealMatrix channel_cov;  ///< Pi_hat, 2 M_R M_T square
  RealVector weights;      ///< diagonal of W, strictly positive
  double rho = 10.0;
  Index num_tx_beams = 1;  ///< N_T
  Index num_rx_beams = 1;  ///< N_R
};

struct DirectionSet {
  RealMatrix directions;  ///< one real direction per column
  RealVector eigenvalues;
};

struct BeamDesignOutput {
  ComplexMatrix F;
  ComplexMatrix Z;
  RealVector eigenvalues;
  double rank_one_residual = 0.0;  ///< |U - s u v^H|_F / |U|_F
  bool fallback = false;           ///< baseline beams used instead of designed ones
};

/// Top N_T N_R generalized eigenvectors of the weighted-error pencil.
inline DirectionSet unconstrained_optimal_directions(const BeamDesignInput& in) {
  const Index dim = in.channel_cov.rows();
  if (in.channel_cov.cols() != dim || in.cross_cov.cols() != dim) {
    throw Error(Errc::DimensionMismatch, "beam design covariances disagree in size");
  }
  if (in.weights.size() != in.cross_cov.rows()) {
    throw Error(Errc::DimensionMismatch, "one weight per state component is required");
  }
  if (!(in.weights.minCoeff() > 0.0)) throw Error(Errc::BadWeights, "weights must be strictly positive");
  const Index count = in.num_tx_beams * in.num_rx_beams;
  if (count < 1 || count > dim) throw Error(Errc::BadBeamCount, "N_T N_R out of range");

  const RealMatrix scaled = in.weights.cwiseInverse().cwiseSqrt().asDiagonal() * in.cross_cov;
  const RealMatrix a = scaled.transpose() * scaled;
  const RealMatrix b = in.channel_cov + observation_noise_variance(in.rho) * RealMatrix::Identity(dim, dim);
  const GeneralizedEigen ge = generalized_eig_sym(a, b, count, EigvecNormalization::unit);
  return {ge.vectors, ge.values};
}

/// Column j becomes (top half) + i (bottom half), renormalized.
inline ComplexMatrix real_directions_to_complex(const RealMatrix& directions) {
  if (directions.rows() % 2 != 0) throw Error(Errc::DimensionMismatch, "direction length must be even");
  const Index half = directions.rows() / 2;
  ComplexMatrix v(half, directions.cols());
  for (Index j = 0; j < directions.cols(); ++j) {
    for (Index i = 0; i < half; ++i) v(i, j) = Complex(directions(i, j), directions(half + i, j));
    const double norm = v.col(j).norm();
    if (norm > 0.0) v.col(j) /= norm;
  }
  return v;
}

inline void normalize_columns(ComplexMatrix& m) {
  for (Index c = 0; c < m.cols(); ++c) {
    const double norm = m.col(c).norm();
    if (norm > 0.0) m.col(c) /= norm;
  }
}

/// Nearest conj(F) kron Z to V, with F (M_T x N_T) and Z (M_R x N_R).
inline BeamDesignOutput kronecker_beams(const ComplexMatrix& v, Index m_t, Index n_t, Index m_r, Index n_r) {
  const KroneckerFactorDims dims{m_t, n_t, m_r, n_r};
  const ComplexMatrix u = kron_rearrange(v, dims);
  const RankOneFactor r1 = rank_one_factor(u);

  BeamDesignOutput out;
  const double root = std::sqrt(r1.s);
  // U ~ vec(conj F) vec(Z)^T = s u v^H
  out.F = unvec((root * r1.u).conjugate(), m_t, n_t);
  out.Z = unvec((root * r1.v).conjugate(), m_r, n_r);
  normalize_columns(out.F);
  normalize_columns(out.Z);
  const double total = u.squaredNorm();
  out.rank_one_residual = std::sqrt(std::max(0.0, total - r1.s * r1.s) / total);
  return out;
}

/// Non-adaptive beams: the first N columns of the unitary M-point DFT, or
/// normalized i.i.d. complex Gaussian columns.
template <class Rng = std::mt19937_64>
ComplexMatrix baseline_beams(BaselineKind kind, Index m, Index n, Rng* rng = nullptr) {
  if (m < 1 || n < 1) throw Error(Errc::BadBeamCount, "beam counts must be positive");
  ComplexMatrix beams(m, n);
  if (kind == BaselineKind::dft_grid) {
    if (n > m) throw Error(Errc::BadBeamCount, "DFT grid needs N <= M");
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (Index c = 0; c < n; ++c) {
      for (Index r = 0; r < m; ++r) {
        beams(r, c) = std::polar(scale, -2.0 * std::numbers::pi * static_cast<double>(r * c) / static_cast<double>(m));
      }
    }
    return beams;
  }
  if (rng == nullptr) throw Error(Errc::BadConfig, "random_unit beams need a noise source");
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < m; ++r) {
      const double re = normal(*rng);
      const double im = normal(*rng);
      beams(r, c) = Complex(re, im);
    }
  }
  normalize_columns(beams);
  return beams;
}

struct BeamRequest {
  ArrayGeometry tx;
  ArrayGeometry rx;
  Index num_tx_beams = 1;
  Index num_rx_beams = 1;
  double rho = 10.0;
  RealVector weights;  ///< empty means W = I
  BeamConstraint constraint = BeamConstraint::unit_norm;
};

/// Designs beams from channel statistics already computed for the tracker prior.
inline BeamDesignOutput design_beams(const UnscentedStats& stats, const BeamRequest& req) {
  const Index state_dim = stats.cross.rows();
  BeamDesignInput in;
  in.cross_cov = stats.cross;
  in.channel_cov = stats.covariance;
  in.weights = req.weights.size() == 0 ? RealVector::Ones(state_dim) : req.weights;
  in.rho = req.rho;
  in.num_tx_beams = req.num_tx_beams;
  in.num_rx_beams = req.num_rx_beams;

  auto fallback = [&](RealVector eigenvalues) {
    BeamDesignOutput out;
    out.F = baseline_beams(BaselineKind::dft_grid, req.tx.num_antennas, req.num_tx_beams);
    out.Z = baseline_beams(BaselineKind::dft_grid, req.rx.num_antennas, req.num_rx_beams);
    out.eigenvalues = std::move(eigenvalues);
    out.fallback = true;
    return out;
  };

  if (stats.cross.cwiseAbs().maxCoeff() < 1e-12) {
    return fallback(RealVector::Zero(req.num_tx_beams * req.num_rx_beams));
  }
  const DirectionSet dirs = unconstrained_optimal_directions(in);
  if (!(dirs.eigenvalues(0) >= 1e-12)) return fallback(dirs.eigenvalues);

  BeamDesignOutput out = kronecker_beams(real_directions_to_complex(dirs.directions), req.tx.num_antennas,
                                         req.num_tx_beams, req.rx.num_antennas, req.num_rx_beams);
  out.eigenvalues = dirs.eigenvalues;
  return out;
}

inline BeamDesignOutput design_beams(const TrackerState& prior, const UkfParams& params, const BeamRequest& req) {
  return design_beams(channel_statistics(prior, req.tx, req.rx, params), req);
}

}  // namespace beamtrack
