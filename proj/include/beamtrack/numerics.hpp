#pragma once

// Dense linear-algebra kernels shared by the tracker and the beam designer.
//
// All matrices are Eigen column-major. vec() is column-major throughout, so
// vec(A X B) = (B^T kron A) vec(X).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "beamtrack/error.hpp"

namespace beamtrack {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Shapes of B (m1 x n1) and C (m2 x n2) in a Kronecker product B kron C.
struct KroneckerFactorDims {
  Index m1 = 1;
  Index n1 = 1;
  Index m2 = 1;
  Index n2 = 1;

  Index rows() const { return m1 * m2; }
  Index cols() const { return n1 * n2; }
};

inline RealMatrix symmetrize(const RealMatrix& m) { return 0.5 * (m + m.transpose()); }

inline bool all_finite(const RealMatrix& m) { return m.allFinite(); }

namespace detail {

inline void require_square(const RealMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(Errc::DimensionMismatch, std::string(what) + " must be square and non-empty");
  }
}

inline double scale_of(const RealMatrix& m) { return std::max(1.0, m.norm()); }

}  // namespace detail

/// Square root S of a symmetric positive semi-definite matrix with S S^T = R.
///
/// Cholesky is tried first; if R is only semi-definite the symmetric
/// eigendecomposition is used instead and eigenvalues in [-tol, 0) are
/// clamped to zero. Tolerances scale with max(1, |R|_F).
inline RealMatrix matrix_sqrt_psd(const RealMatrix& r) {
  detail::require_square(r, "matrix_sqrt_psd input");
  const double scale = detail::scale_of(r);
  if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(Errc::NotSymmetric, "matrix_sqrt_psd input is not symmetric");
  }
  const RealMatrix sym = symmetrize(r);

  Eigen::LLT<RealMatrix> llt(sym);
  if (llt.info() == Eigen::Success) {
    RealMatrix l = llt.matrixL();
    if (l.allFinite() && l.diagonal().minCoeff() > 0.0) return l;
  }

  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw Error(Errc::IndefiniteMatrix, "eigendecomposition failed in matrix_sqrt_psd");
  }
  RealVector values = eig.eigenvalues();
  if (values.minCoeff() < -1e-12 * scale) {
    throw Error(Errc::IndefiniteMatrix,
                "matrix_sqrt_psd input has eigenvalue " + std::to_string(values.minCoeff()));
  }
  values = values.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * values.asDiagonal();
}

enum class EigvecNormalization {
  b_orthonormal,  ///< v_i^T B v_j = delta_ij
  unit,           ///< |v_i|_2 = 1
};

struct GeneralizedEigen {
  RealVector values;   ///< descending
  RealMatrix vectors;  ///< one eigenvector per column, matching values
};

/// Top n_top eigenpairs of the symmetric-definite pencil A v = lambda B v.
///
/// Solved by whitening with the Cholesky factor of B (B = L L^T) and a
/// standard symmetric eigensolve of L^-1 A L^-T. Repeated eigenvalues yield
/// an arbitrary orthonormal basis of their eigenspace.
inline GeneralizedEigen generalized_eig_sym(const RealMatrix& a, const RealMatrix& b, Index n_top,
                                            EigvecNormalization norm = EigvecNormalization::unit) {
  detail::require_square(a, "A");
  detail::require_square(b, "B");
  if (a.rows() != b.rows()) throw Error(Errc::DimensionMismatch, "A and B differ in size");
  const Index n = a.rows();
  if (n_top < 0 || n_top > n) throw Error(Errc::DimensionMismatch, "n_top out of range");

  Eigen::LLT<RealMatrix> llt(symmetrize(b));
  if (llt.info() != Eigen::Success) throw Error(Errc::SingularB, "B is not positive definite");
  const auto l = llt.matrixL();
  const double min_pivot = llt.matrixLLT().diagonal().minCoeff();
  if (!(min_pivot * min_pivot > 1e-12)) throw Error(Errc::SingularB, "B is numerically singular");

  // C = L^-1 A L^-T
  RealMatrix c = l.solve(symmetrize(a));
  c = l.solve(c.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(symmetrize(c));
  if (eig.info() != Eigen::Success) {
    throw Error(Errc::SingularB, "whitened eigenproblem did not converge");
  }

  GeneralizedEigen out;
  out.values.resize(n_top);
  RealMatrix whitened(n, n_top);
  for (Index i = 0; i < n_top; ++i) {
    out.values(i) = eig.eigenvalues()(n - 1 - i);
    whitened.col(i) = eig.eigenvectors().col(n - 1 - i);
  }
  out.vectors = llt.matrixU().solve(whitened);
  if (norm == EigvecNormalization::unit) {
    for (Index i = 0; i < n_top; ++i) out.vectors.col(i).normalize();
  }
  return out;
}

/// Van Loan-Pitsianis rearrangement: maps V of shape (m1 m2) x (n1 n2) to R of
/// shape (m1 n1) x (m2 n2) such that |V - B kron C|_F = |R - vec(B) vec(C)^T|_F.
/// Row i + m1 j of R is vec of the (i, j) block of V, transposed.
inline ComplexMatrix kron_rearrange(const ComplexMatrix& v, const KroneckerFactorDims& dims) {
  if (v.rows() != dims.rows() || v.cols() != dims.cols()) {
    throw Error(Errc::DimensionMismatch, "kron_rearrange: V does not match factor dims");
  }
  ComplexMatrix r(dims.m1 * dims.n1, dims.m2 * dims.n2);
  for (Index j = 0; j < dims.n1; ++j) {
    for (Index i = 0; i < dims.m1; ++i) {
      const Index row = i + dims.m1 * j;
      const auto block = v.block(i * dims.m2, j * dims.n2, dims.m2, dims.n2);
      for (Index q = 0; q < dims.n2; ++q) {
        for (Index p = 0; p < dims.m2; ++p) r(row, p + dims.m2 * q) = block(p, q);
      }
    }
  }
  return r;
}

/// Inverse of kron_rearrange.
inline ComplexMatrix kron_unrearrange(const ComplexMatrix& r, const KroneckerFactorDims& dims) {
  if (r.rows() != dims.m1 * dims.n1 || r.cols() != dims.m2 * dims.n2) {
    throw Error(Errc::DimensionMismatch, "kron_unrearrange: R does not match factor dims");
  }
  ComplexMatrix v(dims.rows(), dims.cols());
  for (Index j = 0; j < dims.n1; ++j) {
    for (Index i = 0; i < dims.m1; ++i) {
      const Index row = i + dims.m1 * j;
      for (Index q = 0; q < dims.n2; ++q) {
        for (Index p = 0; p < dims.m2; ++p) {
          v(i * dims.m2 + p, j * dims.n2 + q) = r(row, p + dims.m2 * q);
        }
      }
    }
  }
  return v;
}

struct RankOneFactor {
  ComplexVector u;  ///< unit norm
  double s = 0.0;   ///< largest singular value
  ComplexVector v;  ///< unit norm
};

/// Best rank-one approximation s u v^H of R in Frobenius norm.
///
/// The common phase of (u, v) is fixed so the largest-modulus entry of u is
/// real and positive.
inline RankOneFactor rank_one_factor(const ComplexMatrix& r) {
  if (r.size() == 0 || r.norm() == 0.0) throw Error(Errc::ZeroMatrix, "rank_one_factor of zero matrix");
  Eigen::BDCSVD<ComplexMatrix> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
  RankOneFactor out;
  out.s = svd.singularValues()(0);
  out.u = svd.matrixU().col(0);
  out.v = svd.matrixV().col(0);
  Index pivot = 0;
  out.u.cwiseAbs().maxCoeff(&pivot);
  const Complex phase = std::conj(out.u(pivot)) / std::abs(out.u(pivot));
  out.u *= phase;
  out.v *= phase;
  return out;
}

/// [[Re G, -Im G], [Im G, Re G]]
inline RealMatrix complex_to_real_stacked(const ComplexMatrix& g) {
  const Index m = g.rows();
  const Index n = g.cols();
  RealMatrix out(2 * m, 2 * n);
  out.topLeftCorner(m, n) = g.real();
  out.topRightCorner(m, n) = -g.imag();
  out.bottomLeftCorner(m, n) = g.imag();
  out.bottomRightCorner(m, n) = g.real();
  return out;
}

/// [Re h; Im h]
inline RealVector stack_real_imag(const ComplexVector& h) {
  RealVector out(2 * h.size());
  out.head(h.size()) = h.real();
  out.tail(h.size()) = h.imag();
  return out;
}

inline ComplexVector unstack_real_imag(const RealVector& x) {
  if (x.size() % 2 != 0) throw Error(Errc::DimensionMismatch, "stacked vector has odd length");
  const Index n = x.size() / 2;
  ComplexVector out(n);
  for (Index i = 0; i < n; ++i) out(i) = Complex(x(i), x(n + i));
  return out;
}

/// Column-major vec of a complex matrix.
inline ComplexVector vec(const ComplexMatrix& m) {
  return Eigen::Map<const ComplexVector>(m.data(), m.size());
}

inline ComplexMatrix unvec(const ComplexVector& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw Error(Errc::DimensionMismatch, "unvec size mismatch");
  return Eigen::Map<const ComplexMatrix>(v.data(), rows, cols);
}

inline ComplexMatrix kron(const ComplexMatrix& b, const ComplexMatrix& c) {
  ComplexMatrix out(b.rows() * c.rows(), b.cols() * c.cols());
  for (Index j = 0; j < b.cols(); ++j) {
    for (Index i = 0; i < b.rows(); ++i) {
      out.block(i * c.rows(), j * c.cols(), c.rows(), c.cols()) = b(i, j) * c;
    }
  }
  return out;
}

}  // namespace beamtrack
