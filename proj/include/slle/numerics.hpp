#pragma once

#include <Eigen/Dense>
#include <functional>

namespace slle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative numerical-rank tolerance used when callers do not supply one.
inline constexpr double kDefaultRankTol = 1e-10;

/// Relative tolerance for the "symmetric PSD" precondition.
inline constexpr double kPsdTol = 1e-8;

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;  // columns, orthonormal
};

bool all_finite(const Matrix& a);

/// Throws InvalidInput naming `what` when `a` holds NaN or Inf.
void require_finite(const Matrix& a, const char* what);

/// Eigendecomposition of the symmetric part (A + A^T) / 2.
SpectralDecomposition spectral_decomposition(const Matrix& a);

/// Moore-Penrose pseudo-inverse via SVD. Singular values at or below
/// rank_tol * sigma_max are treated as zero.
Matrix pinv(const Matrix& a, double rank_tol = kDefaultRankTol);

/// Number of singular values above rank_tol * sigma_max.
Index numerical_rank(const Matrix& a, double rank_tol = kDefaultRankTol);

/// Sum of log eigenvalues above rank_tol * lambda_max of a symmetric PSD
/// matrix. The zero matrix has pseudo-logdet 0.
double pseudo_logdet(const Matrix& a, double rank_tol = kDefaultRankTol);

/// pseudo_logdet that also reports the rank it summed over.
double pseudo_logdet(const Matrix& a, double rank_tol, Index& rank);

Matrix kron(const Matrix& a, const Matrix& b);

/// Column-stacking vectorization: an r x c matrix becomes an (r*c) x 1 column.
Matrix vec(const Matrix& a);

/// Inverse of vec for the given shape.
Matrix unvec(const Matrix& v, Index rows, Index cols);

/// Symmetric part of `a` with eigenvalues clamped to at least `floor`.
Matrix symmetrize_psd(const Matrix& a, double floor = 0.0);

/// Central finite-difference gradient of a scalar function of a matrix:
/// entry (i, j) is (f(A + h E_ij) - f(A - h E_ij)) / 2h.
Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& a, double h);

}  // namespace slle
