#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "slle/neighborhood.hpp"

namespace slle {

/// n x n reconstruction weights, nonzero only at (i, neighbor of i).
struct WeightMatrix {
  Eigen::SparseMatrix<double, Eigen::RowMajor> w;

  Index n() const { return w.rows(); }
};

struct EmbeddingResult {
  Matrix y;            // n x p
  Vector eigenvalues;  // p + 1 smallest eigenvalues of (I - W)^T (I - W), ascending
  std::vector<Index> unnormalized_rows;  // rows left as-is by renormalisation (|sum| < 1e-12)
};

/// Standard LLE weights: per point solve (G + reg tr(G)/k I) w = 1 with the
/// local Gram G_jl = (x_i - x_j)^T (x_i - x_l), then rescale w to sum to 1.
/// reg = 0 with a singular Gram throws NumericalError.
WeightMatrix reconstruction_weights(const DataMatrix& data, const NeighborhoodSystem& nbrs, double reg = 1e-3);

/// Bottom eigenvectors of (I - W)^T (I - W), skipping the first, scaled by
/// sqrt(n). Each eigenvector is signed so its largest-magnitude entry is positive.
EmbeddingResult embed(const WeightMatrix& w, Index p);

/// Places per-point weight vectors (length k) on the neighbor pattern.
WeightMatrix weight_matrix(const std::vector<Vector>& weights, const NeighborhoodSystem& nbrs);

/// weight_matrix + optional row renormalisation + embed.
EmbeddingResult embed_from_stochastic(const std::vector<Vector>& weights, const NeighborhoodSystem& nbrs,
                                      Index p, bool renormalize = true);

/// Mean over points of |x_i - sum_j W_ij x_j|.
double mean_affine_residual(const DataMatrix& data, const WeightMatrix& w);

}  // namespace slle
