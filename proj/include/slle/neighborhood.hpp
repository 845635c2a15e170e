#pragma once

#include <vector>

#include "slle/numerics.hpp"

namespace slle {

/// n points in R^d stored as the rows of an n x d matrix, with their mean.
class DataMatrix {
 public:
  DataMatrix() = default;

  /// Takes ownership of the points (one per row) and computes the mean.
  explicit DataMatrix(Matrix points);

  Index n() const { return points_.rows(); }
  Index d() const { return points_.cols(); }

  const Matrix& points() const { return points_; }
  const Vector& mean() const { return mean_; }

  Vector point(Index i) const { return points_.row(i).transpose(); }

  /// x_i - mean
  Vector centered(Index i) const { return point(i) - mean_; }

 private:
  Matrix points_;
  Vector mean_;
};

/// How the columns of a local design matrix are formed from neighbors.
enum class Centering {
  data_mean,  // column j = x_{neighbor j} - mean
  none,       // column j = x_{neighbor j}
};

/// k nearest neighbors of every point and the matching d x k design matrices.
struct NeighborhoodSystem {
  Index k = 0;
  Centering centering = Centering::data_mean;
  std::vector<std::vector<Index>> neighbors;  // n lists, nearest first
  std::vector<Matrix> local_design;           // n matrices, d x k

  Index n() const { return static_cast<Index>(neighbors.size()); }
};

/// Exact k-NN under Euclidean distance by exhaustive search. Ties are broken
/// by the smaller point index; a point is never its own neighbor.
NeighborhoodSystem knn_graph(const DataMatrix& data, Index k,
                             Centering centering = Centering::data_mean);

Matrix local_design(const DataMatrix& data, const std::vector<Index>& indices,
                    Centering centering = Centering::data_mean);

/// k nearest neighbor lists of the rows of an arbitrary point matrix.
std::vector<std::vector<Index>> knn_indices(const Matrix& points, Index k);

/// Fraction of each point's k input-space neighbors that are also among its k
/// embedding-space neighbors, averaged over points.
double neighborhood_preservation(const Matrix& input, const Matrix& embedded, Index k);

}  // namespace slle
