#include "slle/neighborhood.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "slle/errors.hpp"

namespace slle {

DataMatrix::DataMatrix(Matrix points) : points_(std::move(points)) {
  require_finite(points_, "DataMatrix");
  if (points_.rows() == 0) throw InvalidInput("DataMatrix: no points");
  mean_ = points_.colwise().mean().transpose();
}

std::vector<std::vector<Index>> knn_indices(const Matrix& points, Index k) {
  const Index n = points.rows();
  if (k < 1 || k > n - 1)
    throw InvalidInput("knn: k=" + std::to_string(k) + " must lie in [1, n-1] with n=" +
                       std::to_string(n));
  // Distances from explicit differences so duplicate points tie at exactly 0.
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(n));
  std::vector<std::pair<double, Index>> cand(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      cand[c++] = {(points.row(i) - points.row(j)).squaredNorm(), j};
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    auto& row = out[static_cast<std::size_t>(i)];
    row.resize(static_cast<std::size_t>(k));
    for (Index m = 0; m < k; ++m) row[static_cast<std::size_t>(m)] = cand[static_cast<std::size_t>(m)].second;
  }
  return out;
}

Matrix local_design(const DataMatrix& data, const std::vector<Index>& indices, Centering centering) {
  Matrix x(data.d(), static_cast<Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const Index idx = indices[j];
    if (idx < 0 || idx >= data.n())
      throw InvalidInput("local_design: neighbor index " + std::to_string(idx) + " out of range");
    x.col(static_cast<Index>(j)) =
        centering == Centering::data_mean ? data.centered(idx) : data.point(idx);
  }
  return x;
}

NeighborhoodSystem knn_graph(const DataMatrix& data, Index k, Centering centering) {
  NeighborhoodSystem sys;
  sys.k = k;
  sys.centering = centering;
  sys.neighbors = knn_indices(data.points(), k);
  sys.local_design.reserve(sys.neighbors.size());
  for (const auto& nb : sys.neighbors) sys.local_design.push_back(local_design(data, nb, centering));
  return sys;
}

double neighborhood_preservation(const Matrix& input, const Matrix& embedded, Index k) {
  if (input.rows() != embedded.rows())
    throw InvalidInput("neighborhood_preservation: point counts differ");
  const auto a = knn_indices(input, k);
  const auto b = knn_indices(embedded, k);
  double total = 0.0;
  std::vector<Index> sa, sb, common;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa = a[i];
    sb = b[i];
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    common.clear();
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
    total += static_cast<double>(common.size()) / static_cast<double>(k);
  }
  return total / static_cast<double>(a.size());
}

}  // namespace slle
