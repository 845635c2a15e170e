#include "slle/classic_lle.hpp"

#include <cmath>
#include <string>

#include "slle/errors.hpp"

namespace slle {

namespace {

constexpr double kZeroRowSum = 1e-12;

WeightMatrix from_rows(const std::vector<Vector>& rows, const NeighborhoodSystem& nbrs) {
  const Index n = nbrs.n();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n * nbrs.k));
  for (Index i = 0; i < n; ++i) {
    const auto& nb = nbrs.neighbors[static_cast<std::size_t>(i)];
    const auto& w = rows[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < nb.size(); ++j) triplets.emplace_back(i, nb[j], w(static_cast<Index>(j)));
  }
  WeightMatrix out;
  out.w.resize(n, n);
  out.w.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

}  // namespace

WeightMatrix reconstruction_weights(const DataMatrix& data, const NeighborhoodSystem& nbrs, double reg) {
  if (!(reg >= 0.0)) throw InvalidInput("reconstruction_weights: reg must be non-negative");
  if (nbrs.n() != data.n()) throw InvalidInput("reconstruction_weights: neighborhood size mismatch");
  const Index k = nbrs.k;
  std::vector<Vector> rows;
  rows.reserve(static_cast<std::size_t>(data.n()));
  const Vector ones = Vector::Ones(k);
  for (Index i = 0; i < data.n(); ++i) {
    const auto& nb = nbrs.neighbors[static_cast<std::size_t>(i)];
    Matrix diffs(data.d(), k);
    for (Index j = 0; j < k; ++j) diffs.col(j) = data.point(i) - data.point(nb[static_cast<std::size_t>(j)]);
    Matrix gram = diffs.transpose() * diffs;
    const double tr = gram.trace();
    gram.diagonal().array() += reg * (tr > 0.0 ? tr / static_cast<double>(k) : 1.0);
    Eigen::ColPivHouseholderQR<Matrix> qr(gram);
    if (qr.rank() < k)
      throw NumericalError("local Gram matrix of point " + std::to_string(i) +
                           " is singular; use a positive regularisation (reg > 0)");
    Vector w = qr.solve(ones);
    const double sum = w.sum();
    if (!std::isfinite(sum) || std::abs(sum) < kZeroRowSum)
      throw NumericalError("reconstruction weights of point " + std::to_string(i) + " cannot be normalised");
    rows.push_back(w / sum);
  }
  return from_rows(rows, nbrs);
}

WeightMatrix weight_matrix(const std::vector<Vector>& weights, const NeighborhoodSystem& nbrs) {
  if (static_cast<Index>(weights.size()) != nbrs.n()) throw InvalidInput("weight_matrix: wrong number of rows");
  for (const auto& w : weights)
    if (w.size() != nbrs.k) throw InvalidInput("weight_matrix: weight vector length differs from k");
  return from_rows(weights, nbrs);
}

EmbeddingResult embed(const WeightMatrix& w, Index p) {
  const Index n = w.n();
  if (p < 1 || p > n - 1)
    throw InvalidInput("embed: p=" + std::to_string(p) + " must lie in [1, n-1] with n=" + std::to_string(n));
  Matrix iw = -Matrix(w.w);
  iw.diagonal().array() += 1.0;
  const Matrix m = iw.transpose() * iw;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("embed: eigensolver failed");

  EmbeddingResult out;
  out.eigenvalues = es.eigenvalues().head(p + 1);
  out.y = es.eigenvectors().middleCols(1, p) * std::sqrt(static_cast<double>(n));
  for (Index c = 0; c < p; ++c) {
    Index arg = 0;
    out.y.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.y(arg, c) < 0.0) out.y.col(c) = -out.y.col(c);
  }
  return out;
}

EmbeddingResult embed_from_stochastic(const std::vector<Vector>& weights, const NeighborhoodSystem& nbrs,
                                      Index p, bool renormalize) {
  std::vector<Vector> rows = weights;
  std::vector<Index> skipped;
  if (renormalize) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double sum = rows[i].sum();
      if (std::abs(sum) < kZeroRowSum)
        skipped.push_back(static_cast<Index>(i));
      else
        rows[i] /= sum;
    }
  }
  auto out = embed(weight_matrix(rows, nbrs), p);
  out.unnormalized_rows = std::move(skipped);
  return out;
}

double mean_affine_residual(const DataMatrix& data, const WeightMatrix& w) {
  const Matrix recon = w.w * data.points();
  return (data.points() - recon).rowwise().norm().mean();
}

}  // namespace slle
