#include <algorithm>
#include <numeric>

#include "slle/classic_lle.hpp"
#include "slle/data_io.hpp"
#include "slle/errors.hpp"
#include "slle/stochastic_lle.hpp"
#include "support.hpp"

using namespace slle;
using namespace slle::test;

namespace {

Matrix dense(const WeightMatrix& w) { return Matrix(w.w); }

}  // namespace

TEST_CASE("single neighbor gets weight one; a midpoint gets one half each") {
  Matrix pts(3, 2);
  pts << 0, 0, 1, 1, 2, 2;
  const DataMatrix data(pts);
  const auto w1 = dense(reconstruction_weights(data, knn_graph(data, 1)));
  CHECK(w1(0, 1) == 1.0);
  CHECK(w1.row(2).sum() == 1.0);

  const auto w2 = dense(reconstruction_weights(data, knn_graph(data, 2)));
  CHECK(std::abs(w2(1, 0) - 0.5) <= 1e-12);
  CHECK(std::abs(w2(1, 2) - 0.5) <= 1e-12);
}

TEST_CASE("a point inside the simplex of its neighbors is reconstructed") {
  Matrix pts(4, 2);
  pts << 0, 0, 1, 0, 0, 1, 0, 0;
  Vector bary(3);
  bary << 0.2, 0.5, 0.3;
  pts.row(3) = bary(0) * pts.row(0) + bary(1) * pts.row(1) + bary(2) * pts.row(2);
  const DataMatrix data(pts);
  const auto w = reconstruction_weights(data, knn_graph(data, 3), 1e-12);
  const Vector recon = (Matrix(w.w) * pts).row(3).transpose();
  CHECK((recon - pts.row(3).transpose()).norm() < 1e-8);
  for (Index j = 0; j < 3; ++j) CHECK(std::abs(w.w.coeff(3, j) - bary(j)) < 1e-8);
}

TEST_CASE("weights sum to one and vanish on the diagonal") {
  Rng rng(1);
  const DataMatrix data(gaussian_matrix(rng, 60, 3));
  const auto w = reconstruction_weights(data, knn_graph(data, 7));
  const Matrix d = dense(w);
  CHECK(((d.rowwise().sum().array() - 1.0).abs() <= 1e-10).all());
  CHECK(max_abs(d.diagonal()) == 0.0);
  for (Index i = 0; i < 60; ++i) CHECK((d.row(i).array() != 0.0).count() <= 7);
}

TEST_CASE("weights are invariant to translation and rotation") {
  Rng rng(2);
  const Matrix pts = gaussian_matrix(rng, 40, 3);
  const DataMatrix base(pts);
  const auto nb = knn_graph(base, 6);
  const Matrix w = dense(reconstruction_weights(base, nb));

  const Vector shift = 10.0 * gaussian_vector(rng, 3);
  const DataMatrix moved(Matrix(pts.rowwise() + shift.transpose()));
  CHECK(max_abs(dense(reconstruction_weights(moved, knn_graph(moved, 6))) - w) <= 1e-10);

  const Matrix q = random_orthogonal(rng, 3);
  const DataMatrix turned(Matrix(pts * q.transpose()));
  CHECK(max_abs(dense(reconstruction_weights(turned, knn_graph(turned, 6))) - w) <= 1e-10);
}

TEST_CASE("singular Gram without regularisation is an error that suggests reg") {
  Rng rng(3);
  const DataMatrix data(gaussian_matrix(rng, 20, 2));
  const auto nb = knn_graph(data, 5);  // k > d: the local Gram is singular
  try {
    reconstruction_weights(data, nb, 0.0);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("reg") != std::string::npos);
  }
  CHECK_THROWS_AS(reconstruction_weights(data, nb, -1.0), InvalidInput);
  CHECK_NOTHROW(reconstruction_weights(data, knn_graph(data, 2), 0.0));
}

TEST_CASE("embedding spectrum and column properties") {
  Rng rng(4);
  const DataMatrix data(gaussian_matrix(rng, 80, 3));
  // Heavy regularisation separates the bottom of the spectrum, so the
  // eigenvectors are determined to near machine precision.
  const auto w = reconstruction_weights(data, knn_graph(data, 8), 1.0);
  const auto e = embed(w, 2);
  REQUIRE(e.y.rows() == 80);
  REQUIRE(e.y.cols() == 2);
  REQUIRE(e.eigenvalues.size() == 3);
  CHECK(std::abs(e.eigenvalues(0)) <= 1e-8);
  CHECK(e.eigenvalues.minCoeff() >= -1e-10);
  for (Index c = 0; c < 2; ++c) {
    CHECK(std::abs(e.y.col(c).sum()) <= 1e-8);
    Index arg = 0;
    e.y.col(c).cwiseAbs().maxCoeff(&arg);
    CHECK(e.y(arg, c) > 0.0);
  }
  CHECK(std::abs(e.y.col(0).dot(e.y.col(1))) <= 1e-8);
  CHECK(e.y.col(0).squaredNorm() == doctest::Approx(80.0).epsilon(1e-10));
  CHECK_THROWS_AS(embed(w, 0), InvalidInput);
  CHECK_THROWS_AS(embed(w, 80), InvalidInput);
}

TEST_CASE("points on a line keep their order in a 1-D embedding") {
  Rng rng(5);
  const Index n = 40;
  Matrix pts(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) + 0.3 * rng.uniform();
    pts.row(i) << t, 0.5 * t;
  }
  const DataMatrix data(pts);
  const auto e = embed(reconstruction_weights(data, knn_graph(data, 4)), 1);
  const Vector y = e.y.col(0);
  bool increasing = true, decreasing = true;
  for (Index i = 1; i < n; ++i) {
    increasing = increasing && y(i) > y(i - 1);
    decreasing = decreasing && y(i) < y(i - 1);
  }
  CHECK((increasing || decreasing));
}

TEST_CASE("embedding from stochastic weights") {
  Rng rng(6);
  const DataMatrix data(gaussian_matrix(rng, 50, 3));
  const auto nb = knn_graph(data, 6);
  const auto w = reconstruction_weights(data, nb, 1.0);

  std::vector<Vector> rows;
  for (Index i = 0; i < 50; ++i) {
    Vector r(6);
    for (Index j = 0; j < 6; ++j) r(j) = w.w.coeff(i, nb.neighbors[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    rows.push_back(r);
  }
  // Classic weights already sum to one: renormalising is a no-op.
  const auto a = embed(w, 2);
  const auto b = embed_from_stochastic(rows, nb, 2, true);
  CHECK(max_abs(a.y - b.y) <= 1e-9);
  CHECK(b.unnormalized_rows.empty());

  // Rows scaled arbitrarily renormalise to the same matrix; zero rows are flagged.
  auto scaled = rows;
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] *= 1.0 + static_cast<double>(i);
  CHECK(max_abs(embed_from_stochastic(scaled, nb, 2).y - a.y) <= 1e-8);
  scaled[3].setZero();
  CHECK(embed_from_stochastic(scaled, nb, 2).unnormalized_rows == std::vector<Index>{3});
  CHECK_THROWS_AS(embed_from_stochastic(rows, nb, 50), InvalidInput);
}

TEST_CASE("stochastic and classic pipelines score alike on a Swiss roll") {
  DatasetSpec spec;
  spec.n = 500;
  const auto data = generate(spec).data;
  const auto nb = knn_graph(data, 8);
  const auto classic = embed(reconstruction_weights(data, nb), 2);
  const auto fit = fit_stochastic_reconstruction(data, nb, EMConfig{});
  const auto stochastic = embed_from_stochastic(extract_weights(fit.posterior, WeightExtraction::mean, 0), nb, 2);
  const double a = neighborhood_preservation(data.points(), classic.y, 8);
  const double b = neighborhood_preservation(data.points(), stochastic.y, 8);
  CAPTURE(a);
  CAPTURE(b);
  CHECK(std::abs(a - b) <= 0.15);
}

TEST_CASE("mean affine residual") {
  Matrix pts(3, 1);
  pts << 0, 1, 2;
  const DataMatrix data(pts);
  const auto w = reconstruction_weights(data, knn_graph(data, 2));
  // Interior point exact; ends extrapolate exactly too with two neighbors on a line.
  CHECK(mean_affine_residual(data, w) <= 1e-2);
}
