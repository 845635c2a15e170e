#include <cmath>
#include <limits>

#include "slle/errors.hpp"
#include "slle/numerics.hpp"
#include "support.hpp"

using namespace slle;
using namespace slle::test;

namespace {

Matrix with_rank(Rng& rng, Index rows, Index cols, Index rank) {
  return gaussian_matrix(rng, rows, rank) * gaussian_matrix(rng, rank, cols);
}

}  // namespace

TEST_CASE("pinv of the identity and of a rank-deficient diagonal") {
  CHECK(max_abs(pinv(Matrix::Identity(3, 3), 1e-12) - Matrix::Identity(3, 3)) == 0.0);

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 0.5;
  CHECK(max_abs(pinv(d, 1e-12) - expected) == 0.0);
}

TEST_CASE("pinv is a left inverse for full column rank") {
  Rng rng(1);
  const Matrix a = gaussian_matrix(rng, 4, 2);
  CHECK(max_abs(pinv(a) * a - Matrix::Identity(2, 2)) < 1e-8);
}

TEST_CASE("Penrose identities across rank profiles") {
  Rng rng(2);
  for (Index rows : {2, 3, 5})
    for (Index cols : {1, 3, 4})
      for (Index rank = 0; rank <= std::min(rows, cols); ++rank) {
        const Matrix a = rank == 0 ? Matrix::Zero(rows, cols) : with_rank(rng, rows, cols, rank);
        const Matrix p = pinv(a);
        CAPTURE(rows);
        CAPTURE(cols);
        CAPTURE(rank);
        CHECK(max_abs(a * p * a - a) <= 1e-8 * std::max(max_abs(a), 1.0));
        CHECK(max_abs(p * a * p - p) <= 1e-8 * std::max(max_abs(p), 1.0));
        CHECK(max_abs((a * p).transpose() - a * p) <= 1e-8);
        CHECK(max_abs((p * a).transpose() - p * a) <= 1e-8);
        CHECK(numerical_rank(a) == rank);
      }
}

TEST_CASE("pinv rejects non-finite input") {
  Matrix a = Matrix::Identity(2, 2);
  a(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(pinv(a), InvalidInput);
  a(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(pinv(a), InvalidInput);
}

TEST_CASE("pseudo_logdet examples") {
  CHECK(pseudo_logdet(Matrix::Identity(3, 3)) == doctest::Approx(0.0));

  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = d(1, 1) = std::exp(2.0);
  Index rank = -1;
  CHECK(pseudo_logdet(d, kDefaultRankTol, rank) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(rank == 2);

  CHECK(pseudo_logdet(Matrix::Zero(2, 2), kDefaultRankTol, rank) == 0.0);
  CHECK(rank == 0);
}

TEST_CASE("pseudo_logdet of X X^T matches an independent eigensolver") {
  Rng rng(3);
  const Matrix x = gaussian_matrix(rng, 3, 2);
  const Matrix a = x * x.transpose();
  // The nonzero eigenvalues of X X^T are those of X^T X (2 x 2, full rank).
  const Eigen::SelfAdjointEigenSolver<Matrix> es(x.transpose() * x);
  const double expected = std::log(es.eigenvalues()(0) * es.eigenvalues()(1));
  CHECK(pseudo_logdet(a) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("pseudo_logdet rejects indefinite matrices") {
  Matrix a = Matrix::Identity(2, 2);
  a(1, 1) = -0.5;
  CHECK_THROWS_AS(pseudo_logdet(a), NotPositiveSemidefinite);
  // Tiny negative eigenvalues within tolerance are accepted.
  a(1, 1) = -1e-12;
  CHECK(pseudo_logdet(a) == doctest::Approx(0.0));
}

TEST_CASE("pseudo_logdet scales with the rank") {
  Rng rng(4);
  for (Index rank : {1, 2, 4}) {
    const Matrix x = gaussian_matrix(rng, 4, rank);
    const Matrix a = x * x.transpose();
    const double c = 3.7;
    CHECK(pseudo_logdet(c * a) ==
          doctest::Approx(static_cast<double>(rank) * std::log(c) + pseudo_logdet(a)).epsilon(1e-12));
  }
}

TEST_CASE("kron examples") {
  CHECK(max_abs(kron(Matrix::Identity(2, 2), Matrix::Identity(2, 2)) - Matrix::Identity(4, 4)) == 0.0);

  Matrix a(1, 2), b(2, 1), expected(2, 2);
  a << 1, 2;
  b << 3, 4;
  expected << 3, 6, 4, 8;
  const Matrix k = kron(a, b);
  CHECK(k.rows() == 2);
  CHECK(k.cols() == 2);
  CHECK(max_abs(k - expected) == 0.0);
}

TEST_CASE("kron/vec identity (A (x) B) vec(C) = vec(B C A^T)") {
  Rng rng(5);
  for (Index n : {2, 3}) {
    const Matrix a = gaussian_matrix(rng, n, n), b = gaussian_matrix(rng, n, n), c = gaussian_matrix(rng, n, n);
    CHECK(max_abs(kron(a, b) * vec(c) - vec(b * c * a.transpose())) <= 1e-10);
  }
}

TEST_CASE("vec stacks columns and unvec inverts it") {
  Matrix a(2, 2);
  a << 1, 3, 2, 4;
  Vector expected(4);
  expected << 1, 2, 3, 4;
  CHECK(max_abs(vec(a) - expected) == 0.0);

  Rng rng(6);
  const Matrix b = gaussian_matrix(rng, 3, 2);
  CHECK(max_abs(unvec(vec(b), 3, 2) - b) == 0.0);
  CHECK_THROWS_AS(unvec(vec(b), 2, 2), InvalidInput);
}

TEST_CASE("transpose Kronecker kernel collapses to X^T M X") {
  Rng rng(7);
  const Matrix x = gaussian_matrix(rng, 3, 2);
  const Matrix m = gaussian_matrix(rng, 3, 3);
  const Matrix t = kron(x.transpose(), x.transpose());
  CHECK(max_abs(unvec(t * vec(m), 2, 2) - x.transpose() * m * x) <= 1e-12);
}

TEST_CASE("symmetrize_psd examples") {
  CHECK(max_abs(symmetrize_psd(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)) == 0.0);

  Matrix a(2, 2), expected(2, 2);
  a << 1, 2, 0, 1;
  expected << 1, 1, 1, 1;
  CHECK(max_abs(symmetrize_psd(a) - expected) <= 1e-15);

  Rng rng(8);
  const Matrix q = random_orthogonal(rng, 3);
  Vector ev(3);
  ev << 2.0, 1.0, -1e-12;
  const Matrix b = q * ev.asDiagonal() * q.transpose();
  const auto sd = spectral_decomposition(symmetrize_psd(b, 0.0));
  // Recomputing the spectrum adds rounding of order eps * ||b||.
  CHECK(sd.eigenvalues(2) >= -8.0 * std::numeric_limits<double>::epsilon() * 2.0);
}

TEST_CASE("symmetrize_psd is idempotent and honours the floor") {
  Rng rng(9);
  const Matrix a = gaussian_matrix(rng, 4, 4);
  for (double floor : {0.0, 0.1}) {
    const Matrix once = symmetrize_psd(a, floor);
    CHECK(max_abs(once - once.transpose()) == 0.0);
    CHECK(spectral_decomposition(once).eigenvalues(3) >= floor - 1e-12);
    CHECK(max_abs(symmetrize_psd(once, floor) - once) <= 1e-12);
  }
}

TEST_CASE("spectral decomposition is sorted and orthonormal") {
  Rng rng(10);
  const Matrix a = random_spd(rng, 5);
  const auto sd = spectral_decomposition(a);
  for (Index i = 1; i < 5; ++i) CHECK(sd.eigenvalues(i - 1) >= sd.eigenvalues(i));
  CHECK(max_abs(sd.eigenvectors.transpose() * sd.eigenvectors - Matrix::Identity(5, 5)) <= 1e-10);
  CHECK(max_abs(sd.eigenvectors * sd.eigenvalues.asDiagonal() * sd.eigenvectors.transpose() - a) <= 1e-10);
}

TEST_CASE("fd_gradient examples") {
  Rng rng(11);
  const Matrix a = gaussian_matrix(rng, 3, 3);
  const Matrix g = fd_gradient([](const Matrix& m) { return m.trace(); }, a, 1e-6);
  CHECK(max_abs(g - Matrix::Identity(3, 3)) <= 1e-8);

  const Matrix eye = Matrix::Identity(2, 2);
  const Matrix g2 = fd_gradient([](const Matrix& m) { return m.squaredNorm(); }, eye, 1e-6);
  CHECK(max_abs(g2 - 2.0 * eye) <= 1e-8);

  CHECK_THROWS_AS(fd_gradient([](const Matrix&) { return std::nan(""); }, eye, 1e-6), NumericalError);
  CHECK_THROWS_AS(fd_gradient([](const Matrix& m) { return m.trace(); }, eye, 0.0), InvalidInput);
}
