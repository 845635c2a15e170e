#include "slle/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slle/errors.hpp"

namespace slle {

bool all_finite(const Matrix& a) { return a.allFinite(); }

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entry");
}

SpectralDecomposition spectral_decomposition(const Matrix& a) {
  if (a.rows() != a.cols()) throw InvalidInput("spectral_decomposition: matrix not square");
  require_finite(a, "spectral_decomposition");
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("spectral_decomposition: eigensolver failed");
  // Eigen returns ascending order.
  SpectralDecomposition out;
  out.eigenvalues = es.eigenvalues().reverse();
  out.eigenvectors = es.eigenvectors().rowwise().reverse();
  return out;
}

namespace {

Eigen::JacobiSVD<Matrix> thin_svd(const Matrix& a) {
  return Eigen::JacobiSVD<Matrix>(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

}  // namespace

Matrix pinv(const Matrix& a, double rank_tol) {
  require_finite(a, "pinv");
  if (!(rank_tol > 0.0)) throw InvalidInput("pinv: rank_tol must be positive");
  if (a.size() == 0) return Matrix(a.cols(), a.rows());
  const auto svd = thin_svd(a);
  const Vector& s = svd.singularValues();
  const double cutoff = rank_tol * (s.size() > 0 ? s(0) : 0.0);
  Vector inv_s = Vector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) inv_s(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv_s.asDiagonal() * svd.matrixU().transpose();
}

Index numerical_rank(const Matrix& a, double rank_tol) {
  require_finite(a, "numerical_rank");
  if (a.size() == 0) return 0;
  const auto svd = thin_svd(a);
  const Vector& s = svd.singularValues();
  const double cutoff = rank_tol * s(0);
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff && s(i) > 0.0) ++r;
  return r;
}

double pseudo_logdet(const Matrix& a, double rank_tol, Index& rank) {
  const auto sd = spectral_decomposition(a);
  rank = 0;
  if (sd.eigenvalues.size() == 0) return 0.0;
  const double lmax = sd.eigenvalues(0);
  const double lmin = sd.eigenvalues(sd.eigenvalues.size() - 1);
  if (lmin < -kPsdTol * std::max(std::abs(lmax), 1e-300)) {
    throw NotPositiveSemidefinite("pseudo_logdet: eigenvalue " + std::to_string(lmin) +
                                  " is negative beyond tolerance");
  }
  if (lmax <= 0.0) return 0.0;
  const double cutoff = rank_tol * lmax;
  double sum = 0.0;
  for (Index i = 0; i < sd.eigenvalues.size(); ++i) {
    if (sd.eigenvalues(i) > cutoff) {
      sum += std::log(sd.eigenvalues(i));
      ++rank;
    }
  }
  return sum;
}

double pseudo_logdet(const Matrix& a, double rank_tol) {
  Index rank = 0;
  return pseudo_logdet(a, rank_tol, rank);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  require_finite(a, "kron");
  require_finite(b, "kron");
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix vec(const Matrix& a) {
  // Eigen's default storage is column-major, so the reshape is column stacking.
  return Eigen::Map<const Matrix>(a.data(), a.size(), 1);
}

Matrix unvec(const Matrix& v, Index rows, Index cols) {
  if (v.cols() != 1 && v.rows() != 1) throw InvalidInput("unvec: input is not a vector");
  if (v.size() != rows * cols) {
    throw InvalidInput("unvec: length " + std::to_string(v.size()) + " does not match " +
                       std::to_string(rows) + "x" + std::to_string(cols));
  }
  const Matrix col = v.cols() == 1 ? v : Matrix(v.transpose());
  return Eigen::Map<const Matrix>(col.data(), rows, cols);
}

Matrix symmetrize_psd(const Matrix& a, double floor) {
  if (a.rows() != a.cols()) throw InvalidInput("symmetrize_psd: matrix not square");
  Matrix sym = 0.5 * (a + a.transpose());
  const auto sd = spectral_decomposition(sym);
  if (sd.eigenvalues.size() == 0 || sd.eigenvalues.minCoeff() >= floor) return sym;
  const Vector clamped = sd.eigenvalues.cwiseMax(floor);
  sym = sd.eigenvectors * clamped.asDiagonal() * sd.eigenvectors.transpose();
  return 0.5 * (sym + sym.transpose());
}

Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& a, double h) {
  if (!(h > 0.0)) throw InvalidInput("fd_gradient: step must be positive");
  Matrix grad(a.rows(), a.cols());
  Matrix probe = a;
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      probe(i, j) = a(i, j) + h;
      const double up = f(probe);
      probe(i, j) = a(i, j) - h;
      const double down = f(probe);
      probe(i, j) = a(i, j);
      if (!std::isfinite(up) || !std::isfinite(down))
        throw NumericalError("fd_gradient: function returned a non-finite value");
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace slle
