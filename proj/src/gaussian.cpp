#include "slle/gaussian.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "slle/errors.hpp"
#include "slle/rng.hpp"

namespace slle {

namespace {

constexpr double kSymTol = 1e-10;

}  // namespace

void GaussianParams::validate() const {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
    throw InvalidInput("GaussianParams: covariance shape does not match mean");
  require_finite(mean, "GaussianParams mean");
  require_finite(covariance, "GaussianParams covariance");
  if (mean.size() == 0) return;
  const double scale = std::max(covariance.cwiseAbs().maxCoeff(), 1.0);
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > kSymTol * scale)
    throw InvalidInput("GaussianParams: covariance is not symmetric");
  const auto sd = spectral_decomposition(covariance);
  const double lmax = std::max(sd.eigenvalues(0), 0.0);
  if (sd.eigenvalues(sd.eigenvalues.size() - 1) < -kSymTol * std::max(lmax, 1.0))
    throw NotPositiveSemidefinite("GaussianParams: covariance has a negative eigenvalue");
}

JointBlocks JointBlocks::split(const GaussianParams& joint, Index d1) {
  const Index d = joint.dim();
  if (d1 < 0 || d1 > d) throw InvalidInput("JointBlocks::split: d1 out of range");
  const Index d2 = d - d1;
  JointBlocks j;
  j.mu1 = joint.mean.head(d1);
  j.mu2 = joint.mean.tail(d2);
  j.s11 = joint.covariance.topLeftCorner(d1, d1);
  j.s12 = joint.covariance.topRightCorner(d1, d2);
  j.s21 = joint.covariance.bottomLeftCorner(d2, d1);
  j.s22 = joint.covariance.bottomRightCorner(d2, d2);
  return j;
}

void JointBlocks::validate() const {
  const Index d1 = mu1.size(), d2 = mu2.size();
  if (s11.rows() != d1 || s11.cols() != d1 || s22.rows() != d2 || s22.cols() != d2 ||
      s12.rows() != d1 || s12.cols() != d2 || s21.rows() != d2 || s21.cols() != d1)
    throw InvalidInput("JointBlocks: block shapes are inconsistent");
  if (d1 > 0 && d2 > 0 && (s21 - s12.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw InvalidInput("JointBlocks: s21 is not the transpose of s12");
}

GaussianParams JointBlocks::assemble() const {
  validate();
  const Index d1 = mu1.size(), d2 = mu2.size();
  GaussianParams g;
  g.mean.resize(d1 + d2);
  g.mean << mu1, mu2;
  g.covariance.resize(d1 + d2, d1 + d2);
  g.covariance << s11, s12, s21, s22;
  return g;
}

double off_support() { return -std::numeric_limits<double>::infinity(); }

GaussianDensity::GaussianDensity(const GaussianParams& g, double rank_tol) : mean_(g.mean) {
  g.validate();
  const auto sd = spectral_decomposition(g.covariance);
  const Index d = g.dim();
  const double lmax = d > 0 ? sd.eigenvalues(0) : 0.0;
  rank_ = 0;
  if (lmax > 0.0) {
    while (rank_ < d && sd.eigenvalues(rank_) > rank_tol * lmax) ++rank_;
  }
  range_basis_ = sd.eigenvectors.leftCols(rank_);
  inv_eigen_ = sd.eigenvalues.head(rank_).cwiseInverse();
  const double logdet = sd.eigenvalues.head(rank_).array().log().sum();
  log_norm_ = -0.5 * (static_cast<double>(rank_) * std::log(2.0 * std::numbers::pi) + logdet);
}

double GaussianDensity::log_density(const Vector& x) const {
  if (x.size() != mean_.size()) throw InvalidInput("log_density: dimension mismatch");
  const Vector diff = x - mean_;
  const Vector coords = range_basis_.transpose() * diff;
  if (rank_ < mean_.size()) {
    const double outside = (diff - range_basis_ * coords).norm();
    if (outside > kSupportTol * diff.norm()) return off_support();
  }
  const double maha = coords.cwiseAbs2().dot(inv_eigen_);
  return log_norm_ - 0.5 * maha;
}

double log_density(const GaussianParams& g, const Vector& x, double rank_tol) {
  return GaussianDensity(g, rank_tol).log_density(x);
}

GaussianParams condition(const JointBlocks& j, const Vector& x1, double rank_tol) {
  j.validate();
  if (x1.size() != j.mu1.size()) throw InvalidInput("condition: x1 has the wrong dimension");
  require_finite(x1, "condition x1");
  const Matrix gain = j.s21 * pinv(j.s11, rank_tol);
  GaussianParams out;
  out.mean = j.mu2 + gain * (x1 - j.mu1);
  const Matrix cov = j.s22 - gain * j.s12;
  out.covariance = 0.5 * (cov + cov.transpose());
  return out;
}

std::vector<Vector> sample(const GaussianParams& g, std::uint64_t seed, std::size_t count) {
  g.validate();
  const Index d = g.dim();
  Matrix factor = Matrix::Zero(d, d);
  if (d > 0) {
    const auto sd = spectral_decomposition(g.covariance);
    const Vector root = sd.eigenvalues.cwiseMax(0.0).cwiseSqrt();
    factor = sd.eigenvectors * root.asDiagonal();
  }
  Rng rng(seed);
  std::vector<Vector> out;
  out.reserve(count);
  Vector z(d);
  for (std::size_t s = 0; s < count; ++s) {
    for (Index i = 0; i < d; ++i) z(i) = rng.normal();
    out.emplace_back(g.mean + factor * z);
  }
  return out;
}

}  // namespace slle
