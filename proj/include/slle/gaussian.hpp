#pragma once

#include <cstdint>
#include <vector>

#include "slle/numerics.hpp"

namespace slle {

/**
 * Mean and covariance of a multivariate Gaussian.
 *
 * The covariance may be rank deficient. Densities of such degenerate
 * Gaussians are taken with respect to Lebesgue measure on the affine support
 * mean + range(covariance), using the pseudo-inverse and pseudo-determinant.
 */
struct GaussianParams {
  Vector mean;
  Matrix covariance;

  Index dim() const { return mean.size(); }

  /// Throws InvalidInput for shape mismatch, asymmetry beyond 1e-10 or a
  /// negative eigenvalue below -1e-10 (relative to the largest).
  void validate() const;
};

/// Block view of a joint Gaussian over (x1, x2).
struct JointBlocks {
  Vector mu1;
  Vector mu2;
  Matrix s11;
  Matrix s12;
  Matrix s21;
  Matrix s22;

  /// Splits a joint Gaussian after the first d1 coordinates.
  static JointBlocks split(const GaussianParams& joint, Index d1);

  GaussianParams assemble() const;

  /// Shape checks plus s21 == s12^T within 1e-12.
  void validate() const;
};

/// Returned by log_density for points off the support of a degenerate Gaussian.
double off_support();

/// Residual of (x - mean) outside range(covariance) larger than this fraction
/// of |x - mean| counts as off-support.
inline constexpr double kSupportTol = 1e-6;

/// Factorised density for evaluating many points against one Gaussian.
class GaussianDensity {
 public:
  explicit GaussianDensity(const GaussianParams& g, double rank_tol = kDefaultRankTol);

  /// Log density, or off_support() when x is not on the support.
  double log_density(const Vector& x) const;

  Index rank() const { return rank_; }

 private:
  Vector mean_;
  Matrix range_basis_;    // d x r, orthonormal columns spanning range(covariance)
  Vector inv_eigen_;      // r reciprocal nonzero eigenvalues
  double log_norm_ = 0.0;  // -(r log 2pi + pseudo_logdet) / 2
  Index rank_ = 0;
};

double log_density(const GaussianParams& g, const Vector& x, double rank_tol = kDefaultRankTol);

/// Conditional distribution of x2 given x1. Uses the pseudo-inverse of s11,
/// so singular s11 is allowed.
GaussianParams condition(const JointBlocks& j, const Vector& x1, double rank_tol = kDefaultRankTol);

/// `count` draws of mean + V sqrt(L) z with z standard normal, V L V^T the
/// eigendecomposition of the covariance. Directions with zero eigenvalue
/// contribute nothing, so degenerate covariances need no special handling.
std::vector<Vector> sample(const GaussianParams& g, std::uint64_t seed, std::size_t count);

}  // namespace slle
