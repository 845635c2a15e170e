#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "slle/neighborhood.hpp"
#include "slle/trace.hpp"

/**
 * Global linear latent-variable models: x = Lambda w + mu + eps with
 * w ~ N(0, I) and eps ~ N(0, Psi). Factor analysis uses a diagonal Psi,
 * probabilistic PCA an isotropic Psi = sigma^2 I. The marginal of x is
 * N(mu, Lambda Lambda^T + Psi).
 *
 * The EM updates and the PPCA closed form are the standard ones
 * (Ghahramani & Hinton 1996; Tipping & Bishop 1999).
 */
namespace slle {

struct DiagonalNoise {
  Vector psi;
};

struct IsotropicNoise {
  double variance = 0.0;
};

using NoiseModel = std::variant<DiagonalNoise, IsotropicNoise>;

struct LatentLinearModel {
  Matrix loading;  // d x q
  NoiseModel noise;
  Vector mean;     // d

  Index d() const { return loading.rows(); }
  Index q() const { return loading.cols(); }
  bool isotropic() const { return std::holds_alternative<IsotropicNoise>(noise); }

  /// Noise variances as a d-vector.
  Vector noise_diagonal() const;

  /// Lambda Lambda^T + Psi
  Matrix marginal_covariance() const;

  /// Shapes consistent, noise variances strictly positive.
  void validate() const;
};

enum class FactorInit {
  warm,    // top-q principal directions scaled by sqrt(eigenvalue), residual noise
  random,  // seeded Gaussian loading, noise from the sample variances
};

struct FactorConfig {
  int max_iter = 100;
  double tol = 1e-6;
  bool isotropic = false;  // constrain Psi = sigma^2 I (probabilistic PCA)
  FactorInit init = FactorInit::warm;
  std::uint64_t seed = 0;
  std::optional<LatentLinearModel> start;  // overrides `init` when set

  void validate() const;
};

struct LatentFit {
  LatentLinearModel model;
  EMTrace trace;  // objective = marginal log-likelihood after each iteration
  bool converged = false;
};

/// EM for factor analysis (or PPCA when cfg.isotropic). mu is fixed at the
/// sample mean. Stops on relative log-likelihood change below cfg.tol.
LatentFit fa_fit(const DataMatrix& data, Index q, const FactorConfig& cfg = {},
                 const IterationObserver& observer = {});

/// Sum over points of log N(x_i; mu, Lambda Lambda^T + Psi).
double fa_log_likelihood(const LatentLinearModel& model, const DataMatrix& data);

/// Maximum-likelihood PPCA from the eigendecomposition of the sample
/// covariance: sigma^2 is the mean of the d - q trailing eigenvalues and
/// Lambda = V_q (L_q - sigma^2 I)^{1/2}, columns with L_j <= sigma^2 set to 0.
LatentLinearModel ppca_fit_closed_form(const DataMatrix& data, Index q);

/// fa_fit with the isotropic constraint.
LatentFit ppca_fit_em(const DataMatrix& data, Index q, FactorConfig cfg = {},
                      const IterationObserver& observer = {});

/// Posterior means E[w_i | x_i] as the rows of an n x q matrix.
Matrix latent_means(const LatentLinearModel& model, const DataMatrix& data);

/// Sample covariance with divisor n.
Matrix sample_covariance(const DataMatrix& data);

/// JSON document {type, d, q, mean, loading, noise}. Every real is written as
/// a C99 hex-float string so parsing restores the exact bits. loading is
/// row-major.
std::string model_to_json(const LatentLinearModel& model, const std::string& type);

/// Inverse of model_to_json. Throws ParseError on malformed documents.
LatentLinearModel model_from_json(const std::string& text);

}  // namespace slle
