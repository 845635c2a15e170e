#pragma once

#include <cstdint>
#include <vector>

#include "slle/gaussian.hpp"
#include "slle/neighborhood.hpp"
#include "slle/numerics.hpp"
#include "slle/trace.hpp"

/**
 * Stochastic linear reconstruction for locally linear embedding.
 *
 * Each point is modelled as x_i = X_i w_i + mu with a Gaussian prior
 * w_i ~ N(0, Omega_i), X_i the d x k matrix of (centered) neighbors. The
 * joint of (x_i, w_i) is Gaussian with blocks
 *
 *     [ X_i Omega_i X_i^T    X_i Omega_i ]
 *     [ Omega_i X_i^T        Omega_i     ]
 *
 * and EM alternates between the exact posterior of w_i given x_i (E-step)
 * and maximisation of the expected complete-data log-likelihood over the
 * prior covariances (M-step). The rank-k matrix X_i Omega_i X_i^T is
 * handled through pseudo-inverses and pseudo-determinants throughout.
 */
namespace slle {

enum class PriorMode { full, spherical };

/// Which points feed the scatters used in point i's objective.
enum class ScatterScope {
  global,     // S1, S2 averaged over all n points and shared
  per_point,  // S1, S2 from point i alone
};

enum class WeightExtraction { mean, sample };

struct EMConfig {
  PriorMode mode = PriorMode::spherical;
  int max_iter = 100;
  double tol = 1e-6;
  double lr = 1e-3;       // ascent step on Omega^-1 (full mode)
  int grad_steps = 5;     // ascent steps per M-step (full mode)
  double sigma_floor = 1e-12;
  double ridge = 0.0;     // > 0 replaces pinv / pseudo-logdet with (A + ridge I)^-1 / logdet
  ScatterScope scatter_scope = ScatterScope::global;
  WeightExtraction extract = WeightExtraction::mean;
  std::uint64_t seed = 0;
  double rank_tol = kDefaultRankTol;
  double precision_floor = 1e-9;  // eigenvalue floor on Omega^-1 after each ascent step

  void validate() const;
};

/// Per-point prior covariance: full k x k matrices or spherical sigma_i I.
struct PriorCovariance {
  PriorMode mode = PriorMode::spherical;
  Index k = 0;
  std::vector<Matrix> omegas;  // full mode
  std::vector<double> sigmas;  // spherical mode

  static PriorCovariance identity(PriorMode mode, Index n, Index k);

  Index n() const;
  Matrix omega(Index i) const;
  void validate() const;
};

/// Posterior q(w_i) = N(means[i], covariances[i]).
struct WeightPosterior {
  std::vector<Vector> means;
  std::vector<Matrix> covariances;
  /// Dimension of the support of q(w_i): k minus the rank of X_i Omega_i X_i^T
  /// (k when a ridge is used).
  std::vector<Index> support_dims;

  Index n() const { return static_cast<Index>(means.size()); }
};

struct Scatters {
  Matrix s1;  // d x d expected residual scatter
  Matrix s2;  // k x k expected weight second moment
};

/// Scatters as seen by each point under a given scope.
struct ScatterSet {
  ScatterScope scope = ScatterScope::global;
  std::vector<Scatters> items;  // one shared entry (global) or n entries

  const Scatters& at(Index i) const {
    return scope == ScatterScope::global ? items.front() : items[static_cast<std::size_t>(i)];
  }

  /// Multiplier of point i's bracket in the objective: n for global scatters
  /// (each is an average over n points), 1 for per-point scatters.
  double weight(Index n) const { return scope == ScatterScope::global ? static_cast<double>(n) : 1.0; }
};

/// Numerical knobs shared by the E-step, the surrogate and its gradient.
struct SurrogateOptions {
  ScatterScope scope = ScatterScope::global;
  double ridge = 0.0;
  double rank_tol = kDefaultRankTol;
};

inline SurrogateOptions surrogate_options(const EMConfig& cfg) {
  return {cfg.scatter_scope, cfg.ridge, cfg.rank_tol};
}

/// Joint Gaussian of (x_i, w_i): mean (mu, 0), covariance
/// [[X Omega X^T, X Omega], [Omega X^T, Omega]]. d + k dimensional.
GaussianParams build_joint(const Matrix& x, const Matrix& omega, const Vector& mu);

WeightPosterior e_step(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                       const PriorCovariance& prior, const SurrogateOptions& opts = {});

/// Scatters averaged over all points.
Scatters scatters(const DataMatrix& data, const NeighborhoodSystem& nbrs, const WeightPosterior& post);

/// Scatters of point i alone (no averaging).
Scatters point_scatters(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                        const WeightPosterior& post, Index i);

ScatterSet scatter_set(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                       const WeightPosterior& post, ScatterScope scope);

/**
 * Non-constant part of point i's contribution to the expected joint
 * log-likelihood:
 *
 *   -(w/2) [ plogdet(X Omega X^T) + tr((X Omega X^T)^+ S1) + log|Omega| + tr(Omega^-1 S2) ]
 *
 * with w the scatter weight. Throws NumericalError if Omega is not positive
 * definite.
 */
double point_objective(const Matrix& x, const Matrix& omega, const Scatters& sc, double weight,
                       const SurrogateOptions& opts = {});

/// Expected joint log-likelihood summed over points, including the constants
/// -(n/2)(d + k) log(2 pi).
double joint_log_likelihood(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                            const PriorCovariance& prior, const WeightPosterior& post,
                            const SurrogateOptions& opts = {});

/// Differential entropy of q(w_i) on its support.
double posterior_entropy(const WeightPosterior& post, Index i);

/// joint_log_likelihood plus the weighted posterior entropies: the evidence
/// lower bound tracked by the EM driver.
double evidence_lower_bound(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                            const PriorCovariance& prior, const WeightPosterior& post,
                            const SurrogateOptions& opts = {});

/**
 * Gradient of point_objective with respect to Omega^-1, written in the
 * vec/Kronecker form
 *
 *   (w/2) [ unvec(T vec(A)) - unvec(T vec(S1)) + Omega - S2 ],  T = K (x) K,
 *
 * where A = X Omega X^T and K = Omega X^T A^+ is the posterior gain. The
 * terms unvec(T vec(M)) are evaluated as K M K^T.
 */
Matrix point_gradient(const Matrix& x, const Matrix& omega, const Scatters& sc, double weight,
                      const SurrogateOptions& opts = {});

/**
 * The same expression with T = X^T (x) X^T, evaluated literally through
 * kron/vec/unvec. It coincides with point_gradient when X has orthonormal
 * columns and differs otherwise; kept for comparison only.
 */
Matrix point_gradient_transpose_kernel(const Matrix& x, const Matrix& omega, const Scatters& sc,
                                       double weight);

/// point_gradient for every point. Requires full mode.
std::vector<Matrix> m_step_gradient(const NeighborhoodSystem& nbrs, const PriorCovariance& prior,
                                    const ScatterSet& sc, const SurrogateOptions& opts = {});

/// Closed-form spherical M-step:
/// sigma_i = (tr((X_i X_i^T)^+ S1) + tr(S2)) / (d + k), floored at sigma_floor.
std::vector<double> m_step_spherical(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                                     const ScatterSet& sc, double sigma_floor = 1e-12,
                                     double rank_tol = kDefaultRankTol);

/// tr((X X^T)^+ S1) + tr(S2): the data term of the spherical objective.
double spherical_trace_term(const Matrix& x, const Scatters& sc, double rank_tol = kDefaultRankTol);

/**
 * Spherical objective of one point as a function of sigma:
 *   -(w/2) [ (d + k) log sigma + trace_term / sigma ].
 * Both trace terms enter with a positive sign; its unique maximiser is
 * trace_term / (d + k).
 */
double relaxed_spherical_objective(double sigma, Index d, Index k, double trace_term, double weight);

/// Full-mode M-step: cfg.grad_steps ascent steps of size cfg.lr on each
/// Omega_i^-1, flooring its eigenvalues at cfg.precision_floor after each.
PriorCovariance m_step_full(const NeighborhoodSystem& nbrs, const PriorCovariance& prior,
                            const ScatterSet& sc, const EMConfig& cfg);

struct StochasticFit {
  PriorCovariance prior;
  WeightPosterior posterior;
  EMTrace trace;
  bool converged = false;
};

/**
 * EM from Omega_i = I. Each iteration runs the M-step on the current
 * posterior, then refreshes the posterior and records the evidence lower
 * bound. Stops when its relative change falls below cfg.tol or after
 * cfg.max_iter iterations. Throws DivergedError if the bound becomes
 * non-finite.
 */
StochasticFit fit_stochastic_reconstruction(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                                            const EMConfig& cfg, const IterationObserver& observer = {});

/// Posterior means, or one draw per point from q(w_i) with per-point seeds
/// derived from `seed`.
std::vector<Vector> extract_weights(const WeightPosterior& post, WeightExtraction mode, std::uint64_t seed);

/// Mean over points of |x_i - mu - X_i w_i|.
double mean_reconstruction_residual(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                                    const std::vector<Vector>& weights);

}  // namespace slle
