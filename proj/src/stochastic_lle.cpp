#include "slle/stochastic_lle.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "slle/errors.hpp"
#include "slle/gaussian.hpp"
#include "slle/rng.hpp"

namespace slle {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

/// Generalised inverse and log-determinant of the d x d matrix X Omega X^T.
struct ReconstructionCovariance {
  Matrix inverse;
  double logdet = 0.0;
  Index rank = 0;
};

Matrix symmetric(const Matrix& a) { return 0.5 * (a + a.transpose()); }

Eigen::LLT<Matrix> prior_factor(const Matrix& omega) {
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success)
    throw NumericalError("prior covariance Omega_i must be positive definite");
  return llt;
}

ReconstructionCovariance solve_reconstruction(const Matrix& x, const Matrix& omega, const SurrogateOptions& opts) {
  ReconstructionCovariance out;
  const Index d = x.rows();
  if (opts.ridge > 0.0) {
    const Matrix ridged = symmetric(x * omega * x.transpose()) + opts.ridge * Matrix::Identity(d, d);
    Eigen::LDLT<Matrix> ldlt(ridged);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
      throw NumericalError("ridged reconstruction covariance is not positive definite");
    out.inverse = ldlt.solve(Matrix::Identity(d, d));
    out.logdet = ldlt.vectorD().array().log().sum();
    out.rank = d;
    return out;
  }
  // X Omega X^T = B B^T with B = X L; its pseudo-inverse and pseudo-logdet
  // come from the singular values of B, so PSD-ness holds by construction.
  const Matrix l = prior_factor(omega).matrixL();
  const Eigen::JacobiSVD<Matrix> svd(x * l, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  if (s.size() > 0 && s(0) > 0.0)
    while (out.rank < s.size() && s(out.rank) * s(out.rank) > opts.rank_tol * s(0) * s(0)) ++out.rank;
  const Matrix u = svd.matrixU().leftCols(out.rank);
  const Vector inv_sq = s.head(out.rank).array().square().inverse();
  out.inverse = u * inv_sq.asDiagonal() * u.transpose();
  out.logdet = 2.0 * s.head(out.rank).array().log().sum();
  return out;
}


void check_shapes(const DataMatrix& data, const NeighborhoodSystem& nbrs) {
  if (nbrs.n() != data.n())
    throw InvalidInput("neighborhood system has " + std::to_string(nbrs.n()) + " points, data has " +
                       std::to_string(data.n()));
  for (const auto& x : nbrs.local_design)
    if (x.rows() != data.d() || x.cols() != nbrs.k)
      throw InvalidInput("local design matrix has the wrong shape");
}


}  // namespace

void EMConfig::validate() const {
  if (max_iter < 1) throw InvalidInput("max_iter must be at least 1");
  if (!(tol > 0.0)) throw InvalidInput("tol must be positive");
  if (!(lr > 0.0)) throw InvalidInput("lr must be positive");
  if (grad_steps < 1) throw InvalidInput("grad_steps must be at least 1");
  if (!(sigma_floor > 0.0)) throw InvalidInput("sigma_floor must be positive");
  if (!(ridge >= 0.0)) throw InvalidInput("ridge must be non-negative");
  if (!(rank_tol > 0.0)) throw InvalidInput("rank_tol must be positive");
  if (!(precision_floor > 0.0)) throw InvalidInput("precision_floor must be positive");
}

PriorCovariance PriorCovariance::identity(PriorMode mode, Index n, Index k) {
  PriorCovariance p;
  p.mode = mode;
  p.k = k;
  if (mode == PriorMode::full)
    p.omegas.assign(static_cast<std::size_t>(n), Matrix::Identity(k, k));
  else
    p.sigmas.assign(static_cast<std::size_t>(n), 1.0);
  return p;
}

Index PriorCovariance::n() const {
  return static_cast<Index>(mode == PriorMode::full ? omegas.size() : sigmas.size());
}

Matrix PriorCovariance::omega(Index i) const {
  if (mode == PriorMode::full) return omegas[static_cast<std::size_t>(i)];
  return sigmas[static_cast<std::size_t>(i)] * Matrix::Identity(k, k);
}

void PriorCovariance::validate() const {
  if (mode == PriorMode::spherical) {
    for (double s : sigmas)
      if (!(s > 0.0) || !std::isfinite(s)) throw InvalidInput("spherical prior: sigma must be positive");
    return;
  }
  for (const auto& om : omegas) {
    if (om.rows() != k || om.cols() != k) throw InvalidInput("full prior: Omega_i has the wrong shape");
    require_finite(om, "full prior");
    const double scale = std::max(om.cwiseAbs().maxCoeff(), 1.0);
    if ((om - om.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw NotPositiveSemidefinite("full prior: Omega_i is not symmetric");
    const auto sd = spectral_decomposition(om);
    if (sd.eigenvalues(k - 1) < -kPsdTol * std::max(sd.eigenvalues(0), 1e-300))
      throw NotPositiveSemidefinite("full prior: Omega_i is not PSD");
  }
}

GaussianParams build_joint(const Matrix& x, const Matrix& omega, const Vector& mu) {
  if (x.cols() != omega.rows() || omega.rows() != omega.cols() || mu.size() != x.rows())
    throw InvalidInput("build_joint: shape mismatch");
  const Index k = x.cols();
  JointBlocks j;
  j.mu1 = mu;
  j.mu2 = Vector::Zero(k);
  j.s11 = symmetric(x * omega * x.transpose());
  j.s12 = x * omega;
  j.s21 = j.s12.transpose();
  j.s22 = omega;
  GaussianParams g = j.assemble();
  g.covariance = symmetric(g.covariance);
  return g;
}

WeightPosterior e_step(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                       const PriorCovariance& prior, const SurrogateOptions& opts) {
  check_shapes(data, nbrs);
  if (prior.n() != data.n() || prior.k != nbrs.k) throw InvalidInput("e_step: prior shape mismatch");
  prior.validate();
  const Index n = data.n();
  WeightPosterior post;
  post.means.reserve(static_cast<std::size_t>(n));
  post.covariances.reserve(static_cast<std::size_t>(n));
  post.support_dims.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Matrix& x = nbrs.local_design[static_cast<std::size_t>(i)];
    const Matrix omega = prior.omega(i);
    if (opts.ridge > 0.0) {
      const auto rc = solve_reconstruction(x, omega, opts);
      const Matrix gain = omega.transpose() * x.transpose() * rc.inverse;  // k x d
      post.means.emplace_back(gain * data.centered(i));
      post.covariances.emplace_back(symmetrize_psd(omega - gain * x * omega, 0.0));
      post.support_dims.push_back(nbrs.k);
      continue;
    }
    // Square-root form: with Omega = L L^T and X L = U S V^T, the gain is
    // L (X L)^+ and the covariance L (I - V_r V_r^T) L^T. Avoids forming
    // X Omega X^T, whose condition number is the square of X L's.
    const Matrix l = prior_factor(omega).matrixL();
    const Eigen::JacobiSVD<Matrix> svd(x * l, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    Index rank = 0;
    if (s.size() > 0 && s(0) > 0.0)
      while (rank < s.size() && s(rank) * s(rank) > opts.rank_tol * s(0) * s(0)) ++rank;
    const Matrix v = svd.matrixV();
    const Vector coeffs = (svd.matrixU().leftCols(rank).transpose() * data.centered(i)).cwiseQuotient(s.head(rank));
    post.means.emplace_back(l * (v.leftCols(rank) * coeffs));
    const Matrix null_part = l * v.rightCols(nbrs.k - rank);
    post.covariances.emplace_back(symmetric(null_part * null_part.transpose()));
    post.support_dims.push_back(nbrs.k - rank);
  }
  return post;
}

Scatters point_scatters(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                        const WeightPosterior& post, Index i) {
  const auto ui = static_cast<std::size_t>(i);
  const Matrix& x = nbrs.local_design[ui];
  const Vector r = data.centered(i);
  const Vector& m = post.means[ui];
  const Matrix second = post.covariances[ui] + m * m.transpose();
  const Vector fit = x * m;
  Scatters sc;
  sc.s1 = r * r.transpose() - fit * r.transpose() - r * fit.transpose() + x * second * x.transpose();
  sc.s1 = symmetric(sc.s1);
  sc.s2 = symmetric(second);
  return sc;
}

Scatters scatters(const DataMatrix& data, const NeighborhoodSystem& nbrs, const WeightPosterior& post) {
  check_shapes(data, nbrs);
  if (post.n() != data.n()) throw InvalidInput("scatters: posterior size mismatch");
  Scatters total{Matrix::Zero(data.d(), data.d()), Matrix::Zero(nbrs.k, nbrs.k)};
  for (Index i = 0; i < data.n(); ++i) {
    const auto sc = point_scatters(data, nbrs, post, i);
    total.s1 += sc.s1;
    total.s2 += sc.s2;
  }
  const double inv_n = 1.0 / static_cast<double>(data.n());
  total.s1 *= inv_n;
  total.s2 *= inv_n;
  return total;
}

ScatterSet scatter_set(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                       const WeightPosterior& post, ScatterScope scope) {
  ScatterSet set;
  set.scope = scope;
  if (scope == ScatterScope::global) {
    set.items.push_back(scatters(data, nbrs, post));
  } else {
    check_shapes(data, nbrs);
    set.items.reserve(static_cast<std::size_t>(data.n()));
    for (Index i = 0; i < data.n(); ++i) set.items.push_back(point_scatters(data, nbrs, post, i));
  }
  return set;
}

double point_objective(const Matrix& x, const Matrix& omega, const Scatters& sc, double weight,
                       const SurrogateOptions& opts) {
  const auto rc = solve_reconstruction(x, omega, opts);
  const auto llt = prior_factor(omega);
  const double logdet_omega = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double trace_s1 = (rc.inverse * sc.s1).trace();
  const double trace_s2 = llt.solve(sc.s2).trace();
  return -0.5 * weight * (rc.logdet + trace_s1 + logdet_omega + trace_s2);
}

double joint_log_likelihood(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                            const PriorCovariance& prior, const WeightPosterior& post,
                            const SurrogateOptions& opts) {
  const auto set = scatter_set(data, nbrs, post, opts.scope);
  const Index n = data.n();
  const double w = set.weight(n);
  double total = 0.0;
  for (Index i = 0; i < n; ++i)
    total += point_objective(nbrs.local_design[static_cast<std::size_t>(i)], prior.omega(i), set.at(i), w, opts);
  total -= 0.5 * static_cast<double>(n) * static_cast<double>(data.d() + nbrs.k) * kLog2Pi;
  return total;
}

double posterior_entropy(const WeightPosterior& post, Index i) {
  const auto ui = static_cast<std::size_t>(i);
  const Index dim = post.support_dims[ui];
  if (dim == 0) return 0.0;
  const auto sd = spectral_decomposition(post.covariances[ui]);
  double logdet = 0.0;
  for (Index j = 0; j < dim; ++j) {
    if (!(sd.eigenvalues(j) > 0.0))
      throw NumericalError("posterior covariance lost rank; entropy is undefined");
    logdet += std::log(sd.eigenvalues(j));
  }
  return 0.5 * static_cast<double>(dim) * (1.0 + kLog2Pi) + 0.5 * logdet;
}

double evidence_lower_bound(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                            const PriorCovariance& prior, const WeightPosterior& post,
                            const SurrogateOptions& opts) {
  const double w = opts.scope == ScatterScope::global ? static_cast<double>(data.n()) : 1.0;
  double entropy = 0.0;
  for (Index i = 0; i < post.n(); ++i) entropy += posterior_entropy(post, i);
  return joint_log_likelihood(data, nbrs, prior, post, opts) + w * entropy;
}

Matrix point_gradient(const Matrix& x, const Matrix& omega, const Scatters& sc, double weight,
                      const SurrogateOptions& opts) {
  const auto rc = solve_reconstruction(x, omega, opts);
  const Matrix gain = omega * x.transpose() * rc.inverse;  // k x d
  // K A_eff K^T with A_eff = X Omega X^T (+ ridge I) reduces to K X Omega.
  const Matrix model_term = gain * x * omega;
  const Matrix data_term = gain * sc.s1 * gain.transpose();
  return symmetric(0.5 * weight * (model_term - data_term + omega - sc.s2));
}

Matrix point_gradient_transpose_kernel(const Matrix& x, const Matrix& omega, const Scatters& sc,
                                       double weight) {
  const Index k = x.cols();
  const Matrix xt = x.transpose();
  const Matrix t = kron(xt, xt);  // k^2 x d^2
  const Matrix model_term = unvec(t * vec(x * omega * xt), k, k);
  const Matrix data_term = unvec(t * vec(sc.s1), k, k);
  return 0.5 * weight * (model_term - data_term + omega - sc.s2);
}

std::vector<Matrix> m_step_gradient(const NeighborhoodSystem& nbrs, const PriorCovariance& prior,
                                    const ScatterSet& sc, const SurrogateOptions& opts) {
  if (prior.mode != PriorMode::full) throw WrongMode("m_step_gradient requires a full-mode prior");
  const Index n = nbrs.n();
  const double w = sc.weight(n);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    out.push_back(point_gradient(nbrs.local_design[static_cast<std::size_t>(i)], prior.omega(i), sc.at(i), w, opts));
  return out;
}

double spherical_trace_term(const Matrix& x, const Scatters& sc, double rank_tol) {
  return (pinv(x * x.transpose(), rank_tol) * sc.s1).trace() + sc.s2.trace();
}

std::vector<double> m_step_spherical(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                                     const ScatterSet& sc, double sigma_floor, double rank_tol) {
  check_shapes(data, nbrs);
  const double dof = static_cast<double>(data.d() + nbrs.k);
  std::vector<double> sigmas(static_cast<std::size_t>(data.n()));
  for (Index i = 0; i < data.n(); ++i) {
    const double t = spherical_trace_term(nbrs.local_design[static_cast<std::size_t>(i)], sc.at(i), rank_tol);
    sigmas[static_cast<std::size_t>(i)] = std::max(t / dof, sigma_floor);
  }
  return sigmas;
}

double relaxed_spherical_objective(double sigma, Index d, Index k, double trace_term, double weight) {
  return -0.5 * weight * (static_cast<double>(d + k) * std::log(sigma) + trace_term / sigma);
}

PriorCovariance m_step_full(const NeighborhoodSystem& nbrs, const PriorCovariance& prior,
                            const ScatterSet& sc, const EMConfig& cfg) {
  if (prior.mode != PriorMode::full) throw WrongMode("m_step_full requires a full-mode prior");
  const auto opts = surrogate_options(cfg);
  const Index n = nbrs.n();
  const double w = sc.weight(n);
  const Matrix eye = Matrix::Identity(prior.k, prior.k);
  PriorCovariance next = prior;
  for (Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const Matrix& x = nbrs.local_design[ui];
    Matrix omega = prior.omegas[ui];
    Matrix precision = symmetric(prior_factor(omega).solve(eye));
    for (int step = 0; step < cfg.grad_steps; ++step) {
      const Matrix grad = point_gradient(x, omega, sc.at(i), w, opts);
      precision = symmetrize_psd(precision + cfg.lr * grad, cfg.precision_floor);
      omega = symmetric(precision.ldlt().solve(eye));
    }
    if (!omega.allFinite()) throw NumericalError("full-mode M-step produced a non-finite Omega");
    next.omegas[ui] = omega;
  }
  return next;
}

StochasticFit fit_stochastic_reconstruction(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                                            const EMConfig& cfg, const IterationObserver& observer) {
  cfg.validate();
  check_shapes(data, nbrs);
  const auto opts = surrogate_options(cfg);

  StochasticFit fit;
  fit.prior = PriorCovariance::identity(cfg.mode, data.n(), nbrs.k);
  fit.posterior = e_step(data, nbrs, fit.prior, opts);
  double previous = evidence_lower_bound(data, nbrs, fit.prior, fit.posterior, opts);
  if (!std::isfinite(previous)) throw DivergedError("objective is non-finite at initialisation", fit.trace);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const auto sc = scatter_set(data, nbrs, fit.posterior, cfg.scatter_scope);
    PriorCovariance next;
    double change = 0.0;
    if (cfg.mode == PriorMode::spherical) {
      next.mode = PriorMode::spherical;
      next.k = nbrs.k;
      next.sigmas = m_step_spherical(data, nbrs, sc, cfg.sigma_floor, cfg.rank_tol);
      for (std::size_t i = 0; i < next.sigmas.size(); ++i)
        change = std::max(change, std::abs(next.sigmas[i] - fit.prior.sigmas[i]));
    } else {
      next = m_step_full(nbrs, fit.prior, sc, cfg);
      for (std::size_t i = 0; i < next.omegas.size(); ++i)
        change = std::max(change, (next.omegas[i] - fit.prior.omegas[i]).cwiseAbs().maxCoeff());
    }

    fit.posterior = e_step(data, nbrs, next, opts);
    fit.prior = std::move(next);
    const double objective = evidence_lower_bound(data, nbrs, fit.prior, fit.posterior, opts);
    const TraceEntry entry{it, objective, change};
    fit.trace.entries.push_back(entry);
    if (!std::isfinite(objective))
      throw DivergedError("objective became non-finite at iteration " + std::to_string(it), fit.trace);
    if (observer) observer(entry);

    if (relative_change(previous, objective) < cfg.tol) {
      fit.converged = true;
      break;
    }
    previous = objective;
  }
  return fit;
}

std::vector<Vector> extract_weights(const WeightPosterior& post, WeightExtraction mode, std::uint64_t seed) {
  if (mode == WeightExtraction::mean) return post.means;
  std::vector<Vector> out;
  out.reserve(post.means.size());
  for (std::size_t i = 0; i < post.means.size(); ++i) {
    const GaussianParams g{post.means[i], post.covariances[i]};
    out.push_back(sample(g, derive_seed(seed, i), 1).front());
  }
  return out;
}

double mean_reconstruction_residual(const DataMatrix& data, const NeighborhoodSystem& nbrs,
                                    const std::vector<Vector>& weights) {
  check_shapes(data, nbrs);
  if (static_cast<Index>(weights.size()) != data.n()) throw InvalidInput("weights: wrong number of points");
  double total = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (weights[ui].size() != nbrs.k) throw InvalidInput("weights: vector length differs from k");
    total += (data.centered(i) - nbrs.local_design[ui] * weights[ui]).norm();
  }
  return total / static_cast<double>(data.n());
}

}  // namespace slle
