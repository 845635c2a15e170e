#include "slle/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "slle/classic_lle.hpp"
#include "slle/latent_linear.hpp"
#include "slle/rng.hpp"
#include "slle/stochastic_lle.hpp"

namespace slle {

namespace {

Matrix random_matrix(Rng& rng, Index r, Index c) {
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

Matrix random_spd(Rng& rng, Index k) {
  const Matrix b = random_matrix(rng, k, k);
  return b * b.transpose() / static_cast<double>(k) + 0.5 * Matrix::Identity(k, k);
}

DataMatrix random_data(Rng& rng, Index n, Index d) { return DataMatrix(random_matrix(rng, n, d)); }

std::string fmt(const char* label, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s=%.3e", label, v);
  return buf;
}

CheckResult check_gradient(Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Index d = 2 + static_cast<Index>(rng.uniform() * 4);
    const Index k = 1 + static_cast<Index>(rng.uniform() * 4);
    const Matrix x = random_matrix(rng, d, k);
    const Matrix omega = random_spd(rng, k);
    const Matrix c = random_matrix(rng, d, d);
    const Matrix e = random_matrix(rng, k, k);
    const Scatters sc{c * c.transpose() / static_cast<double>(d), e * e.transpose() / static_cast<double>(k)};
    const Matrix g = point_gradient(x, omega, sc, 1.0);
    const auto f = [&](const Matrix& p) {
      const Matrix sym = 0.5 * (p + p.transpose());
      return point_objective(x, sym.inverse(), sc, 1.0);
    };
    const Matrix fd = fd_gradient(f, omega.inverse(), 1e-6);
    const double err = (g - fd).cwiseAbs().maxCoeff() / std::max(fd.cwiseAbs().maxCoeff(), 1e-12);
    worst = std::max(worst, err);
  }
  return {"gradient", worst <= 1e-5, fmt("max_rel_err", worst)};
}

double golden_max(const std::function<double(double)>& f, double lo, double hi) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - r * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + r * (b - a); fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

CheckResult check_sigma(Rng& rng) {
  double worst = 0.0;
  bool strict = true;
  for (int t = 0; t < 10; ++t) {
    const Index d = 2 + static_cast<Index>(rng.uniform() * 3);
    const Index k = 1 + static_cast<Index>(rng.uniform() * 4);
    const DataMatrix data = random_data(rng, 20, d);
    const auto nbrs = knn_graph(data, k);
    const auto prior = PriorCovariance::identity(PriorMode::spherical, data.n(), k);
    const auto post = e_step(data, nbrs, prior);
    const auto sc = scatter_set(data, nbrs, post, ScatterScope::per_point);
    const auto sigmas = m_step_spherical(data, nbrs, sc);
    for (Index i = 0; i < data.n(); ++i) {
      const double term = spherical_trace_term(nbrs.local_design[static_cast<std::size_t>(i)], sc.at(i));
      const auto obj = [&](double s) { return relaxed_spherical_objective(s, d, k, term, 1.0); };
      const double s = sigmas[static_cast<std::size_t>(i)];
      const double ls = golden_max([&](double u) { return obj(std::exp(u)); }, std::log(s) - 5.0, std::log(s) + 5.0);
      worst = std::max(worst, std::abs(std::exp(ls) - s) / s);
      strict = strict && obj(0.9 * s) < obj(s) && obj(1.1 * s) < obj(s);
    }
  }
  return {"sigma", worst <= 1e-6 && strict, fmt("max_rel_err", worst) + (strict ? "" : " not_strict")};
}

CheckResult check_em_monotone(Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const Index d = 2 + static_cast<Index>(rng.uniform() * 4);
    const Index k = 2 + static_cast<Index>(rng.uniform() * 5);
    const DataMatrix data = random_data(rng, 40, d);
    const auto nbrs = knn_graph(data, k);
    EMConfig cfg;
    cfg.max_iter = 50;
    const auto fit = fit_stochastic_reconstruction(data, nbrs, cfg);
    for (std::size_t j = 1; j < fit.trace.size(); ++j)
      worst = std::max(worst, fit.trace.entries[j - 1].objective - fit.trace.entries[j].objective);
  }
  return {"em_monotone", worst <= 1e-8, fmt("max_decrease", worst)};
}

CheckResult check_min_norm(Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const Index d = 2 + static_cast<Index>(rng.uniform() * 3);
    const Index k = 1 + static_cast<Index>(rng.uniform() * 6);
    const DataMatrix data = random_data(rng, 15, d);
    const auto nbrs = knn_graph(data, k);
    const auto post = e_step(data, nbrs, PriorCovariance::identity(PriorMode::full, data.n(), k));
    for (Index i = 0; i < data.n(); ++i) {
      const Matrix& x = nbrs.local_design[static_cast<std::size_t>(i)];
      const Vector expected = pinv(x) * data.centered(i);
      worst = std::max(worst, (post.means[static_cast<std::size_t>(i)] - expected).cwiseAbs().maxCoeff());
    }
  }
  return {"min_norm", worst <= 1e-10, fmt("max_abs_err", worst)};
}

CheckResult check_lle_weights(Rng& rng) {
  const DataMatrix data = random_data(rng, 50, 3);
  const auto w = reconstruction_weights(data, knn_graph(data, 6));
  const Vector sums = w.w * Vector::Ones(w.n());
  const double worst = (sums.array() - 1.0).abs().maxCoeff();
  return {"lle_weights", worst <= 1e-10, fmt("max_abs_err", worst)};
}

CheckResult check_ppca_sigma(Rng& rng) {
  const DataMatrix data = random_data(rng, 200, 5);
  const auto model = ppca_fit_closed_form(data, 2);
  const auto sd = spectral_decomposition(sample_covariance(data));
  const double expected = sd.eigenvalues.tail(3).mean();
  const double err = std::abs(std::get<IsotropicNoise>(model.noise).variance - expected);
  return {"ppca_sigma", err <= 1e-10, fmt("abs_err", err)};
}

}  // namespace

std::vector<CheckResult> run_verification_suite(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CheckResult> out;
  out.push_back(check_gradient(rng));
  out.push_back(check_sigma(rng));
  out.push_back(check_em_monotone(rng));
  out.push_back(check_min_norm(rng));
  out.push_back(check_lle_weights(rng));
  out.push_back(check_ppca_sigma(rng));
  return out;
}

}  // namespace slle
