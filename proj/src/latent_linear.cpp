#include "slle/latent_linear.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "json.hpp"
#include "slle/errors.hpp"
#include "slle/gaussian.hpp"
#include "slle/rng.hpp"

namespace slle {

namespace {

// Noise variances are kept above these fractions of the mean sample variance.
constexpr double kNoiseFloor = 1e-12;
constexpr double kInitNoiseFloor = 1e-6;

double mean_variance(const Matrix& s) {
  return std::max(s.diagonal().mean(), std::numeric_limits<double>::min());
}

Matrix centered_points(const DataMatrix& data) {
  return data.points().rowwise() - data.mean().transpose();
}

void check_latent_dim(const DataMatrix& data, Index q) {
  if (q < 1 || q >= data.d())
    throw InvalidInput("latent dimension q=" + std::to_string(q) + " must lie in [1, d-1] with d=" +
                       std::to_string(data.d()));
}

NoiseModel make_noise(const Vector& diag, bool isotropic) {
  if (isotropic) return IsotropicNoise{diag.mean()};
  return DiagonalNoise{diag};
}

LatentLinearModel initial_model(const DataMatrix& data, Index q, const FactorConfig& cfg, const Matrix& s) {
  if (cfg.start) {
    const auto& m = *cfg.start;
    m.validate();
    if (m.d() != data.d() || m.q() != q) throw InvalidInput("fa_fit: start model has the wrong shape");
    LatentLinearModel out = m;
    out.mean = data.mean();
    out.noise = make_noise(m.noise_diagonal(), cfg.isotropic);
    return out;
  }
  const double floor = kInitNoiseFloor * mean_variance(s);
  LatentLinearModel m;
  m.mean = data.mean();
  Vector diag;
  if (cfg.init == FactorInit::warm) {
    const auto sd = spectral_decomposition(s);
    const Vector root = sd.eigenvalues.head(q).cwiseMax(0.0).cwiseSqrt();
    m.loading = sd.eigenvectors.leftCols(q) * root.asDiagonal();
    diag = (s - m.loading * m.loading.transpose()).diagonal();
  } else {
    Rng rng(cfg.seed);
    const double scale = std::sqrt(mean_variance(s) / static_cast<double>(q));
    m.loading.resize(data.d(), q);
    for (Index j = 0; j < q; ++j)
      for (Index i = 0; i < data.d(); ++i) m.loading(i, j) = scale * rng.normal();
    diag = s.diagonal();
  }
  m.noise = make_noise(diag.cwiseMax(floor), cfg.isotropic);
  return m;
}

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex(const nlohmann::json& j, const char* field) {
  if (!j.is_string()) throw ParseError(std::string("model json: ") + field + " must hold hex-float strings", 0);
  const std::string s = j.get<std::string>();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ParseError(std::string("model json: bad number '") + s + "' in " + field, 0);
  return v;
}

Vector parse_vector(const nlohmann::json& j, const char* field, Index expected) {
  if (!j.is_array() || static_cast<Index>(j.size()) != expected)
    throw ParseError(std::string("model json: ") + field + " must be an array of length " +
                         std::to_string(expected), 0);
  Vector v(expected);
  for (Index i = 0; i < expected; ++i) v(i) = parse_hex(j[static_cast<std::size_t>(i)], field);
  return v;
}

nlohmann::json hex_array(const Vector& v) {
  auto arr = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(hex(v(i)));
  return arr;
}

}  // namespace

Vector LatentLinearModel::noise_diagonal() const {
  if (const auto* iso = std::get_if<IsotropicNoise>(&noise)) return Vector::Constant(d(), iso->variance);
  return std::get<DiagonalNoise>(noise).psi;
}

Matrix LatentLinearModel::marginal_covariance() const {
  Matrix c = loading * loading.transpose();
  c.diagonal() += noise_diagonal();
  return c;
}

void LatentLinearModel::validate() const {
  if (mean.size() != loading.rows()) throw InvalidInput("latent model: mean and loading disagree on d");
  require_finite(loading, "latent model loading");
  require_finite(mean, "latent model mean");
  if (const auto* diag = std::get_if<DiagonalNoise>(&noise)) {
    if (diag->psi.size() != d()) throw InvalidInput("latent model: psi has the wrong length");
  }
  const Vector nd = noise_diagonal();
  if (!nd.allFinite() || !(nd.array() > 0.0).all()) throw InvalidInput("latent model: noise variances must be positive");
}

void FactorConfig::validate() const {
  if (max_iter < 1) throw InvalidInput("max_iter must be at least 1");
  if (!(tol > 0.0)) throw InvalidInput("tol must be positive");
}

Matrix sample_covariance(const DataMatrix& data) {
  const Matrix r = centered_points(data);
  return (r.transpose() * r) / static_cast<double>(data.n());
}

double fa_log_likelihood(const LatentLinearModel& model, const DataMatrix& data) {
  model.validate();
  if (model.d() != data.d()) throw InvalidInput("fa_log_likelihood: dimension mismatch");
  const GaussianDensity density(GaussianParams{model.mean, model.marginal_covariance()});
  double total = 0.0;
  for (Index i = 0; i < data.n(); ++i) total += density.log_density(data.point(i));
  return total;
}

LatentFit fa_fit(const DataMatrix& data, Index q, const FactorConfig& cfg, const IterationObserver& observer) {
  cfg.validate();
  check_latent_dim(data, q);
  if (data.n() < 2) throw InvalidInput("fa_fit: need at least two points");

  const double n = static_cast<double>(data.n());
  const Matrix r = centered_points(data);
  const Matrix s = (r.transpose() * r) / n;
  const double floor = kNoiseFloor * mean_variance(s);
  const Matrix eye_q = Matrix::Identity(q, q);

  LatentFit fit;
  fit.model = initial_model(data, q, cfg, s);
  double previous = fa_log_likelihood(fit.model, data);
  if (!std::isfinite(previous)) throw DivergedError("fa_fit: log-likelihood is non-finite at initialisation", fit.trace);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Matrix& lambda = fit.model.loading;
    const Eigen::LDLT<Matrix> cov(fit.model.marginal_covariance());
    const Matrix beta = cov.solve(lambda).transpose();  // q x d
    const Matrix ew = r * beta.transpose();              // n x q, rows E[w_i]
    const Matrix sum_eww = n * (eye_q - beta * lambda) + ew.transpose() * ew;
    const Matrix sum_xew = r.transpose() * ew;           // d x q

    LatentLinearModel next;
    next.mean = fit.model.mean;
    next.loading = sum_eww.transpose().ldlt().solve(sum_xew.transpose()).transpose();
    const Vector diag = (s - next.loading * sum_xew.transpose() / n).diagonal();
    next.noise = cfg.isotropic ? NoiseModel(IsotropicNoise{std::max(diag.mean(), floor)})
                               : NoiseModel(DiagonalNoise{diag.cwiseMax(floor)});

    const double change = std::max((next.loading - lambda).cwiseAbs().maxCoeff(),
                                   (next.noise_diagonal() - fit.model.noise_diagonal()).cwiseAbs().maxCoeff());
    fit.model = std::move(next);
    const double ll = fa_log_likelihood(fit.model, data);
    const TraceEntry entry{it, ll, change};
    fit.trace.entries.push_back(entry);
    if (!std::isfinite(ll)) throw DivergedError("fa_fit: log-likelihood became non-finite", fit.trace);
    if (observer) observer(entry);
    if (relative_change(previous, ll) < cfg.tol) {
      fit.converged = true;
      break;
    }
    previous = ll;
  }
  return fit;
}

LatentFit ppca_fit_em(const DataMatrix& data, Index q, FactorConfig cfg, const IterationObserver& observer) {
  cfg.isotropic = true;
  return fa_fit(data, q, cfg, observer);
}

LatentLinearModel ppca_fit_closed_form(const DataMatrix& data, Index q) {
  check_latent_dim(data, q);
  const Index d = data.d();
  const auto sd = spectral_decomposition(sample_covariance(data));
  double sigma2 = sd.eigenvalues.tail(d - q).mean();
  sigma2 = std::max(sigma2, std::max(1e-15 * sd.eigenvalues(0), std::numeric_limits<double>::min()));
  const Vector excess = (sd.eigenvalues.head(q).array() - sigma2).cwiseMax(0.0).sqrt();
  LatentLinearModel m;
  m.mean = data.mean();
  m.loading = sd.eigenvectors.leftCols(q) * excess.asDiagonal();
  m.noise = IsotropicNoise{sigma2};
  return m;
}

Matrix latent_means(const LatentLinearModel& model, const DataMatrix& data) {
  model.validate();
  const Eigen::LDLT<Matrix> cov(model.marginal_covariance());
  const Matrix beta = cov.solve(model.loading).transpose();
  return centered_points(data) * beta.transpose();
}

std::string model_to_json(const LatentLinearModel& model, const std::string& type) {
  model.validate();
  nlohmann::json j;
  j["type"] = type;
  j["d"] = model.d();
  j["q"] = model.q();
  j["mean"] = hex_array(model.mean);
  auto loading = nlohmann::json::array();
  for (Index i = 0; i < model.d(); ++i)
    for (Index c = 0; c < model.q(); ++c) loading.push_back(hex(model.loading(i, c)));
  j["loading"] = loading;
  if (const auto* iso = std::get_if<IsotropicNoise>(&model.noise)) {
    j["noise"] = {{"kind", "isotropic"}, {"variance", hex(iso->variance)}};
  } else {
    j["noise"] = {{"kind", "diagonal"}, {"psi", hex_array(std::get<DiagonalNoise>(model.noise).psi)}};
  }
  return j.dump(2) + "\n";
}

LatentLinearModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model json: ") + e.what(), 0);
  }
  try {
    const Index d = j.at("d").get<Index>();
    const Index q = j.at("q").get<Index>();
    if (d < 1 || q < 1) throw ParseError("model json: d and q must be positive", 0);
    LatentLinearModel m;
    m.mean = parse_vector(j.at("mean"), "mean", d);
    const Vector flat = parse_vector(j.at("loading"), "loading", d * q);
    m.loading.resize(d, q);
    for (Index i = 0; i < d; ++i)
      for (Index c = 0; c < q; ++c) m.loading(i, c) = flat(i * q + c);
    const auto& noise = j.at("noise");
    const std::string kind = noise.at("kind").get<std::string>();
    if (kind == "isotropic")
      m.noise = IsotropicNoise{parse_hex(noise.at("variance"), "noise.variance")};
    else if (kind == "diagonal")
      m.noise = DiagonalNoise{parse_vector(noise.at("psi"), "noise.psi", d)};
    else
      throw ParseError("model json: unknown noise kind '" + kind + "'", 0);
    m.validate();
    return m;
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("model json: ") + e.what(), 0);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model json: ") + e.what(), 0);
  }
}

}  // namespace slle
