#include "slle/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "slle/classic_lle.hpp"
#include "slle/data_io.hpp"
#include "slle/latent_linear.hpp"
#include "slle/stochastic_lle.hpp"
#include "slle/verify.hpp"

namespace slle::cli {

namespace {

const std::vector<std::string> kCommands = {"fit-slle", "fit-lle", "fit-fa", "fit-ppca", "compare", "verify"};

struct DatasetOptions {
  std::string kind = "swiss_roll";
  Index n = 1000;
  double noise = 0.0;
  std::string csv;
  bool csv_header = false;
  Index dim = 5;
  Index intrinsic_dim = 2;
  Index clusters = 3;
};

struct EmOptions {
  std::string mode = "spherical";
  int max_iter = 100;
  double tol = 1e-6;
  double lr = 1e-3;
  int grad_steps = 5;
  std::string extract = "mean";
  std::string scatter = "global";
  double sigma_floor = 1e-12;
  double ridge = 0.0;
  std::string centering = "data-mean";
};

struct RunConfig {
  std::string command;
  DatasetOptions dataset;
  EmOptions em;
  std::uint64_t seed = 0;
  Index k = 0;
  Index p = 2;
  Index q = 0;
  double reg = 1e-3;
  std::string init = "warm";
  std::string method = "closed-form";
  std::string out_dir = "out";
  bool timings = false;
  std::string config;  // consumed by expand_config
};

void add_dataset_options(CLI::App* app, RunConfig& c) {
  auto& ds = c.dataset;
  app->add_option("--dataset", ds.kind, "Synthetic dataset (ignored when --csv is given)")
      ->check(CLI::IsMember({"swiss_roll", "s_curve", "affine_patch", "gaussian_blobs"}));
  app->add_option("--n", ds.n, "Number of generated points")->check(CLI::PositiveNumber);
  app->add_option("--noise", ds.noise, "Std-dev of isotropic noise added to generated points")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--seed", c.seed, "Seed for data generation and weight sampling");
  app->add_option("--dim", ds.dim, "Ambient dimension (affine_patch, gaussian_blobs)");
  app->add_option("--intrinsic-dim", ds.intrinsic_dim, "Patch dimension (affine_patch)");
  app->add_option("--clusters", ds.clusters, "Number of blobs (gaussian_blobs)");
  app->add_option("--csv", ds.csv, "Read points from a CSV file instead of generating them");
  app->add_flag("--csv-header", ds.csv_header, "The CSV file starts with a header row");
}

void add_em_options(CLI::App* app, RunConfig& c) {
  auto& em = c.em;
  app->add_option("--mode", em.mode, "Prior covariance family")->check(CLI::IsMember({"full", "spherical"}));
  app->add_option("--max-iter", em.max_iter, "Maximum EM iterations")->check(CLI::PositiveNumber);
  app->add_option("--tol", em.tol, "Relative objective change that stops EM")->check(CLI::PositiveNumber);
  app->add_option("--lr", em.lr, "Gradient step on the prior precision (full mode)")->check(CLI::PositiveNumber);
  app->add_option("--grad-steps", em.grad_steps, "Gradient steps per M-step (full mode)")
      ->check(CLI::PositiveNumber);
  app->add_option("--extract", em.extract, "Weights reported per point")->check(CLI::IsMember({"mean", "sample"}));
  app->add_option("--scatter", em.scatter, "Scatters shared by all points or per point")
      ->check(CLI::IsMember({"global", "per-point"}));
  app->add_option("--sigma-floor", em.sigma_floor, "Lower bound on spherical prior variances")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--ridge", em.ridge, "Ridge added to X Omega X^T instead of pseudo-inverses (0 = off)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--centering", em.centering, "Neighbor columns relative to the data mean or raw")
      ->check(CLI::IsMember({"data-mean", "none"}));
}

void add_common(CLI::App* app, RunConfig& c, bool with_out = true) {
  app->add_option("--config", c.config, "Flat key=value file of defaults; flags override it");
  if (with_out) app->add_option("--out", c.out_dir, "Output directory (created if missing)");
}

DatasetSpec dataset_spec(const RunConfig& c) {
  DatasetSpec spec;
  const auto& ds = c.dataset;
  if (!ds.csv.empty()) {
    spec.kind = DatasetKind::csv;
    spec.path = ds.csv;
    spec.has_header = ds.csv_header;
    return spec;
  }
  static const std::map<std::string, DatasetKind> kinds = {{"swiss_roll", DatasetKind::swiss_roll},
                                                           {"s_curve", DatasetKind::s_curve},
                                                           {"affine_patch", DatasetKind::affine_patch},
                                                           {"gaussian_blobs", DatasetKind::gaussian_blobs}};
  spec.kind = kinds.at(ds.kind);
  spec.n = ds.n;
  spec.noise = ds.noise;
  spec.seed = c.seed;
  spec.ambient_dim = ds.dim;
  spec.intrinsic_dim = ds.intrinsic_dim;
  spec.clusters = ds.clusters;
  return spec;
}

EMConfig em_config(const RunConfig& c) {
  EMConfig cfg;
  const auto& em = c.em;
  cfg.mode = em.mode == "full" ? PriorMode::full : PriorMode::spherical;
  cfg.max_iter = em.max_iter;
  cfg.tol = em.tol;
  cfg.lr = em.lr;
  cfg.grad_steps = em.grad_steps;
  cfg.extract = em.extract == "sample" ? WeightExtraction::sample : WeightExtraction::mean;
  cfg.scatter_scope = em.scatter == "per-point" ? ScatterScope::per_point : ScatterScope::global;
  cfg.sigma_floor = em.sigma_floor;
  cfg.ridge = em.ridge;
  cfg.seed = c.seed;
  return cfg;
}

Centering centering(const RunConfig& c) {
  return c.em.centering == "none" ? Centering::none : Centering::data_mean;
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

IterationObserver progress(std::ostream& err) {
  return [&err](const TraceEntry& e) {
    err << "iter=" << e.iteration << " objective=" << real(e.objective) << " dmax=" << real(e.max_change) << '\n';
  };
}

std::filesystem::path prepare_out(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("write to '" + path.string() + "' failed");
}

void check_k(const DataMatrix& data, Index k) {
  if (k < 1 || k >= data.n())
    throw InvalidInput("--k=" + std::to_string(k) + " must lie in [1, n-1] with n=" + std::to_string(data.n()));
}

struct SlleRun {
  NeighborhoodSystem nbrs;
  StochasticFit fit;
  std::vector<Vector> weights;
  EmbeddingResult embedding;
};

SlleRun run_slle(const DataMatrix& data, const RunConfig& c, std::ostream& err) {
  check_k(data, c.k);
  const EMConfig cfg = em_config(c);
  SlleRun r;
  r.nbrs = knn_graph(data, c.k, centering(c));
  r.fit = fit_stochastic_reconstruction(data, r.nbrs, cfg, progress(err));
  r.weights = extract_weights(r.fit.posterior, cfg.extract, cfg.seed);
  r.embedding = embed_from_stochastic(r.weights, r.nbrs, c.p);
  return r;
}

int cmd_fit_slle(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const DataMatrix data = load_dataset(dataset_spec(c));
  const auto r = run_slle(data, c, err);
  save_results(c.out_dir, &r.embedding, weight_rows(r.weights, r.nbrs), r.fit.trace);
  out << "fit-slle n=" << data.n() << " d=" << data.d() << " k=" << c.k << " iterations=" << r.fit.trace.size()
      << " converged=" << (r.fit.converged ? "yes" : "no") << " out=" << c.out_dir << '\n';
  return kSuccess;
}

int cmd_fit_lle(const RunConfig& c, std::ostream& out, std::ostream&) {
  const DataMatrix data = load_dataset(dataset_spec(c));
  check_k(data, c.k);
  const auto nbrs = knn_graph(data, c.k);
  const auto w = reconstruction_weights(data, nbrs, c.reg);
  const auto emb = embed(w, c.p);
  const auto dir = prepare_out(c.out_dir);
  save_weights_csv((dir / "weights.csv").string(), weight_rows(w));
  save_embedding_csv((dir / "embedding.csv").string(), emb);
  out << "fit-lle n=" << data.n() << " d=" << data.d() << " k=" << c.k << " out=" << c.out_dir << '\n';
  return kSuccess;
}

int cmd_fit_latent(const RunConfig& c, bool ppca, std::ostream& out, std::ostream& err) {
  const DataMatrix data = load_dataset(dataset_spec(c));
  FactorConfig cfg;
  cfg.max_iter = c.em.max_iter;
  cfg.tol = c.em.tol;
  cfg.seed = c.seed;
  cfg.init = c.init == "random" ? FactorInit::random : FactorInit::warm;
  LatentFit fit;
  if (ppca && c.method == "closed-form") {
    fit.model = ppca_fit_closed_form(data, c.q);
    fit.trace.entries.push_back({0, fa_log_likelihood(fit.model, data), 0.0});
    fit.converged = true;
  } else if (ppca) {
    fit = ppca_fit_em(data, c.q, cfg, progress(err));
  } else {
    fit = fa_fit(data, c.q, cfg, progress(err));
  }
  const auto dir = prepare_out(c.out_dir);
  write_text(dir / "model.json", model_to_json(fit.model, ppca ? "ppca" : "fa"));
  save_trace_csv((dir / "trace.csv").string(), fit.trace);
  out << c.command << " n=" << data.n() << " d=" << data.d() << " q=" << c.q
      << " log_likelihood=" << real(fit.trace.back().objective) << " out=" << c.out_dir << '\n';
  return kSuccess;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_compare(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const DataMatrix data = load_dataset(dataset_spec(c));
  struct Row {
    std::string method;
    double residual, preservation, seconds;
  };
  std::vector<Row> rows;

  auto start = std::chrono::steady_clock::now();
  const auto slle = run_slle(data, c, err);
  rows.push_back({"slle", mean_reconstruction_residual(data, slle.nbrs, slle.weights),
                  neighborhood_preservation(data.points(), slle.embedding.y, c.k), seconds_since(start)});

  start = std::chrono::steady_clock::now();
  const auto nbrs = knn_graph(data, c.k);
  const auto w = reconstruction_weights(data, nbrs, c.reg);
  const auto emb = embed(w, c.p);
  rows.push_back({"lle", mean_affine_residual(data, w), neighborhood_preservation(data.points(), emb.y, c.k),
                  seconds_since(start)});

  if (c.p < data.d()) {
    start = std::chrono::steady_clock::now();
    const auto model = ppca_fit_closed_form(data, c.p);
    const Matrix z = latent_means(model, data);
    const Matrix recon = (z * model.loading.transpose()).rowwise() + model.mean.transpose();
    const double residual = (data.points() - recon).rowwise().norm().mean();
    rows.push_back({"ppca", residual, neighborhood_preservation(data.points(), z, c.k), seconds_since(start)});
  }

  const auto dir = prepare_out(c.out_dir);
  std::string csv = c.timings ? "method,residual,neighborhood_preservation,runtime_s\n"
                              : "method,residual,neighborhood_preservation\n";
  for (const auto& r : rows) {
    csv += r.method + "," + real(r.residual) + "," + real(r.preservation);
    if (c.timings) csv += "," + real(r.seconds);
    csv += "\n";
    out << "method=" << r.method << " residual=" << real(r.residual) << " preservation=" << real(r.preservation)
        << '\n';
    err << "runtime method=" << r.method << " seconds=" << r.seconds << '\n';
  }
  write_text(dir / "metrics.csv", csv);
  return kSuccess;
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
  bool ok = true;
  for (const auto& r : run_verification_suite(c.seed)) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ' ' << r.detail << '\n';
    ok = ok && r.passed;
  }
  return ok ? kSuccess : kVerifyFailed;
}

int report(std::ostream& err, int code, const std::string& message) {
  err << "error: " << message << '\n' << "error_code=" << code << '\n';
  return code;
}

}  // namespace

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw InvalidInput("--config requires a file argument");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!path) return rest;

  std::ifstream in(*path);
  if (!in) throw IoError("cannot open config file '" + *path + "'");
  std::vector<std::string> injected;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config '" + *path + "' line " + std::to_string(line_no) + ": expected key=value", line_no);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    for (auto& ch : key)
      if (ch == '_') ch = '-';
    if (key.empty() || key == "config")
      throw ParseError("config '" + *path + "' line " + std::to_string(line_no) + ": invalid key", line_no);
    injected.push_back("--" + key + "=" + value);
  }

  auto pos = rest.begin();
  for (auto it = rest.begin(); it != rest.end(); ++it) {
    if (std::find(kCommands.begin(), kCommands.end(), *it) != kCommands.end()) {
      pos = it + 1;
      break;
    }
  }
  rest.insert(pos, injected.begin(), injected.end());
  return rest;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Stochastic and classic locally linear embedding, factor analysis and probabilistic PCA", "slle"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto* fit_slle = app.add_subcommand("fit-slle", "Stochastic reconstruction weights by EM, then the embedding");
  add_dataset_options(fit_slle, c);
  fit_slle->add_option("--k", c.k, "Neighbors per point")->required();
  fit_slle->add_option("--p", c.p, "Embedding dimension")->check(CLI::PositiveNumber);
  add_em_options(fit_slle, c);
  add_common(fit_slle, c);

  auto* fit_lle = app.add_subcommand("fit-lle", "Classic regularised LLE weights and embedding");
  add_dataset_options(fit_lle, c);
  fit_lle->add_option("--k", c.k, "Neighbors per point")->required();
  fit_lle->add_option("--p", c.p, "Embedding dimension")->check(CLI::PositiveNumber);
  fit_lle->add_option("--reg", c.reg, "Gram regulariser, relative to its trace")->check(CLI::NonNegativeNumber);
  add_common(fit_lle, c);

  auto* fit_fa = app.add_subcommand("fit-fa", "Factor analysis by EM");
  auto* fit_ppca = app.add_subcommand("fit-ppca", "Probabilistic PCA, closed form or EM");
  for (auto* sub : {fit_fa, fit_ppca}) {
    add_dataset_options(sub, c);
    sub->add_option("--q", c.q, "Latent dimension")->required();
    sub->add_option("--max-iter", c.em.max_iter, "Maximum EM iterations")->check(CLI::PositiveNumber);
    sub->add_option("--tol", c.em.tol, "Relative log-likelihood change that stops EM")->check(CLI::PositiveNumber);
    sub->add_option("--init", c.init, "EM initialisation")->check(CLI::IsMember({"warm", "random"}));
    add_common(sub, c);
  }
  fit_ppca->add_option("--method", c.method, "Estimator")->check(CLI::IsMember({"closed-form", "em"}));

  auto* compare = app.add_subcommand("compare", "Stochastic LLE vs classic LLE (and PPCA) on one dataset");
  add_dataset_options(compare, c);
  compare->add_option("--k", c.k, "Neighbors per point")->required();
  compare->add_option("--p", c.p, "Embedding dimension")->check(CLI::PositiveNumber);
  compare->add_option("--reg", c.reg, "Gram regulariser for classic LLE")->check(CLI::NonNegativeNumber);
  add_em_options(compare, c);
  compare->add_flag("--timings", c.timings, "Add a runtime column to metrics.csv (makes it non-reproducible)");
  add_common(compare, c);

  auto* verify = app.add_subcommand("verify", "Run the built-in invariant checks");
  verify->add_option("--seed", c.seed, "Seed for the random check instances");
  add_common(verify, c, false);

  try {
    auto expanded = expand_config(args);
    std::reverse(expanded.begin(), expanded.end());
    app.parse(expanded);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help(app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name());
      return kSuccess;
    }
    return report(err, kInvalidConfig, e.what());
  } catch (const Error& e) {
    return report(err, kInvalidConfig, e.what());
  }

  c.command = app.get_subcommands().front()->get_name();
  try {
    if (c.command == "fit-slle") return cmd_fit_slle(c, out, err);
    if (c.command == "fit-lle") return cmd_fit_lle(c, out, err);
    if (c.command == "fit-fa") return cmd_fit_latent(c, false, out, err);
    if (c.command == "fit-ppca") return cmd_fit_latent(c, true, out, err);
    if (c.command == "compare") return cmd_compare(c, out, err);
    return cmd_verify(c, out);
  } catch (const NumericalError& e) {
    return report(err, kNumerical, e.what());
  } catch (const NotPositiveSemidefinite& e) {
    return report(err, kNumerical, e.what());
  } catch (const Error& e) {
    return report(err, kInvalidConfig, e.what());
  }
}

}  // namespace slle::cli
