#include "slle/data_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "slle/errors.hpp"
#include "slle/rng.hpp"

namespace slle {

namespace {

constexpr double kPi = std::numbers::pi;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_lines(const std::string& text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

template <typename T>
bool parse_number(std::string_view cell, T& value) {
  cell = trim(cell);
  if (cell.empty()) return false;
  const auto* first = cell.data();
  const auto* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  return res.ec == std::errc() && res.ptr == last;
}

void add_noise(Rng& rng, double noise, Matrix& points, Index i) {
  if (noise <= 0.0) return;
  for (Index j = 0; j < points.cols(); ++j) points(i, j) += noise * rng.normal();
}

}  // namespace

void DatasetSpec::validate() const {
  if (kind == DatasetKind::csv) {
    if (!path || path->empty()) throw InvalidInput("csv dataset requires a path");
    return;
  }
  if (n < 1) throw InvalidInput("dataset size n must be at least 1");
  if (!(noise >= 0.0)) throw InvalidInput("noise must be non-negative");
  if (kind == DatasetKind::affine_patch && (intrinsic_dim < 1 || ambient_dim < intrinsic_dim))
    throw InvalidInput("affine_patch requires 1 <= intrinsic_dim <= ambient_dim");
  if (kind == DatasetKind::gaussian_blobs && (ambient_dim < 1 || clusters < 1))
    throw InvalidInput("gaussian_blobs requires ambient_dim >= 1 and clusters >= 1");
}

GeneratedData generate(const DatasetSpec& spec) {
  if (spec.kind == DatasetKind::csv) throw InvalidInput("csv datasets are not generated; use load_csv");
  spec.validate();
  Rng rng(spec.seed);
  const Index n = spec.n;
  Matrix points;
  Matrix intrinsic;

  switch (spec.kind) {
    case DatasetKind::swiss_roll:
    case DatasetKind::s_curve: {
      points.resize(n, 3);
      intrinsic.resize(n, 2);
      const bool roll = spec.kind == DatasetKind::swiss_roll;
      for (Index i = 0; i < n; ++i) {
        const double u = rng.uniform();
        const double v = rng.uniform();
        if (roll) {
          const double t = 1.5 * kPi * (1.0 + 2.0 * u);
          const double h = 21.0 * v;
          points.row(i) << t * std::cos(t), h, t * std::sin(t);
          intrinsic.row(i) << t, h;
        } else {
          const double t = 3.0 * kPi * (u - 0.5);
          const double h = 2.0 * v;
          const double sign = t < 0.0 ? -1.0 : 1.0;
          points.row(i) << std::sin(t), h, sign * (std::cos(t) - 1.0);
          intrinsic.row(i) << t, h;
        }
        add_noise(rng, spec.noise, points, i);
      }
      break;
    }
    case DatasetKind::affine_patch: {
      const Index d = spec.ambient_dim, m = spec.intrinsic_dim;
      Matrix basis(d, m);
      for (Index c = 0; c < m; ++c)
        for (Index r = 0; r < d; ++r) basis(r, c) = rng.normal();
      Vector offset(d);
      for (Index r = 0; r < d; ++r) offset(r) = rng.normal();
      points.resize(n, d);
      intrinsic.resize(n, m);
      Vector a(m);
      for (Index i = 0; i < n; ++i) {
        for (Index c = 0; c < m; ++c) a(c) = rng.uniform(-1.0, 1.0);
        points.row(i) = (offset + basis * a).transpose();
        intrinsic.row(i) = a.transpose();
        add_noise(rng, spec.noise, points, i);
      }
      break;
    }
    case DatasetKind::gaussian_blobs: {
      const Index d = spec.ambient_dim, c = spec.clusters;
      Matrix centers(c, d);
      for (Index r = 0; r < c; ++r)
        for (Index j = 0; j < d; ++j) centers(r, j) = 10.0 * rng.normal();
      points.resize(n, d);
      intrinsic.resize(n, 1);
      for (Index i = 0; i < n; ++i) {
        const auto label = std::min<Index>(static_cast<Index>(rng.uniform() * static_cast<double>(c)), c - 1);
        for (Index j = 0; j < d; ++j) points(i, j) = centers(label, j) + rng.normal();
        intrinsic(i, 0) = static_cast<double>(label);
        add_noise(rng, spec.noise, points, i);
      }
      break;
    }
    case DatasetKind::csv:
      break;
  }
  return {DataMatrix(std::move(points)), std::move(intrinsic)};
}

DataMatrix load_dataset(const DatasetSpec& spec) {
  spec.validate();
  if (spec.kind == DatasetKind::csv) return load_csv(*spec.path, spec.has_header);
  return generate(spec).data;
}

DataMatrix load_csv(const std::string& path, bool has_header) {
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  const std::size_t first = has_header ? 1 : 0;
  if (lines.size() <= first) throw ParseError("'" + path + "' contains no data rows", lines.size() + 1);

  std::vector<double> values;
  std::size_t cols = 0;
  for (std::size_t li = first; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    const auto cells = split(lines[li], ',');
    if (li == first) cols = cells.size();
    if (cells.size() != cols)
      throw ParseError("'" + path + "' line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                           " columns, found " + std::to_string(cells.size()),
                       line_no);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      if (!parse_number(cells[c], v))
        throw ParseError("'" + path + "' line " + std::to_string(line_no) + " column " + std::to_string(c + 1) +
                             ": not a number: '" + std::string(trim(cells[c])) + "'",
                         line_no, c + 1);
      if (!std::isfinite(v))
        throw ParseError("'" + path + "' line " + std::to_string(line_no) + " column " + std::to_string(c + 1) +
                             ": NaN or Inf is not allowed",
                         line_no, c + 1);
      values.push_back(v);
    }
  }
  const auto rows = static_cast<Index>(lines.size() - first);
  Matrix points(rows, static_cast<Index>(cols));
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < static_cast<Index>(cols); ++c)
      points(r, c) = values[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)];
  return DataMatrix(std::move(points));
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void save_csv(const std::string& path, const Matrix& m, const std::vector<std::string>& header) {
  auto out = open_for_write(path);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  if (!header.empty()) out << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_real(m(r, c));
    out << '\n';
  }
  finish(out, path);
}

WeightRows weight_rows(const std::vector<Vector>& weights, const NeighborhoodSystem& nbrs) {
  if (static_cast<Index>(weights.size()) != nbrs.n()) throw InvalidInput("weight_rows: wrong number of points");
  WeightRows rows(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const auto& nb = nbrs.neighbors[i];
    if (weights[i].size() != static_cast<Index>(nb.size())) throw InvalidInput("weight_rows: length differs from k");
    for (std::size_t j = 0; j < nb.size(); ++j) rows[i].emplace_back(nb[j], weights[i](static_cast<Index>(j)));
  }
  return rows;
}

WeightRows weight_rows(const WeightMatrix& w) {
  WeightRows rows(static_cast<std::size_t>(w.n()));
  for (Index i = 0; i < w.w.outerSize(); ++i)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(w.w, i); it; ++it)
      rows[static_cast<std::size_t>(i)].emplace_back(it.col(), it.value());
  return rows;
}

void save_embedding_csv(const std::string& path, const EmbeddingResult& embedding) {
  std::vector<std::string> header;
  for (Index c = 0; c < embedding.y.cols(); ++c) header.push_back("y" + std::to_string(c));
  save_csv(path, embedding.y, header);
}

void save_weights_csv(const std::string& path, const WeightRows& weights) {
  auto out = open_for_write(path);
  out << "point,neighbor,weight\n";
  for (std::size_t i = 0; i < weights.size(); ++i)
    for (const auto& [j, w] : weights[i]) out << i << ',' << j << ',' << format_real(w) << '\n';
  finish(out, path);
}

void save_trace_csv(const std::string& path, const EMTrace& trace) {
  auto out = open_for_write(path);
  out << "iter,objective,max_change\n";
  for (const auto& e : trace.entries)
    out << e.iteration << ',' << format_real(e.objective) << ',' << format_real(e.max_change) << '\n';
  finish(out, path);
}

WeightRows load_weights_csv(const std::string& path, Index n) {
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  if (lines.empty() || trim(lines.front()) != "point,neighbor,weight")
    throw ParseError("'" + path + "': missing header 'point,neighbor,weight'", 1);
  WeightRows rows(static_cast<std::size_t>(n));
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto cells = split(lines[li], ',');
    long long i = 0, j = 0;
    double w = 0.0;
    if (cells.size() != 3 || !parse_number(cells[0], i) || !parse_number(cells[1], j) || !parse_number(cells[2], w))
      throw ParseError("'" + path + "' line " + std::to_string(li + 1) + ": malformed weight row", li + 1);
    if (i < 0 || i >= n || j < 0 || j >= n)
      throw ParseError("'" + path + "' line " + std::to_string(li + 1) + ": index out of range", li + 1);
    rows[static_cast<std::size_t>(i)].emplace_back(static_cast<Index>(j), w);
  }
  return rows;
}

void save_results(const std::string& dir, const EmbeddingResult* embedding, const WeightRows& weights,
                  const EMTrace& trace) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);
  if (embedding) save_embedding_csv((base / "embedding.csv").string(), *embedding);
  save_weights_csv((base / "weights.csv").string(), weights);
  save_trace_csv((base / "trace.csv").string(), trace);
}

}  // namespace slle
