#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slle/classic_lle.hpp"
#include "slle/neighborhood.hpp"
#include "slle/trace.hpp"

namespace slle {

enum class DatasetKind { swiss_roll, s_curve, affine_patch, gaussian_blobs, csv };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::swiss_roll;
  Index n = 1000;
  double noise = 0.0;  // std-dev of isotropic Gaussian noise added to every coordinate
  std::uint64_t seed = 0;
  std::optional<std::string> path;  // csv only
  bool has_header = false;          // csv only
  Index ambient_dim = 5;            // affine_patch, gaussian_blobs
  Index intrinsic_dim = 2;          // affine_patch
  Index clusters = 3;               // gaussian_blobs

  void validate() const;
};

struct GeneratedData {
  DataMatrix data;
  Matrix intrinsic;  // n x m generating coordinates (cluster label for blobs)
};

/**
 * Seeded synthetic manifolds. All draws come from one Rng(seed) stream in
 * the documented order, so output is identical across platforms.
 *
 *   swiss_roll      t = 1.5 pi (1 + 2u), h = 21u';  (t cos t, h, t sin t); intrinsic (t, h)
 *   s_curve         t = 3 pi (u - 1/2), h = 2u';    (sin t, h, sign(t)(cos t - 1)); intrinsic (t, h)
 *   affine_patch    basis B (d x m) and offset c ~ N(0, 1) first, then per point
 *                   a ~ U[-1, 1]^m and x = c + B a; intrinsic a
 *   gaussian_blobs  centers ~ N(0, 10^2 I) first, then per point a uniformly
 *                   chosen center plus N(0, I); intrinsic is the center index
 *
 * Noise (noise * N(0, I)) is drawn per point immediately after its coordinates.
 */
GeneratedData generate(const DatasetSpec& spec);

/// Loads either a generated dataset or a CSV file, depending on spec.kind.
DataMatrix load_dataset(const DatasetSpec& spec);

/// Rectangular numeric CSV, one point per row. Errors name the 1-based line
/// (and column for bad cells).
DataMatrix load_csv(const std::string& path, bool has_header = false);

/// 17 significant digits; round-trips through strtod exactly.
std::string format_real(double v);

/// Writes the rows of `m`; `header` is written first when non-empty.
void save_csv(const std::string& path, const Matrix& m, const std::vector<std::string>& header = {});

/// Sparse reconstruction weights: per point, (neighbor index, weight) pairs.
using WeightRows = std::vector<std::vector<std::pair<Index, double>>>;

WeightRows weight_rows(const std::vector<Vector>& weights, const NeighborhoodSystem& nbrs);
WeightRows weight_rows(const WeightMatrix& w);

void save_embedding_csv(const std::string& path, const EmbeddingResult& embedding);
void save_weights_csv(const std::string& path, const WeightRows& weights);
void save_trace_csv(const std::string& path, const EMTrace& trace);

WeightRows load_weights_csv(const std::string& path, Index n);

/// embedding.csv, weights.csv and trace.csv inside `dir` (created if needed).
/// A null embedding skips embedding.csv.
void save_results(const std::string& dir, const EmbeddingResult* embedding, const WeightRows& weights,
                  const EMTrace& trace);

}  // namespace slle
