#pragma once

#include <doctest.h>

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "slle/numerics.hpp"
#include "slle/rng.hpp"

namespace slle::test {

inline Matrix gaussian_matrix(Rng& rng, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

inline Vector gaussian_vector(Rng& rng, Index n) { return gaussian_matrix(rng, n, 1); }

inline Matrix random_spd(Rng& rng, Index k, double shift = 0.5) {
  const Matrix b = gaussian_matrix(rng, k, k);
  return b * b.transpose() / static_cast<double>(k) + shift * Matrix::Identity(k, k);
}

inline Matrix random_orthogonal(Rng& rng, Index k) {
  return Eigen::HouseholderQR<Matrix>(gaussian_matrix(rng, k, k)).householderQ();
}

inline double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

/// max |a - b| / max(max |b|, floor)
inline double rel_err(const Matrix& a, const Matrix& b, double floor = 1e-300) {
  return max_abs(a - b) / std::max(max_abs(b), floor);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("slle_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace slle::test
