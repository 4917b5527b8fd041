#pragma once

#include "tempat/flows.hpp"
#include "tempat/linalg.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace tempat::testing {

/// Trajectory with the given rows as samples and `presamples` leading rows.
inline flows::ObservedTrajectory trajectory_from(const Matrix& samples, std::size_t presamples, double dt = 1.0) {
  flows::ObservedTrajectory t;
  t.samples = samples;
  t.n_presamples = presamples;
  t.dt = dt;
  return t;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

/// Fresh scratch directory under the test working directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::current_path() / "scratch" / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace tempat::testing
