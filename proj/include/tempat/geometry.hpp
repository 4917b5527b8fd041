#pragma once

#include "tempat/linalg.hpp"
#include "tempat/measures.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

/// Squared Hellinger distances between window densities, kNN sparsification
/// and neighbour-count diagnostics.
namespace tempat::geometry {

enum class Sparsity { Dense, Knn };

struct DistanceMatrix {
  Matrix d2;  // symmetric squared Hellinger distances, zero diagonal
  Sparsity sparsity = Sparsity::Dense;
  std::size_t k = 0;
  /// Knn only: 1 where the edge is kept (either endpoint lists the other).
  Mask adjacency;
  /// Knn only: the k-th smallest off-diagonal d2 of each row.
  std::vector<double> knn_radius;

  std::size_t size() const { return static_cast<std::size_t>(d2.rows()); }
  bool kept(Eigen::Index i, Eigen::Index j) const { return sparsity == Sparsity::Dense || adjacency(i, j) != 0; }
};

/// sum_q (a_q - b_q)^2 with a fixed summation order.
double sum_squared_difference(const double* a, const double* b, std::size_t n);

/// (1/Q) sum_q (sqrt(rho_i(z_q)) - sqrt(rho_j(z_q)))^2.
double hellinger2(std::span<const double> rho_i, std::span<const double> rho_j);

/// Elementwise square roots of a density matrix; throws on negative entries.
Matrix sqrt_densities(const Matrix& densities);

/// Dense pairwise matrix, each unordered pair computed once.
DistanceMatrix pairwise_distances(const measures::WindowDensityField& field);
DistanceMatrix pairwise_distances_from_sqrt(const Matrix& sqrt_rows);

/// Squared distances from one density row (given as square roots) to every
/// row of a square-root density matrix.
Vector distances_to_rows(const RowVector& sqrt_row, const Matrix& sqrt_rows);

/// Indices of the k smallest entries of `row` other than `exclude`, ties
/// broken by smaller index, sorted ascending by (value, index).
std::vector<std::size_t> k_smallest(const Eigen::Ref<const RowVector>& row, std::size_t k,
                                    std::ptrdiff_t exclude = -1);

/// Union-symmetrised kNN graph. Diagonal always kept.
DistanceMatrix knn_truncate(const DistanceMatrix& dm, std::size_t k);

/// Hellinger distances sqrt(d2) on the kept off-diagonal edges of the
/// symmetrised kNN graph, each unordered edge once, row-major order.
std::vector<double> pooled_knn_distances(const DistanceMatrix& dm, std::size_t k);

/// Biased sample skewness m3 / m2^(3/2). Throws on fewer than 3 values or
/// zero variance.
double sample_skewness(std::span<const double> values);

struct SkewnessEntry {
  std::size_t k = 0;
  double skewness = 0.0;
  std::size_t pooled = 0;
};

struct KernelDecayCurve {
  std::size_t probe = 0;
  std::vector<double> similarity;  // exp(-d2/eps) to all other windows, descending
};

struct NeighborDiagnostics {
  std::vector<SkewnessEntry> scan;  // ascending k
  std::size_t recommended_k = 0;    // argmin |skewness|
  bool monotone_decreasing = false;
  bool positive_to_negative = false;
  std::vector<KernelDecayCurve> decay;
};

NeighborDiagnostics skewness_scan(const DistanceMatrix& dm, std::vector<std::size_t> k_candidates);

/// Sorted kernel similarities for `n_probes` windows drawn with `seed`.
std::vector<KernelDecayCurve> kernel_decay(const DistanceMatrix& dm, double epsilon, std::size_t n_probes,
                                           std::uint64_t seed);

/// y -> A y + b with A orthogonal.
struct Isometry {
  Matrix A;
  Vector b;
};

/// Runs densities and distances on the original and transformed data (grid
/// transformed alongside) and returns the largest entrywise deviation.
double isometry_check(const flows::ObservedTrajectory& traj, const Isometry& iso, const measures::WindowSpec& window,
                      const measures::GridSpec& grid, const measures::KdeSpec& kde);

void save_distance_matrix(const std::filesystem::path& stem, const DistanceMatrix& dm);
DistanceMatrix load_distance_matrix(const std::filesystem::path& stem);
/// (i, j, d2) triplets of kept off-diagonal edges with i < j.
void write_triplets(const std::filesystem::path& path, const DistanceMatrix& dm);

}  // namespace tempat::geometry
