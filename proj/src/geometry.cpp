#include "tempat/geometry.hpp"

#include "tempat/error.hpp"
#include "tempat/io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tempat::geometry {

namespace {

/// Kahan-Babuska compensated summation.
class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

double sum_squared_difference(const double* a, const double* b, std::size_t n) {
  // Eight independent lanes keep the order fixed regardless of alignment.
  double lane[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  std::size_t q = 0;
  for (; q + 8 <= n; q += 8) {
    for (std::size_t l = 0; l < 8; ++l) {
      const double e = a[q + l] - b[q + l];
      lane[l] += e * e;
    }
  }
  double tail = 0.0;
  for (; q < n; ++q) {
    const double e = a[q] - b[q];
    tail += e * e;
  }
  return ((lane[0] + lane[1]) + (lane[2] + lane[3])) + ((lane[4] + lane[5]) + (lane[6] + lane[7])) + tail;
}

Matrix sqrt_densities(const Matrix& densities) {
  if ((densities.array() < 0.0).any() || !densities.allFinite()) {
    throw ValidationError("density entries must be finite and nonnegative");
  }
  return densities.array().sqrt().matrix();
}

double hellinger2(std::span<const double> rho_i, std::span<const double> rho_j) {
  if (rho_i.size() != rho_j.size()) throw ValidationError("density rows differ in length");
  if (rho_i.empty()) throw ValidationError("density rows are empty");
  std::vector<double> a(rho_i.size());
  std::vector<double> b(rho_j.size());
  for (std::size_t q = 0; q < a.size(); ++q) {
    if (!(rho_i[q] >= 0.0) || !(rho_j[q] >= 0.0)) {
      throw ValidationError("negative density entry at grid point " + std::to_string(q));
    }
    a[q] = std::sqrt(rho_i[q]);
    b[q] = std::sqrt(rho_j[q]);
  }
  return sum_squared_difference(a.data(), b.data(), a.size()) / static_cast<double>(a.size());
}

DistanceMatrix pairwise_distances_from_sqrt(const Matrix& s) {
  const auto N = s.rows();
  const auto Q = static_cast<std::size_t>(s.cols());
  DistanceMatrix dm;
  dm.d2 = Matrix::Zero(N, N);
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = i + 1; j < N; ++j) {
      const double v = sum_squared_difference(s.row(i).data(), s.row(j).data(), Q) / static_cast<double>(Q);
      dm.d2(i, j) = v;
      dm.d2(j, i) = v;
    }
  }
  return dm;
}

DistanceMatrix pairwise_distances(const measures::WindowDensityField& field) {
  return pairwise_distances_from_sqrt(sqrt_densities(field.densities));
}

Vector distances_to_rows(const RowVector& sqrt_row, const Matrix& sqrt_rows) {
  if (sqrt_row.size() != sqrt_rows.cols()) throw ValidationError("density row length does not match the grid");
  const auto Q = static_cast<std::size_t>(sqrt_rows.cols());
  Vector out(sqrt_rows.rows());
  for (Eigen::Index i = 0; i < sqrt_rows.rows(); ++i) {
    out(i) = sum_squared_difference(sqrt_row.data(), sqrt_rows.row(i).data(), Q) / static_cast<double>(Q);
  }
  return out;
}

std::vector<std::size_t> k_smallest(const Eigen::Ref<const RowVector>& row, std::size_t k, std::ptrdiff_t exclude) {
  std::vector<std::size_t> idx;
  idx.reserve(static_cast<std::size_t>(row.size()));
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (j != exclude) idx.push_back(static_cast<std::size_t>(j));
  }
  k = std::min(k, idx.size());
  auto less = [&](std::size_t a, std::size_t b) {
    const double va = row(static_cast<Eigen::Index>(a));
    const double vb = row(static_cast<Eigen::Index>(b));
    return va < vb || (va == vb && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), less);
  idx.resize(k);
  std::sort(idx.begin(), idx.end(), less);
  return idx;
}

DistanceMatrix knn_truncate(const DistanceMatrix& dm, std::size_t k) {
  const std::size_t N = dm.size();
  if (k < 1 || k + 1 > N) {
    throw ValidationError("knn k must lie in [1, N-1] (N = " + std::to_string(N) + ", k = " + std::to_string(k) + ")");
  }
  DistanceMatrix out;
  out.d2 = dm.d2;
  out.sparsity = Sparsity::Knn;
  out.k = k;
  out.adjacency = Mask::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  out.knn_radius.assign(N, 0.0);
  std::vector<std::vector<std::size_t>> lists(N);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(N); ++i) {
    lists[static_cast<std::size_t>(i)] = k_smallest(dm.d2.row(i), k, i);
  }
  for (std::size_t i = 0; i < N; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out.adjacency(ii, ii) = 1;
    for (std::size_t j : lists[i]) {
      const auto jj = static_cast<Eigen::Index>(j);
      out.adjacency(ii, jj) = 1;
      out.adjacency(jj, ii) = 1;
    }
    out.knn_radius[i] = dm.d2(ii, static_cast<Eigen::Index>(lists[i].back()));
  }
  return out;
}

std::vector<double> pooled_knn_distances(const DistanceMatrix& dm, std::size_t k) {
  const DistanceMatrix knn = knn_truncate(dm, k);
  std::vector<double> out;
  const auto N = static_cast<Eigen::Index>(knn.size());
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = i + 1; j < N; ++j) {
      if (knn.adjacency(i, j)) out.push_back(std::sqrt(knn.d2(i, j)));
    }
  }
  return out;
}

double sample_skewness(std::span<const double> values) {
  if (values.size() < 3) throw NumericalError("skewness needs at least 3 values");
  const double n = static_cast<double>(values.size());
  // Pooled edge lists reach millions of entries; compensated sums keep the
  // moments accurate to a few ulps.
  NeumaierSum sum;
  for (double v : values) sum.add(v);
  const double mean = sum.value() / n;
  NeumaierSum s2;
  NeumaierSum s3;
  for (double v : values) {
    const double e = v - mean;
    s2.add(e * e);
    s3.add(e * e * e);
  }
  const double m2 = s2.value() / n;
  const double m3 = s3.value() / n;
  if (!(m2 > 0.0)) throw NumericalError("skewness undefined: pooled distances have zero variance");
  return m3 / (m2 * std::sqrt(m2));
}

NeighborDiagnostics skewness_scan(const DistanceMatrix& dm, std::vector<std::size_t> k_candidates) {
  if (k_candidates.empty()) throw ValidationError("skewness scan needs at least one k");
  std::sort(k_candidates.begin(), k_candidates.end());
  k_candidates.erase(std::unique(k_candidates.begin(), k_candidates.end()), k_candidates.end());
  NeighborDiagnostics diag;
  for (std::size_t k : k_candidates) {
    const auto pooled = pooled_knn_distances(dm, k);
    diag.scan.push_back({k, sample_skewness(pooled), pooled.size()});
  }
  std::size_t best = 0;
  diag.monotone_decreasing = true;
  for (std::size_t a = 0; a < diag.scan.size(); ++a) {
    if (std::abs(diag.scan[a].skewness) < std::abs(diag.scan[best].skewness)) best = a;
    if (a > 0 && !(diag.scan[a].skewness < diag.scan[a - 1].skewness)) diag.monotone_decreasing = false;
  }
  diag.recommended_k = diag.scan[best].k;
  diag.positive_to_negative =
      diag.monotone_decreasing && diag.scan.front().skewness > 0.0 && diag.scan.back().skewness < 0.0;
  return diag;
}

std::vector<KernelDecayCurve> kernel_decay(const DistanceMatrix& dm, double epsilon, std::size_t n_probes,
                                           std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw ValidationError("kernel epsilon must be positive");
  const std::size_t N = dm.size();
  n_probes = std::min(n_probes, N);
  std::vector<std::size_t> idx(N);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n_probes; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (N - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<KernelDecayCurve> curves;
  for (std::size_t p = 0; p < n_probes; ++p) {
    KernelDecayCurve c;
    c.probe = idx[p];
    const auto row = static_cast<Eigen::Index>(c.probe);
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(N); ++j) {
      if (j != row) c.similarity.push_back(std::exp(-dm.d2(row, j) / epsilon));
    }
    std::sort(c.similarity.begin(), c.similarity.end(), std::greater<>());
    curves.push_back(std::move(c));
  }
  return curves;
}

double isometry_check(const flows::ObservedTrajectory& traj, const Isometry& iso, const measures::WindowSpec& window,
                      const measures::GridSpec& grid_spec, const measures::KdeSpec& kde) {
  const auto d = static_cast<Eigen::Index>(traj.dim());
  if (iso.A.rows() != d || iso.A.cols() != d || iso.b.size() != d) {
    throw ValidationError("isometry dimensions do not match the observations");
  }
  if (!(iso.A.transpose() * iso.A).isIdentity(1e-12)) throw ValidationError("isometry matrix is not orthogonal");

  const auto windows = measures::build_windows(traj, window);
  const auto grid = measures::make_grid(traj, grid_spec);
  const auto base = pairwise_distances(measures::estimate_densities(windows, grid, kde));

  flows::ObservedTrajectory moved = traj;
  moved.samples = (traj.samples * iso.A.transpose()).rowwise() + iso.b.transpose();
  const auto moved_windows = measures::build_windows(moved, window);
  const auto moved_grid = measures::transform_grid(grid, iso.A, iso.b);
  const auto other = pairwise_distances(measures::estimate_densities(moved_windows, moved_grid, kde));
  return (base.d2 - other.d2).cwiseAbs().maxCoeff();
}

void save_distance_matrix(const std::filesystem::path& stem, const DistanceMatrix& dm) {
  io::write_matrix(stem.string() + ".bin", dm.d2);
  nlohmann::json meta = {{"N", dm.size()}, {"sparsity", dm.sparsity == Sparsity::Dense ? "dense" : "knn"}, {"k", dm.k}};
  if (dm.sparsity == Sparsity::Knn) {
    io::write_mask(stem.string() + ".adj.bin", dm.adjacency);
    meta["knn_radius"] = dm.knn_radius;
  }
  io::write_json(stem.string() + ".json", meta);
}

DistanceMatrix load_distance_matrix(const std::filesystem::path& stem) {
  DistanceMatrix dm;
  dm.d2 = io::read_matrix(stem.string() + ".bin");
  const auto meta = io::read_json(stem.string() + ".json");
  if (meta.at("sparsity").get<std::string>() == "knn") {
    dm.sparsity = Sparsity::Knn;
    dm.k = meta.at("k").get<std::size_t>();
    dm.adjacency = io::read_mask(stem.string() + ".adj.bin");
    dm.knn_radius = meta.at("knn_radius").get<std::vector<double>>();
  }
  return dm;
}

void write_triplets(const std::filesystem::path& path, const DistanceMatrix& dm) {
  io::CsvWriter w(path, {"i", "j", "d2"});
  const auto N = static_cast<Eigen::Index>(dm.size());
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = i + 1; j < N; ++j) {
      if (!dm.kept(i, j)) continue;
      w.cell(static_cast<long long>(i)).cell(static_cast<long long>(j)).cell(dm.d2(i, j));
      w.end_row();
    }
  }
}

}  // namespace tempat::geometry
