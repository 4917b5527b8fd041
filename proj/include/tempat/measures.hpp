#pragma once

#include "tempat/flows.hpp"
#include "tempat/linalg.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

/// Delay-window empirical measures and their kernel density estimates.
namespace tempat::measures {

struct WindowSpec {
  std::size_t R = 1;
  void validate() const;
};

/// Non-owning view of the N trailing windows of a trajectory. Window i is
/// {y_{i-r} : r = 0..R-1}, each sample carrying weight 1/R. The trajectory
/// must outlive the view.
class WindowView {
 public:
  WindowView(const flows::ObservedTrajectory& traj, std::size_t R);

  std::size_t count() const { return n_; }
  std::size_t length() const { return R_; }
  std::size_t dim() const { return traj_->dim(); }
  /// y_{i-r}
  auto sample(std::size_t i, std::size_t r) const {
    return traj_->sample(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(r));
  }
  /// The R samples of window i as rows, in order r = 0..R-1.
  Matrix window(std::size_t i) const;
  const flows::ObservedTrajectory& trajectory() const { return *traj_; }

 private:
  const flows::ObservedTrajectory* traj_;
  std::size_t R_;
  std::size_t n_;
};

WindowView build_windows(const flows::ObservedTrajectory& traj, const WindowSpec& spec);

enum class GridKind { Tensor, DataSubsample, Explicit };

/// How to build the evaluation grid.
struct GridSpec {
  GridKind kind = GridKind::Tensor;
  std::size_t q_per_dim = 50;
  /// Explicit per-dimension bounds; when absent the data bounding box is
  /// widened by margin_fraction * range on each side.
  std::optional<std::vector<std::pair<double, double>>> bounds;
  double margin_fraction = 0.1;
  std::size_t q_total = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static GridSpec from_json(const nlohmann::json& j);
};

/// Evaluation points z_q (rows). Tensor grids keep their axes; the first
/// dimension varies slowest.
struct EvaluationGrid {
  GridKind kind = GridKind::Explicit;
  Matrix points;
  std::vector<std::vector<double>> axes;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }
  void validate() const;
};

EvaluationGrid make_grid(const flows::ObservedTrajectory& traj, const GridSpec& spec);

/// Image of a grid under z -> A z + b, as an explicit point set.
EvaluationGrid transform_grid(const EvaluationGrid& grid, const Matrix& A, const Vector& b);

enum class BandwidthKind { Fixed, Scott };

struct KdeSpec {
  BandwidthKind bandwidth = BandwidthKind::Scott;
  std::vector<double> fixed;  // per-dimension h for Fixed
  bool renormalize = false;   // scale rows so that (1/Q) sum_q rho = 1

  void validate() const;
  nlohmann::json to_json() const;
  static KdeSpec from_json(const nlohmann::json& j);
};

/// Per-dimension bandwidths. Scott: h_j = sigma_j * R^(-1/(d+4)), with
/// sigma_j^2 the mean over windows of the per-window sample variance.
std::vector<double> resolve_bandwidth(const WindowView& windows, const KdeSpec& kde);

struct WindowDensityField {
  Matrix densities;  // N x Q_total, entry (i, q) = rho_i(z_q)
  EvaluationGrid grid;
  std::size_t R = 1;
  KdeSpec kde;
  std::vector<double> bandwidth;

  std::size_t count() const { return static_cast<std::size_t>(densities.rows()); }
};

/// Gaussian product-kernel estimate of one window on the grid. Shared by the
/// in-sample and out-of-sample paths so both are bit-identical.
RowVector density_row(const Matrix& window_samples, const EvaluationGrid& grid, const std::vector<double>& bandwidth,
                      bool renormalize);

WindowDensityField estimate_densities(const WindowView& windows, const EvaluationGrid& grid, const KdeSpec& kde);

/// Fingerprint of grid points plus bandwidths and normalization mode.
std::string grid_kde_hash(const EvaluationGrid& grid, const std::vector<double>& bandwidth, bool renormalize);

void save_density_field(const std::filesystem::path& stem, const WindowDensityField& field);
WindowDensityField load_density_field(const std::filesystem::path& stem);

}  // namespace tempat::measures
