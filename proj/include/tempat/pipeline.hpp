#pragma once

#include "tempat/config.hpp"
#include "tempat/extension.hpp"
#include "tempat/flows.hpp"
#include "tempat/geometry.hpp"
#include "tempat/measures.hpp"
#include "tempat/reconstruct.hpp"
#include "tempat/spectral.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

/// Stage orchestration, persistence layout and plot-ready CSV output.
namespace tempat::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";
/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "TEMPAT_OUTPUT_DIR";

enum class Stage { Trajectory, Densities, Distances, Diagnostics, Kernel, Spectra, Reconstruction, PlotData };

std::string to_string(Stage s);
Stage stage_from_string(const std::string& name);
const std::vector<Stage>& all_stages();

struct StageRecord {
  Stage stage = Stage::Trajectory;
  std::string hash;
  bool skipped = false;
  double seconds = 0.0;
  std::vector<std::string> artifacts;  // relative to the run directory
};

struct RunManifest {
  nlohmann::json config;
  std::vector<StageRecord> stages;
  std::string version = kVersion;

  const StageRecord* find(Stage s) const;
  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

struct RunOptions {
  Stage until = Stage::PlotData;
  /// Recompute every stage even when its record matches.
  bool force = false;
};

/// Validates the configuration, then executes stages in order. A stage is
/// skipped when its recorded hash matches, its artifacts exist and no
/// upstream stage ran. Errors carry the stage name; finished stages stay on
/// disk.
RunManifest run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

/// Output directory from the config, or the environment override when the
/// config leaves it at the default.
fs::path resolve_output_dir(const PipelineConfig& config);

RunManifest load_manifest(const fs::path& run_dir);

/// Loaders for a finished run directory.
flows::ObservedTrajectory load_run_trajectory(const fs::path& run_dir);
measures::WindowDensityField load_run_densities(const fs::path& run_dir);
geometry::DistanceMatrix load_run_distances(const fs::path& run_dir);
spectral::SpectralBasis load_run_basis(const fs::path& run_dir);
PipelineConfig load_run_config(const fs::path& run_dir);
/// Coefficients (M x m) and column names of the reconstruction stage.
std::pair<Matrix, std::vector<std::string>> load_run_coefficients(const fs::path& run_dir);
extension::ExtensionContext load_extension_context(const fs::path& run_dir);

/// Reconstruction targets for a trajectory: statistics or raw moments per
/// window, with column names.
std::pair<Matrix, std::vector<std::string>> reconstruction_targets(const measures::WindowView& windows,
                                                                   const ReconstructConfig& rc);

enum class PlotKind { EigenvectorTimeseries, EigenvectorScatter, DistanceHistogram, KernelDecay, RmseVsM, Coefficients };

std::string to_string(PlotKind k);
PlotKind plot_kind_from_string(const std::string& name);
const std::vector<PlotKind>& all_plot_kinds();

/// Writes plot-ready CSVs under <run_dir>/plots and returns their paths
/// relative to run_dir. Throws DataError when a needed stage is missing.
std::vector<std::string> emit_plot_data(const fs::path& run_dir, PlotKind kind);

}  // namespace tempat::pipeline
