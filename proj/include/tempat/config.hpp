#pragma once

#include "tempat/flows.hpp"
#include "tempat/measures.hpp"
#include "tempat/spectral.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tempat {

/// Where the observations come from: a generated flow or a CSV file.
struct SourceConfig {
  enum class Type { Flow, Csv };
  Type type = Type::Flow;

  flows::FlowSpec flow = flows::FlowSpec::with_defaults(flows::FlowKind::TorusModelI);
  /// Torus sampling: when set, dt = 2*pi / samples_per_period.
  std::optional<double> samples_per_period = 500.0;
  flows::ObservationMap observation{flows::ObservationKind::TorusEmbed3D, {0, 1}, 0.5, 0.5};

  std::string csv_path;
  std::vector<std::size_t> columns{0, 1};
  bool skip_header = false;
  double csv_dt = 1.0;
  /// Row count the dataset is documented to have; a mismatch only warns.
  std::optional<std::size_t> expected_rows;
};

struct GeometryConfig {
  std::size_t knn = 0;  // 0 keeps the dense matrix
  std::vector<std::size_t> scan_k;
};

struct SpectralConfig {
  std::size_t M = 100;
  std::size_t dense_max_n = 4000;
  double tolerance = 1e-10;
};

enum class TargetMode { Statistics, Raw };

struct ReconstructConfig {
  bool enabled = true;
  /// Statistics: mean, sd, skewness, kurtosis per window (moment n maps to
  /// the n-th statistic). Raw: the n-th raw moment.
  TargetMode mode = TargetMode::Statistics;
  std::vector<int> moments{1, 2, 3, 4};
  std::vector<std::size_t> truncations{1, 5, 10, 25, 50, 100};
  bool normalize = false;
  int max_order = 6;
};

struct DiagnosticsConfig {
  std::size_t probes = 5;
  std::size_t histogram_bins = 50;
};

struct OutputConfig {
  std::string directory = "tempat-run";
  bool plot_data = true;
  std::size_t plot_eigenvectors = 10;
};

struct PipelineConfig {
  SourceConfig source;
  measures::WindowSpec window{40};
  measures::GridSpec grid;
  measures::KdeSpec kde;
  GeometryConfig geometry;
  spectral::KernelSpec kernel;
  SpectralConfig spectral;
  ReconstructConfig reconstruct;
  DiagnosticsConfig diagnostics;
  OutputConfig output;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 leaves the OpenMP default

  /// Number of windows N the configuration will produce, when known upfront.
  std::optional<std::size_t> expected_windows() const;
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing keys take their defaults.
  static PipelineConfig from_json(const nlohmann::json& j);
};

PipelineConfig default_config();

std::vector<std::string> preset_names();
/// Paper-parameter presets at desk-scale N (`n_samples` overrides N).
PipelineConfig preset(const std::string& name, std::optional<std::size_t> n_samples = std::nullopt);

}  // namespace tempat
