#pragma once

#include "tempat/linalg.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

/// Benchmark flows, observation maps and trajectory ingestion.
namespace tempat::flows {

enum class FlowKind { TorusModelI, TorusModelII, OxtobyTorus, Lorenz63 };

std::string to_string(FlowKind kind);
FlowKind flow_kind_from_string(const std::string& name);

/// Parameters of one generated trajectory. Torus flows use `beta` and `zeta`,
/// Oxtoby uses `zeta`, Lorenz uses `sigma`, `rho`, `beta`.
struct FlowSpec {
  FlowKind kind = FlowKind::TorusModelI;
  std::map<std::string, double> params;
  std::vector<double> initial_state;
  double dt = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_presamples = 0;
  std::size_t n_transient = 0;
  std::size_t n_substeps = 10;

  /// Fills missing parameters and the initial state with the kind's defaults.
  static FlowSpec with_defaults(FlowKind kind);

  std::size_t state_dim() const;
  double param(const std::string& name) const;
  void validate() const;
};

bool is_torus(FlowKind kind);

/// Evaluates the vector field of `spec` at `state`.
Vector vector_field(const FlowSpec& spec, const Vector& state);

/// Fixed-step RK4 with `n_substeps` substeps per sample. Returns
/// n_presamples + n_samples states (rows); transient states are dropped and
/// torus angles are wrapped to [0, 2*pi).
Matrix integrate_flow(const FlowSpec& spec);

/// Wraps an angle to [0, 2*pi).
double wrap_angle(double theta);

enum class ObservationKind { TorusEmbed3D, TorusFlatEmbed4D, LorenzIdentity3D };

std::string to_string(ObservationKind kind);
ObservationKind observation_kind_from_string(const std::string& name);

struct ObservationMap {
  ObservationKind kind = ObservationKind::TorusEmbed3D;
  std::vector<std::size_t> selected_components;  // zero-based, into the full embedding
  double r1 = 0.5;
  double r2 = 0.5;

  std::size_t embedding_dim() const;
  std::size_t state_dim() const;
  void validate() const;
};

/// Time-ordered observations. Row `i + n_presamples` holds y_i for
/// i in [-n_presamples, n_samples).
struct ObservedTrajectory {
  Matrix samples;
  double dt = 1.0;
  std::size_t n_presamples = 0;
  nlohmann::json provenance;

  std::size_t dim() const { return static_cast<std::size_t>(samples.cols()); }
  std::size_t n_samples() const { return static_cast<std::size_t>(samples.rows()) - n_presamples; }
  /// y_i, with negative i addressing pre-samples.
  auto sample(std::ptrdiff_t i) const { return samples.row(i + static_cast<std::ptrdiff_t>(n_presamples)); }

  void validate() const;
};

/// Applies the full embedding and projects onto the selected components.
ObservedTrajectory observe(const Matrix& states, const ObservationMap& map, double dt, std::size_t n_presamples);

/// integrate_flow followed by observe, with provenance filled in.
ObservedTrajectory generate(const FlowSpec& spec, const ObservationMap& map);

struct CsvSpec {
  std::vector<std::size_t> columns;  // zero-based column indices
  bool skip_header = false;
  double dt = 1.0;
  std::size_t n_presamples = 0;  // leading rows used as pre-samples (R)
};

/// Reads comma- or whitespace-delimited numeric columns.
ObservedTrajectory ingest_csv(const std::filesystem::path& path, const CsvSpec& spec);

/// Persists samples as a binary matrix plus a JSON sidecar.
void save_trajectory(const std::filesystem::path& stem, const ObservedTrajectory& traj);
ObservedTrajectory load_trajectory(const std::filesystem::path& stem);

}  // namespace tempat::flows
