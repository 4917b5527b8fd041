#include "tempat/config.hpp"

#include "tempat/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace tempat {

namespace {

using nlohmann::json;

json flow_to_json(const flows::FlowSpec& f) {
  return {{"kind", flows::to_string(f.kind)},
          {"params", f.params},
          {"initial_state", f.initial_state},
          {"dt", f.dt},
          {"n_samples", f.n_samples},
          {"n_transient", f.n_transient},
          {"n_substeps", f.n_substeps}};
}

flows::FlowSpec flow_from_json(const json& j) {
  const auto kind = flows::flow_kind_from_string(j.value("kind", std::string("torus_model_1")));
  flows::FlowSpec f = flows::FlowSpec::with_defaults(kind);
  if (j.contains("params")) {
    for (const auto& [name, value] : j["params"].items()) f.params[name] = value.get<double>();
  }
  if (j.contains("initial_state")) f.initial_state = j["initial_state"].get<std::vector<double>>();
  f.dt = j.value("dt", f.dt);
  f.n_samples = j.value("n_samples", f.n_samples);
  f.n_transient = j.value("n_transient", f.n_transient);
  f.n_substeps = j.value("n_substeps", f.n_substeps);
  return f;
}

std::string mode_name(TargetMode m) { return m == TargetMode::Statistics ? "statistics" : "raw"; }

TargetMode mode_from_name(const std::string& s) {
  if (s == "statistics") return TargetMode::Statistics;
  if (s == "raw") return TargetMode::Raw;
  throw ValidationError("unknown reconstruction mode: " + s);
}

template <class T>
void require_sorted_unique(const std::vector<T>& v, const std::string& what) {
  std::set<T> seen(v.begin(), v.end());
  if (seen.size() != v.size()) throw ValidationError(what + " contains duplicates");
}

}  // namespace

std::optional<std::size_t> PipelineConfig::expected_windows() const {
  if (source.type == SourceConfig::Type::Flow) return source.flow.n_samples;
  if (source.expected_rows && *source.expected_rows > window.R) return *source.expected_rows - window.R;
  return std::nullopt;
}

void PipelineConfig::validate() const {
  window.validate();
  if (source.type == SourceConfig::Type::Flow) {
    flows::FlowSpec f = source.flow;
    if (source.samples_per_period) {
      if (!flows::is_torus(f.kind)) throw ValidationError("samples_per_period applies to torus flows only");
      if (!(*source.samples_per_period > 0.0)) throw ValidationError("samples_per_period must be positive");
      f.dt = 2.0 * std::numbers::pi / *source.samples_per_period;
    }
    f.n_presamples = window.R;
    f.validate();
    source.observation.validate();
    if (source.observation.state_dim() != f.state_dim()) {
      throw ValidationError("observation map " + flows::to_string(source.observation.kind) + " does not fit flow " +
                            flows::to_string(f.kind));
    }
  } else {
    if (source.csv_path.empty()) throw ValidationError("csv source needs a path");
    if (source.columns.empty()) throw ValidationError("csv source needs at least one column");
    require_sorted_unique(source.columns, "csv columns");
    if (!(source.csv_dt > 0.0)) throw ValidationError("csv dt must be positive");
  }

  const auto N = expected_windows();
  if (grid.kind == measures::GridKind::Tensor && grid.q_per_dim < 2) {
    throw ValidationError("tensor grid needs at least 2 points per dimension");
  }
  if (grid.kind == measures::GridKind::DataSubsample && grid.q_total < 2) {
    throw ValidationError("data-subsample grid needs q_total >= 2");
  }
  if (!(grid.margin_fraction >= 0.0)) throw ValidationError("grid margin must be non-negative");
  kde.validate();
  if (kde.bandwidth == measures::BandwidthKind::Scott && window.R < 2) {
    throw ValidationError("Scott bandwidth needs R >= 2; use a fixed bandwidth for R = 1");
  }

  if (N && geometry.knn >= *N) {
    throw ValidationError("knn k = " + std::to_string(geometry.knn) + " must be below N = " + std::to_string(*N));
  }
  for (std::size_t k : geometry.scan_k) {
    if (k < 1) throw ValidationError("scan-k entries must be at least 1");
    if (N && k >= *N) throw ValidationError("scan-k entry " + std::to_string(k) + " must be below N");
  }
  require_sorted_unique(geometry.scan_k, "scan-k");

  kernel.validate();
  if (spectral.M < 1) throw ValidationError("spectral M must be at least 1");
  if (N && spectral.M > *N) {
    throw ValidationError("spectral M = " + std::to_string(spectral.M) + " exceeds N = " + std::to_string(*N));
  }
  if (!(spectral.tolerance > 0.0)) throw ValidationError("eigensolver tolerance must be positive");

  if (reconstruct.enabled) {
    if (reconstruct.moments.empty()) throw ValidationError("reconstruction needs at least one moment");
    require_sorted_unique(reconstruct.moments, "moments");
    const int cap = reconstruct.mode == TargetMode::Statistics ? 4 : reconstruct.max_order;
    for (int n : reconstruct.moments) {
      if (n < 1 || n > cap) {
        throw ValidationError("moment " + std::to_string(n) + " outside [1, " + std::to_string(cap) + "] for " +
                              mode_name(reconstruct.mode) + " mode");
      }
    }
    require_sorted_unique(reconstruct.truncations, "truncations");
    for (std::size_t t : reconstruct.truncations) {
      if (t > spectral.M) {
        throw ValidationError("truncation " + std::to_string(t) + " exceeds M = " + std::to_string(spectral.M));
      }
    }
  }
  if (diagnostics.probes < 1) throw ValidationError("diagnostics need at least one probe");
  if (diagnostics.histogram_bins < 1) throw ValidationError("histograms need at least one bin");
  if (output.directory.empty()) throw ValidationError("output directory must be set");
  if (threads < 0) throw ValidationError("thread count must be non-negative");
}

json PipelineConfig::to_json() const {
  json src;
  if (source.type == SourceConfig::Type::Flow) {
    src = {{"type", "flow"},
           {"flow", flow_to_json(source.flow)},
           {"samples_per_period", source.samples_per_period ? json(*source.samples_per_period) : json(nullptr)},
           {"observation",
            {{"kind", flows::to_string(source.observation.kind)},
             {"components", source.observation.selected_components},
             {"r1", source.observation.r1},
             {"r2", source.observation.r2}}}};
  } else {
    src = {{"type", "csv"},
           {"path", source.csv_path},
           {"columns", source.columns},
           {"skip_header", source.skip_header},
           {"dt", source.csv_dt},
           {"expected_rows", source.expected_rows ? json(*source.expected_rows) : json(nullptr)}};
  }
  return {{"source", src},
          {"window", {{"R", window.R}}},
          {"grid", grid.to_json()},
          {"kde", kde.to_json()},
          {"geometry", {{"knn", geometry.knn}, {"scan_k", geometry.scan_k}}},
          {"kernel", kernel.to_json()},
          {"spectral", {{"M", spectral.M}, {"dense_max_n", spectral.dense_max_n}, {"tolerance", spectral.tolerance}}},
          {"reconstruct",
           {{"enabled", reconstruct.enabled},
            {"mode", mode_name(reconstruct.mode)},
            {"moments", reconstruct.moments},
            {"truncations", reconstruct.truncations},
            {"normalize", reconstruct.normalize},
            {"max_order", reconstruct.max_order}}},
          {"diagnostics", {{"probes", diagnostics.probes}, {"histogram_bins", diagnostics.histogram_bins}}},
          {"output",
           {{"directory", output.directory},
            {"plot_data", output.plot_data},
            {"plot_eigenvectors", output.plot_eigenvectors}}},
          {"seed", seed},
          {"threads", threads}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  try {
    if (!j.is_object()) throw ValidationError("configuration must be a JSON object");
    PipelineConfig c = default_config();
    if (j.contains("source")) {
      const json& s = j["source"];
      const auto type = s.value("type", std::string("flow"));
      if (type == "flow") {
        c.source.type = SourceConfig::Type::Flow;
        c.source.flow = flow_from_json(s.value("flow", json::object()));
        if (s.contains("samples_per_period")) {
          c.source.samples_per_period =
              s["samples_per_period"].is_null() ? std::nullopt : std::optional<double>(s["samples_per_period"].get<double>());
        } else if (!flows::is_torus(c.source.flow.kind)) {
          c.source.samples_per_period.reset();
        }
        if (s.contains("observation")) {
          const json& o = s["observation"];
          c.source.observation.kind = flows::observation_kind_from_string(o.value("kind", std::string("torus_embed_3d")));
          c.source.observation.selected_components =
              o.value("components", c.source.observation.selected_components);
          c.source.observation.r1 = o.value("r1", c.source.observation.r1);
          c.source.observation.r2 = o.value("r2", c.source.observation.r2);
        }
      } else if (type == "csv") {
        c.source.type = SourceConfig::Type::Csv;
        c.source.samples_per_period.reset();
        c.source.csv_path = s.value("path", std::string());
        c.source.columns = s.value("columns", c.source.columns);
        c.source.skip_header = s.value("skip_header", false);
        c.source.csv_dt = s.value("dt", 1.0);
        if (s.contains("expected_rows") && !s["expected_rows"].is_null()) {
          c.source.expected_rows = s["expected_rows"].get<std::size_t>();
        }
      } else {
        throw ValidationError("unknown source type: " + type);
      }
    }
    if (j.contains("window")) c.window.R = j["window"].value("R", c.window.R);
    if (j.contains("grid")) c.grid = measures::GridSpec::from_json(j["grid"]);
    if (j.contains("kde")) c.kde = measures::KdeSpec::from_json(j["kde"]);
    if (j.contains("geometry")) {
      c.geometry.knn = j["geometry"].value("knn", c.geometry.knn);
      c.geometry.scan_k = j["geometry"].value("scan_k", c.geometry.scan_k);
    }
    if (j.contains("kernel")) c.kernel = spectral::KernelSpec::from_json(j["kernel"]);
    if (j.contains("spectral")) {
      const json& s = j["spectral"];
      c.spectral.M = s.value("M", c.spectral.M);
      c.spectral.dense_max_n = s.value("dense_max_n", c.spectral.dense_max_n);
      c.spectral.tolerance = s.value("tolerance", c.spectral.tolerance);
    }
    if (j.contains("reconstruct")) {
      const json& r = j["reconstruct"];
      c.reconstruct.enabled = r.value("enabled", c.reconstruct.enabled);
      c.reconstruct.mode = mode_from_name(r.value("mode", mode_name(c.reconstruct.mode)));
      c.reconstruct.moments = r.value("moments", c.reconstruct.moments);
      c.reconstruct.truncations = r.value("truncations", c.reconstruct.truncations);
      c.reconstruct.normalize = r.value("normalize", c.reconstruct.normalize);
      c.reconstruct.max_order = r.value("max_order", c.reconstruct.max_order);
    }
    if (j.contains("diagnostics")) {
      c.diagnostics.probes = j["diagnostics"].value("probes", c.diagnostics.probes);
      c.diagnostics.histogram_bins = j["diagnostics"].value("histogram_bins", c.diagnostics.histogram_bins);
    }
    if (j.contains("output")) {
      const json& o = j["output"];
      c.output.directory = o.value("directory", c.output.directory);
      c.output.plot_data = o.value("plot_data", c.output.plot_data);
      c.output.plot_eigenvectors = o.value("plot_eigenvectors", c.output.plot_eigenvectors);
    }
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed configuration: ") + e.what());
  }
}

PipelineConfig default_config() {
  PipelineConfig c;
  c.source.flow.n_samples = 4000;
  c.window.R = 40;
  c.geometry.knn = 500;
  c.geometry.scan_k = {50, 200, 500, 2000};
  c.kernel.epsilon = 1.0;
  c.spectral.M = 100;
  return c;
}

std::vector<std::string> preset_names() { return {"torus-model-1", "torus-model-2", "oxtoby", "lorenz", "rmm"}; }

PipelineConfig preset(const std::string& name, std::optional<std::size_t> n_samples) {
  PipelineConfig c = default_config();
  c.output.directory = name;
  if (name == "torus-model-1") {
    // beta = 0.5, zeta = sqrt(30), S = 500, R = 40, k = 500, eps = 1 (figure
    // filenames carry eps 0.7; the text value is used).
    c.source.flow = flows::FlowSpec::with_defaults(flows::FlowKind::TorusModelI);
    c.source.flow.n_samples = 4000;
    c.source.samples_per_period = 500.0;
    c.source.observation = {flows::ObservationKind::TorusEmbed3D, {0, 1}, 0.5, 0.5};
  } else if (name == "torus-model-2") {
    // beta = 0.5, zeta = 1/sqrt(30), R = 80, k = 7000, eps = 0.18.
    c.source.flow = flows::FlowSpec::with_defaults(flows::FlowKind::TorusModelII);
    c.source.flow.n_samples = 8000;
    c.source.samples_per_period = 500.0;
    c.source.observation = {flows::ObservationKind::TorusEmbed3D, {0, 1}, 0.5, 0.5};
    c.window.R = 80;
    c.geometry.knn = 7000;
    c.geometry.scan_k = {500, 2000, 5000, 7000};
    c.kernel.epsilon = 0.18;
  } else if (name == "oxtoby") {
    // zeta = sqrt(20), dt = 0.01, R = 40, k = 3000, eps = 1 (figure filenames
    // carry eps 0.7), observed through (cos theta1, sin theta1) of the flat
    // embedding. No initial condition is given, so (0.1, 0) is used.
    c.source.flow = flows::FlowSpec::with_defaults(flows::FlowKind::OxtobyTorus);
    c.source.flow.n_samples = 6000;
    c.source.samples_per_period.reset();
    c.source.observation = {flows::ObservationKind::TorusFlatEmbed4D, {0, 1}, 0.5, 0.5};
    c.geometry.knn = 3000;
    c.geometry.scan_k = {500, 1000, 3000};
  } else if (name == "lorenz") {
    // R = 30, k = 2000, eps = 0.32 (figure filenames carry eps 0.4), 150
    // transient samples discarded, observe (x, y).
    c.source.flow = flows::FlowSpec::with_defaults(flows::FlowKind::Lorenz63);
    c.source.flow.n_samples = 6000;
    c.source.samples_per_period.reset();
    c.source.observation = {flows::ObservationKind::LorenzIdentity3D, {0, 1}, 0.5, 0.5};
    c.window.R = 30;
    c.geometry.knn = 2000;
    c.geometry.scan_k = {500, 1000, 2000};
    c.kernel.epsilon = 0.32;
  } else if (name == "rmm") {
    // Two-component RMM index, R = 60, k = 100, eps = 0.02, M = 50; the
    // documented record has 8337 daily rows.
    c.source.type = SourceConfig::Type::Csv;
    c.source.samples_per_period.reset();
    c.source.csv_path = "rmm.csv";
    c.source.columns = {0, 1};
    c.source.skip_header = true;
    c.source.csv_dt = 1.0;
    c.source.expected_rows = 8337;
    c.window.R = 60;
    c.geometry.knn = 100;
    c.geometry.scan_k = {50, 100, 200, 500};
    c.kernel.epsilon = 0.02;
    c.spectral.M = 50;
    c.reconstruct.mode = TargetMode::Statistics;
    c.reconstruct.truncations = {5, 15, 50};
    c.reconstruct.normalize = true;
  } else {
    throw ValidationError("unknown preset: " + name);
  }
  if (n_samples) {
    if (c.source.type != SourceConfig::Type::Flow) throw ValidationError("preset " + name + " takes N from its data");
    c.source.flow.n_samples = *n_samples;
  }
  return c;
}

}  // namespace tempat
