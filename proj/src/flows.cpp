#include "tempat/flows.hpp"

#include "tempat/error.hpp"
#include "tempat/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace tempat::flows {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vector rk4_step(const FlowSpec& spec, const Vector& x, double h) {
  const Vector k1 = vector_field(spec, x);
  const Vector k2 = vector_field(spec, x + 0.5 * h * k1);
  const Vector k3 = vector_field(spec, x + 0.5 * h * k2);
  const Vector k4 = vector_field(spec, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_field = false;
  const bool comma = line.find(',') != std::string::npos;
  for (char c : line) {
    const bool sep = comma ? (c == ',') : (c == ' ' || c == '\t');
    if (sep) {
      if (comma || in_field) out.push_back(cur);
      cur.clear();
      in_field = false;
    } else if (!(comma && (c == ' ' || c == '\t' || c == '\r')) && c != '\r') {
      cur.push_back(c);
      in_field = true;
    }
  }
  if (comma || in_field) out.push_back(cur);
  return out;
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

std::string to_string(FlowKind kind) {
  switch (kind) {
    case FlowKind::TorusModelI: return "torus_model_1";
    case FlowKind::TorusModelII: return "torus_model_2";
    case FlowKind::OxtobyTorus: return "oxtoby_torus";
    case FlowKind::Lorenz63: return "lorenz63";
  }
  return "unknown";
}

FlowKind flow_kind_from_string(const std::string& name) {
  for (auto k : {FlowKind::TorusModelI, FlowKind::TorusModelII, FlowKind::OxtobyTorus, FlowKind::Lorenz63}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown flow kind: " + name);
}

bool is_torus(FlowKind kind) { return kind != FlowKind::Lorenz63; }

FlowSpec FlowSpec::with_defaults(FlowKind kind) {
  FlowSpec s;
  s.kind = kind;
  switch (kind) {
    case FlowKind::TorusModelI:
      s.params = {{"beta", 0.5}, {"zeta", std::sqrt(30.0)}};
      s.initial_state = {0.0, 0.0};
      s.dt = kTwoPi / 500.0;
      break;
    case FlowKind::TorusModelII:
      s.params = {{"beta", 0.5}, {"zeta", 1.0 / std::sqrt(30.0)}};
      s.initial_state = {0.0, 0.0};
      s.dt = kTwoPi / 500.0;
      break;
    case FlowKind::OxtobyTorus:
      s.params = {{"zeta", std::sqrt(20.0)}};
      // The origin is the fixed point; start next to it.
      s.initial_state = {0.1, 0.0};
      s.dt = 0.01;
      break;
    case FlowKind::Lorenz63:
      s.params = {{"sigma", 10.0}, {"rho", 28.0}, {"beta", 8.0 / 3.0}};
      s.initial_state = {0.0, 1.0, 1.05};
      s.dt = 0.0075;
      s.n_transient = 150;
      break;
  }
  return s;
}

std::size_t FlowSpec::state_dim() const { return kind == FlowKind::Lorenz63 ? 3 : 2; }

double FlowSpec::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw ValidationError("flow " + to_string(kind) + " is missing parameter '" + name + "'");
  return it->second;
}

void FlowSpec::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("flow dt must be positive");
  if (n_samples < 1) throw ValidationError("flow n_samples must be at least 1");
  if (n_substeps < 1) throw ValidationError("flow n_substeps must be at least 1");
  if (initial_state.size() != state_dim()) {
    throw ValidationError("flow initial_state must have " + std::to_string(state_dim()) + " entries");
  }
  for (double v : initial_state) {
    if (!std::isfinite(v)) throw ValidationError("flow initial_state must be finite");
  }
  switch (kind) {
    case FlowKind::TorusModelI:
    case FlowKind::TorusModelII: {
      const double beta = param("beta");
      if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("torus beta must lie in (0, 1]");
      param("zeta");
      break;
    }
    case FlowKind::OxtobyTorus: param("zeta"); break;
    case FlowKind::Lorenz63:
      param("sigma");
      param("rho");
      param("beta");
      break;
  }
}

Vector vector_field(const FlowSpec& spec, const Vector& x) {
  Vector out(x.size());
  switch (spec.kind) {
    case FlowKind::TorusModelI:
    case FlowKind::TorusModelII: {
      const double a = std::sqrt(1.0 - spec.param("beta"));
      const double zeta = spec.param("zeta");
      out(0) = 1.0 + a * std::cos(x(0));
      out(1) = zeta * (1.0 - a * std::sin(x(1)));
      break;
    }
    case FlowKind::OxtobyTorus: {
      const double zeta = spec.param("zeta");
      const double v2 = zeta * (1.0 - std::cos(x(0) - x(1)));
      out(0) = v2 + (1.0 - zeta) * (1.0 - std::cos(x(1)));
      out(1) = v2;
      break;
    }
    case FlowKind::Lorenz63: {
      const double sigma = spec.param("sigma");
      const double rho = spec.param("rho");
      const double beta = spec.param("beta");
      out(0) = sigma * (x(1) - x(0));
      out(1) = x(0) * (rho - x(2)) - x(1);
      out(2) = x(0) * x(1) - beta * x(2);
      break;
    }
  }
  return out;
}

double wrap_angle(double theta) {
  double w = theta - kTwoPi * std::floor(theta / kTwoPi);
  if (w >= kTwoPi || w < 0.0) w = 0.0;
  return w;
}

Matrix integrate_flow(const FlowSpec& spec) {
  spec.validate();
  const std::size_t kept = spec.n_presamples + spec.n_samples;
  const std::size_t total = spec.n_transient + kept;
  const auto dim = static_cast<Eigen::Index>(spec.state_dim());
  const double h = spec.dt / static_cast<double>(spec.n_substeps);
  const bool torus = is_torus(spec.kind);

  Matrix out(static_cast<Eigen::Index>(kept), dim);
  Vector x = Eigen::Map<const Vector>(spec.initial_state.data(), dim);
  for (std::size_t step = 0; step < total; ++step) {
    if (step > 0) {
      for (std::size_t s = 0; s < spec.n_substeps; ++s) x = rk4_step(spec, x, h);
      if (!x.allFinite()) {
        throw NumericalError("integration diverged at step " + std::to_string(step));
      }
      // Keep the internal state bounded; the field is 2*pi periodic.
      if (torus) {
        for (Eigen::Index j = 0; j < dim; ++j) x(j) = wrap_angle(x(j));
      }
    }
    if (step >= spec.n_transient) {
      const auto row = static_cast<Eigen::Index>(step - spec.n_transient);
      out.row(row) = x.transpose();
      if (torus) {
        for (Eigen::Index j = 0; j < dim; ++j) out(row, j) = wrap_angle(x(j));
      }
    }
  }
  return out;
}

std::string to_string(ObservationKind kind) {
  switch (kind) {
    case ObservationKind::TorusEmbed3D: return "torus_embed_3d";
    case ObservationKind::TorusFlatEmbed4D: return "torus_flat_embed_4d";
    case ObservationKind::LorenzIdentity3D: return "lorenz_identity_3d";
  }
  return "unknown";
}

ObservationKind observation_kind_from_string(const std::string& name) {
  for (auto k : {ObservationKind::TorusEmbed3D, ObservationKind::TorusFlatEmbed4D, ObservationKind::LorenzIdentity3D}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown observation map: " + name);
}

std::size_t ObservationMap::embedding_dim() const {
  switch (kind) {
    case ObservationKind::TorusEmbed3D: return 3;
    case ObservationKind::TorusFlatEmbed4D: return 4;
    case ObservationKind::LorenzIdentity3D: return 3;
  }
  return 0;
}

std::size_t ObservationMap::state_dim() const { return kind == ObservationKind::LorenzIdentity3D ? 3 : 2; }

void ObservationMap::validate() const {
  if (selected_components.empty()) throw ValidationError("observation map selects no components");
  std::vector<bool> seen(embedding_dim(), false);
  for (std::size_t c : selected_components) {
    if (c >= embedding_dim()) {
      throw ValidationError("observation component " + std::to_string(c) + " out of range for " + to_string(kind));
    }
    if (seen[c]) throw ValidationError("observation component " + std::to_string(c) + " selected twice");
    seen[c] = true;
  }
}

void ObservedTrajectory::validate() const {
  if (samples.rows() == 0 || samples.cols() == 0) throw DataError("trajectory is empty");
  if (static_cast<std::size_t>(samples.rows()) <= n_presamples) throw DataError("trajectory has no samples after the pre-samples");
  if (!samples.allFinite()) throw DataError("trajectory contains non-finite samples");
  if (!(dt > 0.0)) throw ValidationError("trajectory dt must be positive");
}

ObservedTrajectory observe(const Matrix& states, const ObservationMap& map, double dt, std::size_t n_presamples) {
  map.validate();
  if (states.rows() == 0) throw DataError("no states to observe");
  if (static_cast<std::size_t>(states.cols()) != map.state_dim()) {
    throw ValidationError("observation map " + to_string(map.kind) + " expects " + std::to_string(map.state_dim()) +
                          "-dimensional states");
  }
  const auto n = states.rows();
  const auto d = static_cast<Eigen::Index>(map.selected_components.size());
  Matrix out(n, d);
  std::array<double, 4> full{};
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (map.kind) {
      case ObservationKind::TorusEmbed3D: {
        const double t1 = states(i, 0);
        const double t2 = states(i, 1);
        const double radial = 1.0 + map.r1 * std::cos(t2);
        full = {radial * std::cos(t1), radial * std::sin(t1), map.r2 * std::sin(t2), 0.0};
        break;
      }
      case ObservationKind::TorusFlatEmbed4D:
        full = {std::cos(states(i, 0)), std::sin(states(i, 0)), std::cos(states(i, 1)), std::sin(states(i, 1))};
        break;
      case ObservationKind::LorenzIdentity3D: full = {states(i, 0), states(i, 1), states(i, 2), 0.0}; break;
    }
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = full[map.selected_components[static_cast<std::size_t>(j)]];
  }
  ObservedTrajectory traj;
  traj.samples = std::move(out);
  traj.dt = dt;
  traj.n_presamples = n_presamples;
  traj.provenance = {{"observation", to_string(map.kind)}, {"components", map.selected_components},
                     {"r1", map.r1}, {"r2", map.r2}};
  return traj;
}

ObservedTrajectory generate(const FlowSpec& spec, const ObservationMap& map) {
  const Matrix states = integrate_flow(spec);
  ObservedTrajectory traj = observe(states, map, spec.dt, spec.n_presamples);
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : spec.params) params[k] = v;
  traj.provenance["flow"] = {{"kind", to_string(spec.kind)},
                             {"params", params},
                             {"initial_state", spec.initial_state},
                             {"dt", spec.dt},
                             {"n_samples", spec.n_samples},
                             {"n_presamples", spec.n_presamples},
                             {"n_transient", spec.n_transient},
                             {"n_substeps", spec.n_substeps}};
  return traj;
}

ObservedTrajectory ingest_csv(const std::filesystem::path& path, const CsvSpec& spec) {
  if (spec.columns.empty()) throw ValidationError("CSV ingestion needs at least one column");
  if (!(spec.dt > 0.0)) throw ValidationError("CSV ingestion dt must be positive");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file: " + path.string());

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_skipped = !spec.skip_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!header_skipped) {
      header_skipped = true;
      continue;
    }
    const auto fields = split_fields(line);
    std::vector<double> row;
    row.reserve(spec.columns.size());
    for (std::size_t c : spec.columns) {
      double v = 0.0;
      if (c >= fields.size() || !parse_real(fields[c], v)) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": column " + std::to_string(c) +
                        " is missing or not numeric");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no data rows in " + path.string());
  if (rows.size() < spec.n_presamples + 1) {
    throw DataError(path.string() + " has " + std::to_string(rows.size()) + " rows; the window needs at least " +
                    std::to_string(spec.n_presamples + 1));
  }
  ObservedTrajectory traj;
  traj.samples.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(spec.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < spec.columns.size(); ++j) {
      traj.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  traj.dt = spec.dt;
  traj.n_presamples = spec.n_presamples;
  traj.provenance = {{"ingested", path.filename().string()}, {"columns", spec.columns}};
  return traj;
}

void save_trajectory(const std::filesystem::path& stem, const ObservedTrajectory& traj) {
  io::write_matrix(stem.string() + ".bin", traj.samples);
  io::write_json(stem.string() + ".json", {{"dt", traj.dt},
                                           {"d", traj.dim()},
                                           {"n_presamples", traj.n_presamples},
                                           {"n_samples", traj.n_samples()},
                                           {"provenance", traj.provenance}});
}

ObservedTrajectory load_trajectory(const std::filesystem::path& stem) {
  ObservedTrajectory traj;
  traj.samples = io::read_matrix(stem.string() + ".bin");
  const auto meta = io::read_json(stem.string() + ".json");
  traj.dt = meta.at("dt").get<double>();
  traj.n_presamples = meta.at("n_presamples").get<std::size_t>();
  traj.provenance = meta.value("provenance", nlohmann::json::object());
  if (meta.at("d").get<std::size_t>() != traj.dim()) throw DataError("trajectory sidecar dimension mismatch");
  return traj;
}

}  // namespace tempat::flows
