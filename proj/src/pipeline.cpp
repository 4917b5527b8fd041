#include "tempat/pipeline.hpp"

#include "tempat/error.hpp"
#include "tempat/hash.hpp"
#include "tempat/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <numbers>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tempat::pipeline {

namespace {

using nlohmann::json;

const std::map<Stage, std::vector<Stage>>& dependencies() {
  static const std::map<Stage, std::vector<Stage>> deps = {
      {Stage::Trajectory, {}},
      {Stage::Densities, {Stage::Trajectory}},
      {Stage::Distances, {Stage::Densities}},
      {Stage::Diagnostics, {Stage::Distances}},
      {Stage::Kernel, {Stage::Distances}},
      {Stage::Spectra, {Stage::Kernel}},
      {Stage::Reconstruction, {Stage::Spectra, Stage::Trajectory}},
      {Stage::PlotData, {Stage::Trajectory, Stage::Distances, Stage::Diagnostics, Stage::Spectra, Stage::Reconstruction}},
  };
  return deps;
}

std::set<Stage> required_stages(Stage until) {
  std::set<Stage> out;
  std::vector<Stage> todo{until};
  while (!todo.empty()) {
    const Stage s = todo.back();
    todo.pop_back();
    if (!out.insert(s).second) continue;
    for (Stage d : dependencies().at(s)) todo.push_back(d);
  }
  return out;
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return Hasher().text(content).hex();
}

std::string join_hash(std::initializer_list<std::string> parts) {
  Hasher h;
  for (const auto& p : parts) h.text(p).text("|");
  return h.hex();
}

/// Stage hashes follow the dependency graph, so any change upstream
/// propagates to every consumer.
std::map<Stage, std::string> stage_hashes(const PipelineConfig& cfg) {
  const json j = cfg.to_json();
  std::string source = j["source"].dump();
  if (cfg.source.type == SourceConfig::Type::Csv) source += file_digest(cfg.source.csv_path);
  std::map<Stage, std::string> h;
  h[Stage::Trajectory] = join_hash({"trajectory", source, j["window"].dump()});
  h[Stage::Densities] = join_hash({"densities", h[Stage::Trajectory], j["grid"].dump(), j["kde"].dump()});
  h[Stage::Distances] = join_hash({"distances", h[Stage::Densities], j["geometry"]["knn"].dump()});
  h[Stage::Diagnostics] = join_hash({"diagnostics", h[Stage::Distances], j["geometry"]["scan_k"].dump(),
                                     j["kernel"].dump(), j["diagnostics"].dump(), j["seed"].dump()});
  h[Stage::Kernel] = join_hash({"kernel", h[Stage::Distances], j["kernel"].dump()});
  h[Stage::Spectra] = join_hash({"spectra", h[Stage::Kernel], j["spectral"].dump(), j["seed"].dump(),
                                 j["output"]["plot_eigenvectors"].dump()});
  h[Stage::Reconstruction] =
      join_hash({"reconstruction", h[Stage::Spectra], h[Stage::Trajectory], j["reconstruct"].dump()});
  h[Stage::PlotData] = join_hash({"plot_data", h[Stage::Spectra], h[Stage::Reconstruction], h[Stage::Diagnostics],
                                  j["output"].dump(), kVersion});
  return h;
}

std::string eigen_name(std::size_t l) {
  std::string s = std::to_string(l);
  return s.size() < 3 ? std::string(3 - s.size(), '0') + s : s;
}

/// In-memory stage products, loaded from disk on demand when the producing
/// stage was skipped.
class Workspace {
 public:
  Workspace(const PipelineConfig& cfg, fs::path dir) : cfg_(cfg), dir_(std::move(dir)) {}

  const PipelineConfig& cfg() const { return cfg_; }
  const fs::path& dir() const { return dir_; }

  flows::ObservedTrajectory& trajectory() {
    if (!traj_) traj_ = flows::load_trajectory(dir_ / "trajectory");
    return *traj_;
  }
  measures::WindowDensityField& densities() {
    if (!field_) field_ = measures::load_density_field(dir_ / "densities");
    return *field_;
  }
  geometry::DistanceMatrix& distances() {
    if (!dm_) dm_ = geometry::load_distance_matrix(dir_ / "distances");
    return *dm_;
  }
  spectral::SymmetricNormalization& normalization() {
    if (!norm_) norm_ = spectral::normalize_symmetric(spectral::kernel_matrix(distances(), cfg_.kernel));
    return *norm_;
  }
  spectral::SpectralBasis& basis() {
    if (!basis_) basis_ = spectral::load_basis(dir_ / "basis");
    return *basis_;
  }

  void set(flows::ObservedTrajectory t) { traj_ = std::move(t); }
  void set(measures::WindowDensityField f) { field_ = std::move(f); }
  void set(geometry::DistanceMatrix d) { dm_ = std::move(d); }
  void set(spectral::SymmetricNormalization n) { norm_ = std::move(n); }
  void set(spectral::SpectralBasis b) { basis_ = std::move(b); }
  void drop_densities() { field_.reset(); }
  void drop_normalization() { norm_.reset(); }

 private:
  const PipelineConfig& cfg_;
  fs::path dir_;
  std::optional<flows::ObservedTrajectory> traj_;
  std::optional<measures::WindowDensityField> field_;
  std::optional<geometry::DistanceMatrix> dm_;
  std::optional<spectral::SymmetricNormalization> norm_;
  std::optional<spectral::SpectralBasis> basis_;
};

std::vector<std::string> run_trajectory(Workspace& ws) {
  const PipelineConfig& cfg = ws.cfg();
  flows::ObservedTrajectory traj;
  if (cfg.source.type == SourceConfig::Type::Flow) {
    flows::FlowSpec f = cfg.source.flow;
    if (cfg.source.samples_per_period) f.dt = 2.0 * std::numbers::pi / *cfg.source.samples_per_period;
    f.n_presamples = cfg.window.R;
    traj = flows::generate(f, cfg.source.observation);
    traj.provenance["observation"] = {{"kind", flows::to_string(cfg.source.observation.kind)},
                                      {"components", cfg.source.observation.selected_components},
                                      {"r1", cfg.source.observation.r1},
                                      {"r2", cfg.source.observation.r2}};
  } else {
    flows::CsvSpec spec{cfg.source.columns, cfg.source.skip_header, cfg.source.csv_dt, cfg.window.R};
    traj = flows::ingest_csv(cfg.source.csv_path, spec);
    const std::size_t rows = static_cast<std::size_t>(traj.samples.rows());
    if (cfg.source.expected_rows && rows != *cfg.source.expected_rows) {
      std::cerr << "warning: " << cfg.source.csv_path << " has " << rows << " rows; expected "
                << *cfg.source.expected_rows << "\n";
      traj.provenance["row_count_warning"] = {{"expected", *cfg.source.expected_rows}, {"found", rows}};
    }
  }
  traj.validate();
  flows::save_trajectory(ws.dir() / "trajectory", traj);
  ws.set(std::move(traj));
  return {"trajectory.bin", "trajectory.json"};
}

std::vector<std::string> run_densities(Workspace& ws) {
  const PipelineConfig& cfg = ws.cfg();
  const auto& traj = ws.trajectory();
  const auto windows = measures::build_windows(traj, cfg.window);
  const auto grid = measures::make_grid(traj, cfg.grid);
  auto field = measures::estimate_densities(windows, grid, cfg.kde);
  measures::save_density_field(ws.dir() / "densities", field);
  ws.set(std::move(field));
  return {"densities.bin", "densities.grid.bin", "densities.json"};
}

std::vector<std::string> run_distances(Workspace& ws) {
  const PipelineConfig& cfg = ws.cfg();
  auto dm = geometry::pairwise_distances(ws.densities());
  if (cfg.geometry.knn > 0) dm = geometry::knn_truncate(dm, cfg.geometry.knn);
  geometry::save_distance_matrix(ws.dir() / "distances", dm);
  std::vector<std::string> out{"distances.bin", "distances.json"};
  if (dm.sparsity == geometry::Sparsity::Knn) out.push_back("distances.adj.bin");
  ws.set(std::move(dm));
  return out;
}

std::vector<std::string> run_diagnostics(Workspace& ws) {
  const PipelineConfig& cfg = ws.cfg();
  const auto& dm = ws.distances();
  json j;
  if (!cfg.geometry.scan_k.empty()) {
    const auto diag = geometry::skewness_scan(dm, cfg.geometry.scan_k);
    json scan = json::array();
    for (const auto& e : diag.scan) scan.push_back({{"k", e.k}, {"skewness", e.skewness}, {"edges", e.pooled}});
    j["scan"] = scan;
    j["recommended_k"] = diag.recommended_k;
    j["monotone_decreasing"] = diag.monotone_decreasing;
    j["positive_to_negative"] = diag.positive_to_negative;
  }
  const auto decay = geometry::kernel_decay(dm, cfg.kernel.canonical_epsilon(), cfg.diagnostics.probes, cfg.seed);
  json probes = json::array();
  for (const auto& c : decay) probes.push_back(c.probe);
  j["decay_probes"] = probes;
  j["epsilon"] = cfg.kernel.canonical_epsilon();
  io::write_json(ws.dir() / "diagnostics.json", j);
  return {"diagnostics.json"};
}

std::vector<std::string> run_kernel(Workspace& ws) {
  ws.drop_densities();
  const auto& norm = ws.normalization();
  const auto N = norm.v.size();
  // Row sums of H = V^-1/2 H~ V^1/2.
  double row_dev = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < N; ++j) s += norm.H_tilde(i, j) * std::sqrt(norm.v(j));
    row_dev = std::max(row_dev, std::abs(s / std::sqrt(norm.v(i)) - 1.0));
  }
  Matrix qv(N, 2);
  qv.col(0) = norm.q;
  qv.col(1) = norm.v;
  io::write_matrix(ws.dir() / "kernel.qv.bin", qv);
  io::write_json(ws.dir() / "kernel.json", {{"N", N},
                                            {"epsilon", ws.cfg().kernel.canonical_epsilon()},
                                            {"q_min", norm.q.minCoeff()},
                                            {"q_max", norm.q.maxCoeff()},
                                            {"v_min", norm.v.minCoeff()},
                                            {"v_max", norm.v.maxCoeff()},
                                            {"max_row_sum_deviation", row_dev}});
  return {"kernel.json", "kernel.qv.bin"};
}

std::vector<std::string> run_spectra(Workspace& ws, const std::string& provenance) {
  const PipelineConfig& cfg = ws.cfg();
  auto& norm = ws.normalization();
  spectral::EigenOptions opts;
  opts.dense_max_n = cfg.spectral.dense_max_n;
  opts.tolerance = cfg.spectral.tolerance;
  opts.seed = cfg.seed;
  auto basis = spectral::eigendecompose(norm.H_tilde, norm.v, norm.q, cfg.spectral.M, opts);
  basis.kernel = cfg.kernel;
  basis.provenance = provenance;
  ws.drop_normalization();
  spectral::save_basis(ws.dir() / "basis", basis);
  std::vector<std::string> out{"basis.psi.bin", "basis.phi.bin", "basis.vq.bin", "basis.json", "eigenvalues.csv"};

  {
    io::CsvWriter csv(ws.dir() / "eigenvalues.csv", {"l", "lambda"});
    for (Eigen::Index l = 0; l < basis.lambda.size(); ++l) {
      csv.cell(static_cast<long long>(l + 1)).cell(basis.lambda(l)).end_row();
    }
  }
  fs::create_directories(ws.dir() / "eigenvectors");
  const double dt = ws.trajectory().dt;
  const std::size_t count = std::min(cfg.output.plot_eigenvectors, basis.M());
  for (std::size_t l = 0; l < count; ++l) {
    const std::string rel = "eigenvectors/phi_" + eigen_name(l + 1) + ".csv";
    io::CsvWriter csv(ws.dir() / rel, {"i", "t", "phi", "psi"});
    const auto col = static_cast<Eigen::Index>(l);
    for (Eigen::Index i = 0; i < basis.psi.rows(); ++i) {
      csv.cell(static_cast<long long>(i))
          .cell(static_cast<double>(i) * dt)
          .cell(basis.phi(i, col))
          .cell(basis.psi(i, col))
          .end_row();
    }
    out.push_back(rel);
  }
  ws.set(std::move(basis));
  return out;
}

std::vector<std::string> run_reconstruction(Workspace& ws) {
  const PipelineConfig& cfg = ws.cfg();
  if (!cfg.reconstruct.enabled) {
    io::write_json(ws.dir() / "reconstruction.json", {{"enabled", false}});
    return {"reconstruction.json"};
  }
  const auto& basis = ws.basis();
  const auto windows = measures::build_windows(ws.trajectory(), cfg.window);
  auto [targets, names] = reconstruction_targets(windows, cfg.reconstruct);
  const auto rec = reconstruct::run_reconstruction(basis, targets, names, cfg.reconstruct.truncations,
                                                   cfg.reconstruct.normalize);
  io::write_matrix(ws.dir() / "reconstruction.coef.bin", rec.coefficients);
  std::vector<std::string> out{"reconstruction.json", "reconstruction.coef.bin", "rmse.csv"};

  json rmse = json::array();
  for (std::size_t t = 0; t < rec.rmse.truncations.size(); ++t) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < rec.rmse.values.cols(); ++c) row.push_back(rec.rmse.values(static_cast<Eigen::Index>(t), c));
    rmse.push_back(row);
  }
  io::write_json(ws.dir() / "reconstruction.json", {{"enabled", true},
                                                    {"mode", cfg.to_json()["reconstruct"]["mode"]},
                                                    {"columns", rec.column_names},
                                                    {"truncations", rec.rmse.truncations},
                                                    {"normalized", rec.normalized},
                                                    {"rmse", rmse}});
  {
    io::CsvWriter csv(ws.dir() / "rmse.csv", {"column", "M", "rmse"});
    for (std::size_t c = 0; c < rec.column_names.size(); ++c) {
      for (std::size_t t = 0; t < rec.rmse.truncations.size(); ++t) {
        csv.cell(rec.column_names[c])
            .cell(static_cast<long long>(rec.rmse.truncations[t]))
            .cell(rec.rmse.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)))
            .end_row();
      }
    }
  }
  fs::create_directories(ws.dir() / "moments");
  for (std::size_t c = 0; c < rec.column_names.size(); ++c) {
    std::vector<std::string> header{"i", "true"};
    for (std::size_t t : rec.rmse.truncations) header.push_back("M" + std::to_string(t));
    const std::string rel = "moments/" + rec.column_names[c] + ".csv";
    io::CsvWriter csv(ws.dir() / rel, header);
    const auto col = static_cast<Eigen::Index>(c);
    for (Eigen::Index i = 0; i < targets.rows(); ++i) {
      csv.cell(static_cast<long long>(i)).cell(targets(i, col));
      for (const auto& r : rec.reconstructions) csv.cell(r(i, col));
      csv.end_row();
    }
    out.push_back(rel);
  }
  return out;
}

std::vector<std::string> run_plot_data(Workspace& ws) {
  const PipelineConfig& cfg = ws.cfg();
  std::vector<std::string> out;
  if (!cfg.output.plot_data) return out;
  for (PlotKind k : all_plot_kinds()) {
    if (k == PlotKind::DistanceHistogram && cfg.geometry.scan_k.empty()) continue;
    if ((k == PlotKind::RmseVsM || k == PlotKind::Coefficients) && !cfg.reconstruct.enabled) continue;
    for (auto& f : emit_plot_data(ws.dir(), k)) out.push_back(std::move(f));
  }
  return out;
}

bool artifacts_present(const fs::path& dir, const StageRecord& rec) {
  for (const auto& a : rec.artifacts) {
    if (!fs::exists(dir / a)) return false;
  }
  return true;
}

[[noreturn]] void rethrow_in_stage(Stage s) {
  const std::string prefix = "stage " + to_string(s) + ": ";
  try {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const std::bad_alloc&) {
    throw NumericalError(prefix + "out of memory");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(prefix + "malformed artifact: " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw DataError(prefix + e.what());
  }
}

}  // namespace

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Trajectory: return "trajectory";
    case Stage::Densities: return "densities";
    case Stage::Distances: return "distances";
    case Stage::Diagnostics: return "diagnostics";
    case Stage::Kernel: return "kernel";
    case Stage::Spectra: return "spectra";
    case Stage::Reconstruction: return "reconstruction";
    case Stage::PlotData: return "plot_data";
  }
  return "unknown";
}

Stage stage_from_string(const std::string& name) {
  for (Stage s : all_stages()) {
    if (to_string(s) == name) return s;
  }
  throw ValidationError("unknown stage: " + name);
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages{Stage::Trajectory,  Stage::Densities, Stage::Distances,
                                         Stage::Diagnostics, Stage::Kernel,    Stage::Spectra,
                                         Stage::Reconstruction, Stage::PlotData};
  return stages;
}

const StageRecord* RunManifest::find(Stage s) const {
  for (const auto& r : stages) {
    if (r.stage == s) return &r;
  }
  return nullptr;
}

json RunManifest::to_json() const {
  json st = json::array();
  for (const auto& r : stages) {
    st.push_back({{"stage", pipeline::to_string(r.stage)},
                  {"hash", r.hash},
                  {"skipped", r.skipped},
                  {"seconds", r.seconds},
                  {"artifacts", r.artifacts}});
  }
  return {{"version", version}, {"config", config}, {"stages", st}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.version = j.value("version", std::string());
  m.config = j.value("config", json::object());
  for (const auto& s : j.value("stages", json::array())) {
    StageRecord r;
    r.stage = stage_from_string(s.at("stage").get<std::string>());
    r.hash = s.at("hash").get<std::string>();
    r.skipped = s.value("skipped", false);
    r.seconds = s.value("seconds", 0.0);
    r.artifacts = s.value("artifacts", std::vector<std::string>{});
    m.stages.push_back(std::move(r));
  }
  return m;
}

fs::path resolve_output_dir(const PipelineConfig& config) {
  if (config.output.directory == default_config().output.directory) {
    if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  }
  return config.output.directory;
}

RunManifest load_manifest(const fs::path& run_dir) {
  const fs::path p = run_dir / "manifest.json";
  if (!fs::exists(p)) throw DataError("no run manifest in " + run_dir.string());
  try {
    return RunManifest::from_json(io::read_json(p));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest " + p.string() + ": " + e.what());
  }
}

RunManifest run_pipeline(const PipelineConfig& config, const RunOptions& options) {
  config.validate();
#ifdef _OPENMP
  if (config.threads > 0) omp_set_num_threads(config.threads);
#endif
  const fs::path dir = resolve_output_dir(config);
  std::map<Stage, std::string> hashes;
  try {
    // Hashing a CSV source reads the file, so a missing input is a trajectory-stage error.
    hashes = stage_hashes(config);
  } catch (...) {
    rethrow_in_stage(Stage::Trajectory);
  }
  fs::create_directories(dir);
  io::write_json(dir / "config.json", config.to_json());

  RunManifest previous;
  if (fs::exists(dir / "manifest.json")) {
    try {
      previous = load_manifest(dir);
    } catch (const Error&) {
      previous = {};
    }
  }

  RunManifest manifest;
  manifest.config = config.to_json();
  const auto needed = required_stages(options.until);
  std::set<Stage> ran;
  Workspace ws(config, dir);

  for (Stage s : all_stages()) {
    if (!needed.count(s)) {
      // Keep still-valid records of stages outside this invocation.
      if (const StageRecord* old = previous.find(s); old && old->hash == hashes.at(s)) manifest.stages.push_back(*old);
      continue;
    }
    bool upstream_ran = false;
    for (Stage d : dependencies().at(s)) upstream_ran = upstream_ran || ran.count(d) > 0;
    const StageRecord* old = previous.find(s);
    if (!options.force && !upstream_ran && old && old->hash == hashes.at(s) && artifacts_present(dir, *old)) {
      StageRecord rec = *old;
      rec.skipped = true;
      rec.seconds = 0.0;
      manifest.stages.push_back(std::move(rec));
      continue;
    }

    StageRecord rec;
    rec.stage = s;
    rec.hash = hashes.at(s);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      switch (s) {
        case Stage::Trajectory: rec.artifacts = run_trajectory(ws); break;
        case Stage::Densities: rec.artifacts = run_densities(ws); break;
        case Stage::Distances: rec.artifacts = run_distances(ws); break;
        case Stage::Diagnostics: rec.artifacts = run_diagnostics(ws); break;
        case Stage::Kernel: rec.artifacts = run_kernel(ws); break;
        case Stage::Spectra: rec.artifacts = run_spectra(ws, hashes.at(Stage::Distances)); break;
        case Stage::Reconstruction: rec.artifacts = run_reconstruction(ws); break;
        case Stage::PlotData:
          // Plot emission reads the manifest, so publish the finished stages first.
          io::write_json(dir / "manifest.json", manifest.to_json());
          rec.artifacts = run_plot_data(ws);
          break;
      }
    } catch (...) {
      io::write_json(dir / "manifest.json", manifest.to_json());
      rethrow_in_stage(s);
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ran.insert(s);
    manifest.stages.push_back(std::move(rec));
    io::write_json(dir / "manifest.json", manifest.to_json());
  }
  io::write_json(dir / "manifest.json", manifest.to_json());
  return manifest;
}

flows::ObservedTrajectory load_run_trajectory(const fs::path& run_dir) { return flows::load_trajectory(run_dir / "trajectory"); }

measures::WindowDensityField load_run_densities(const fs::path& run_dir) {
  return measures::load_density_field(run_dir / "densities");
}

geometry::DistanceMatrix load_run_distances(const fs::path& run_dir) {
  return geometry::load_distance_matrix(run_dir / "distances");
}

spectral::SpectralBasis load_run_basis(const fs::path& run_dir) { return spectral::load_basis(run_dir / "basis"); }

PipelineConfig load_run_config(const fs::path& run_dir) {
  const fs::path p = run_dir / "config.json";
  if (!fs::exists(p)) throw DataError("no config.json in " + run_dir.string());
  return PipelineConfig::from_json(io::read_json(p));
}

std::pair<Matrix, std::vector<std::string>> load_run_coefficients(const fs::path& run_dir) {
  const fs::path meta_path = run_dir / "reconstruction.json";
  if (!fs::exists(meta_path)) throw DataError("run has no reconstruction stage: " + run_dir.string());
  const auto meta = io::read_json(meta_path);
  if (!meta.value("enabled", false)) throw DataError("reconstruction was disabled for this run");
  return {io::read_matrix(run_dir / "reconstruction.coef.bin"), meta.at("columns").get<std::vector<std::string>>()};
}

extension::ExtensionContext load_extension_context(const fs::path& run_dir) {
  const auto cfg = load_run_config(run_dir);
  const auto field = load_run_densities(run_dir);
  const auto dm = load_run_distances(run_dir);
  const auto basis = load_run_basis(run_dir);
  return extension::ExtensionContext::build(field, dm, basis, cfg.kernel);
}

std::pair<Matrix, std::vector<std::string>> reconstruction_targets(const measures::WindowView& windows,
                                                                   const ReconstructConfig& rc) {
  const auto N = static_cast<Eigen::Index>(windows.count());
  const auto d = static_cast<Eigen::Index>(windows.dim());
  std::vector<Matrix> blocks;
  std::vector<std::string> prefixes;
  if (rc.mode == TargetMode::Raw) {
    for (int n : rc.moments) {
      reconstruct::ObservableSpec g = reconstruct::ObservableSpec::moment(n);
      g.validate(rc.max_order);
      blocks.push_back(reconstruct::time_average(windows, g));
      prefixes.push_back("m" + std::to_string(n));
    }
  } else {
    std::vector<Matrix> raw;
    for (int n = 1; n <= 4; ++n) raw.push_back(reconstruct::time_average(windows, reconstruct::ObservableSpec::moment(n)));
    const auto cm = reconstruct::central_moments(raw[0], raw[1], raw[2], raw[3]);
    static const char* names[] = {"mean", "sd", "skewness", "kurtosis"};
    for (int n : rc.moments) {
      if (n < 1 || n > 4) throw ValidationError("statistics mode supports moments 1..4");
      const Matrix* m = n == 1 ? &cm.mean : n == 2 ? &cm.sd : n == 3 ? &cm.skewness : &cm.kurtosis;
      if (n >= 3 && (cm.degenerate.array() != 0).any()) {
        throw DataError("some windows are constant; skewness and kurtosis are undefined there");
      }
      blocks.push_back(*m);
      prefixes.push_back(names[n - 1]);
    }
  }
  Matrix out(N, d * static_cast<Eigen::Index>(blocks.size()));
  std::vector<std::string> cols;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    out.middleCols(static_cast<Eigen::Index>(b) * d, d) = blocks[b];
    for (Eigen::Index j = 0; j < d; ++j) cols.push_back(prefixes[b] + "_y" + std::to_string(j + 1));
  }
  return {out, cols};
}

}  // namespace tempat::pipeline
