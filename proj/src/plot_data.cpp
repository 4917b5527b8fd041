#include "tempat/error.hpp"
#include "tempat/io.hpp"
#include "tempat/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace tempat::pipeline {

namespace {

void require_stage(const RunManifest& m, Stage s, PlotKind kind) {
  if (m.find(s) == nullptr) {
    throw DataError("plot kind " + to_string(kind) + " needs the " + to_string(s) + " stage; run it first");
  }
}

std::size_t eigen_count(const PipelineConfig& cfg, const spectral::SpectralBasis& basis) {
  return std::min(cfg.output.plot_eigenvectors, basis.M());
}

std::vector<std::string> eigenvector_timeseries(const fs::path& dir, const PipelineConfig& cfg) {
  const auto basis = load_run_basis(dir);
  const auto traj = load_run_trajectory(dir);
  const std::size_t L = eigen_count(cfg, basis);
  std::vector<std::string> header{"i", "t"};
  for (std::size_t l = 1; l <= L; ++l) header.push_back("phi_" + std::to_string(l));
  const std::string rel = "plots/eigenvector_timeseries.csv";
  io::CsvWriter csv(dir / rel, header);
  for (Eigen::Index i = 0; i < basis.phi.rows(); ++i) {
    csv.cell(static_cast<long long>(i)).cell(static_cast<double>(i) * traj.dt);
    for (std::size_t l = 0; l < L; ++l) csv.cell(basis.phi(i, static_cast<Eigen::Index>(l)));
    csv.end_row();
  }
  return {rel};
}

std::vector<std::string> eigenvector_scatter(const fs::path& dir, const PipelineConfig& cfg) {
  const auto basis = load_run_basis(dir);
  const auto traj = load_run_trajectory(dir);
  const std::size_t L = eigen_count(cfg, basis);
  std::vector<std::string> header{"i"};
  for (std::size_t j = 1; j <= traj.dim(); ++j) header.push_back("y" + std::to_string(j));
  for (std::size_t l = 1; l <= L; ++l) header.push_back("phi_" + std::to_string(l));
  const std::string rel = "plots/eigenvector_scatter.csv";
  io::CsvWriter csv(dir / rel, header);
  for (Eigen::Index i = 0; i < basis.phi.rows(); ++i) {
    csv.cell(static_cast<long long>(i));
    const auto y = traj.sample(i);
    for (Eigen::Index j = 0; j < y.size(); ++j) csv.cell(y(j));
    for (std::size_t l = 0; l < L; ++l) csv.cell(basis.phi(i, static_cast<Eigen::Index>(l)));
    csv.end_row();
  }
  return {rel};
}

std::vector<std::string> distance_histograms(const fs::path& dir, const PipelineConfig& cfg) {
  if (cfg.geometry.scan_k.empty()) throw ValidationError("distance histograms need a scan-k list");
  const auto dm = load_run_distances(dir);
  auto ks = cfg.geometry.scan_k;
  std::sort(ks.begin(), ks.end());
  const auto diag = geometry::skewness_scan(dm, ks);
  const std::size_t bins = cfg.diagnostics.histogram_bins;
  std::vector<std::string> out;
  for (std::size_t k : ks) {
    const auto pooled = geometry::pooled_knn_distances(dm, k);
    const double hi = *std::max_element(pooled.begin(), pooled.end());
    const double width = hi > 0.0 ? hi / static_cast<double>(bins) : 1.0;
    std::vector<long long> counts(bins, 0);
    for (double x : pooled) {
      auto b = static_cast<std::size_t>(x / width);
      if (b >= bins) b = bins - 1;
      ++counts[b];
    }
    const std::string rel = "plots/distance_histogram_k" + std::to_string(k) + ".csv";
    io::CsvWriter csv(dir / rel, {"bin_left", "bin_right", "count", "density"});
    const double total = static_cast<double>(pooled.size());
    for (std::size_t b = 0; b < bins; ++b) {
      csv.cell(static_cast<double>(b) * width)
          .cell(static_cast<double>(b + 1) * width)
          .cell(counts[b])
          .cell(static_cast<double>(counts[b]) / (total * width))
          .end_row();
    }
    out.push_back(rel);
  }
  const std::string rel = "plots/distance_skewness.csv";
  io::CsvWriter csv(dir / rel, {"k", "skewness", "edges", "recommended"});
  for (const auto& e : diag.scan) {
    csv.cell(static_cast<long long>(e.k))
        .cell(e.skewness)
        .cell(static_cast<long long>(e.pooled))
        .cell(static_cast<long long>(e.k == diag.recommended_k ? 1 : 0))
        .end_row();
  }
  out.push_back(rel);
  return out;
}

std::vector<std::string> kernel_decay_curves(const fs::path& dir, const PipelineConfig& cfg) {
  const auto dm = load_run_distances(dir);
  const auto curves = geometry::kernel_decay(dm, cfg.kernel.canonical_epsilon(), cfg.diagnostics.probes, cfg.seed);
  const std::string rel = "plots/kernel_decay.csv";
  io::CsvWriter csv(dir / rel, {"probe", "window", "rank", "similarity"});
  for (std::size_t p = 0; p < curves.size(); ++p) {
    for (std::size_t r = 0; r < curves[p].similarity.size(); ++r) {
      csv.cell(static_cast<long long>(p))
          .cell(static_cast<long long>(curves[p].probe))
          .cell(static_cast<long long>(r + 1))
          .cell(curves[p].similarity[r])
          .end_row();
    }
  }
  return {rel};
}

std::vector<std::string> rmse_vs_m(const fs::path& dir) {
  const auto meta = io::read_json(dir / "reconstruction.json");
  if (!meta.value("enabled", false)) throw DataError("reconstruction was disabled for this run");
  const auto cols = meta.at("columns").get<std::vector<std::string>>();
  const auto truncs = meta.at("truncations").get<std::vector<std::size_t>>();
  const auto table = meta.at("rmse").get<std::vector<std::vector<double>>>();
  const std::string rel = "plots/rmse_vs_M.csv";
  io::CsvWriter csv(dir / rel, {"column", "M", "rmse"});
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (std::size_t t = 0; t < truncs.size(); ++t) {
      csv.cell(cols[c]).cell(static_cast<long long>(truncs[t])).cell(table[t][c]).end_row();
    }
  }
  return {rel};
}

std::vector<std::string> coefficient_magnitudes(const fs::path& dir) {
  const auto [coef, cols] = load_run_coefficients(dir);
  const auto basis = load_run_basis(dir);
  std::vector<std::string> header{"l", "lambda"};
  for (const auto& c : cols) header.push_back("abs_c_" + c);
  const std::string rel = "plots/coefficients.csv";
  io::CsvWriter csv(dir / rel, header);
  for (Eigen::Index l = 0; l < coef.rows(); ++l) {
    csv.cell(static_cast<long long>(l + 1)).cell(basis.lambda(l));
    for (Eigen::Index c = 0; c < coef.cols(); ++c) csv.cell(std::abs(coef(l, c)));
    csv.end_row();
  }
  return {rel};
}

}  // namespace

std::string to_string(PlotKind k) {
  switch (k) {
    case PlotKind::EigenvectorTimeseries: return "eigenvector-timeseries";
    case PlotKind::EigenvectorScatter: return "eigenvector-scatter";
    case PlotKind::DistanceHistogram: return "distance-histogram";
    case PlotKind::KernelDecay: return "kernel-decay";
    case PlotKind::RmseVsM: return "rmse-vs-M";
    case PlotKind::Coefficients: return "coefficients";
  }
  return "unknown";
}

PlotKind plot_kind_from_string(const std::string& name) {
  for (PlotKind k : all_plot_kinds()) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown plot kind: " + name);
}

const std::vector<PlotKind>& all_plot_kinds() {
  static const std::vector<PlotKind> kinds{PlotKind::EigenvectorTimeseries, PlotKind::EigenvectorScatter,
                                           PlotKind::DistanceHistogram,     PlotKind::KernelDecay,
                                           PlotKind::RmseVsM,               PlotKind::Coefficients};
  return kinds;
}

std::vector<std::string> emit_plot_data(const fs::path& run_dir, PlotKind kind) {
  const auto manifest = load_manifest(run_dir);
  const auto cfg = load_run_config(run_dir);
  fs::create_directories(run_dir / "plots");
  switch (kind) {
    case PlotKind::EigenvectorTimeseries:
      require_stage(manifest, Stage::Spectra, kind);
      return eigenvector_timeseries(run_dir, cfg);
    case PlotKind::EigenvectorScatter:
      require_stage(manifest, Stage::Spectra, kind);
      return eigenvector_scatter(run_dir, cfg);
    case PlotKind::DistanceHistogram:
      require_stage(manifest, Stage::Distances, kind);
      return distance_histograms(run_dir, cfg);
    case PlotKind::KernelDecay:
      require_stage(manifest, Stage::Distances, kind);
      return kernel_decay_curves(run_dir, cfg);
    case PlotKind::RmseVsM:
      require_stage(manifest, Stage::Reconstruction, kind);
      return rmse_vs_m(run_dir);
    case PlotKind::Coefficients:
      require_stage(manifest, Stage::Reconstruction, kind);
      return coefficient_magnitudes(run_dir);
  }
  return {};
}

}  // namespace tempat::pipeline
