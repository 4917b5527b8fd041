/// Command-line front end: stage subcommands, the full pipeline, extension
/// of a trained basis and plot-data emission.

#include "tempat/config.hpp"
#include "tempat/error.hpp"
#include "tempat/extension.hpp"
#include "tempat/io.hpp"
#include "tempat/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace tempat;
namespace fs = std::filesystem;

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(item, &pos);
      if (pos != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw ValidationError("cannot parse " + what + " entry '" + item + "'");
    }
  }
  return out;
}

/// Options shared by every stage-running subcommand.
struct StageOptions {
  std::string config_path;
  std::string preset;
  std::optional<std::size_t> n;
  std::optional<std::size_t> R;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::size_t> knn;
  std::string scan_k;
  std::optional<double> epsilon;
  std::optional<std::size_t> M;
  std::string moments;
  std::string truncations;
  bool normalize = false;
  bool force = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON configuration file");
    app->add_option("--preset", preset, "Named preset (see `config dump-defaults --preset`)");
    app->add_option("-N,--n-samples", n, "Number of windows N for generated flows");
    app->add_option("-R,--window", R, "Window length R");
    app->add_option("-o,--out", out, "Run directory");
    app->add_option("--seed", seed, "Seed for probes, grid subsampling and Lanczos starts");
    app->add_option("--threads", threads, "OpenMP thread count");
    app->add_option("--knn", knn, "Nearest neighbours kept per window (0 = dense)");
    app->add_option("--scan-k", scan_k, "Comma-separated k ladder for the skewness diagnostic");
    app->add_option("--epsilon", epsilon, "Kernel bandwidth epsilon");
    app->add_option("-M,--eigenvectors", M, "Number of eigenpairs M");
    app->add_option("--moments", moments, "Comma-separated moment orders");
    app->add_option("--truncations", truncations, "Comma-separated truncation levels M'");
    app->add_flag("--normalize", normalize, "Scale targets to unit norm before RMSE");
    app->add_flag("--force", force, "Recompute every stage");
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg = default_config();
    if (!config_path.empty()) {
      cfg = PipelineConfig::from_json(io::read_json(config_path));
    } else if (!preset.empty()) {
      cfg = tempat::preset(preset);
    }
    if (!preset.empty() && !config_path.empty()) throw ValidationError("use either --config or --preset, not both");
    if (n) {
      if (cfg.source.type != SourceConfig::Type::Flow) throw ValidationError("--n-samples applies to generated flows");
      cfg.source.flow.n_samples = *n;
    }
    if (R) cfg.window.R = *R;
    if (!out.empty()) cfg.output.directory = out;
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (knn) cfg.geometry.knn = *knn;
    if (!scan_k.empty()) cfg.geometry.scan_k = parse_list<std::size_t>(scan_k, "scan-k");
    if (epsilon) cfg.kernel.epsilon = *epsilon;
    if (M) cfg.spectral.M = *M;
    if (!moments.empty()) cfg.reconstruct.moments = parse_list<int>(moments, "moments");
    if (!truncations.empty()) cfg.reconstruct.truncations = parse_list<std::size_t>(truncations, "truncations");
    if (normalize) cfg.reconstruct.normalize = true;
    return cfg;
  }
};

void print_summary(const pipeline::RunManifest& m, const fs::path& dir) {
  for (const auto& r : m.stages) {
    std::cout << pipeline::to_string(r.stage) << ": " << (r.skipped ? "up to date" : "done") << " ("
              << io::format_real(r.seconds) << " s)\n";
  }
  std::cout << "run directory: " << dir.string() << "\n";
}

int run_stage(const StageOptions& opts, pipeline::Stage until, bool csv_dump = false) {
  const PipelineConfig cfg = opts.resolve();
  const auto manifest = pipeline::run_pipeline(cfg, {until, opts.force});
  const fs::path dir = pipeline::resolve_output_dir(cfg);
  if (csv_dump) {
    const auto traj = pipeline::load_run_trajectory(dir);
    std::vector<std::string> header;
    for (std::size_t j = 1; j <= traj.dim(); ++j) header.push_back("y" + std::to_string(j));
    io::write_matrix_csv(dir / "trajectory.csv", traj.samples, header);
  }
  print_summary(manifest, dir);
  if (until == pipeline::Stage::Diagnostics) {
    const auto diag = io::read_json(dir / "diagnostics.json");
    if (diag.contains("scan")) {
      for (const auto& e : diag["scan"]) {
        std::cout << "k = " << e["k"].get<std::size_t>() << "  skewness = " << io::format_real(e["skewness"].get<double>())
                  << "\n";
      }
      std::cout << "recommended k = " << diag["recommended_k"].get<std::size_t>()
                << (diag["monotone_decreasing"].get<bool>() ? "" : "  (skewness not monotone over the ladder)") << "\n";
    }
  }
  if (until == pipeline::Stage::Spectra) {
    const auto basis = pipeline::load_run_basis(dir);
    const Eigen::Index shown = std::min<Eigen::Index>(basis.lambda.size(), 10);
    for (Eigen::Index l = 0; l < shown; ++l) {
      std::cout << "lambda_" << (l + 1) << " = " << io::format_real(basis.lambda(l)) << "\n";
    }
  }
  if (until == pipeline::Stage::Reconstruction && cfg.reconstruct.enabled) {
    const auto meta = io::read_json(dir / "reconstruction.json");
    const auto cols = meta["columns"].get<std::vector<std::string>>();
    const auto truncs = meta["truncations"].get<std::vector<std::size_t>>();
    const auto table = meta["rmse"].get<std::vector<std::vector<double>>>();
    for (std::size_t t = 0; t < truncs.size(); ++t) {
      std::cout << "M' = " << truncs[t];
      for (std::size_t c = 0; c < cols.size(); ++c) std::cout << "  " << cols[c] << " " << io::format_real(table[t][c]);
      std::cout << "\n";
    }
  }
  return 0;
}

/// Parses "a..b", "n" (meaning 1..n) or a comma list into one-based indices.
std::vector<std::size_t> parse_eigen_range(const std::string& text, std::size_t M) {
  if (text.empty()) {
    std::vector<std::size_t> all(M);
    for (std::size_t l = 0; l < M; ++l) all[l] = l + 1;
    return all;
  }
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const auto a = parse_list<std::size_t>(text.substr(0, dots), "eigenfunction range");
    const auto b = parse_list<std::size_t>(text.substr(dots + 2), "eigenfunction range");
    if (a.size() != 1 || b.size() != 1 || a[0] < 1 || b[0] < a[0]) throw ValidationError("bad range " + text);
    std::vector<std::size_t> out;
    for (std::size_t l = a[0]; l <= b[0]; ++l) out.push_back(l);
    return out;
  }
  return parse_list<std::size_t>(text, "eigenfunctions");
}

int run_extend(const std::string& context, const std::string& input, const std::string& columns, bool skip_header,
               const std::string& eigen, bool do_reconstruct, std::optional<std::size_t> truncation,
               const std::string& output) {
  const fs::path run_dir = context;
  const auto ctx = pipeline::load_extension_context(run_dir);
  const std::size_t d = ctx.grid.dim();
  flows::CsvSpec spec;
  spec.columns = columns.empty() ? std::vector<std::size_t>{} : parse_list<std::size_t>(columns, "columns");
  if (spec.columns.empty()) {
    for (std::size_t j = 0; j < d; ++j) spec.columns.push_back(j);
  }
  if (spec.columns.size() != d) throw ValidationError("input must provide " + std::to_string(d) + " columns");
  spec.skip_header = skip_header;
  spec.n_presamples = ctx.R - 1;
  const auto traj = flows::ingest_csv(input, spec);
  const measures::WindowView windows(traj, ctx.R);

  const auto ls = parse_eigen_range(eigen, ctx.basis.M());
  for (std::size_t l : ls) {
    if (l < 1 || l > ctx.basis.M()) throw ValidationError("eigenfunction " + std::to_string(l) + " outside the basis");
  }
  std::vector<std::string> header{"window"};
  for (std::size_t l : ls) header.push_back("phi_" + std::to_string(l));
  Matrix coef;
  std::vector<std::string> names;
  std::size_t mprime = 0;
  if (do_reconstruct) {
    std::tie(coef, names) = pipeline::load_run_coefficients(run_dir);
    mprime = truncation.value_or(static_cast<std::size_t>(coef.rows()));
    for (const auto& n : names) header.push_back(n + "_M" + std::to_string(mprime));
  }
  const fs::path out_path = output.empty() ? run_dir / "extension.csv" : fs::path(output);
  io::CsvWriter csv(out_path, header);
  const std::size_t max_l = *std::max_element(ls.begin(), ls.end());
  for (std::size_t i = 0; i < windows.count(); ++i) {
    const RowVector rho = extension::extend_density(windows.window(i), ctx);
    const Vector phi = extension::extend_eigenfunctions(rho, ctx, max_l);
    csv.cell(static_cast<long long>(i + ctx.R - 1));
    for (std::size_t l : ls) csv.cell(phi(static_cast<Eigen::Index>(l - 1)));
    if (do_reconstruct) {
      Matrix one(1, rho.size());
      one.row(0) = rho;
      const Matrix rec = extension::extend_reconstruction(one, ctx, coef, mprime);
      for (Eigen::Index c = 0; c < rec.cols(); ++c) csv.cell(rec(0, c));
    }
    csv.end_row();
  }
  std::cout << "extended " << windows.count() << " windows -> " << out_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tempat: temporal patterns of dynamical systems from delay-window measures"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pipeline::kVersion));

  StageOptions generate_opts, densities_opts, distances_opts, diagnose_opts, spectra_opts, reconstruct_opts, run_opts;
  bool csv_dump = false;
  auto* generate = app.add_subcommand("generate", "Integrate a flow and apply the observation map");
  generate_opts.attach(generate);
  generate->add_flag("--csv", csv_dump, "Also dump the trajectory as CSV");

  StageOptions ingest_opts;
  std::string ingest_input, ingest_columns;
  bool ingest_header = false;
  double ingest_dt = 1.0;
  std::optional<std::size_t> ingest_expected;
  auto* ingest = app.add_subcommand("ingest", "Read observations from a CSV file");
  ingest_opts.attach(ingest);
  ingest->add_option("--input", ingest_input, "CSV file")->required();
  ingest->add_option("--columns", ingest_columns, "Comma-separated zero-based columns (default 0,1)");
  ingest->add_flag("--skip-header", ingest_header, "First non-empty line is a header");
  ingest->add_option("--dt", ingest_dt, "Sampling interval");
  ingest->add_option("--expected-rows", ingest_expected, "Warn when the row count differs");

  densities_opts.attach(app.add_subcommand("densities", "Window KDEs on the evaluation grid"));
  distances_opts.attach(app.add_subcommand("distances", "Pairwise squared Hellinger distances"));
  diagnose_opts.attach(app.add_subcommand("diagnose", "Neighbour-count skewness scan and kernel decay"));
  spectra_opts.attach(app.add_subcommand("spectra", "Kernel normalisation and eigenbasis"));
  reconstruct_opts.attach(app.add_subcommand("reconstruct", "Moment expansion and RMSE per truncation"));
  run_opts.attach(app.add_subcommand("run", "Full pipeline including plot data"));

  std::string ext_context, ext_input, ext_columns, ext_eigen, ext_output;
  bool ext_header = false, ext_reconstruct = false;
  std::optional<std::size_t> ext_truncation;
  auto* extend = app.add_subcommand("extend", "Evaluate a trained basis on new windows");
  extend->add_option("--context", ext_context, "Finished run directory")->required();
  extend->add_option("--input", ext_input, "CSV of new observations")->required();
  extend->add_option("--columns", ext_columns, "Comma-separated zero-based columns");
  extend->add_flag("--skip-header", ext_header, "First non-empty line is a header");
  extend->add_option("--eigenfunctions", ext_eigen, "Indices: 'a..b', a comma list, or empty for all");
  extend->add_flag("--reconstruct", ext_reconstruct, "Also evaluate the moment reconstructions");
  extend->add_option("--truncation", ext_truncation, "M' for --reconstruct (default: all coefficients)");
  extend->add_option("--output", ext_output, "Output CSV (default <context>/extension.csv)");

  std::string plot_run, plot_kind = "all";
  auto* plot = app.add_subcommand("plot-data", "Write plot-ready CSVs for a finished run");
  plot->add_option("--run", plot_run, "Run directory")->required();
  plot->add_option("--kind", plot_kind, "Plot kind or 'all'");

  std::string dump_preset;
  auto* config = app.add_subcommand("config", "Configuration utilities");
  config->require_subcommand(1);
  auto* dump = config->add_subcommand("dump-defaults", "Print the full default configuration");
  dump->add_option("--preset", dump_preset, "Print a preset instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::Validation);
  }

  try {
    if (generate->parsed()) return run_stage(generate_opts, pipeline::Stage::Trajectory, csv_dump);
    if (ingest->parsed()) {
      PipelineConfig cfg = ingest_opts.resolve();
      cfg.source.type = SourceConfig::Type::Csv;
      cfg.source.samples_per_period.reset();
      cfg.source.csv_path = ingest_input;
      if (!ingest_columns.empty()) cfg.source.columns = parse_list<std::size_t>(ingest_columns, "columns");
      cfg.source.skip_header = ingest_header;
      cfg.source.csv_dt = ingest_dt;
      cfg.source.expected_rows = ingest_expected;
      const auto m = pipeline::run_pipeline(cfg, {pipeline::Stage::Trajectory, ingest_opts.force});
      print_summary(m, pipeline::resolve_output_dir(cfg));
      return 0;
    }
    if (app.got_subcommand("densities")) return run_stage(densities_opts, pipeline::Stage::Densities);
    if (app.got_subcommand("distances")) return run_stage(distances_opts, pipeline::Stage::Distances);
    if (app.got_subcommand("diagnose")) return run_stage(diagnose_opts, pipeline::Stage::Diagnostics);
    if (app.got_subcommand("spectra")) return run_stage(spectra_opts, pipeline::Stage::Spectra);
    if (app.got_subcommand("reconstruct")) return run_stage(reconstruct_opts, pipeline::Stage::Reconstruction);
    if (app.got_subcommand("run")) return run_stage(run_opts, pipeline::Stage::PlotData);
    if (extend->parsed()) {
      return run_extend(ext_context, ext_input, ext_columns, ext_header, ext_eigen, ext_reconstruct, ext_truncation,
                        ext_output);
    }
    if (plot->parsed()) {
      std::vector<pipeline::PlotKind> kinds;
      if (plot_kind == "all") {
        kinds = pipeline::all_plot_kinds();
      } else {
        kinds.push_back(pipeline::plot_kind_from_string(plot_kind));
      }
      for (auto k : kinds) {
        for (const auto& f : pipeline::emit_plot_data(plot_run, k)) std::cout << f << "\n";
      }
      return 0;
    }
    if (dump->parsed()) {
      const PipelineConfig cfg = dump_preset.empty() ? default_config() : preset(dump_preset);
      std::cout << cfg.to_json().dump(2) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return static_cast<int>(ExitCode::Numerical);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Numerical);
  }
  return 0;
}
