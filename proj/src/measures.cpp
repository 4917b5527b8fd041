#include "tempat/measures.hpp"

#include "tempat/error.hpp"
#include "tempat/hash.hpp"
#include "tempat/io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace tempat::measures {

namespace {

std::string grid_kind_name(GridKind k) {
  switch (k) {
    case GridKind::Tensor: return "tensor";
    case GridKind::DataSubsample: return "data_subsample";
    case GridKind::Explicit: return "explicit";
  }
  return "unknown";
}

GridKind grid_kind_from_name(const std::string& s) {
  for (auto k : {GridKind::Tensor, GridKind::DataSubsample, GridKind::Explicit}) {
    if (grid_kind_name(k) == s) return k;
  }
  throw ValidationError("unknown grid construction: " + s);
}

// Accumulates sum_r prod_j profile_j over a tensor grid, first axis slowest.
void accumulate_tensor(const std::vector<std::vector<double>>& profiles, RowVector& acc) {
  const std::size_t d = profiles.size();
  if (d == 1) {
    const auto& p = profiles[0];
    for (std::size_t a = 0; a < p.size(); ++a) acc(static_cast<Eigen::Index>(a)) += p[a];
    return;
  }
  if (d == 2) {
    const auto& p0 = profiles[0];
    const auto& p1 = profiles[1];
    const std::size_t n1 = p1.size();
    for (std::size_t a = 0; a < p0.size(); ++a) {
      const double w = p0[a];
      double* row = acc.data() + a * n1;
      for (std::size_t b = 0; b < n1; ++b) row[b] += w * p1[b];
    }
    return;
  }
  std::vector<double> prod{1.0};
  for (const auto& p : profiles) {
    std::vector<double> next;
    next.reserve(prod.size() * p.size());
    for (double w : prod) {
      for (double x : p) next.push_back(w * x);
    }
    prod = std::move(next);
  }
  for (std::size_t q = 0; q < prod.size(); ++q) acc(static_cast<Eigen::Index>(q)) += prod[q];
}

}  // namespace

void WindowSpec::validate() const {
  if (R < 1) throw ValidationError("window length R must be at least 1");
}

WindowView::WindowView(const flows::ObservedTrajectory& traj, std::size_t R) : traj_(&traj), R_(R), n_(0) {
  if (R < 1) throw ValidationError("window length R must be at least 1");
  traj.validate();
  if (traj.n_presamples + 1 < R) {
    throw DataError("insufficient pre-samples: window length " + std::to_string(R) + " needs " + std::to_string(R - 1) +
                    ", trajectory has " + std::to_string(traj.n_presamples));
  }
  n_ = traj.n_samples();
}

Matrix WindowView::window(std::size_t i) const {
  Matrix w(static_cast<Eigen::Index>(R_), static_cast<Eigen::Index>(dim()));
  for (std::size_t r = 0; r < R_; ++r) w.row(static_cast<Eigen::Index>(r)) = sample(i, r);
  return w;
}

WindowView build_windows(const flows::ObservedTrajectory& traj, const WindowSpec& spec) {
  spec.validate();
  return WindowView(traj, spec.R);
}

nlohmann::json GridSpec::to_json() const {
  nlohmann::json j = {{"construction", grid_kind_name(kind)},
                      {"q_per_dim", q_per_dim},
                      {"margin_fraction", margin_fraction},
                      {"q_total", q_total},
                      {"seed", seed}};
  if (bounds) {
    nlohmann::json b = nlohmann::json::array();
    for (const auto& [lo, hi] : *bounds) b.push_back({lo, hi});
    j["bounds"] = b;
  } else {
    j["bounds"] = nullptr;
  }
  return j;
}

GridSpec GridSpec::from_json(const nlohmann::json& j) {
  GridSpec s;
  s.kind = grid_kind_from_name(j.value("construction", std::string("tensor")));
  s.q_per_dim = j.value("q_per_dim", s.q_per_dim);
  s.margin_fraction = j.value("margin_fraction", s.margin_fraction);
  s.q_total = j.value("q_total", s.q_total);
  s.seed = j.value("seed", s.seed);
  if (j.contains("bounds") && !j["bounds"].is_null()) {
    std::vector<std::pair<double, double>> b;
    for (const auto& e : j["bounds"]) b.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
    s.bounds = b;
  }
  return s;
}

void EvaluationGrid::validate() const {
  if (points.rows() < 2) throw ValidationError("evaluation grid needs at least 2 points");
  if (!points.allFinite()) throw ValidationError("evaluation grid contains non-finite points");
  if (kind == GridKind::Tensor) {
    for (const auto& axis : axes) {
      for (std::size_t a = 1; a < axis.size(); ++a) {
        if (!(axis[a] > axis[a - 1])) throw ValidationError("tensor grid axis is not strictly increasing");
      }
    }
  }
}

EvaluationGrid make_grid(const flows::ObservedTrajectory& traj, const GridSpec& spec) {
  traj.validate();
  const auto d = static_cast<Eigen::Index>(traj.dim());
  EvaluationGrid grid;
  grid.kind = spec.kind;
  switch (spec.kind) {
    case GridKind::Tensor: {
      if (spec.q_per_dim < 2) throw ValidationError("tensor grid needs at least 2 points per dimension");
      if (spec.bounds && spec.bounds->size() != traj.dim()) {
        throw ValidationError("tensor grid bounds must list one interval per dimension");
      }
      for (Eigen::Index j = 0; j < d; ++j) {
        double lo = 0.0;
        double hi = 0.0;
        if (spec.bounds) {
          std::tie(lo, hi) = (*spec.bounds)[static_cast<std::size_t>(j)];
          if (!(hi > lo)) throw ValidationError("tensor grid bounds for dimension " + std::to_string(j) + " are not ordered");
        } else {
          lo = traj.samples.col(j).minCoeff();
          hi = traj.samples.col(j).maxCoeff();
          if (!(hi > lo)) throw DataError("degenerate dimension " + std::to_string(j) + ": all samples equal");
          const double m = spec.margin_fraction * (hi - lo);
          lo -= m;
          hi += m;
        }
        std::vector<double> axis(spec.q_per_dim);
        const double step = (hi - lo) / static_cast<double>(spec.q_per_dim - 1);
        for (std::size_t a = 0; a < spec.q_per_dim; ++a) axis[a] = lo + step * static_cast<double>(a);
        axis.back() = hi;
        grid.axes.push_back(std::move(axis));
      }
      std::size_t total = 1;
      for (const auto& axis : grid.axes) total *= axis.size();
      grid.points.resize(static_cast<Eigen::Index>(total), d);
      for (std::size_t q = 0; q < total; ++q) {
        std::size_t rem = q;
        for (Eigen::Index j = d - 1; j >= 0; --j) {
          const auto& axis = grid.axes[static_cast<std::size_t>(j)];
          grid.points(static_cast<Eigen::Index>(q), j) = axis[rem % axis.size()];
          rem /= axis.size();
        }
      }
      break;
    }
    case GridKind::DataSubsample: {
      const auto n = static_cast<std::size_t>(traj.samples.rows());
      if (spec.q_total < 2 || spec.q_total > n) {
        throw ValidationError("data-subsample grid size must lie in [2, " + std::to_string(n) + "]");
      }
      std::vector<std::size_t> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
      std::mt19937_64 rng(spec.seed);
      for (std::size_t i = 0; i < spec.q_total; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(idx[i], idx[j]);
      }
      grid.points.resize(static_cast<Eigen::Index>(spec.q_total), d);
      for (std::size_t q = 0; q < spec.q_total; ++q) {
        grid.points.row(static_cast<Eigen::Index>(q)) = traj.samples.row(static_cast<Eigen::Index>(idx[q]));
      }
      break;
    }
    case GridKind::Explicit: throw ValidationError("explicit grids are built with transform_grid or loaded from disk");
  }
  grid.validate();
  return grid;
}

EvaluationGrid transform_grid(const EvaluationGrid& grid, const Matrix& A, const Vector& b) {
  if (A.rows() != A.cols() || static_cast<std::size_t>(A.rows()) != grid.dim() || b.size() != A.rows()) {
    throw ValidationError("grid transform has incompatible dimensions");
  }
  EvaluationGrid out;
  out.kind = GridKind::Explicit;
  out.points = (grid.points * A.transpose()).rowwise() + b.transpose();
  return out;
}

void KdeSpec::validate() const {
  if (bandwidth == BandwidthKind::Fixed) {
    if (fixed.empty()) throw ValidationError("fixed KDE bandwidth needs at least one value");
    for (double h : fixed) {
      if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("KDE bandwidths must be strictly positive");
    }
  }
}

nlohmann::json KdeSpec::to_json() const {
  return {{"bandwidth", bandwidth == BandwidthKind::Scott ? "scott" : "fixed"},
          {"fixed", fixed},
          {"renormalize", renormalize}};
}

KdeSpec KdeSpec::from_json(const nlohmann::json& j) {
  KdeSpec s;
  const auto kind = j.value("bandwidth", std::string("scott"));
  if (kind == "scott") {
    s.bandwidth = BandwidthKind::Scott;
  } else if (kind == "fixed") {
    s.bandwidth = BandwidthKind::Fixed;
  } else {
    throw ValidationError("unknown KDE bandwidth rule: " + kind);
  }
  s.fixed = j.value("fixed", std::vector<double>{});
  s.renormalize = j.value("renormalize", false);
  return s;
}

std::vector<double> resolve_bandwidth(const WindowView& windows, const KdeSpec& kde) {
  kde.validate();
  const std::size_t d = windows.dim();
  if (kde.bandwidth == BandwidthKind::Fixed) {
    if (kde.fixed.size() == 1) return std::vector<double>(d, kde.fixed[0]);
    if (kde.fixed.size() != d) throw ValidationError("fixed KDE bandwidth must have 1 or d entries");
    return kde.fixed;
  }
  const std::size_t R = windows.length();
  if (R < 2) throw ValidationError("Scott bandwidth needs R >= 2; use a fixed bandwidth for R = 1");
  std::vector<double> pooled(d, 0.0);
  for (std::size_t i = 0; i < windows.count(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0;
      for (std::size_t r = 0; r < R; ++r) mean += windows.sample(i, r)(static_cast<Eigen::Index>(j));
      mean /= static_cast<double>(R);
      double ss = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        const double e = windows.sample(i, r)(static_cast<Eigen::Index>(j)) - mean;
        ss += e * e;
      }
      pooled[j] += ss / static_cast<double>(R - 1);
    }
  }
  const double factor = std::pow(static_cast<double>(R), -1.0 / (static_cast<double>(d) + 4.0));
  std::vector<double> h(d);
  for (std::size_t j = 0; j < d; ++j) {
    h[j] = std::sqrt(pooled[j] / static_cast<double>(windows.count())) * factor;
    if (!(h[j] > 0.0)) {
      throw DataError("Scott bandwidth is zero in dimension " + std::to_string(j) + " (windows are constant)");
    }
  }
  return h;
}

RowVector density_row(const Matrix& window_samples, const EvaluationGrid& grid, const std::vector<double>& bandwidth,
                      bool renormalize) {
  const auto R = window_samples.rows();
  const std::size_t d = grid.dim();
  if (static_cast<std::size_t>(window_samples.cols()) != d || bandwidth.size() != d) {
    throw ValidationError("window, grid and bandwidth dimensions disagree");
  }
  const auto Q = static_cast<Eigen::Index>(grid.size());
  double norm = 1.0;
  for (double h : bandwidth) norm /= h * std::sqrt(2.0 * std::numbers::pi);

  RowVector acc = RowVector::Zero(Q);
  if (grid.kind == GridKind::Tensor && grid.axes.size() == d) {
    std::vector<std::vector<double>> profiles(d);
    for (Eigen::Index r = 0; r < R; ++r) {
      for (std::size_t j = 0; j < d; ++j) {
        const auto& axis = grid.axes[j];
        auto& p = profiles[j];
        p.resize(axis.size());
        const double y = window_samples(r, static_cast<Eigen::Index>(j));
        const double inv_h = 1.0 / bandwidth[j];
        for (std::size_t a = 0; a < axis.size(); ++a) {
          const double u = (axis[a] - y) * inv_h;
          p[a] = std::exp(-0.5 * u * u);
        }
      }
      accumulate_tensor(profiles, acc);
    }
  } else {
    std::vector<double> inv_h(d);
    for (std::size_t j = 0; j < d; ++j) inv_h[j] = 1.0 / bandwidth[j];
    for (Eigen::Index q = 0; q < Q; ++q) {
      double sum = 0.0;
      for (Eigen::Index r = 0; r < R; ++r) {
        double e = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const auto jj = static_cast<Eigen::Index>(j);
          const double u = (grid.points(q, jj) - window_samples(r, jj)) * inv_h[j];
          e += u * u;
        }
        sum += std::exp(-0.5 * e);
      }
      acc(q) = sum;
    }
  }
  acc *= norm / static_cast<double>(R);
  if (renormalize) {
    const double mass = acc.sum() / static_cast<double>(Q);
    if (mass > 0.0) acc /= mass;
  }
  return acc;
}

WindowDensityField estimate_densities(const WindowView& windows, const EvaluationGrid& grid, const KdeSpec& kde) {
  grid.validate();
  if (grid.dim() != windows.dim()) throw ValidationError("grid dimension does not match the trajectory");
  WindowDensityField field;
  field.bandwidth = resolve_bandwidth(windows, kde);
  field.grid = grid;
  field.R = windows.length();
  field.kde = kde;
  const auto N = static_cast<Eigen::Index>(windows.count());
  field.densities.resize(N, static_cast<Eigen::Index>(grid.size()));
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < N; ++i) {
    field.densities.row(i) =
        density_row(windows.window(static_cast<std::size_t>(i)), grid, field.bandwidth, kde.renormalize);
  }
  return field;
}

std::string grid_kde_hash(const EvaluationGrid& grid, const std::vector<double>& bandwidth, bool renormalize) {
  Hasher h;
  h.matrix(grid.points).reals(bandwidth).integer(renormalize ? 1 : 0);
  return h.hex();
}

void save_density_field(const std::filesystem::path& stem, const WindowDensityField& field) {
  io::write_matrix(stem.string() + ".bin", field.densities);
  io::write_matrix(stem.string() + ".grid.bin", field.grid.points);
  io::write_json(stem.string() + ".json", {{"N", field.count()},
                                           {"Q_total", field.grid.size()},
                                           {"grid", {{"construction", grid_kind_name(field.grid.kind)},
                                                     {"axes", field.grid.axes}}},
                                           {"kde", field.kde.to_json()},
                                           {"bandwidth", field.bandwidth},
                                           {"window", {{"R", field.R}}},
                                           {"grid_kde_hash", grid_kde_hash(field.grid, field.bandwidth,
                                                                           field.kde.renormalize)}});
}

WindowDensityField load_density_field(const std::filesystem::path& stem) {
  WindowDensityField field;
  field.densities = io::read_matrix(stem.string() + ".bin");
  field.grid.points = io::read_matrix(stem.string() + ".grid.bin");
  const auto meta = io::read_json(stem.string() + ".json");
  field.grid.kind = grid_kind_from_name(meta.at("grid").at("construction").get<std::string>());
  field.grid.axes = meta.at("grid").at("axes").get<std::vector<std::vector<double>>>();
  field.kde = KdeSpec::from_json(meta.at("kde"));
  field.bandwidth = meta.at("bandwidth").get<std::vector<double>>();
  field.R = meta.at("window").at("R").get<std::size_t>();
  if (meta.at("grid_kde_hash").get<std::string>() !=
      grid_kde_hash(field.grid, field.bandwidth, field.kde.renormalize)) {
    throw DataError("density field sidecar does not match its grid/bandwidth: " + stem.string());
  }
  return field;
}

}  // namespace tempat::measures
