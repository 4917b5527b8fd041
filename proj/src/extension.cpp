#include "tempat/extension.hpp"

#include "tempat/error.hpp"

#include <cmath>

namespace tempat::extension {

namespace {

constexpr double kSupportExponent = 30.0;

void check_index(const ExtensionContext& ctx, std::size_t l) {
  if (l < 1 || l > ctx.basis.M()) {
    throw ValidationError("eigenfunction index " + std::to_string(l) + " outside [1, " + std::to_string(ctx.basis.M()) + "]");
  }
}

double prefactor(const ExtensionContext& ctx, std::size_t l) {
  const double lambda = ctx.basis.lambda(static_cast<Eigen::Index>(l - 1));
  if (ctx.prefactor == Prefactor::Consistent) {
    const double mu = 1.0 - lambda;
    if (std::abs(mu) < ctx.lam_floor) {
      throw NumericalError("eigenfunction " + std::to_string(l) + " has 1 - lambda = " + std::to_string(mu) +
                           " below the extension floor");
    }
    return 1.0 / mu;
  }
  if (!(lambda > ctx.lam_floor)) {
    throw NumericalError("eigenfunction " + std::to_string(l) + " has lambda below the extension floor");
  }
  return 1.0 / std::sqrt(lambda);
}

}  // namespace

ExtensionContext ExtensionContext::build(const measures::WindowDensityField& field, const geometry::DistanceMatrix& dm,
                                         const spectral::SpectralBasis& basis, const spectral::KernelSpec& kernel) {
  if (field.count() != dm.size() || dm.size() != basis.N()) {
    throw ValidationError("training densities, distances and basis disagree on N");
  }
  ExtensionContext ctx;
  ctx.sqrt_densities = geometry::sqrt_densities(field.densities);
  ctx.grid = field.grid;
  ctx.bandwidth = field.bandwidth;
  ctx.renormalize = field.kde.renormalize;
  ctx.R = field.R;
  ctx.basis = basis;
  ctx.kernel = kernel;
  ctx.sparsity = dm.sparsity;
  ctx.k = dm.k;
  ctx.knn_radius = dm.knn_radius;
  ctx.grid_kde_hash = measures::grid_kde_hash(field.grid, field.bandwidth, field.kde.renormalize);
  return ctx;
}

void ExtensionContext::verify_grid(const measures::EvaluationGrid& g, const std::vector<double>& h, bool renorm) const {
  if (measures::grid_kde_hash(g, h, renorm) != grid_kde_hash) {
    throw ValidationError("grid or KDE bandwidth differs from the training context");
  }
}

RowVector extend_density(const Matrix& window_samples, const ExtensionContext& ctx) {
  if (static_cast<std::size_t>(window_samples.rows()) != ctx.R) {
    throw ValidationError("new window has " + std::to_string(window_samples.rows()) + " samples; training used R = " +
                          std::to_string(ctx.R));
  }
  if (static_cast<std::size_t>(window_samples.cols()) != ctx.grid.dim()) {
    throw ValidationError("new window dimension does not match the training observations");
  }
  return measures::density_row(window_samples, ctx.grid, ctx.bandwidth, ctx.renormalize);
}

KernelRow kernel_row(const RowVector& density, const ExtensionContext& ctx) {
  if (density.size() != ctx.sqrt_densities.cols()) throw ValidationError("density row does not live on the training grid");
  if ((density.array() < 0.0).any()) throw ValidationError("density row has negative entries");
  const RowVector s = density.array().sqrt();
  const Vector d2 = geometry::distances_to_rows(s, ctx.sqrt_densities);
  const auto N = static_cast<Eigen::Index>(ctx.N());
  const double eps = ctx.kernel.canonical_epsilon();

  std::vector<bool> keep(static_cast<std::size_t>(N), true);
  if (ctx.sparsity == geometry::Sparsity::Knn) {
    // The new point lists its k + 1 nearest windows (the analogue of the
    // diagonal plus k neighbours) and is listed by window i whenever it
    // falls inside i's k-th neighbour radius.
    std::fill(keep.begin(), keep.end(), false);
    for (std::size_t j : geometry::k_smallest(d2.transpose(), ctx.k + 1)) keep[j] = true;
    for (Eigen::Index i = 0; i < N; ++i) {
      if (d2(i) <= ctx.knn_radius[static_cast<std::size_t>(i)]) keep[static_cast<std::size_t>(i)] = true;
    }
  }

  KernelRow row;
  row.k.resize(N);
  for (Eigen::Index i = 0; i < N; ++i) row.k(i) = keep[static_cast<std::size_t>(i)] ? std::exp(-d2(i) / eps) : 0.0;
  double q = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) q += row.k(i);
  row.q = q;
  if (q < static_cast<double>(N) * std::exp(-kSupportExponent)) {
    throw NumericalError("new window is outside the support of the training measures (q = " + std::to_string(q) + ")");
  }
  row.k_tilde.resize(N);
  double v = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    row.k_tilde(i) = row.k(i) / (q * ctx.basis.q(i));
    v += row.k_tilde(i);
  }
  row.v = v;
  if (!(v > 0.0)) throw NumericalError("extended density vector is zero");
  return row;
}

namespace {

struct Quadrature {
  Vector weights;  // phi_l(pi) = prefactor_l * sum_i weights_i phi_{l,i}
  double v = 0.0;
};

Quadrature quadrature(const RowVector& density, const ExtensionContext& ctx) {
  const KernelRow row = kernel_row(density, ctx);
  const auto N = static_cast<Eigen::Index>(ctx.N());
  const double Nd = static_cast<double>(N);
  Quadrature out;
  out.v = row.v;
  out.weights.resize(N);
  if (ctx.prefactor == Prefactor::Consistent) {
    for (Eigen::Index i = 0; i < N; ++i) out.weights(i) = row.k_tilde(i) / row.v;
  } else {
    // 1/N-averaged conventions: q^ = q/N, k~^ = N^2 k~, v^ = N v.
    const double v_hat = Nd * row.v;
    for (Eigen::Index i = 0; i < N; ++i) {
      const double kt_hat = Nd * Nd * row.k_tilde(i);
      const double vi_hat = Nd * ctx.basis.v(i);
      out.weights(i) = kt_hat / (std::sqrt(v_hat) * std::sqrt(vi_hat)) / Nd;
    }
  }
  return out;
}

double evaluate(const Quadrature& quad, const ExtensionContext& ctx, std::size_t l) {
  // phi_1 is the constant eigenvector; no quadrature needed.
  if (l == 1) return ctx.basis.phi.col(0).mean();
  const auto col = static_cast<Eigen::Index>(l - 1);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < quad.weights.size(); ++i) acc += quad.weights(i) * ctx.basis.phi(i, col);
  return prefactor(ctx, l) * acc;
}

}  // namespace

Vector extend_eigenfunctions(const RowVector& density, const ExtensionContext& ctx, std::size_t count) {
  if (count > ctx.basis.M()) throw ValidationError("more eigenfunctions requested than the basis holds");
  const Quadrature quad = quadrature(density, ctx);
  Vector out(static_cast<Eigen::Index>(count));
  for (std::size_t l = 1; l <= count; ++l) out(static_cast<Eigen::Index>(l - 1)) = evaluate(quad, ctx, l);
  return out;
}

double extend_eigenfunction(const RowVector& density, const ExtensionContext& ctx, std::size_t l) {
  check_index(ctx, l);
  return evaluate(quadrature(density, ctx), ctx, l);
}

Matrix extend_reconstruction(const Matrix& densities, const ExtensionContext& ctx, const Matrix& coefficients,
                             std::size_t truncation) {
  if (truncation > ctx.basis.M() || static_cast<Eigen::Index>(truncation) > coefficients.rows()) {
    throw ValidationError("truncation exceeds the number of basis vectors");
  }
  Matrix out = Matrix::Zero(densities.rows(), coefficients.cols());
  if (truncation == 0) return out;
  for (Eigen::Index p = 0; p < densities.rows(); ++p) {
    const Quadrature quad = quadrature(densities.row(p), ctx);
    const double sv = std::sqrt(quad.v);
    for (std::size_t l = 1; l <= truncation; ++l) {
      out.row(p) += coefficients.row(static_cast<Eigen::Index>(l - 1)) * (sv * evaluate(quad, ctx, l));
    }
  }
  return out;
}

}  // namespace tempat::extension
