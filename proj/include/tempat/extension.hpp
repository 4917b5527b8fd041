#pragma once

#include "tempat/geometry.hpp"
#include "tempat/linalg.hpp"
#include "tempat/measures.hpp"
#include "tempat/spectral.hpp"

#include <string>

/// Out-of-sample (Nystrom) extension of q, v and the eigenfunctions.
namespace tempat::extension {

/// Consistent: phi_l(pi) = (1 - lambda_l)^-1 sum_i h(pi, p_i) phi_{l,i} with
/// h = k~ / v(pi), which reproduces training values exactly.
/// PaperLiteral: lambda_l^-1/2 (1/N) sum_i h~(pi, p_i) phi_{l,i} with the
/// 1/N-averaged q and v.
enum class Prefactor { Consistent, PaperLiteral };

/// Frozen training state needed to evaluate the basis on new windows.
struct ExtensionContext {
  Matrix sqrt_densities;  // training rows, square roots
  measures::EvaluationGrid grid;
  std::vector<double> bandwidth;
  bool renormalize = false;
  std::size_t R = 1;
  spectral::SpectralBasis basis;
  spectral::KernelSpec kernel;
  geometry::Sparsity sparsity = geometry::Sparsity::Dense;
  std::size_t k = 0;
  std::vector<double> knn_radius;
  double lam_floor = 1e-10;
  Prefactor prefactor = Prefactor::Consistent;
  std::string grid_kde_hash;

  static ExtensionContext build(const measures::WindowDensityField& field, const geometry::DistanceMatrix& dm,
                                const spectral::SpectralBasis& basis, const spectral::KernelSpec& kernel);

  std::size_t N() const { return static_cast<std::size_t>(sqrt_densities.rows()); }
  /// Throws unless grid and bandwidths hash to the training fingerprint.
  void verify_grid(const measures::EvaluationGrid& grid, const std::vector<double>& bandwidth, bool renormalize) const;
};

/// KDE of a new window on the training grid with the training bandwidths.
RowVector extend_density(const Matrix& window_samples, const ExtensionContext& ctx);

/// Kernel quantities of one new measure against the training set.
struct KernelRow {
  Vector k;        // k_H(pi, p_i), zero on truncated edges
  Vector k_tilde;  // k / (q(pi) q_i)
  double q = 0.0;  // sum_i k
  double v = 0.0;  // sum_i k_tilde
};

KernelRow kernel_row(const RowVector& density, const ExtensionContext& ctx);

/// phi_l(pi) for l in [1, M] (one-based).
double extend_eigenfunction(const RowVector& density, const ExtensionContext& ctx, std::size_t l);

/// phi_1..phi_count(pi) at once.
Vector extend_eigenfunctions(const RowVector& density, const ExtensionContext& ctx, std::size_t count);

/// sum_{l <= M'} c_l v(pi)^1/2 phi_l(pi) for each row of `densities`.
Matrix extend_reconstruction(const Matrix& densities, const ExtensionContext& ctx, const Matrix& coefficients,
                             std::size_t truncation);

}  // namespace tempat::extension
