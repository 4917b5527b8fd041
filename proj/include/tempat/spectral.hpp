#pragma once

#include "tempat/geometry.hpp"
#include "tempat/linalg.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

/// Gaussian kernel on window measures, the alpha = 1 diffusion-maps
/// normalisation and the Laplacian eigenbasis.
namespace tempat::spectral {

/// Main: G = exp(-d2 / epsilon). Appendix: the configured value is the
/// width eps~ with epsilon = 2 eps~^2.
enum class EpsilonConvention { Main, Appendix };

struct KernelSpec {
  double epsilon = 1.0;
  EpsilonConvention convention = EpsilonConvention::Main;

  /// The bandwidth in the exp(-d2 / epsilon) form.
  double canonical_epsilon() const;
  void validate() const;
  nlohmann::json to_json() const;
  static KernelSpec from_json(const nlohmann::json& j);
};

/// G_ij = exp(-d2_ij / epsilon) on kept edges, 0 on truncated ones, 1 on the
/// diagonal.
Matrix kernel_matrix(const geometry::DistanceMatrix& dm, const KernelSpec& spec);

struct Normalization {
  Vector q;        // G 1
  Matrix G_tilde;  // G_ij / (q_i q_j)
  Vector v;        // G~ 1
  Matrix H;        // V^-1 G~, row-stochastic
  Matrix H_tilde;  // V^-1/2 G~ V^-1/2, symmetric
};

Normalization normalize(const Matrix& G);

/// Same chain, keeping only q, v and H~ (and reusing G's storage).
struct SymmetricNormalization {
  Vector q;
  Vector v;
  Matrix H_tilde;
};

SymmetricNormalization normalize_symmetric(Matrix G);

struct EigenOptions {
  std::size_t dense_max_n = 4000;  // above this, thick-restart Lanczos
  double tolerance = 1e-10;
  std::size_t max_iterations = 0;  // 0 means 10 N matrix-vector products
  std::uint64_t seed = 0;
};

struct SpectralBasis {
  Vector lambda;  // ascending, lambda_1 ~ 0
  Matrix psi;     // N x M, (1/N) psi^T psi = I
  Matrix phi;     // N x M, phi = v^-1/2 psi
  Vector v;
  Vector q;
  KernelSpec kernel;
  std::string provenance;  // hash of the distance matrix
  std::string solver;

  std::size_t N() const { return static_cast<std::size_t>(psi.rows()); }
  std::size_t M() const { return static_cast<std::size_t>(psi.cols()); }
};

/// Leading M eigenpairs of H~ (largest 1 - lambda). Each psi_l has its
/// largest-magnitude entry positive (lowest index on ties).
SpectralBasis eigendecompose(const Matrix& H_tilde, const Vector& v, const Vector& q, std::size_t M,
                             const EigenOptions& options = {});

/// Thick-restart Lanczos with full reorthogonalisation for the `count`
/// largest eigenpairs of a symmetric matrix. Returns eigenvalues in
/// descending order and unit eigenvectors as columns.
std::pair<Vector, Eigen::MatrixXd> lanczos_largest(const Matrix& A, std::size_t count, const EigenOptions& options);

/// Dense LAPACK solve for the `count` largest eigenpairs, same conventions.
std::pair<Vector, Eigen::MatrixXd> dense_largest(const Matrix& A, std::size_t count);

void save_basis(const std::filesystem::path& stem, const SpectralBasis& basis);
SpectralBasis load_basis(const std::filesystem::path& stem);

}  // namespace tempat::spectral
