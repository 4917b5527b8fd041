#include "tempat/spectral.hpp"

#include "tempat/error.hpp"
#include "tempat/io.hpp"

#include <Eigen/Eigenvalues>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace tempat::spectral {

namespace {

void check_positive_sums(const Vector& sums, const char* what) {
  for (Eigen::Index i = 0; i < sums.size(); ++i) {
    if (!(sums(i) > 0.0) || !std::isfinite(sums(i))) {
      throw NumericalError(std::string("isolated vertex ") + std::to_string(i) + ": " + what +
                           " is not positive; increase k or epsilon");
    }
  }
}

Vector row_sums(const Matrix& m) {
  Vector out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    const double* row = m.row(i).data();
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += row[j];
    out(i) = s;
  }
  return out;
}

Vector row_sums_off_self(const Matrix& m) {
  Vector out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j != i) s += m(i, j);
    }
    out(i) = s;
  }
  return out;
}

}  // namespace

double KernelSpec::canonical_epsilon() const {
  return convention == EpsilonConvention::Main ? epsilon : 2.0 * epsilon * epsilon;
}

void KernelSpec::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ValidationError("kernel epsilon must be positive");
}

nlohmann::json KernelSpec::to_json() const {
  return {{"epsilon", epsilon}, {"convention", convention == EpsilonConvention::Main ? "main" : "appendix"}};
}

KernelSpec KernelSpec::from_json(const nlohmann::json& j) {
  KernelSpec s;
  s.epsilon = j.value("epsilon", 1.0);
  const auto c = j.value("convention", std::string("main"));
  if (c == "main") {
    s.convention = EpsilonConvention::Main;
  } else if (c == "appendix") {
    s.convention = EpsilonConvention::Appendix;
  } else {
    throw ValidationError("unknown epsilon convention: " + c);
  }
  return s;
}

Matrix kernel_matrix(const geometry::DistanceMatrix& dm, const KernelSpec& spec) {
  spec.validate();
  const double eps = spec.canonical_epsilon();
  const auto N = static_cast<Eigen::Index>(dm.size());
  Matrix G(N, N);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      if (i == j) {
        G(i, j) = 1.0;
      } else {
        G(i, j) = dm.kept(i, j) ? std::exp(-dm.d2(i, j) / eps) : 0.0;
      }
    }
  }
  return G;
}

Normalization normalize(const Matrix& G) {
  if (G.rows() != G.cols()) throw ValidationError("kernel matrix must be square");
  Normalization n;
  n.q = row_sums(G);
  check_positive_sums(n.q, "kernel row sum");
  // A vertex whose only weight is its own self-loop has no neighbours.
  const Vector off = row_sums_off_self(G);
  for (Eigen::Index i = 0; i < off.size(); ++i) {
    if (!(off(i) > 0.0) && G.rows() > 1) {
      throw NumericalError("isolated vertex " + std::to_string(i) + ": no kernel weight to other windows; increase k or epsilon");
    }
  }
  const auto N = G.rows();
  n.G_tilde.resize(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) n.G_tilde(i, j) = G(i, j) / (n.q(i) * n.q(j));
  }
  n.v = row_sums(n.G_tilde);
  check_positive_sums(n.v, "density vector entry");
  const Vector s = n.v.array().sqrt();
  n.H.resize(N, N);
  n.H_tilde.resize(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      n.H(i, j) = n.G_tilde(i, j) / n.v(i);
      n.H_tilde(i, j) = n.G_tilde(i, j) / (s(i) * s(j));
    }
  }
  return n;
}

SymmetricNormalization normalize_symmetric(Matrix G) {
  if (G.rows() != G.cols()) throw ValidationError("kernel matrix must be square");
  SymmetricNormalization n;
  n.q = row_sums(G);
  check_positive_sums(n.q, "kernel row sum");
  const Vector off = row_sums_off_self(G);
  for (Eigen::Index i = 0; i < off.size(); ++i) {
    if (!(off(i) > 0.0) && G.rows() > 1) {
      throw NumericalError("isolated vertex " + std::to_string(i) + ": no kernel weight to other windows; increase k or epsilon");
    }
  }
  const auto N = G.rows();
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) G(i, j) = G(i, j) / (n.q(i) * n.q(j));
  }
  n.v = row_sums(G);
  check_positive_sums(n.v, "density vector entry");
  const Vector s = n.v.array().sqrt();
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) G(i, j) = G(i, j) / (s(i) * s(j));
  }
  n.H_tilde = std::move(G);
  return n;
}

std::pair<Vector, Eigen::MatrixXd> dense_largest(const Matrix& A, std::size_t count) {
  const auto n = static_cast<lapack_int>(A.rows());
  const auto m_want = static_cast<lapack_int>(count);
  // Symmetric, so the row-major buffer is also the column-major matrix.
  std::vector<double> a(A.data(), A.data() + A.size());
  std::vector<double> w(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) * static_cast<std::size_t>(m_want));
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(std::max(m_want, lapack_int{1})));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, a.data(), n, 0.0, 0.0, n - m_want + 1, n,
                                         0.0, &found, w.data(), z.data(), n, isuppz.data());
  if (info != 0 || found != m_want) {
    throw NumericalError("dense eigensolver failed (info " + std::to_string(info) + ")");
  }
  // LAPACK returns ascending order; flip to descending.
  Vector values(m_want);
  Eigen::MatrixXd vectors(n, m_want);
  for (lapack_int c = 0; c < m_want; ++c) {
    const lapack_int src = m_want - 1 - c;
    values(c) = w[static_cast<std::size_t>(src)];
    vectors.col(c) = Eigen::Map<const Eigen::VectorXd>(z.data() + static_cast<std::size_t>(src) * static_cast<std::size_t>(n), n);
  }
  return {values, vectors};
}

std::pair<Vector, Eigen::MatrixXd> lanczos_largest(const Matrix& A, std::size_t count, const EigenOptions& options) {
  const auto n = A.rows();
  const auto want = static_cast<Eigen::Index>(count);
  if (want < 1 || want > n) throw ValidationError("requested eigenpair count out of range");
  const Eigen::Index m = std::min<Eigen::Index>(n, std::max<Eigen::Index>(2 * want + 20, want + 40));
  const std::size_t max_products = options.max_iterations > 0 ? options.max_iterations : 10 * static_cast<std::size_t>(n);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_unit_orthogonal = [&](const Eigen::MatrixXd& V, Eigen::Index cols) {
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = normal(rng);
    for (int pass = 0; pass < 2; ++pass) r -= V.leftCols(cols) * (V.leftCols(cols).transpose() * r);
    return Eigen::VectorXd(r / r.norm());
  };

  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(n, m + 1);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  V.col(0) = random_unit_orthogonal(V, 0);
  Eigen::Index kept = 0;
  std::size_t products = 0;

  while (true) {
    double beta = 0.0;
    for (Eigen::Index j = kept; j < m; ++j) {
      Eigen::VectorXd w = A * V.col(j);
      ++products;
      Eigen::VectorXd h = V.leftCols(j + 1).transpose() * w;
      w -= V.leftCols(j + 1) * h;
      const Eigen::VectorXd h2 = V.leftCols(j + 1).transpose() * w;
      w -= V.leftCols(j + 1) * h2;
      h += h2;
      T.col(j).head(j + 1) = h;
      T.row(j).head(j + 1) = h.transpose();
      beta = w.norm();
      if (j + 1 < m || m < n) {
        if (beta > 1e-14 * std::max(1.0, std::abs(T(j, j)))) {
          V.col(j + 1) = w / beta;
        } else {
          // Invariant subspace found; continue from a fresh direction.
          beta = 0.0;
          if (j + 1 < n) V.col(j + 1) = random_unit_orthogonal(V, j + 1);
        }
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(T);
    if (small.info() != Eigen::Success) throw NumericalError("Lanczos projected eigenproblem failed");
    // Descending order of Ritz values.
    const Eigen::VectorXd theta = small.eigenvalues().reverse();
    const Eigen::MatrixXd Y = small.eigenvectors().rowwise().reverse();

    bool converged = true;
    for (Eigen::Index i = 0; i < want; ++i) {
      const double residual = std::abs(beta * Y(m - 1, i));
      if (residual > options.tolerance * std::max(1.0, std::abs(theta(i)))) converged = false;
    }
    if (converged || m == n) {
      Vector values = theta.head(want);
      Eigen::MatrixXd vectors = V.leftCols(m) * Y.leftCols(want);
      for (Eigen::Index c = 0; c < want; ++c) vectors.col(c).normalize();
      return {values, vectors};
    }
    if (products >= max_products) {
      throw NumericalError("Lanczos did not converge within " + std::to_string(max_products) + " iterations");
    }

    const Eigen::Index keep = std::min<Eigen::Index>(m - 1, want + (m - want) / 2);
    const Eigen::VectorXd f = V.col(m);
    const Eigen::MatrixXd restarted = V.leftCols(m) * Y.leftCols(keep);
    V.leftCols(keep) = restarted;
    T.setZero();
    for (Eigen::Index i = 0; i < keep; ++i) T(i, i) = theta(i);
    V.col(keep) = f;
    kept = keep;
  }
}

SpectralBasis eigendecompose(const Matrix& H_tilde, const Vector& v, const Vector& q, std::size_t M,
                             const EigenOptions& options) {
  const auto N = H_tilde.rows();
  if (H_tilde.cols() != N || v.size() != N || q.size() != N) throw ValidationError("spectral inputs have mismatched sizes");
  if (M < 1 || static_cast<Eigen::Index>(M) > N) throw ValidationError("M must lie in [1, N]");
  double asym = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = i + 1; j < N; ++j) asym = std::max(asym, std::abs(H_tilde(i, j) - H_tilde(j, i)));
  }
  if (asym > 1e-12) throw ValidationError("H~ is not symmetric (max asymmetry " + io::format_real(asym) + ")");

  SpectralBasis basis;
  std::pair<Vector, Eigen::MatrixXd> eig;
  if (static_cast<std::size_t>(N) <= options.dense_max_n) {
    eig = dense_largest(H_tilde, M);
    basis.solver = "dense";
  } else {
    eig = lanczos_largest(H_tilde, M, options);
    basis.solver = "lanczos";
  }
  const double scale = std::sqrt(static_cast<double>(N));
  basis.lambda.resize(static_cast<Eigen::Index>(M));
  basis.psi.resize(N, static_cast<Eigen::Index>(M));
  for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(M); ++l) {
    // The spectrum of H lies in [-1, 1] exactly, so 1 - mu below zero is rounding.
    basis.lambda(l) = std::max(0.0, 1.0 - eig.first(l));
    Eigen::VectorXd u = eig.second.col(l) * scale;
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < N; ++i) {
      if (std::abs(u(i)) > std::abs(u(arg))) arg = i;
    }
    if (u(arg) < 0.0) u = -u;
    basis.psi.col(l) = u;
  }
  basis.phi = basis.psi.array().colwise() / v.array().sqrt();
  basis.v = v;
  basis.q = q;
  return basis;
}

void save_basis(const std::filesystem::path& stem, const SpectralBasis& basis) {
  io::write_matrix(stem.string() + ".psi.bin", basis.psi);
  io::write_matrix(stem.string() + ".phi.bin", basis.phi);
  Matrix vq(basis.v.size(), 2);
  vq.col(0) = basis.v;
  vq.col(1) = basis.q;
  io::write_matrix(stem.string() + ".vq.bin", vq);
  std::vector<double> lambda(basis.lambda.data(), basis.lambda.data() + basis.lambda.size());
  io::write_json(stem.string() + ".json", {{"M", basis.M()},
                                           {"N", basis.N()},
                                           {"epsilon", basis.kernel.epsilon},
                                           {"convention", basis.kernel.to_json().at("convention")},
                                           {"eigenvalues", lambda},
                                           {"solver", basis.solver},
                                           {"provenance", basis.provenance}});
}

SpectralBasis load_basis(const std::filesystem::path& stem) {
  SpectralBasis b;
  b.psi = io::read_matrix(stem.string() + ".psi.bin");
  b.phi = io::read_matrix(stem.string() + ".phi.bin");
  const Matrix vq = io::read_matrix(stem.string() + ".vq.bin");
  b.v = vq.col(0);
  b.q = vq.col(1);
  const auto meta = io::read_json(stem.string() + ".json");
  const auto lambda = meta.at("eigenvalues").get<std::vector<double>>();
  b.lambda = Eigen::Map<const Vector>(lambda.data(), static_cast<Eigen::Index>(lambda.size()));
  b.kernel = KernelSpec::from_json({{"epsilon", meta.at("epsilon")}, {"convention", meta.at("convention")}});
  b.solver = meta.value("solver", std::string());
  b.provenance = meta.value("provenance", std::string());
  return b;
}

}  // namespace tempat::spectral
