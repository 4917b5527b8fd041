#include "support.hpp"

#include "tempat/error.hpp"
#include "tempat/geometry.hpp"
#include "tempat/spectral.hpp"

#include <doctest.h>

#include <cmath>

using namespace tempat;
using namespace tempat::spectral;

namespace {

geometry::DistanceMatrix random_distances(Eigen::Index n, std::uint64_t seed) {
  measures::WindowDensityField f;
  f.densities = testing::random_matrix(n, 24, seed, 0.0, 2.0);
  return geometry::pairwise_distances(f);
}

SpectralBasis basis_of(const geometry::DistanceMatrix& dm, double eps, std::size_t M, EigenOptions opts = {}) {
  const KernelSpec spec{eps};
  const auto norm = normalize(kernel_matrix(dm, spec));
  auto b = eigendecompose(norm.H_tilde, norm.v, norm.q, M, opts);
  b.kernel = spec;
  return b;
}

}  // namespace

TEST_CASE("two-point kernel has a closed-form spectrum") {
  geometry::DistanceMatrix dm;
  dm.d2.resize(2, 2);
  dm.d2 << 0.0, 0.3, 0.3, 0.0;
  const double a = std::exp(-0.3 / 0.5);
  const auto G = kernel_matrix(dm, KernelSpec{0.5});
  CHECK(G(0, 1) == doctest::Approx(a).epsilon(1e-15));
  CHECK(G(0, 0) == 1.0);
  const auto n = normalize(G);
  CHECK(n.q(0) == doctest::Approx(1.0 + a).epsilon(1e-15));
  CHECK(n.v(1) == doctest::Approx(1.0 / (1.0 + a)).epsilon(1e-14));
  const auto b = eigendecompose(n.H_tilde, n.v, n.q, 2);
  CHECK(b.lambda(0) == doctest::Approx(0.0));
  CHECK(b.lambda(1) == doctest::Approx(2.0 * a / (1.0 + a)).epsilon(1e-13));
  CHECK(b.psi(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(b.psi(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(b.psi(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(b.psi(1, 1) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(b.phi(1, 1) == doctest::Approx(-std::sqrt(1.0 + a)).epsilon(1e-14));
}

TEST_CASE("appendix epsilon convention") {
  const KernelSpec k{0.5, EpsilonConvention::Appendix};
  CHECK(k.canonical_epsilon() == 0.5);
  const KernelSpec k2{0.2, EpsilonConvention::Appendix};
  CHECK(k2.canonical_epsilon() == doctest::Approx(0.08));
  CHECK_THROWS_AS(KernelSpec{0.0}.validate(), ValidationError);
}

TEST_CASE("truncated edges vanish from the kernel") {
  const auto dm = geometry::knn_truncate(random_distances(12, 3), 3);
  const auto G = kernel_matrix(dm, KernelSpec{1.0});
  for (Eigen::Index i = 0; i < 12; ++i) {
    for (Eigen::Index j = 0; j < 12; ++j) {
      if (!dm.kept(i, j)) CHECK(G(i, j) == 0.0);
      else CHECK(G(i, j) > 0.0);
    }
  }
}

TEST_CASE("normalisation chain contracts") {
  const auto dm = random_distances(40, 5);
  const auto n = normalize(kernel_matrix(dm, KernelSpec{0.8}));
  CHECK((n.H.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK((n.H_tilde - n.H_tilde.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
  const auto s = normalize_symmetric(kernel_matrix(dm, KernelSpec{0.8}));
  CHECK((s.H_tilde - n.H_tilde).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(s.v == n.v);
}

TEST_CASE("an isolated vertex is reported") {
  geometry::DistanceMatrix dm;
  dm.d2.resize(3, 3);
  dm.d2 << 0, 1e6, 1e6, 1e6, 0, 0.1, 1e6, 0.1, 0;
  try {
    normalize(kernel_matrix(dm, KernelSpec{1.0}));
    FAIL("expected an error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("isolated vertex 0") != std::string::npos);
  }
}

TEST_CASE("eigenbasis contracts on a dense problem") {
  const auto dm = random_distances(80, 7);
  const KernelSpec spec{0.5};
  const auto n = normalize(kernel_matrix(dm, spec));
  const auto b = eigendecompose(n.H_tilde, n.v, n.q, 10);
  CHECK(b.lambda(0) <= 1e-12);
  for (Eigen::Index l = 1; l < 10; ++l) CHECK(b.lambda(l) >= b.lambda(l - 1));
  const Matrix gram = b.psi.transpose() * b.psi / 80.0;
  CHECK((gram - Matrix::Identity(10, 10)).cwiseAbs().maxCoeff() <= 1e-10);
  const Matrix Hphi = n.H * b.phi;
  for (Eigen::Index l = 0; l < 10; ++l) {
    CHECK((Hphi.col(l) - (1.0 - b.lambda(l)) * b.phi.col(l)).cwiseAbs().maxCoeff() <= 1e-10);
  }
  const Vector root_v = n.v.array().sqrt();
  const Vector expected = root_v * std::sqrt(80.0) / root_v.norm();
  CHECK((b.psi.col(0) - expected).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(b.phi.col(0).maxCoeff() - b.phi.col(0).minCoeff() <= 1e-10);
  for (Eigen::Index l = 0; l < 10; ++l) {
    Eigen::Index arg = 0;
    b.psi.col(l).cwiseAbs().maxCoeff(&arg);
    CHECK(b.psi(arg, l) > 0.0);
  }
}

TEST_CASE("Lanczos agrees with the dense solver") {
  const auto dm = geometry::knn_truncate(random_distances(150, 11), 30);
  const auto dense = basis_of(dm, 0.5, 8);
  EigenOptions opts;
  opts.dense_max_n = 10;
  const auto lanczos = basis_of(dm, 0.5, 8, opts);
  CHECK(dense.solver == "dense");
  CHECK(lanczos.solver == "lanczos");
  CHECK((dense.lambda - lanczos.lambda).cwiseAbs().maxCoeff() <= 1e-9);
  for (Eigen::Index l = 0; l < 8; ++l) {
    CHECK((dense.psi.col(l) - lanczos.psi.col(l)).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("rescaling the distances with epsilon leaves the basis unchanged") {
  const auto dm = random_distances(50, 13);
  geometry::DistanceMatrix scaled = dm;
  scaled.d2 *= 3.0;
  const auto a = basis_of(dm, 0.4, 6);
  const auto b = basis_of(scaled, 1.2, 6);
  CHECK((a.lambda - b.lambda).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((a.psi - b.psi).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("basis persistence") {
  auto b = basis_of(random_distances(20, 2), 0.5, 5);
  b.provenance = "abc";
  const auto dir = testing::scratch_dir("basis");
  save_basis(dir / "b", b);
  const auto back = load_basis(dir / "b");
  CHECK(back.psi == b.psi);
  CHECK(back.phi == b.phi);
  CHECK(back.lambda == b.lambda);
  CHECK(back.v == b.v);
  CHECK(back.q == b.q);
  CHECK(back.kernel.epsilon == 0.5);
  CHECK(back.provenance == "abc");
  CHECK_THROWS_AS(eigendecompose(Matrix::Identity(3, 3), Vector::Ones(3), Vector::Ones(3), 4), ValidationError);
}
