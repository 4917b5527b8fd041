#include "support.hpp"

#include "tempat/error.hpp"
#include "tempat/flows.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

using namespace tempat;
using namespace tempat::flows;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double angle_gap(double a, double b) {
  double d = std::fmod(a - b, kTwoPi);
  if (d > std::numbers::pi) d -= kTwoPi;
  if (d < -std::numbers::pi) d += kTwoPi;
  return std::abs(d);
}

double max_angle_error(const Matrix& a, const Matrix& b) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) e = std::max(e, angle_gap(a(i, j), b(i, j)));
  }
  return e;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("torus Model I with beta = 1 follows the linear flow") {
  FlowSpec spec = FlowSpec::with_defaults(FlowKind::TorusModelI);
  spec.params["beta"] = 1.0;
  spec.initial_state = {0.3, 1.1};
  spec.n_samples = 400;
  const Matrix states = integrate_flow(spec);
  const double zeta = spec.param("zeta");
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    const double t = static_cast<double>(i) * spec.dt;
    CHECK(angle_gap(states(i, 0), 0.3 + t) <= 1e-10);
    CHECK(angle_gap(states(i, 1), 1.1 + zeta * t) <= 1e-10);
  }
}

TEST_CASE("RK4 error shrinks by at least 12 when the substep halves") {
  FlowSpec spec = FlowSpec::with_defaults(FlowKind::TorusModelI);
  spec.dt = 0.2;
  spec.n_samples = 60;
  spec.initial_state = {0.4, 2.0};
  auto run = [&](std::size_t substeps) {
    FlowSpec s = spec;
    s.n_substeps = substeps;
    return integrate_flow(s);
  };
  const Matrix coarse = run(2);
  const Matrix fine = run(4);
  const Matrix reference = run(4 * 16);
  const double e_coarse = max_angle_error(coarse, reference);
  const double e_fine = max_angle_error(fine, reference);
  REQUIRE(e_fine > 0.0);
  CHECK(e_coarse / e_fine >= 12.0);
}

TEST_CASE("torus trajectories stay in [0, 2 pi)") {
  for (auto kind : {FlowKind::TorusModelI, FlowKind::TorusModelII, FlowKind::OxtobyTorus}) {
    FlowSpec spec = FlowSpec::with_defaults(kind);
    spec.n_samples = 3000;
    const Matrix s = integrate_flow(spec);
    CHECK(s.minCoeff() >= 0.0);
    CHECK(s.maxCoeff() < kTwoPi);
  }
}

TEST_CASE("Lorenz 63 equilibrium and attractor band") {
  FlowSpec fixed = FlowSpec::with_defaults(FlowKind::Lorenz63);
  fixed.initial_state = {0.0, 0.0, 0.0};
  fixed.n_samples = 50;
  CHECK(integrate_flow(fixed).cwiseAbs().maxCoeff() == 0.0);

  FlowSpec spec = FlowSpec::with_defaults(FlowKind::Lorenz63);
  spec.n_samples = 20000;
  const Matrix s = integrate_flow(spec);
  CHECK(s.rows() == 20000);
  CHECK(s.col(0).cwiseAbs().maxCoeff() <= 25.0);
  CHECK(s.col(1).cwiseAbs().maxCoeff() <= 35.0);
  CHECK(s.col(2).minCoeff() >= 0.0);
  CHECK(s.col(2).maxCoeff() <= 55.0);
}

TEST_CASE("pre-samples and transients set the trajectory length") {
  FlowSpec spec = FlowSpec::with_defaults(FlowKind::Lorenz63);
  spec.n_samples = 100;
  spec.n_presamples = 30;
  spec.n_transient = 150;
  CHECK(integrate_flow(spec).rows() == 130);
  const auto traj = generate(spec, {ObservationKind::LorenzIdentity3D, {0, 1}});
  CHECK(traj.n_samples() == 100);
  CHECK(traj.dim() == 2);
  CHECK(traj.sample(-30) == traj.samples.row(0));
}

TEST_CASE("divergent integration reports the step") {
  FlowSpec spec = FlowSpec::with_defaults(FlowKind::Lorenz63);
  spec.dt = 5.0;
  spec.n_substeps = 1;
  spec.n_transient = 0;
  spec.n_samples = 200;
  try {
    integrate_flow(spec);
    FAIL("expected divergence");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("flow spec validation") {
  FlowSpec spec = FlowSpec::with_defaults(FlowKind::TorusModelI);
  spec.n_samples = 10;
  spec.dt = 0.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec.dt = 0.1;
  spec.initial_state = {0.0};
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("observation maps") {
  Matrix origin = Matrix::Zero(1, 2);
  const auto e3 = observe(origin, {ObservationKind::TorusEmbed3D, {0, 1, 2}, 0.5, 0.5}, 1.0, 0);
  CHECK(e3.samples(0, 0) == doctest::Approx(1.5));
  CHECK(e3.samples(0, 1) == 0.0);
  CHECK(e3.samples(0, 2) == 0.0);

  const auto e4 = observe(origin, {ObservationKind::TorusFlatEmbed4D, {0, 1, 2, 3}}, 1.0, 0);
  CHECK(e4.samples(0, 0) == 1.0);
  CHECK(e4.samples(0, 1) == 0.0);
  CHECK(e4.samples(0, 2) == 1.0);
  CHECK(e4.samples(0, 3) == 0.0);

  Matrix lorenz(1, 3);
  lorenz << 1.25, -2.5, 7.0;
  const auto l = observe(lorenz, {ObservationKind::LorenzIdentity3D, {0, 2}}, 1.0, 0);
  CHECK(l.samples(0, 0) == 1.25);
  CHECK(l.samples(0, 1) == 7.0);

  CHECK_THROWS_AS(observe(origin, {ObservationKind::TorusEmbed3D, {3}}, 1.0, 0), ValidationError);
  CHECK_THROWS_AS(observe(origin, {ObservationKind::TorusEmbed3D, {1, 1}}, 1.0, 0), ValidationError);
}

TEST_CASE("observe commutes with permuting samples") {
  const Matrix states = testing::random_matrix(20, 2, 7, 0.0, 6.0);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(20);
  perm.setIdentity();
  std::mt19937 rng(3);
  std::shuffle(perm.indices().data(), perm.indices().data() + 20, rng);
  const ObservationMap map{ObservationKind::TorusEmbed3D, {0, 1, 2}};
  const Matrix a = perm * observe(states, map, 1.0, 0).samples;
  const Matrix b = observe(perm * states, map, 1.0, 0).samples;
  CHECK(a == b);
}

TEST_CASE("CSV ingestion") {
  const auto dir = testing::scratch_dir("csv");
  write_file(dir / "plain.csv", "1,2,3\n4,5,6\n7,8,9\n");
  write_file(dir / "header.csv", "a,b,c\n1,2,3\n4,5,6\n7,8,9\n");
  write_file(dir / "spaces.txt", "1 2  3\n4\t5 6\n\n7 8 9\n");
  CsvSpec spec{{0, 2}, false, 1.0, 1};
  const auto plain = ingest_csv(dir / "plain.csv", spec);
  CHECK(plain.samples.rows() == 3);
  CHECK(plain.samples(2, 1) == 9.0);
  CHECK(plain.n_samples() == 2);

  CsvSpec with_header = spec;
  with_header.skip_header = true;
  CHECK(ingest_csv(dir / "header.csv", with_header).samples == plain.samples);
  CHECK(ingest_csv(dir / "spaces.txt", spec).samples == plain.samples);

  write_file(dir / "empty.csv", "");
  try {
    ingest_csv(dir / "empty.csv", spec);
    FAIL("expected error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("no data rows") != std::string::npos);
  }

  write_file(dir / "bad.csv", "1,2,3\n4,x,6\n");
  try {
    ingest_csv(dir / "bad.csv", CsvSpec{{0, 1}, false, 1.0, 0});
    FAIL("expected error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }

  CHECK_THROWS_AS(ingest_csv(dir / "plain.csv", CsvSpec{{0}, false, 1.0, 3}), DataError);
  CHECK_THROWS_AS(ingest_csv(dir / "missing.csv", spec), DataError);
}

TEST_CASE("trajectory persistence round-trips") {
  const auto dir = testing::scratch_dir("traj");
  FlowSpec spec = FlowSpec::with_defaults(FlowKind::TorusModelI);
  spec.n_samples = 100;
  spec.n_presamples = 5;
  const auto traj = generate(spec, {ObservationKind::TorusEmbed3D, {0, 1}});
  save_trajectory(dir / "t", traj);
  const auto back = load_trajectory(dir / "t");
  CHECK(back.samples == traj.samples);
  CHECK(back.dt == traj.dt);
  CHECK(back.n_presamples == 5);
  CHECK(back.provenance == traj.provenance);
}
