#include "tempat/reconstruct.hpp"

#include "tempat/error.hpp"

#include <cmath>
#include <limits>

namespace tempat::reconstruct {

namespace {

double int_power(double y, int n) {
  double out = 1.0;
  for (int k = 0; k < n; ++k) out *= y;
  return out;
}

}  // namespace

void ObservableSpec::validate(int max_order) const {
  switch (kind) {
    case ObservableKind::Moment:
    case ObservableKind::Power:
      if (order < 1) throw ValidationError("moment order must be at least 1");
      if (order > max_order) {
        throw ValidationError("moment order " + std::to_string(order) + " exceeds the cap " + std::to_string(max_order));
      }
      break;
    case ObservableKind::Polynomial:
      if (coefficients.empty()) throw ValidationError("polynomial observable needs coefficients");
      break;
    default: break;
  }
}

double ObservableSpec::apply(double y) const {
  switch (kind) {
    case ObservableKind::Moment:
    case ObservableKind::Power: return int_power(y, order);
    case ObservableKind::Identity: return y;
    case ObservableKind::Cosine: return std::cos(y);
    case ObservableKind::Sine: return std::sin(y);
    case ObservableKind::Polynomial: {
      double acc = 0.0;
      for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * y + *it;
      return acc;
    }
  }
  return 0.0;
}

std::string ObservableSpec::name() const {
  switch (kind) {
    case ObservableKind::Moment: return "moment" + std::to_string(order);
    case ObservableKind::Power: return "power" + std::to_string(order);
    case ObservableKind::Identity: return "identity";
    case ObservableKind::Cosine: return "cos";
    case ObservableKind::Sine: return "sin";
    case ObservableKind::Polynomial: return "polynomial";
  }
  return "unknown";
}

Matrix time_average(const measures::WindowView& windows, const ObservableSpec& gamma) {
  gamma.validate(std::numeric_limits<int>::max());
  const auto N = static_cast<Eigen::Index>(windows.count());
  const auto d = static_cast<Eigen::Index>(windows.dim());
  const std::size_t R = windows.length();
  Matrix out(N, d);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      double sum = 0.0;
      for (std::size_t r = 0; r < R; ++r) sum += gamma.apply(windows.sample(static_cast<std::size_t>(i), r)(j));
      out(i, j) = sum / static_cast<double>(R);
    }
  }
  return out;
}

Matrix expansion_coefficients(const spectral::SpectralBasis& basis, const Matrix& targets) {
  if (targets.rows() != basis.psi.rows()) throw ValidationError("targets must have one row per window");
  return (basis.psi.transpose() * targets) / static_cast<double>(basis.N());
}

Matrix reconstruct(const spectral::SpectralBasis& basis, const Matrix& coefficients, std::size_t truncation) {
  if (truncation > basis.M() || static_cast<Eigen::Index>(truncation) > coefficients.rows()) {
    throw ValidationError("truncation " + std::to_string(truncation) + " exceeds the number of basis vectors");
  }
  const auto N = basis.psi.rows();
  if (truncation == 0) return Matrix::Zero(N, coefficients.cols());
  const auto t = static_cast<Eigen::Index>(truncation);
  return basis.psi.leftCols(t) * coefficients.topRows(t);
}

RowVector rmse(const Matrix& truth, const Matrix& approx, bool normalize) {
  if (truth.rows() != approx.rows() || truth.cols() != approx.cols()) throw ValidationError("RMSE inputs differ in shape");
  const double N = static_cast<double>(truth.rows());
  RowVector out(truth.cols());
  for (Eigen::Index c = 0; c < truth.cols(); ++c) {
    double scale = 1.0;
    if (normalize) {
      const double norm = truth.col(c).norm();
      if (!(norm > 0.0)) throw ValidationError("cannot normalise an all-zero column " + std::to_string(c));
      scale = 1.0 / norm;
    }
    double ss = 0.0;
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
      const double e = (approx(i, c) - truth(i, c)) * scale;
      ss += e * e;
    }
    out(c) = std::sqrt(ss / N);
  }
  return out;
}

RmseTable rmse_report(const Matrix& truth, const std::vector<Matrix>& reconstructions,
                      const std::vector<std::size_t>& truncations, bool normalize) {
  if (reconstructions.size() != truncations.size()) throw ValidationError("one reconstruction per truncation expected");
  RmseTable table;
  table.truncations = truncations;
  table.values.resize(static_cast<Eigen::Index>(truncations.size()), truth.cols());
  for (std::size_t t = 0; t < truncations.size(); ++t) {
    table.values.row(static_cast<Eigen::Index>(t)) = rmse(truth, reconstructions[t], normalize);
  }
  return table;
}

MomentReconstruction run_reconstruction(const spectral::SpectralBasis& basis, const Matrix& targets,
                                        std::vector<std::string> column_names,
                                        const std::vector<std::size_t>& truncations, bool normalize) {
  if (!targets.allFinite()) throw DataError("reconstruction targets contain undefined values");
  MomentReconstruction out;
  out.column_names = std::move(column_names);
  out.true_values = targets;
  out.coefficients = expansion_coefficients(basis, targets);
  for (std::size_t t : truncations) out.reconstructions.push_back(reconstruct(basis, out.coefficients, t));
  out.rmse = rmse_report(targets, out.reconstructions, truncations, normalize);
  out.normalized = normalize;
  return out;
}

CentralMoments central_moments(const Matrix& m1, const Matrix& m2, const Matrix& m3, const Matrix& m4, double sd_floor) {
  const auto N = m1.rows();
  const auto d = m1.cols();
  for (const Matrix* m : {&m2, &m3, &m4}) {
    if (m->rows() != N || m->cols() != d) throw ValidationError("raw moment matrices differ in shape");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CentralMoments out;
  out.mean = m1;
  out.sd.resize(N, d);
  out.skewness.resize(N, d);
  out.kurtosis.resize(N, d);
  out.degenerate = Mask::Zero(N, d);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double a = m1(i, j);
      const double b = m2(i, j);
      const double c = m3(i, j);
      const double e = m4(i, j);
      double var = b - a * a;
      // Differences at rounding level of m2 are a constant window.
      if (var <= 8.0 * std::numeric_limits<double>::epsilon() * std::abs(b)) var = 0.0;
      const double sd = std::sqrt(std::max(var, 0.0));
      out.sd(i, j) = sd;
      if (sd < sd_floor) {
        out.skewness(i, j) = nan;
        out.kurtosis(i, j) = nan;
        out.degenerate(i, j) = 1;
        continue;
      }
      out.skewness(i, j) = (c - 3.0 * a * b + 2.0 * a * a * a) / (sd * sd * sd);
      out.kurtosis(i, j) = (e - 4.0 * a * c + 6.0 * a * a * b - 3.0 * a * a * a * a) / (sd * sd * sd * sd);
    }
  }
  return out;
}

}  // namespace tempat::reconstruct
