#pragma once

#include "tempat/linalg.hpp"
#include "tempat/measures.hpp"
#include "tempat/spectral.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

/// Window averages of observables, eigenbasis expansion and reconstruction.
namespace tempat::reconstruct {

enum class ObservableKind { Moment, Identity, Power, Cosine, Sine, Polynomial };

/// A pointwise map gamma: R^d -> R^m drawn from a fixed registry. Every
/// kind except Polynomial acts componentwise (m = d); Polynomial applies
/// sum_k coefficients[k] y^k to each component.
struct ObservableSpec {
  ObservableKind kind = ObservableKind::Moment;
  int order = 1;                      // Moment / Power exponent
  std::vector<double> coefficients;   // Polynomial, lowest degree first

  static ObservableSpec moment(int n) { return {ObservableKind::Moment, n, {}}; }
  void validate(int max_order = 6) const;
  std::size_t output_dim(std::size_t d) const { return d; }
  double apply(double y) const;
  std::string name() const;
};

/// Row i = (1/R) sum_r gamma(y_{i-r}).
Matrix time_average(const measures::WindowView& windows, const ObservableSpec& gamma);

/// c = (1/N) Psi^T targets, i.e. c_l = <psi_l, target>.
Matrix expansion_coefficients(const spectral::SpectralBasis& basis, const Matrix& targets);

/// sum_{l <= M'} c_l psi_l.
Matrix reconstruct(const spectral::SpectralBasis& basis, const Matrix& coefficients, std::size_t truncation);

/// RMSE per column: sqrt(sum_i (e^_i - e_i)^2 / N). With `normalize`, both
/// columns are scaled by 1 / ||e||_2 first.
RowVector rmse(const Matrix& truth, const Matrix& approx, bool normalize);

struct RmseTable {
  std::vector<std::size_t> truncations;
  Matrix values;  // truncations x columns
};

struct MomentReconstruction {
  std::vector<std::string> column_names;
  Matrix true_values;  // N x m
  Matrix coefficients; // M x m
  std::vector<Matrix> reconstructions;  // one per truncation
  RmseTable rmse;
  bool normalized = false;
};

RmseTable rmse_report(const Matrix& truth, const std::vector<Matrix>& reconstructions,
                      const std::vector<std::size_t>& truncations, bool normalize);

/// Expansion, reconstruction at each truncation and RMSE in one call.
MomentReconstruction run_reconstruction(const spectral::SpectralBasis& basis, const Matrix& targets,
                                        std::vector<std::string> column_names,
                                        const std::vector<std::size_t>& truncations, bool normalize);

/// Per-window statistics from raw moments m1..m4. Windows whose standard
/// deviation is below `sd_floor` carry NaN skewness and kurtosis and are
/// flagged in `degenerate`.
struct CentralMoments {
  Matrix mean;
  Matrix sd;
  Matrix skewness;
  Matrix kurtosis;
  Mask degenerate;
};

CentralMoments central_moments(const Matrix& m1, const Matrix& m2, const Matrix& m3, const Matrix& m4,
                               double sd_floor = 1e-12);

}  // namespace tempat::reconstruct
