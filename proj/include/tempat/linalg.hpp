#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace tempat {

// Row-major storage so that a row is one window / one sample and the binary
// container payload is written in a single pass.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace tempat
