#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace aes {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Ordered (name, value) pairs produced by the feature extractors.
using NamedValues = std::vector<std::pair<std::string, double>>;

}  // namespace aes
