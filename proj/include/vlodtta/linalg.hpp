#pragma once

#include <Eigen/Dense>

#include <string>

#include "vlodtta/errors.hpp"

namespace vlodtta {

// Row-major so that one row is one proposal / one embedding.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

namespace detail {

inline void require(bool condition, const std::string& what) {
  if (!condition) throw ShapeMismatch(what);
}

}  // namespace detail
}  // namespace vlodtta
