#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace abcdist {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Raised for violated preconditions and unusable inputs.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace abcdist
