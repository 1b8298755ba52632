#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace preval {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

using LabelVector = std::vector<std::string>;

}  // namespace preval
