#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace aniso {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SparseMat = Eigen::SparseMatrix<double>;

}  // namespace aniso
