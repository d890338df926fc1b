#pragma once

#include <Eigen/Dense>

namespace buckforge::linalg {

// Matrix exponential by scaling and squaring of a truncated Taylor series.
// Accurate to machine precision for the small, well-scaled matrices used here.
Eigen::MatrixXd expm(const Eigen::MatrixXd& m);

// Exact zero-order-hold map of x' = A x + B u over a step h:
//   x(t+h) = phi * x(t) + gamma * u,  u held constant.
struct DiscreteAffine {
    Eigen::MatrixXd phi;
    Eigen::VectorXd gamma;
};

DiscreteAffine discretize_zoh(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double h);

}  // namespace buckforge::linalg
