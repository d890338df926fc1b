#include "buckforge/linalg.hpp"

#include <cmath>
#include <limits>

namespace buckforge::linalg {

Eigen::MatrixXd expm(const Eigen::MatrixXd& m) {
    const Eigen::Index n = m.rows();
    const double norm = m.cwiseAbs().colwise().sum().maxCoeff();

    int squarings = 0;
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    }
    const Eigen::MatrixXd scaled = m / std::ldexp(1.0, squarings);

    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    // ||scaled|| <= 0.5, so 0.5^k / k! drops below eps well before k = 30.
    for (int k = 1; k <= 30; ++k) {
        term = term * scaled / static_cast<double>(k);
        result += term;
        if (term.cwiseAbs().maxCoeff() <= std::numeric_limits<double>::epsilon() * result.cwiseAbs().maxCoeff()) {
            break;
        }
    }
    for (int i = 0; i < squarings; ++i) {
        result = result * result;
    }
    return result;
}

DiscreteAffine discretize_zoh(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double h) {
    const Eigen::Index n = a.rows();
    // exp([[A, B], [0, 0]] h) = [[Phi, Gamma], [0, 1]]
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = a * h;
    aug.topRightCorner(n, 1) = b * h;
    const Eigen::MatrixXd e = expm(aug);
    return {e.topLeftCorner(n, n), e.topRightCorner(n, 1)};
}

}  // namespace buckforge::linalg
