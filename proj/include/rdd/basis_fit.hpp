#pragma once

#include <Eigen/Dense>

#include <limits>

#include "rdd/data.hpp"

namespace rdd {

// Local polynomial design: order p and bandwidth h. The interacted basis has
// k = 2(p+1) components.
struct Design {
    int p = 1;
    double h = std::numeric_limits<double>::infinity();

    int k() const { return 2 * (p + 1); }
};

// m(x) = (1{x>=0}, 1{x>=0}x, ..., 1{x>=0}x^p, 1, x, ..., x^p)'. The treatment
// indicator comes first, so the jump estimate is the first coefficient. 0^0 = 1.
Eigen::VectorXd build_basis(double x, int p);

// Output of the local polynomial OLS fit inside the estimation window.
struct FitResult {
    Eigen::VectorXd theta;        // k coefficients; theta(0) is tau_hat
    double tau = 0.0;
    Eigen::MatrixXd q_hat;        // (1/N_h) sum M_i M_i'
    Eigen::MatrixXd xtx_inverse;  // (M'M)^{-1}
    Eigen::VectorXd residuals;    // y_i - M_i' theta
    Eigen::VectorXd weights;      // w(X_i) = (1/N_h) e_1' Q_hat^{-1} M_i
    Eigen::VectorXd xs;           // running variable of the retained rows
    Eigen::VectorXd ys;           // outcome of the retained rows
    std::size_t n_h = 0;
    Design design;
};

// Windows the sample to [-h, h] and solves the OLS problem by column-scaled
// SVD. Requires at least p+1 distinct support points strictly below zero and
// at least p+1 at or above zero.
FitResult fit(const Sample& sample, const Design& design);

// m(x)' theta_hat.
double fitted_cef(const FitResult& fit, double x);

}  // namespace rdd
