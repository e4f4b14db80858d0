#include "rdd/basis_fit.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace rdd {

Eigen::VectorXd build_basis(double x, int p) {
    if (p < 0) throw std::invalid_argument("build_basis: p must be >= 0");
    const int k = 2 * (p + 1);
    Eigen::VectorXd m(k);
    const double treated = x >= 0 ? 1.0 : 0.0;
    double pow_x = 1.0;  // x^0 even when x = 0
    for (int j = 0; j <= p; ++j) {
        m(j) = treated * pow_x;
        m(p + 1 + j) = pow_x;
        pow_x *= x;
    }
    return m;
}

FitResult fit(const Sample& sample, const Design& design) {
    if (design.p < 0) throw std::invalid_argument("fit: p must be >= 0");
    const Sample w = window(sample, design.h);
    const auto n = static_cast<Eigen::Index>(w.n());
    const int k = design.k();

    std::set<double> below, above;
    for (const auto& o : w.observations()) (o.x < 0 ? below : above).insert(o.x);
    const auto need = static_cast<std::size_t>(design.p + 1);
    if (below.size() < need)
        throw std::runtime_error("fit: needs " + std::to_string(need) +
                                 " distinct support points below the cutoff, found " +
                                 std::to_string(below.size()));
    if (above.size() < need)
        throw std::runtime_error("fit: needs " + std::to_string(need) +
                                 " distinct support points at or above the cutoff, found " +
                                 std::to_string(above.size()));

    Eigen::MatrixXd a(n, k);
    Eigen::VectorXd y(n), xs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& o = w[static_cast<std::size_t>(i)];
        a.row(i) = build_basis(o.x, design.p).transpose();
        y(i) = o.y;
        xs(i) = o.x;
    }

    // Column scaling keeps the Vandermonde blocks well conditioned when h is
    // large (ages, years): solve with A D^{-1}, then undo the scaling.
    Eigen::VectorXd scale(k);
    for (int j = 0; j < k; ++j) {
        const double s = a.col(j).cwiseAbs().maxCoeff();
        scale(j) = s > 0 ? s : 1.0;
    }
    const Eigen::MatrixXd a_scaled = a * scale.cwiseInverse().asDiagonal();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a_scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double tol = 1e-10 * sv(0);
    if (sv(sv.size() - 1) <= tol)
        throw std::runtime_error(
            "fit: design matrix is rank deficient (singular value ratio " +
            std::to_string(sv(sv.size() - 1) / sv(0)) + "); one side lacks distinct support");

    FitResult r;
    r.design = design;
    r.n_h = static_cast<std::size_t>(n);
    r.theta = scale.cwiseInverse().asDiagonal() * svd.solve(y);
    r.tau = r.theta(0);
    r.residuals = y - a * r.theta;
    r.q_hat = (a.transpose() * a) / static_cast<double>(n);
    // (M'M)^{-1} = D^{-1} V S^{-2} V' D^{-1} from the SVD of the scaled matrix.
    const Eigen::MatrixXd v = svd.matrixV();
    r.xtx_inverse = scale.cwiseInverse().asDiagonal() * v *
                    sv.array().square().inverse().matrix().asDiagonal() * v.transpose() *
                    scale.cwiseInverse().asDiagonal();
    r.weights = a * r.xtx_inverse.col(0);
    r.xs = std::move(xs);
    r.ys = std::move(y);
    return r;
}

double fitted_cef(const FitResult& fit, double x) {
    return build_basis(x, fit.design.p).dot(fit.theta);
}

}  // namespace rdd
