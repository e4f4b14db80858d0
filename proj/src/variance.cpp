#include "rdd/variance.hpp"

#include <cmath>
#include <stdexcept>

#include "rdd/stats.hpp"

namespace rdd {

namespace {

// Eigenvalues below this fraction of the largest are truncated in the
// pseudo-inverse square root of I - H_gg.
constexpr double kEigTolerance = 1e-10;

void check_consistency(const FitResult& fit, const GroupedSample& grouped) {
    if (grouped.n != fit.n_h)
        throw std::invalid_argument("variance: grouped sample does not match the fitted window");
    for (std::size_t g = 0; g < grouped.size(); ++g) {
        if (grouped.rows[g].empty() || grouped.rows[g].front() >= fit.n_h ||
            fit.xs(static_cast<Eigen::Index>(grouped.rows[g].front())) != grouped.support[g])
            throw std::invalid_argument("variance: grouped sample does not match the fitted window");
    }
}

// fit.weights(i) equals M_i'(M'M)^{-1} e_1; rows of the same cluster carry
// identical values, so the first member represents the cluster.
double cluster_weight(const FitResult& fit, const GroupedSample& grouped, std::size_t g) {
    return fit.weights(static_cast<Eigen::Index>(grouped.rows[g].front()));
}

double residual_sum(const FitResult& fit, const GroupedSample& grouped, std::size_t g) {
    double s = 0.0;
    for (std::size_t r : grouped.rows[g]) s += fit.residuals(static_cast<Eigen::Index>(r));
    return s;
}

VarianceEstimate make_estimate(VarianceMethod method, double sigma2, std::size_t n_h) {
    VarianceEstimate ve;
    ve.method = method;
    ve.sigma2 = sigma2;
    ve.n_h = n_h;
    ve.se = std::sqrt(sigma2 / static_cast<double>(n_h));
    return ve;
}

}  // namespace

std::string to_string(VarianceMethod m) {
    switch (m) {
        case VarianceMethod::EHW: return "EHW";
        case VarianceMethod::CRV: return "CRV";
        case VarianceMethod::CRV2: return "CRV2";
        case VarianceMethod::NN: return "NN";
    }
    return "?";
}

VarianceEstimate ehw(const FitResult& fit) {
    const auto n = static_cast<Eigen::Index>(fit.n_h);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = fit.residuals(i) * fit.weights(i);
        acc += t * t;
    }
    return make_estimate(VarianceMethod::EHW, static_cast<double>(fit.n_h) * acc, fit.n_h);
}

VarianceEstimate crv(const FitResult& fit, const GroupedSample& grouped, bool apply_stata_factor) {
    check_consistency(fit, grouped);
    double acc = 0.0;
    for (std::size_t g = 0; g < grouped.size(); ++g) {
        const double t = residual_sum(fit, grouped, g) * cluster_weight(fit, grouped, g);
        acc += t * t;
    }
    double sigma2 = static_cast<double>(fit.n_h) * acc;
    const auto big_g = static_cast<double>(grouped.size());
    const auto n_h = static_cast<double>(fit.n_h);
    if (apply_stata_factor)
        sigma2 *= big_g / (big_g - 1.0) * (n_h - 1.0) / (n_h - static_cast<double>(fit.design.k()));
    auto ve = make_estimate(VarianceMethod::CRV, sigma2, fit.n_h);
    ve.stata_factor_applied = apply_stata_factor;
    return ve;
}

double crv2_sigma2_clusters(const std::vector<ClusterMoment>& clusters,
                            const std::vector<double>& residual_sums, Eigen::Index coef,
                            std::vector<std::string>* warnings) {
    if (clusters.size() != residual_sums.size())
        throw std::invalid_argument("crv2: clusters and residual sums disagree");
    const Eigen::Index k = clusters.front().m.size();
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(k, k);
    std::size_t n_total = 0;
    for (const auto& c : clusters) {
        xtx += static_cast<double>(c.n) * c.m * c.m.transpose();
        n_total += c.n;
    }
    const Eigen::MatrixXd xtx_inv = xtx.inverse();

    // Rows within a cluster are identical, so I - H_gg is a rank-one update of
    // the identity: eigenvalue 1 - n_g c_g on the constant vector, 1 elsewhere.
    double acc = 0.0;
    for (std::size_t g = 0; g < clusters.size(); ++g) {
        const auto& c = clusters[g];
        const double b = c.m.dot(xtx_inv.col(coef));
        const double lam = 1.0 - static_cast<double>(c.n) * c.m.dot(xtx_inv * c.m);
        if (lam <= kEigTolerance) {
            if (warnings)
                warnings->push_back("crv2: leverage eigenvalue truncated for cluster " +
                                    std::to_string(g));
            continue;
        }
        acc += residual_sums[g] * residual_sums[g] / lam * b * b;
    }
    return static_cast<double>(n_total) * acc;
}

VarianceEstimate crv2(const FitResult& fit, const GroupedSample& grouped) {
    check_consistency(fit, grouped);
    std::vector<ClusterMoment> clusters(grouped.size());
    std::vector<double> sums(grouped.size());
    for (std::size_t g = 0; g < grouped.size(); ++g) {
        clusters[g].m = build_basis(grouped.support[g], fit.design.p);
        clusters[g].n = grouped.counts[g];
        sums[g] = residual_sum(fit, grouped, g);
    }
    std::vector<std::string> warnings;
    const double sigma2 = crv2_sigma2_clusters(clusters, sums, 0, &warnings);
    auto ve = make_estimate(VarianceMethod::CRV2, sigma2, fit.n_h);
    ve.warnings = std::move(warnings);
    return ve;
}

double bm_dof_clusters(const std::vector<ClusterMoment>& clusters, Eigen::Index coef) {
    const auto big_g = static_cast<Eigen::Index>(clusters.size());
    if (big_g < 2) throw std::invalid_argument("bm_dof: needs at least two clusters");
    const Eigen::Index k = clusters.front().m.size();
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(k, k);
    for (const auto& c : clusters) xtx += static_cast<double>(c.n) * c.m * c.m.transpose();
    const Eigen::MatrixXd xtx_inv = xtx.inverse();

    // With identical rows per cluster, c_g = (I-P)' ell_g collapses to scalar
    // geometry: Gram(g,g') = 1{g=g'} t_g^2/n_g - t_g t_g' m_g'(M'M)^{-1} m_g',
    // with t_g = n_g b_g / sqrt(lambda_g).
    Eigen::VectorXd t(big_g);
    for (Eigen::Index g = 0; g < big_g; ++g) {
        const auto& c = clusters[static_cast<std::size_t>(g)];
        const double b = c.m.dot(xtx_inv.col(coef));
        const double lam = 1.0 - static_cast<double>(c.n) * c.m.dot(xtx_inv * c.m);
        t(g) = lam > kEigTolerance ? static_cast<double>(c.n) * b / std::sqrt(lam) : 0.0;
    }
    double trace = 0.0, sumsq = 0.0;
    for (Eigen::Index g = 0; g < big_g; ++g) {
        const auto& cg = clusters[static_cast<std::size_t>(g)];
        for (Eigen::Index f = 0; f < big_g; ++f) {
            const auto& cf = clusters[static_cast<std::size_t>(f)];
            double gram = -t(g) * t(f) * cg.m.dot(xtx_inv * cf.m);
            if (g == f) gram += t(g) * t(g) / static_cast<double>(cg.n);
            sumsq += gram * gram;
            if (g == f) trace += gram;
        }
    }
    const double a = trace * trace / sumsq;
    if (!std::isfinite(a) || a <= 0.0)
        throw std::runtime_error("bm_dof: degenerate design, degrees of freedom undefined");
    return a;
}

double bm_dof(const FitResult& fit, const GroupedSample& grouped) {
    check_consistency(fit, grouped);
    std::vector<ClusterMoment> clusters(grouped.size());
    for (std::size_t g = 0; g < grouped.size(); ++g) {
        clusters[g].m = build_basis(grouped.support[g], fit.design.p);
        clusters[g].n = grouped.counts[g];
    }
    return bm_dof_clusters(clusters, 0);
}

VarianceEstimate bm(const FitResult& fit, const GroupedSample& grouped) {
    auto ve = crv2(fit, grouped);
    ve.dof = bm_dof(fit, grouped);
    return ve;
}

VarianceEstimate nn(const FitResult& fit, const GroupedSample& grouped) {
    check_consistency(fit, grouped);
    double acc = 0.0;
    std::vector<std::string> warnings;
    for (std::size_t g = 0; g < grouped.size(); ++g) {
        if (grouped.counts[g] <= 1) {
            warnings.push_back("nn: single observation at support point " +
                               std::to_string(grouped.support[g]) + ", variance set to 0");
            continue;
        }
        const double w = cluster_weight(fit, grouped, g);
        acc += static_cast<double>(grouped.counts[g]) * grouped.variances[g] * w * w;
    }
    auto ve = make_estimate(VarianceMethod::NN, static_cast<double>(fit.n_h) * acc, fit.n_h);
    ve.warnings = std::move(warnings);
    return ve;
}

ConfidenceInterval wald_ci(double tau, const VarianceEstimate& ve, double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("wald_ci: level must be in (0,1)");
    const double p = 1.0 - (1.0 - level) / 2.0;
    const double crit = ve.dof ? student_t_quantile(*ve.dof, p) : normal_quantile(p);
    ConfidenceInterval ci;
    ci.lower = tau - crit * ve.se;
    ci.upper = tau + crit * ve.se;
    ci.level = level;
    ci.method = ve.dof ? "BM" : to_string(ve.method);
    ci.critical_value = crit;
    return ci;
}

}  // namespace rdd
