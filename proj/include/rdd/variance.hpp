#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "rdd/basis_fit.hpp"
#include "rdd/data.hpp"

namespace rdd {

enum class VarianceMethod { EHW, CRV, CRV2, NN };

std::string to_string(VarianceMethod m);

// One variance estimator's output. sigma2 is the scale with SE = sqrt(sigma2 / N_h).
struct VarianceEstimate {
    VarianceMethod method = VarianceMethod::EHW;
    double sigma2 = 0.0;
    double se = 0.0;
    std::size_t n_h = 0;
    std::optional<double> dof;           // Bell-McCaffrey degrees of freedom
    bool stata_factor_applied = false;   // CRV only
    std::vector<std::string> warnings;
};

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
    std::string method;
    double critical_value = 0.0;
    std::optional<double> max_bias;  // honest methods only

    double width() const { return upper - lower; }
};

// Heteroskedasticity-robust sandwich variance, no small-sample correction.
VarianceEstimate ehw(const FitResult& fit);

// Clustered by the running variable. The opt-in factor is
// G/(G-1) * (N_h-1)/(N_h-k) with k = 2(p+1).
VarianceEstimate crv(const FitResult& fit, const GroupedSample& grouped, bool apply_stata_factor);

// Bias-reduced cluster variance: residuals are rescaled per cluster by the
// pseudo-inverse symmetric square root of I - M_g (M'M)^{-1} M_g'.
VarianceEstimate crv2(const FitResult& fit, const GroupedSample& grouped);

// Satterthwaite-style degrees of freedom for the CRV2 estimator of the first
// coefficient, assuming independent homoskedastic errors.
double bm_dof(const FitResult& fit, const GroupedSample& grouped);

// CRV2 variance with the matching degrees of freedom attached.
VarianceEstimate bm(const FitResult& fit, const GroupedSample& grouped);

// Nearest-neighbor variance built from within-support-point sample variances.
VarianceEstimate nn(const FitResult& fit, const GroupedSample& grouped);

// tau +- crit * se with a normal critical value, or Student-t when dof is set.
ConfidenceInterval wald_ci(double tau, const VarianceEstimate& ve, double level);

// Cluster-level view for designs where every row of a cluster shares the same
// regressor vector (always the case when clustering on the running variable).
struct ClusterMoment {
    Eigen::VectorXd m;   // shared regressor vector
    std::size_t n = 0;   // rows in the cluster
};

// Degrees of freedom from cluster moments alone (the statistic is invariant to
// the outcome). `coef` selects the coefficient of interest.
double bm_dof_clusters(const std::vector<ClusterMoment>& clusters, Eigen::Index coef = 0);

// CRV2 sigma2 from cluster moments and per-cluster residual sums.
double crv2_sigma2_clusters(const std::vector<ClusterMoment>& clusters,
                            const std::vector<double>& residual_sums, Eigen::Index coef = 0,
                            std::vector<std::string>* warnings = nullptr);

}  // namespace rdd
