#pragma once

#include <Eigen/Dense>

#include <vector>

#include "rdd/basis_fit.hpp"

namespace rdd {

// A fully known discrete population inside the estimation window.
struct PopulationDesign {
    std::vector<double> support;    // ascending, in window
    std::vector<double> masses;     // conditional on the window, sum to 1
    std::vector<double> cef;        // mu(x_g)
    std::vector<double> variances;  // sigma^2_g
    Design design;
    double true_tau = 0.0;

    std::size_t size() const { return support.size(); }
};

struct PopulationFit {
    Eigen::VectorXd theta;      // population projection coefficients
    double tau_h = 0.0;         // first coefficient
    std::vector<double> delta;  // specification error mu(x_g) - m(x_g)' theta
};

struct InfluenceWeights {
    std::vector<double> omega;  // pi_g (e_1' Q^{-1} m_g)^2
    double sigma2_tau = 0.0;    // sum sigma^2_g omega_g
};

// Expected large-sample value of the cluster variance estimator when the
// number of support points stays fixed, with the two-term decomposition of
// its gap from sigma2_tau (T1 misspecification, T2 few-cluster). T1/T2 are
// exact under homoskedasticity; otherwise sigma^2 is replaced by its
// omega-weighted mean and `homoskedastic` is false.
struct FixedGExpectation {
    double e_crv_inf = 0.0;
    double t1 = 0.0;
    double t2 = 0.0;
    bool homoskedastic = true;
};

// Everything the decompose command reports, evaluated at a reference N_h.
struct DecompositionReport {
    Eigen::VectorXd theta_h;
    double tau_h = 0.0;
    std::vector<double> delta;
    std::vector<double> omega;
    double sigma2_tau = 0.0;
    std::vector<double> d;  // sqrt(N_h) delta_g
    double b = 0.0;         // sqrt(N_h) (tau_h - tau)
    FixedGExpectation fixed_g;
    double large_g_value = 0.0;
    std::size_t reference_n = 0;
};

PopulationFit population_fit(const PopulationDesign& pd);

InfluenceWeights influence_weights(const PopulationDesign& pd);

FixedGExpectation fixed_g_expectation(const PopulationDesign& pd, std::size_t n_h);

// Large-support-count value of the cluster variance estimator at sample size N.
double large_g_value(const PopulationDesign& pd, std::size_t n);

DecompositionReport decompose(const PopulationDesign& pd, std::size_t reference_n);

}  // namespace rdd
