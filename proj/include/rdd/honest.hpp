#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rdd/basis_fit.hpp"
#include "rdd/data.hpp"
#include "rdd/variance.hpp"

namespace rdd {

enum class BsdVariance { NN, EHW };

// Inputs for the bounded-second-derivative CI. An empty `h` asks for the
// bandwidth minimizing CI length over `candidate_h` (or, when that is empty,
// over the distinct |x_g| that keep two support points on each side, plus
// infinity when the support is small).
struct BsdInput {
    double k = 0.0;  // bound on |mu''|
    double level = 0.95;
    std::optional<double> h;
    std::vector<double> candidate_h;
    BsdVariance variance = BsdVariance::NN;
};

// A witness for the BME union-intersection bound: one support point per side
// (global indices into the grouped support) and a sign for each.
struct BmeWitness {
    std::size_t g_minus_index = 0;
    std::size_t g_plus_index = 0;
    int s_minus = 1;
    int s_plus = 1;
};

struct HonestResult {
    ConfidenceInterval ci;
    double tau = 0.0;
    double se_used = 0.0;
    double max_bias = 0.0;
    std::optional<double> chosen_h;                              // BSD only
    std::optional<std::pair<BmeWitness, BmeWitness>> witnesses;  // BME: (left, right) binding
};

// 1-level quantile of |N(r,1)|: the unique c > 0 with Phi(c-r) - Phi(-c-r) = level.
double cv_halfnormal(double r, double level);

// Worst-case bias of the local linear estimator over the second-order Hoelder
// class, in standard error units. `sigma` is the variance scale whose SE
// sigma/sqrt(N_h) appears in the CI.
double bsd_rsup(const FitResult& fit, double k, double sigma);

// BSD interval at the bandwidth already baked into `fit`.
HonestResult bsd_ci_fixed(const FitResult& fit, const VarianceEstimate& ve, double k, double level);

// Full BSD construction including the bandwidth sweep.
HonestResult bsd_ci(const Sample& sample, const BsdInput& input);

// K = 8 S / L^2: the second-derivative bound implied by a maximum deviation S
// from a straight line over intervals of length L.
double k_heuristic(double s, double interval_length);

// Plug-in joint variance of (delta_hat(x_1..G), tau_hat), scaled by N_h.
Eigen::MatrixXd bme_sigma_matrix(const FitResult& fit, const GroupedSample& grouped);

// Bounded-misspecification-error CI by union-intersection over witnesses with
// a Bonferroni split across the two sides.
HonestResult bme_ci(const FitResult& fit, const GroupedSample& grouped, double level);
HonestResult bme_ci(const Sample& sample, const Design& design, double level);

}  // namespace rdd
