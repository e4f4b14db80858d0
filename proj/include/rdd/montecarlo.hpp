#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rdd/asymptotics.hpp"
#include "rdd/basis_fit.hpp"
#include "rdd/data.hpp"

namespace rdd {

// Synthetic data generating process: the running variable sits on equally
// spaced grids of g_minus points in [-1, -1/G-] and g_plus points in
// [1/G+, 1], each side carrying total mass 1/2 spread uniformly. The outcome
// is mu(x) + noise with mu(x) = x + lambda1 sin(pi x) + lambda2 cos(pi x) and
// Gaussian noise of the given variance. The jump at the cutoff is zero.
struct DgpSpec {
    int g_minus = 5;
    int g_plus = 5;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double noise_variance = 0.1;
    std::size_t n = 100;

    double mu(double x) const;
    std::vector<double> support_below() const;
    std::vector<double> support_above() const;
    PopulationDesign to_population(const Design& design) const;
};

// Resampling protocol from a population file: draw samples of size n_h from
// the rows within h of the cutoff.
struct PopulationFileSpec {
    std::string path;
    std::string x_column = "x";
    std::string y_column = "y";
    double cutoff = 0.0;
    double h = std::numeric_limits<double>::infinity();
    std::size_t n_h = 100;
    bool with_replacement = true;
};

// One replication's draw; reproducible in isolation from (seed, rep).
Sample draw_synthetic(const DgpSpec& spec, std::uint64_t seed, std::uint64_t rep);

// Draw from support grids with an arbitrary conditional expectation function.
Sample draw_custom(const std::vector<double>& support_below, const std::vector<double>& support_above,
                   const std::function<double(double)>& cef, double noise_variance, std::size_t n,
                   std::uint64_t seed, std::uint64_t rep);

Sample draw_empirical(const Sample& windowed_population, std::size_t n_h, bool with_replacement,
                      std::uint64_t seed, std::uint64_t rep);
Sample draw_empirical(const PopulationFileSpec& spec, std::uint64_t seed, std::uint64_t rep);

enum class CiMethod { EHW, CRV, CRV2, BM, NN, BSD, BME };

std::string to_string(CiMethod m);

enum class CoverageTarget { TrueTau, TauH };

struct RunConfig {
    Design design;
    std::vector<CiMethod> methods;
    std::size_t reps = 1000;
    std::uint64_t seed = 0;
    double level = 0.95;
    bool stata_factor = true;  // applied to CRV
    double bsd_k = 0.0;        // second-derivative bound for BSD
    CoverageTarget target = CoverageTarget::TrueTau;
    int threads = 0;  // 0: hardware concurrency
};

struct MethodSummary {
    CiMethod method;
    double avg_normalized_se = 0.0;  // mean CI width / (2 z_{1-alpha/2})
    double coverage = 0.0;
    double mean_sigma2 = 0.0;  // mean of the N_h-scaled variance estimate
};

struct SimulationResult {
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    double level = 0.95;
    double target_value = 0.0;
    double mean_tau = 0.0;
    double sd_tau = 0.0;
    std::vector<MethodSummary> methods;
    std::optional<double> rate_crv_gt_ehw;  // present when both CRV and EHW ran
};

// Deterministic parallel replication engine. Results are identical for any
// worker count; a failing replication aborts the run with its index and
// substream seed.
SimulationResult run(const DgpSpec& spec, const RunConfig& config);
SimulationResult run(const PopulationFileSpec& spec, const RunConfig& config);

}  // namespace rdd
