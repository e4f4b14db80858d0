#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rdd/data.hpp"

namespace rdd {

// Three disjoint runs of s support points on one side of the cutoff, ordered
// from nearest the cutoff (inner) outward. Block moments are observation
// weighted; var_of_mean is the estimated variance of the block's mean outcome.
struct IntervalTriple {
    enum class Side { Below, Above };

    struct Block {
        std::size_t n = 0;
        double x_mean = 0.0;
        double x2_mean = 0.0;
        double y_mean = 0.0;
        double var_of_mean = 0.0;
    };

    Side side = Side::Above;
    Block inner, middle, outer;
};

struct SmoothnessBound {
    double k_point = 0.0;  // half-median-unbiased estimate
    double k_lower = 0.0;  // left end of the one-sided CI [k_lower, inf)
    double level = 0.95;
    std::vector<std::pair<double, double>> triples;  // (delta_hat, sd) per triple
    std::size_t s = 2;
    double sup_t = 0.0;
};

// Partitions each side's support points (by distance from the cutoff) into
// consecutive blocks of s and forms floor(blocks/3) triples per side.
// Leftover blocks are dropped; an empty result is allowed.
std::vector<IntervalTriple> build_triples(const GroupedSample& grouped, std::size_t s);

// Curvature estimate for one triple and its standard deviation. A linear CEF
// gives exactly zero; a quadratic (c/2) x^2 gives exactly c.
std::pair<double, double> delta_hat(const IntervalTriple& triple);

// 1-level quantile of max_j |Z_j + K0 / sd_j| over independent standard
// normals, simulated deterministically from `seed` in fixed-size chunks.
double sup_t_quantile(const std::vector<double>& sds, double k0, double level, std::size_t draws,
                      std::uint64_t seed);

// Point estimate and lower confidence bound for the smoothness constant by
// inverting sup-t tests.
SmoothnessBound k_lower_bound(const GroupedSample& grouped, std::size_t s, double level,
                              std::uint64_t seed, std::size_t draws = 100000);

}  // namespace rdd
