#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "rdd/data.hpp"
#include "rdd/rng.hpp"

namespace testutil {

inline rdd::Sample make_sample(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<rdd::Observation> obs(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) obs[i] = {x[i], y[i]};
    return rdd::Sample(std::move(obs));
}

inline bool rel_close(double a, double b, double tol) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
    return std::fabs(a - b) <= tol * scale;
}

struct RandomInstance {
    std::vector<double> x;
    std::vector<double> y;
    int p = 0;
};

// Random dataset with enough distinct support on each side for order p and a
// mix of singleton and repeated support points. Each side gets at least p+2
// support points so the clusters never saturate the basis (saturated designs
// make the cluster estimators exactly zero, which is tested separately).
inline RandomInstance random_instance(rdd::Rng& rng, int max_p = 2, std::size_t max_n = 25) {
    RandomInstance inst;
    inst.p = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(max_p) + 1));
    const auto need = static_cast<std::size_t>(inst.p + 2);
    const std::size_t g_minus = need + rng.uniform_below(3);
    const std::size_t g_plus = need + rng.uniform_below(3);
    std::vector<double> support;
    for (std::size_t j = 0; j < g_minus; ++j)
        support.push_back(-0.25 * static_cast<double>(j + 1) - 0.1 * rng.uniform());
    for (std::size_t j = 0; j < g_plus; ++j)
        support.push_back(0.25 * static_cast<double>(j + 1) + 0.1 * rng.uniform());

    // one observation per support point first, then top up to n
    const std::size_t n = std::max(support.size(), max_n - rng.uniform_below(8));
    for (std::size_t i = 0; i < n; ++i) {
        const double x =
            i < support.size() ? support[i] : support[rng.uniform_below(support.size())];
        inst.x.push_back(x);
        inst.y.push_back(0.3 + 0.7 * x + 0.2 * x * x + rng.normal());
    }
    return inst;
}

// Writes a temp CSV and returns its path.
inline std::string write_csv(const std::string& name, const std::string& content) {
    const std::string path = "/tmp/" + name;
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace testutil
