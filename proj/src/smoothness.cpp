#include "rdd/smoothness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdd/rng.hpp"

namespace rdd {

namespace {

constexpr std::size_t kChunkSize = 65536;

IntervalTriple::Block make_block(const GroupedSample& g, const std::vector<std::size_t>& idx) {
    IntervalTriple::Block b;
    for (std::size_t i : idx) b.n += g.counts[i];
    const double n = static_cast<double>(b.n);
    for (std::size_t i : idx) {
        const double ng = static_cast<double>(g.counts[i]);
        b.x_mean += ng * g.support[i];
        b.x2_mean += ng * g.support[i] * g.support[i];
        b.y_mean += ng * g.means[i];
        b.var_of_mean += ng * g.variances[i];
    }
    b.x_mean /= n;
    b.x2_mean /= n;
    b.y_mean /= n;
    b.var_of_mean /= n * n;
    return b;
}

}  // namespace

std::vector<IntervalTriple> build_triples(const GroupedSample& grouped, std::size_t s) {
    if (s < 1) throw std::invalid_argument("build_triples: s must be >= 1");
    std::vector<IntervalTriple> out;

    const auto side_indices = [&](bool above) {
        // support indices ordered by distance from the cutoff
        std::vector<std::size_t> idx;
        if (above) {
            for (std::size_t i = grouped.g_minus; i < grouped.size(); ++i) idx.push_back(i);
        } else {
            for (std::size_t i = grouped.g_minus; i-- > 0;) idx.push_back(i);
        }
        return idx;
    };

    for (bool above : {false, true}) {
        const auto idx = side_indices(above);
        const std::size_t blocks = idx.size() / s;
        const std::size_t triples = blocks / 3;
        for (std::size_t t = 0; t < triples; ++t) {
            IntervalTriple tr;
            tr.side = above ? IntervalTriple::Side::Above : IntervalTriple::Side::Below;
            IntervalTriple::Block* slots[3] = {&tr.inner, &tr.middle, &tr.outer};
            for (int bpos = 0; bpos < 3; ++bpos) {
                const std::size_t start = (3 * t + static_cast<std::size_t>(bpos)) * s;
                std::vector<std::size_t> members(idx.begin() + static_cast<std::ptrdiff_t>(start),
                                                 idx.begin() + static_cast<std::ptrdiff_t>(start + s));
                *slots[bpos] = make_block(grouped, members);
            }
            out.push_back(tr);
        }
    }
    return out;
}

std::pair<double, double> delta_hat(const IntervalTriple& triple) {
    const auto& j1 = triple.inner;
    const auto& j2 = triple.middle;
    const auto& j3 = triple.outer;
    const double lambda = (j3.x_mean - j2.x_mean) / (j3.x_mean - j1.x_mean);
    const double denom = (1.0 - lambda) * j3.x2_mean + lambda * j1.x2_mean - j2.x2_mean;
    const double scale = std::max({std::abs(j1.x2_mean), std::abs(j2.x2_mean), std::abs(j3.x2_mean)});
    if (std::abs(denom) <= 1e-12 * scale)
        throw std::runtime_error("delta_hat: collinear blocks, curvature not identified");
    const double delta =
        2.0 * (lambda * j1.y_mean + (1.0 - lambda) * j3.y_mean - j2.y_mean) / denom;
    const double var = 4.0 * (lambda * lambda * j1.var_of_mean +
                              (1.0 - lambda) * (1.0 - lambda) * j3.var_of_mean + j2.var_of_mean) /
                       (denom * denom);
    return {delta, std::sqrt(var)};
}

double sup_t_quantile(const std::vector<double>& sds, double k0, double level, std::size_t draws,
                      std::uint64_t seed) {
    if (sds.empty()) throw std::invalid_argument("sup_t_quantile: needs at least one sd");
    for (double sd : sds)
        if (!(sd > 0)) throw std::invalid_argument("sup_t_quantile: sds must be positive");
    if (draws < 10000) throw std::invalid_argument("sup_t_quantile: needs at least 10^4 draws");
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("sup_t_quantile: level must be in (0,1)");
    if (k0 < 0) throw std::invalid_argument("sup_t_quantile: K0 must be >= 0");

    std::vector<double> shifts(sds.size());
    for (std::size_t j = 0; j < sds.size(); ++j) shifts[j] = k0 / sds[j];

    std::vector<double> stats(draws);
    const std::size_t chunks = (draws + kChunkSize - 1) / kChunkSize;
    for (std::size_t c = 0; c < chunks; ++c) {
        Rng rng(substream_seed(seed, c));
        const std::size_t begin = c * kChunkSize;
        const std::size_t end = std::min(begin + kChunkSize, draws);
        for (std::size_t d = begin; d < end; ++d) {
            double m = 0.0;
            for (double shift : shifts) m = std::max(m, std::abs(rng.normal() + shift));
            stats[d] = m;
        }
    }
    std::sort(stats.begin(), stats.end());
    const auto rank = static_cast<std::size_t>(std::ceil(level * static_cast<double>(draws)));
    return stats[std::min(rank, draws) - 1];
}

SmoothnessBound k_lower_bound(const GroupedSample& grouped, std::size_t s, double level,
                              std::uint64_t seed, std::size_t draws) {
    const auto all_triples = build_triples(grouped, s);
    std::vector<std::pair<double, double>> valid;
    for (const auto& t : all_triples) {
        try {
            valid.push_back(delta_hat(t));
        } catch (const std::exception&) {
            // collinear blocks carry no curvature information
        }
    }
    if (valid.empty()) throw std::runtime_error("k_lower_bound: no valid triples");

    // Noiseless triples pin K >= |delta| exactly; only noisy ones enter the
    // sup-t inversion.
    double floor_k = 0.0;
    std::vector<double> sds;
    std::vector<double> noisy_deltas;
    double sup_t = 0.0;
    for (const auto& [delta, sd] : valid) {
        if (sd > 0) {
            sds.push_back(sd);
            noisy_deltas.push_back(delta);
            sup_t = std::max(sup_t, std::abs(delta) / sd);
        } else {
            floor_k = std::max(floor_k, std::abs(delta));
        }
    }

    const auto solve_level = [&](double lev) {
        if (sds.empty()) return floor_k;
        const double q0 = sup_t_quantile(sds, 0.0, lev, draws, seed);
        double k_hat = 0.0;
        if (sup_t > q0) {
            const double sd_min = *std::min_element(sds.begin(), sds.end());
            double hi = (sup_t + 5.0) * sd_min;
            while (sup_t_quantile(sds, hi, lev, draws, seed) < sup_t) hi *= 2.0;
            double lo = 0.0;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double q = sup_t_quantile(sds, mid, lev, draws, seed);
                if (std::abs(q - sup_t) <= 1e-4 * sup_t) {
                    lo = hi = mid;
                    break;
                }
                (q < sup_t ? lo : hi) = mid;
            }
            k_hat = 0.5 * (lo + hi);
        }
        return std::max(k_hat, floor_k);
    };

    SmoothnessBound out;
    out.level = level;
    out.s = s;
    out.triples = valid;
    out.sup_t = sup_t;
    out.k_point = solve_level(0.5);
    out.k_lower = solve_level(level);
    return out;
}

}  // namespace rdd
