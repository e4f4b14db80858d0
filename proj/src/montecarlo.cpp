#include "rdd/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "rdd/honest.hpp"
#include "rdd/rng.hpp"
#include "rdd/stats.hpp"
#include "rdd/variance.hpp"

namespace rdd {

double DgpSpec::mu(double x) const {
    constexpr double pi = 3.14159265358979323846;
    return x + lambda1 * std::sin(pi * x) + lambda2 * std::cos(pi * x);
}

std::vector<double> DgpSpec::support_below() const {
    std::vector<double> s;
    for (int j = g_minus; j >= 1; --j) s.push_back(-static_cast<double>(j) / g_minus);
    return s;
}

std::vector<double> DgpSpec::support_above() const {
    std::vector<double> s;
    for (int j = 1; j <= g_plus; ++j) s.push_back(static_cast<double>(j) / g_plus);
    return s;
}

PopulationDesign DgpSpec::to_population(const Design& design) const {
    PopulationDesign pd;
    for (double x : support_below()) {
        pd.support.push_back(x);
        pd.masses.push_back(0.5 / g_minus);
    }
    for (double x : support_above()) {
        pd.support.push_back(x);
        pd.masses.push_back(0.5 / g_plus);
    }
    for (double x : pd.support) {
        pd.cef.push_back(mu(x));
        pd.variances.push_back(noise_variance);
    }
    pd.design = design;
    pd.true_tau = 0.0;
    return pd;
}

Sample draw_custom(const std::vector<double>& support_below,
                   const std::vector<double>& support_above,
                   const std::function<double(double)>& cef, double noise_variance, std::size_t n,
                   std::uint64_t seed, std::uint64_t rep) {
    if (support_below.empty() || support_above.empty())
        throw std::invalid_argument("draw_custom: both sides need support points");
    if (noise_variance < 0) throw std::invalid_argument("draw_custom: negative noise variance");
    Rng rng(substream_seed(seed, rep));
    const double noise_sd = std::sqrt(noise_variance);
    std::vector<Observation> obs(n);
    for (auto& o : obs) {
        const bool above = rng.bernoulli_half();
        const auto& side = above ? support_above : support_below;
        o.x = side[rng.uniform_below(side.size())];
        o.y = cef(o.x) + noise_sd * rng.normal();
    }
    return Sample(std::move(obs));
}

Sample draw_synthetic(const DgpSpec& spec, std::uint64_t seed, std::uint64_t rep) {
    return draw_custom(
        spec.support_below(), spec.support_above(), [&spec](double x) { return spec.mu(x); },
        spec.noise_variance, spec.n, seed, rep);
}

Sample draw_empirical(const Sample& windowed_population, std::size_t n_h, bool with_replacement,
                      std::uint64_t seed, std::uint64_t rep) {
    if (n_h < 1) throw std::invalid_argument("draw_empirical: n_h must be >= 1");
    const std::size_t pop = windowed_population.n();
    Rng rng(substream_seed(seed, rep));
    std::vector<Observation> obs;
    obs.reserve(n_h);
    if (with_replacement) {
        for (std::size_t i = 0; i < n_h; ++i)
            obs.push_back(windowed_population[rng.uniform_below(pop)]);
    } else {
        if (n_h > pop)
            throw std::invalid_argument(
                "draw_empirical: without replacement needs n_h <= population size");
        std::vector<std::size_t> idx(pop);
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < n_h; ++i) {
            const std::size_t j = i + rng.uniform_below(pop - i);
            std::swap(idx[i], idx[j]);
            obs.push_back(windowed_population[idx[i]]);
        }
    }
    return Sample(std::move(obs));
}

Sample draw_empirical(const PopulationFileSpec& spec, std::uint64_t seed, std::uint64_t rep) {
    const Sample pop = window(load_csv(spec.path, spec.x_column, spec.y_column, spec.cutoff), spec.h);
    return draw_empirical(pop, spec.n_h, spec.with_replacement, seed, rep);
}

std::string to_string(CiMethod m) {
    switch (m) {
        case CiMethod::EHW: return "EHW";
        case CiMethod::CRV: return "CRV";
        case CiMethod::CRV2: return "CRV2";
        case CiMethod::BM: return "BM";
        case CiMethod::NN: return "NN";
        case CiMethod::BSD: return "BSD";
        case CiMethod::BME: return "BME";
    }
    return "?";
}

namespace {

struct MethodCell {
    double sigma2 = 0.0;
    double se = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct RepRecord {
    double tau = 0.0;
    std::vector<MethodCell> cells;
};

RepRecord evaluate_replication(const Sample& sample, const RunConfig& config) {
    const FitResult f = fit(sample, config.design);
    const GroupedSample grouped = group(window(sample, config.design.h));

    RepRecord rec;
    rec.tau = f.tau;
    rec.cells.reserve(config.methods.size());
    for (CiMethod m : config.methods) {
        MethodCell cell;
        const auto fill_wald = [&](const VarianceEstimate& ve) {
            const ConfidenceInterval ci = wald_ci(f.tau, ve, config.level);
            cell.sigma2 = ve.sigma2;
            cell.se = ve.se;
            cell.lower = ci.lower;
            cell.upper = ci.upper;
        };
        switch (m) {
            case CiMethod::EHW: fill_wald(ehw(f)); break;
            case CiMethod::CRV: fill_wald(crv(f, grouped, config.stata_factor)); break;
            case CiMethod::CRV2: fill_wald(crv2(f, grouped)); break;
            case CiMethod::BM: fill_wald(bm(f, grouped)); break;
            case CiMethod::NN: fill_wald(nn(f, grouped)); break;
            case CiMethod::BSD: {
                const VarianceEstimate ve = nn(f, grouped);
                const HonestResult hr = bsd_ci_fixed(f, ve, config.bsd_k, config.level);
                cell.sigma2 = ve.sigma2;
                cell.se = hr.se_used;
                cell.lower = hr.ci.lower;
                cell.upper = hr.ci.upper;
                break;
            }
            case CiMethod::BME: {
                const HonestResult hr = bme_ci(f, grouped, config.level);
                cell.sigma2 = hr.se_used * hr.se_used * static_cast<double>(f.n_h);
                cell.se = hr.se_used;
                cell.lower = hr.ci.lower;
                cell.upper = hr.ci.upper;
                break;
            }
        }
        rec.cells.push_back(cell);
    }
    return rec;
}

SimulationResult reduce(const std::vector<RepRecord>& records, const RunConfig& config,
                        double target_value) {
    const std::size_t reps = records.size();
    SimulationResult out;
    out.reps = reps;
    out.seed = config.seed;
    out.level = config.level;
    out.target_value = target_value;

    double mean_tau = 0.0;
    for (const auto& r : records) mean_tau += r.tau;
    mean_tau /= static_cast<double>(reps);
    double ss = 0.0;
    for (const auto& r : records) ss += (r.tau - mean_tau) * (r.tau - mean_tau);
    out.mean_tau = mean_tau;
    out.sd_tau = reps > 1 ? std::sqrt(ss / static_cast<double>(reps - 1)) : 0.0;

    const double z = normal_quantile(1.0 - (1.0 - config.level) / 2.0);
    for (std::size_t k = 0; k < config.methods.size(); ++k) {
        MethodSummary s;
        s.method = config.methods[k];
        std::size_t covered = 0;
        for (const auto& r : records) {
            const auto& c = r.cells[k];
            s.avg_normalized_se += (c.upper - c.lower) / (2.0 * z);
            s.mean_sigma2 += c.sigma2;
            if (c.lower <= target_value && target_value <= c.upper) ++covered;
        }
        s.avg_normalized_se /= static_cast<double>(reps);
        s.mean_sigma2 /= static_cast<double>(reps);
        s.coverage = static_cast<double>(covered) / static_cast<double>(reps);
        out.methods.push_back(s);
    }

    const auto find = [&](CiMethod m) {
        for (std::size_t k = 0; k < config.methods.size(); ++k)
            if (config.methods[k] == m) return static_cast<std::ptrdiff_t>(k);
        return static_cast<std::ptrdiff_t>(-1);
    };
    const auto i_crv = find(CiMethod::CRV);
    const auto i_ehw = find(CiMethod::EHW);
    if (i_crv >= 0 && i_ehw >= 0) {
        std::size_t count = 0;
        for (const auto& r : records)
            if (r.cells[static_cast<std::size_t>(i_crv)].se >
                r.cells[static_cast<std::size_t>(i_ehw)].se)
                ++count;
        out.rate_crv_gt_ehw = static_cast<double>(count) / static_cast<double>(reps);
    }
    return out;
}

SimulationResult run_engine(const std::function<Sample(std::uint64_t rep)>& draw,
                            const RunConfig& config, double target_value) {
    if (config.reps < 1) throw std::invalid_argument("run: reps must be >= 1");
    if (config.methods.empty()) throw std::invalid_argument("run: methods must be nonempty");

    std::vector<RepRecord> records(config.reps);
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::optional<std::pair<std::uint64_t, std::string>> failure;

    const auto worker = [&] {
        for (;;) {
            const std::size_t rep = next.fetch_add(1);
            if (rep >= config.reps) return;
            try {
                records[rep] = evaluate_replication(draw(rep), config);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!failure || rep < failure->first) failure = {rep, e.what()};
            }
        }
    };

    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const unsigned n_threads =
        config.threads > 0 ? static_cast<unsigned>(config.threads) : hw;
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (failure)
        throw std::runtime_error("run: replication " + std::to_string(failure->first) +
                                 " (substream seed " +
                                 std::to_string(substream_seed(config.seed, failure->first)) +
                                 ") failed: " + failure->second);
    return reduce(records, config, target_value);
}

}  // namespace

SimulationResult run(const DgpSpec& spec, const RunConfig& config) {
    double target_value = 0.0;
    if (config.target == CoverageTarget::TauH)
        target_value = population_fit(spec.to_population(config.design)).tau_h;
    return run_engine(
        [&](std::uint64_t rep) { return draw_synthetic(spec, config.seed, rep); }, config,
        target_value);
}

SimulationResult run(const PopulationFileSpec& spec, const RunConfig& config) {
    const Sample pop =
        window(load_csv(spec.path, spec.x_column, spec.y_column, spec.cutoff), spec.h);
    double target_value = 0.0;
    if (config.target == CoverageTarget::TauH) target_value = fit(pop, config.design).tau;
    return run_engine(
        [&](std::uint64_t rep) {
            return draw_empirical(pop, spec.n_h, spec.with_replacement, config.seed, rep);
        },
        config, target_value);
}

}  // namespace rdd
