#include "rdd/honest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include "rdd/stats.hpp"

namespace rdd {

double cv_halfnormal(double r, double level) {
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("cv_halfnormal: level must be in (0,1)");
    r = std::abs(r);
    const auto coverage = [r](double c) { return normal_cdf(c - r) - normal_cdf(-c - r); };
    double lo = 0.0;
    double hi = r + normal_quantile(1.0 - (1.0 - level) / 2.0) + 1.0;
    while (coverage(hi) < level) hi *= 2.0;  // safety; the bound above already suffices
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = coverage(mid) - level;
        if (std::abs(f) <= 1e-10) return mid;
        (f < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double bsd_rsup(const FitResult& fit, double k, double sigma) {
    if (fit.design.p != 1) throw std::invalid_argument("BSD requires p=1");
    if (k < 0) throw std::invalid_argument("bsd_rsup: K must be >= 0");
    if (!(sigma > 0)) throw std::runtime_error("bsd_rsup: degenerate variance (sigma = 0)");
    const auto n = static_cast<Eigen::Index>(fit.n_h);
    double moment = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = fit.xs(i);
        const double sgn = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
        moment += fit.weights(i) * x * x * sgn;
    }
    const double se = sigma / std::sqrt(static_cast<double>(fit.n_h));
    const double r = -(k / 2.0) * moment / se;
    if (r < -1e-10)
        throw std::runtime_error("bsd_rsup: weight moments violated (negative bias bound)");
    return std::max(r, 0.0);
}

HonestResult bsd_ci_fixed(const FitResult& fit, const VarianceEstimate& ve, double k,
                          double level) {
    const double r = bsd_rsup(fit, k, std::sqrt(ve.sigma2));
    const double cv = cv_halfnormal(r, level);
    HonestResult out;
    out.tau = fit.tau;
    out.se_used = ve.se;
    out.max_bias = r * ve.se;
    out.chosen_h = fit.design.h;
    out.ci.lower = fit.tau - cv * ve.se;
    out.ci.upper = fit.tau + cv * ve.se;
    out.ci.level = level;
    out.ci.method = "BSD";
    out.ci.critical_value = cv;
    out.ci.max_bias = out.max_bias;
    return out;
}

namespace {

std::vector<double> default_bsd_candidates(const Sample& sample) {
    const GroupedSample g = group(sample);
    std::set<double> magnitudes;
    for (double x : g.support) magnitudes.insert(std::abs(x));
    std::vector<double> candidates;
    for (double h : magnitudes) {
        if (h <= 0) continue;
        std::set<double> below, above;
        for (double x : g.support)
            if (std::abs(x) <= h) (x < 0 ? below : above).insert(x);
        if (below.size() >= 2 && above.size() >= 2) candidates.push_back(h);
    }
    if (g.size() < 20) candidates.push_back(std::numeric_limits<double>::infinity());
    return candidates;
}

}  // namespace

HonestResult bsd_ci(const Sample& sample, const BsdInput& input) {
    if (input.k < 0) throw std::invalid_argument("bsd_ci: K must be >= 0");
    if (!(input.level > 0.0 && input.level < 1.0))
        throw std::invalid_argument("bsd_ci: level must be in (0,1)");
    const auto evaluate = [&](double h) {
        FitResult f = fit(sample, Design{1, h});
        const GroupedSample grouped = group(window(sample, h));
        const VarianceEstimate ve =
            input.variance == BsdVariance::NN ? nn(f, grouped) : ehw(f);
        return bsd_ci_fixed(f, ve, input.k, input.level);
    };

    if (input.h) return evaluate(*input.h);

    for (std::size_t i = 1; i < input.candidate_h.size(); ++i)
        if (!(input.candidate_h[i - 1] < input.candidate_h[i]))
            throw std::invalid_argument("bsd_ci: candidate bandwidths must be ascending");
    const std::vector<double> candidates =
        input.candidate_h.empty() ? default_bsd_candidates(sample) : input.candidate_h;
    std::optional<HonestResult> best;
    for (double h : candidates) {
        HonestResult r;
        try {
            r = evaluate(h);
        } catch (const std::exception&) {
            continue;  // infeasible candidate (missing support or degenerate variance)
        }
        // strict comparison with ascending candidates breaks ties toward smaller h
        if (!best || r.ci.width() < best->ci.width()) {
            best = std::move(r);
            best->chosen_h = h;
        }
    }
    if (!best) throw std::runtime_error("bsd_ci: no feasible candidate bandwidth");
    return *best;
}

double k_heuristic(double s, double interval_length) {
    if (!(s > 0) || !(interval_length > 0))
        throw std::invalid_argument("k_heuristic: inputs must be positive");
    return 8.0 * s / (interval_length * interval_length);
}

Eigen::MatrixXd bme_sigma_matrix(const FitResult& fit, const GroupedSample& grouped) {
    if (grouped.n != fit.n_h)
        throw std::invalid_argument("bme_sigma_matrix: grouped sample does not match the fit");
    const auto big_g = static_cast<Eigen::Index>(grouped.size());
    const int k = fit.design.k();
    const double n_h = static_cast<double>(fit.n_h);

    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(fit.n_h); ++i) {
        const Eigen::VectorXd m = build_basis(fit.xs(i), fit.design.p);
        omega.noalias() += fit.residuals(i) * fit.residuals(i) * m * m.transpose();
    }
    omega /= n_h;

    const Eigen::MatrixXd q_inv = n_h * fit.xtx_inverse;  // Q_hat^{-1}
    Eigen::MatrixXd w = q_inv * omega * q_inv;
    w = 0.5 * (w + w.transpose()).eval();

    Eigen::MatrixXd basis(k, big_g);
    for (Eigen::Index g = 0; g < big_g; ++g)
        basis.col(g) = build_basis(grouped.support[static_cast<std::size_t>(g)], fit.design.p);

    const Eigen::MatrixXd bq = basis.transpose() * q_inv * basis;  // m_g' Q^{-1} m_g*
    const Eigen::MatrixXd bw = basis.transpose() * w * basis;      // m_g' Q^{-1} Omega Q^{-1} m_g*

    Eigen::MatrixXd sigma(big_g + 1, big_g + 1);
    for (Eigen::Index g = 0; g < big_g; ++g) {
        const double s2g = grouped.variances[static_cast<std::size_t>(g)];
        for (Eigen::Index f = 0; f < big_g; ++f) {
            const double s2f = grouped.variances[static_cast<std::size_t>(f)];
            double v = bw(g, f) - (s2g + s2f) * bq(g, f);
            if (g == f) v += s2g * n_h / static_cast<double>(grouped.counts[static_cast<std::size_t>(g)]);
            sigma(g, f) = v;
        }
        const double cross = s2g * (q_inv.row(0) * basis.col(g)).value() -
                             (w.row(0) * basis.col(g)).value();
        sigma(g, big_g) = cross;
        sigma(big_g, g) = cross;
    }
    sigma(big_g, big_g) = w(0, 0);
    return sigma;
}

HonestResult bme_ci(const FitResult& fit, const GroupedSample& grouped, double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bme_ci: level must be in (0,1)");
    if (grouped.g_minus < 1 || grouped.g_plus < 1)
        throw std::runtime_error("bme_ci: needs support points on both sides of the cutoff");

    const std::size_t gm_count = grouped.g_minus;
    const std::size_t total = grouped.size();
    std::vector<double> delta(total);
    for (std::size_t g = 0; g < total; ++g)
        delta[g] = grouped.means[g] - fitted_cef(fit, grouped.support[g]);

    const Eigen::MatrixXd sigma = bme_sigma_matrix(fit, grouped);
    const auto last = static_cast<Eigen::Index>(total);
    const double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
    const double n_h = static_cast<double>(fit.n_h);

    double best_upper = -std::numeric_limits<double>::infinity();
    double best_lower = std::numeric_limits<double>::infinity();
    BmeWitness wit_right, wit_left;
    double bias_right = 0.0, bias_left = 0.0, se_right = 0.0, se_left = 0.0;

    for (std::size_t gm = 0; gm < gm_count; ++gm) {
        for (std::size_t gp = gm_count; gp < total; ++gp) {
            const auto im = static_cast<Eigen::Index>(gm);
            const auto ip = static_cast<Eigen::Index>(gp);
            for (int sm = -1; sm <= 1; sm += 2) {
                for (int sp = -1; sp <= 1; sp += 2) {
                    const double b = sp * delta[gp] + sm * delta[gm];
                    double quad = sigma(im, im) + sigma(ip, ip) + sigma(last, last) +
                                  2.0 * sm * sp * sigma(im, ip) + 2.0 * sm * sigma(im, last) +
                                  2.0 * sp * sigma(ip, last);
                    quad = std::max(quad, 0.0);
                    const double se = std::sqrt(quad / n_h);
                    const double c_r = fit.tau + b + z * se;
                    const double c_l = fit.tau + b - z * se;
                    if (c_r > best_upper) {
                        best_upper = c_r;
                        wit_right = {gm, gp, sm, sp};
                        bias_right = b;
                        se_right = se;
                    }
                    if (c_l < best_lower) {
                        best_lower = c_l;
                        wit_left = {gm, gp, sm, sp};
                        bias_left = b;
                        se_left = se;
                    }
                }
            }
        }
    }

    HonestResult out;
    out.tau = fit.tau;
    out.se_used = std::max(se_left, se_right);
    out.max_bias = std::max(bias_right, -bias_left);
    out.witnesses = std::make_pair(wit_left, wit_right);
    out.ci.lower = best_lower;
    out.ci.upper = best_upper;
    out.ci.level = level;
    out.ci.method = "BME";
    out.ci.critical_value = z;
    out.ci.max_bias = out.max_bias;
    return out;
}

HonestResult bme_ci(const Sample& sample, const Design& design, double level) {
    const FitResult f = fit(sample, design);
    const GroupedSample grouped = group(window(sample, design.h));
    return bme_ci(f, grouped, level);
}

}  // namespace rdd
