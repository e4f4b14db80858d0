#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "rdd/rng.hpp"
#include "rdd/variance.hpp"

using namespace rdd;
using testutil::make_sample;
using testutil::rel_close;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Fitted {
    FitResult fit;
    GroupedSample grouped;
};

Fitted fit_all(const std::vector<double>& x, const std::vector<double>& y, int p,
               double h = kInf) {
    const Sample s = make_sample(x, y);
    Fitted out{fit(s, Design{p, h}), group(window(s, h))};
    return out;
}
}  // namespace

TEST_CASE("exact polynomial data gives zero variance everywhere") {
    std::vector<double> xs, ys;
    for (double x : {-2.0, -1.0, -1.0, 1.0, 2.0, 2.0}) {
        xs.push_back(x);
        ys.push_back(1.0 + 0.5 * x + 2.0 * (x >= 0 ? 1.0 : 0.0));
    }
    const auto [f, g] = fit_all(xs, ys, 1);
    CHECK(ehw(f).sigma2 == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(crv(f, g, false).sigma2 == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(crv(f, g, true).sigma2 == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(crv2(f, g).sigma2 == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(nn(f, g).sigma2 == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("singleton clusters: CRV without factor equals EHW") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> xs, ys;
        const int per_side = 3 + static_cast<int>(rng.uniform_below(4));
        for (int j = 1; j <= per_side; ++j) {
            xs.push_back(-j - rng.uniform());
            ys.push_back(rng.normal());
            xs.push_back(j + rng.uniform());
            ys.push_back(rng.normal());
        }
        const auto [f, g] = fit_all(xs, ys, 1);
        for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(g.counts[i] == 1);
        CHECK(rel_close(crv(f, g, false).sigma2, ehw(f).sigma2, 1e-14));
    }
}

TEST_CASE("EHW hand example: unpooled variance of means with divisor n") {
    // p = 0, one support point per side
    const std::vector<double> xs = {-1, -1, -1, 1, 1, 1};
    const std::vector<double> ys = {1, 2, 3, 4, 6, 8};
    const auto [f, g] = fit_all(xs, ys, 0);
    const VarianceEstimate ve = ehw(f);
    // residual sums of squares: below (1,0,1), above (4,0,4); divisor n_g
    const double expected_se2 = (2.0 / 3.0) / 3.0 + (8.0 / 3.0) / 3.0;
    CHECK(ve.se * ve.se == doctest::Approx(expected_se2).epsilon(1e-12));
    CHECK(rel_close(ve.sigma2, oracle::ehw_sigma2(xs, ys, 0), 1e-12));
}

TEST_CASE("NN hand example: two-sample formula with divisor n-1") {
    const std::vector<double> xs = {-1, -1, -1, 1, 1, 1};
    const std::vector<double> ys = {1, 2, 3, 4, 6, 8};
    const auto [f, g] = fit_all(xs, ys, 0);
    const VarianceEstimate ve = nn(f, g);
    const double expected_se2 = 1.0 / 3.0 + 4.0 / 3.0;  // s^2_-/n_- + s^2_+/n_+
    CHECK(ve.se * ve.se == doctest::Approx(expected_se2).epsilon(1e-12));
}

TEST_CASE("NN: degenerate singleton clusters give zero with warnings") {
    const auto [f, g] = fit_all({-2, -1, 1, 2}, {1.0, 2.0, 4.0, 3.0}, 1);
    const VarianceEstimate ve = nn(f, g);
    CHECK(ve.sigma2 == 0.0);
    CHECK(ve.warnings.size() == 4);
}

TEST_CASE("NN: within-group-constant outcomes give zero") {
    const auto [f, g] =
        fit_all({-2, -2, -1, -1, 1, 1, 2, 2}, {1, 1, 2, 2, 5, 5, 7, 7}, 1);
    CHECK(nn(f, g).sigma2 == doctest::Approx(0.0).epsilon(1e-18));
}

TEST_CASE("saturated designs drive the cluster estimators to zero") {
    // p=0 with one support point per side: the fit interpolates the cluster
    // means, so every cluster residual sum vanishes.
    const auto [f, g] = fit_all({-1, -1, -1, 1, 1, 1}, {1, 2, 3, 4, 6, 8}, 0);
    CHECK(std::abs(crv(f, g, false).sigma2) < 1e-25);
    CHECK(crv2(f, g).sigma2 == 0.0);  // leverage 1, pseudo-inverse truncates
    CHECK(ehw(f).sigma2 > 0.1);
}

TEST_CASE("CRV STATA factor is recorded and matches the formula") {
    Rng rng(43);
    const auto inst = testutil::random_instance(rng, 1);
    const auto [f, g] = fit_all(inst.x, inst.y, inst.p);
    const VarianceEstimate plain = crv(f, g, false);
    const VarianceEstimate stata = crv(f, g, true);
    CHECK(!plain.stata_factor_applied);
    CHECK(stata.stata_factor_applied);
    const double big_g = static_cast<double>(g.size());
    const double n = static_cast<double>(f.n_h);
    const double factor = big_g / (big_g - 1.0) * (n - 1.0) / (n - 2.0 * (inst.p + 1.0));
    CHECK(rel_close(stata.sigma2, plain.sigma2 * factor, 1e-13));
}

TEST_CASE("CRV2 on equal intercept-only clusters scales CRV by 1/(1-1/G)") {
    // G = 3 clusters of size 2; intercept-only regression through the
    // cluster-level interface, brute-forced against the dense
    // eigendecomposition path.
    const std::vector<double> y = {1.0, 2.0, -0.5, 0.75, 3.0, 1.25};
    const std::size_t big_g = 3, m = 2, n = 6;
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);

    std::vector<ClusterMoment> clusters(big_g);
    std::vector<double> sums(big_g, 0.0);
    for (std::size_t g = 0; g < big_g; ++g) {
        clusters[g].m = Eigen::VectorXd::Ones(1);
        clusters[g].n = m;
        for (std::size_t i = 0; i < m; ++i) sums[g] += y[g * m + i] - mean;
    }
    const double sigma2_crv2 = crv2_sigma2_clusters(clusters, sums);

    double sigma2_crv = 0.0;  // N * sum S_g^2 b_g^2 with b_g = 1/N
    for (double s : sums) sigma2_crv += s * s;
    sigma2_crv /= static_cast<double>(n);
    CHECK(rel_close(sigma2_crv2, sigma2_crv / (1.0 - 1.0 / static_cast<double>(big_g)), 1e-12));

    // dense oracle: I - J/N per cluster, Jacobi pseudo-inverse square root
    oracle::Regression r;
    r.n = n;
    r.k = 1;
    r.m.assign(n, {1.0});
    r.xtx_inv = {{1.0 / static_cast<double>(n)}};
    r.resid.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.resid[i] = y[i] - mean;
    oracle::Mat omega = oracle::zeros(1, 1);
    for (std::size_t g = 0; g < big_g; ++g) {
        const std::vector<std::size_t> rows = {g * m, g * m + 1};
        const oracle::Mat a = oracle::cluster_adjustment(r, rows);
        double j = 0.0;
        for (std::size_t ii = 0; ii < m; ++ii)
            for (std::size_t jj = 0; jj < m; ++jj) j += a[ii][jj] * r.resid[rows[jj]];
        omega[0][0] += j * j;
    }
    omega[0][0] /= static_cast<double>(n);
    CHECK(rel_close(sigma2_crv2, oracle::sandwich_first(r, omega), 1e-12));
}

TEST_CASE("CRV2 dominates CRV without the factor") {
    Rng rng(47);
    for (int trial = 0; trial < 25; ++trial) {
        // balanced clusters: every support point carries the same count;
        // at least 3 per side so the design is not cluster-saturated
        std::vector<double> xs, ys;
        const int per_side = 3 + static_cast<int>(rng.uniform_below(3));
        const int count = 2 + static_cast<int>(rng.uniform_below(3));
        for (int j = 1; j <= per_side; ++j)
            for (int c = 0; c < count; ++c) {
                xs.push_back(-j);
                ys.push_back(rng.normal());
                xs.push_back(j);
                ys.push_back(rng.normal());
            }
        const auto [f, g] = fit_all(xs, ys, 1);
        CHECK(crv2(f, g).sigma2 >= crv(f, g, false).sigma2 * (1.0 - 1e-12));
    }
}

TEST_CASE("bm_dof equals G-1 on balanced intercept-only designs") {
    for (std::size_t big_g : {2ul, 3ul, 4ul, 7ul}) {
        for (std::size_t m : {2ul, 3ul, 5ul}) {
            std::vector<ClusterMoment> clusters(big_g);
            for (auto& c : clusters) {
                c.m = Eigen::VectorXd::Ones(1);
                c.n = m;
            }
            CHECK(bm_dof_clusters(clusters) ==
                  doctest::Approx(static_cast<double>(big_g - 1)).epsilon(1e-8));
        }
    }
}

TEST_CASE("bm_dof with two intercept-only clusters is one for any sizes") {
    for (std::size_t n2 : {2ul, 5ul, 17ul}) {
        std::vector<ClusterMoment> clusters(2);
        clusters[0].m = Eigen::VectorXd::Ones(1);
        clusters[0].n = 3;
        clusters[1].m = Eigen::VectorXd::Ones(1);
        clusters[1].n = n2;
        CHECK(bm_dof_clusters(clusters) <= 1.0 + 1e-10);
        CHECK(bm_dof_clusters(clusters) == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("bm_dof stays in (0, G], is y-invariant, and matches the oracle") {
    Rng rng(53);
    for (int trial = 0; trial < 25; ++trial) {
        const auto inst = testutil::random_instance(rng);
        const auto [f, g] = fit_all(inst.x, inst.y, inst.p);
        if (g.size() < 2) continue;
        const double a = bm_dof(f, g);
        CHECK(a > 0.0);
        CHECK(a <= static_cast<double>(g.size()) + 1e-9);

        std::vector<double> other_y(inst.y);
        for (auto& v : other_y) v = 2.0 * v + 3.0 + 0.1 * v * v;
        const auto [f2, g2] = fit_all(inst.x, other_y, inst.p);
        CHECK(rel_close(bm_dof(f2, g2), a, 1e-12));

        CHECK(rel_close(a, oracle::bm_dof(inst.x, inst.y, inst.p), 1e-9));
    }
}

TEST_CASE("bm_dof errors out when every cluster is truncated") {
    // saturated design: leverage one everywhere, no residual degrees of freedom
    const auto [f, g] = fit_all({-1, -1, -1, 1, 1, 1}, {1, 2, 3, 4, 6, 8}, 0);
    CHECK_THROWS_AS(bm_dof(f, g), std::runtime_error);
}

TEST_CASE("wald_ci quantiles") {
    VarianceEstimate ve;
    ve.se = 0.1;
    ve.sigma2 = 0.01;
    ve.n_h = 1;

    SUBCASE("normal critical value") {
        const ConfidenceInterval ci = wald_ci(0.5, ve, 0.95);
        CHECK(ci.critical_value == doctest::Approx(1.959964).epsilon(1e-6));
        CHECK(ci.lower == doctest::Approx(0.30401).epsilon(1e-4));
        CHECK(ci.upper == doctest::Approx(0.69599).epsilon(1e-4));
    }
    SUBCASE("student-t with 4 dof is wider") {
        ve.dof = 4.0;
        const ConfidenceInterval ci = wald_ci(0.5, ve, 0.95);
        CHECK(ci.critical_value == doctest::Approx(2.776445).epsilon(1e-6));
        CHECK(ci.method == "BM");
    }
    SUBCASE("median interval") {
        const ConfidenceInterval ci = wald_ci(0.5, ve, 0.5);
        CHECK((ci.upper - ci.lower) / 2.0 == doctest::Approx(0.6745 * 0.1).epsilon(1e-4));
    }
    SUBCASE("invalid level") {
        CHECK_THROWS_AS(wald_ci(0.5, ve, 1.0), std::invalid_argument);
    }
}

TEST_CASE("sigma2 is invariant to order and shift, quadratic in scale") {
    Rng rng(59);
    const auto inst = testutil::random_instance(rng);
    const auto [f, g] = fit_all(inst.x, inst.y, inst.p);
    const double base_ehw = ehw(f).sigma2;
    const double base_crv = crv(f, g, true).sigma2;
    const double base_crv2 = crv2(f, g).sigma2;
    const double base_nn = nn(f, g).sigma2;

    SUBCASE("row order") {
        std::vector<std::size_t> perm(inst.x.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), std::mt19937(1));
        std::vector<double> xs, ys;
        for (std::size_t i : perm) {
            xs.push_back(inst.x[i]);
            ys.push_back(inst.y[i]);
        }
        const auto [f2, g2] = fit_all(xs, ys, inst.p);
        CHECK(rel_close(ehw(f2).sigma2, base_ehw, 1e-9));
        CHECK(rel_close(crv(f2, g2, true).sigma2, base_crv, 1e-9));
        CHECK(rel_close(crv2(f2, g2).sigma2, base_crv2, 1e-9));
        CHECK(rel_close(nn(f2, g2).sigma2, base_nn, 1e-9));
    }
    SUBCASE("shift") {
        std::vector<double> ys(inst.y);
        for (auto& v : ys) v += 7.5;
        const auto [f2, g2] = fit_all(inst.x, ys, inst.p);
        CHECK(rel_close(ehw(f2).sigma2, base_ehw, 1e-8));
        CHECK(rel_close(crv(f2, g2, true).sigma2, base_crv, 1e-8));
        CHECK(rel_close(crv2(f2, g2).sigma2, base_crv2, 1e-8));
        CHECK(rel_close(nn(f2, g2).sigma2, base_nn, 1e-8));
    }
    SUBCASE("scale") {
        std::vector<double> ys(inst.y);
        for (auto& v : ys) v *= -2.0;
        const auto [f2, g2] = fit_all(inst.x, ys, inst.p);
        CHECK(rel_close(ehw(f2).sigma2, 4.0 * base_ehw, 1e-10));
        CHECK(rel_close(crv(f2, g2, true).sigma2, 4.0 * base_crv, 1e-10));
        CHECK(rel_close(crv2(f2, g2).sigma2, 4.0 * base_crv2, 1e-10));
        CHECK(rel_close(nn(f2, g2).sigma2, 4.0 * base_nn, 1e-10));
    }
}

TEST_CASE("oracle equivalence for all four estimators") {
    Rng rng(61);
    for (int trial = 0; trial < 60; ++trial) {
        const auto inst = testutil::random_instance(rng, 2, 25);
        const auto [f, g] = fit_all(inst.x, inst.y, inst.p);
        CHECK(rel_close(ehw(f).sigma2, oracle::ehw_sigma2(inst.x, inst.y, inst.p), 1e-10));
        CHECK(rel_close(crv(f, g, false).sigma2,
                        oracle::crv_sigma2(inst.x, inst.y, inst.p, false), 1e-10));
        CHECK(rel_close(crv(f, g, true).sigma2,
                        oracle::crv_sigma2(inst.x, inst.y, inst.p, true), 1e-10));
        CHECK(rel_close(crv2(f, g).sigma2, oracle::crv2_sigma2(inst.x, inst.y, inst.p), 1e-10));
        CHECK(rel_close(nn(f, g).sigma2, oracle::nn_sigma2(inst.x, inst.y, inst.p), 1e-10));
    }
}

TEST_CASE("bm attaches the dof to the CRV2 estimate") {
    Rng rng(67);
    const auto inst = testutil::random_instance(rng, 1);
    const auto [f, g] = fit_all(inst.x, inst.y, inst.p);
    const VarianceEstimate ve = bm(f, g);
    REQUIRE(ve.dof.has_value());
    CHECK(ve.sigma2 == crv2(f, g).sigma2);
    CHECK(*ve.dof == bm_dof(f, g));
}

TEST_CASE("mismatched grouped sample is rejected") {
    const auto [f, g] = fit_all({-2, -1, 1, 2}, {1, 2, 3, 4}, 1);
    const GroupedSample other = group(make_sample({-3, -1, 1, 2}, {1, 2, 3, 4}));
    CHECK_THROWS_AS(crv(f, other, true), std::invalid_argument);
}
