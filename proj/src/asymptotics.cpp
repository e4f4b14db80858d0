#include "rdd/asymptotics.hpp"

#include <cmath>
#include <stdexcept>

namespace rdd {

namespace {

void validate(const PopulationDesign& pd) {
    const std::size_t g = pd.size();
    if (g == 0 || pd.masses.size() != g || pd.cef.size() != g || pd.variances.size() != g)
        throw std::invalid_argument("PopulationDesign: inconsistent field lengths");
    double total = 0.0;
    std::size_t below = 0, above = 0;
    for (std::size_t i = 0; i < g; ++i) {
        if (!(pd.masses[i] > 0)) throw std::invalid_argument("PopulationDesign: masses must be positive");
        if (pd.variances[i] < 0) throw std::invalid_argument("PopulationDesign: negative variance");
        if (i + 1 < g && !(pd.support[i] < pd.support[i + 1]))
            throw std::invalid_argument("PopulationDesign: support must be strictly increasing");
        total += pd.masses[i];
        (pd.support[i] < 0 ? below : above) += 1;
    }
    if (std::abs(total - 1.0) > 1e-8)
        throw std::invalid_argument("PopulationDesign: masses must sum to 1");
    const auto need = static_cast<std::size_t>(pd.design.p + 1);
    if (below < need || above < need)
        throw std::invalid_argument("PopulationDesign: needs p+1 support points per side");
}

struct Projection {
    Eigen::MatrixXd q;
    Eigen::FullPivLU<Eigen::MatrixXd> lu;
    std::vector<Eigen::VectorXd> basis;
};

Projection make_projection(const PopulationDesign& pd) {
    validate(pd);
    const int k = pd.design.k();
    Projection pr;
    pr.q = Eigen::MatrixXd::Zero(k, k);
    pr.basis.reserve(pd.size());
    for (std::size_t g = 0; g < pd.size(); ++g) {
        pr.basis.push_back(build_basis(pd.support[g], pd.design.p));
        pr.q.noalias() += pd.masses[g] * pr.basis[g] * pr.basis[g].transpose();
    }
    pr.lu.compute(pr.q);
    if (!pr.lu.isInvertible())
        throw std::runtime_error("asymptotics: population moment matrix Q is singular");
    return pr;
}

}  // namespace

PopulationFit population_fit(const PopulationDesign& pd) {
    const Projection pr = make_projection(pd);
    const int k = pd.design.k();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
    for (std::size_t g = 0; g < pd.size(); ++g) c.noalias() += pd.masses[g] * pd.cef[g] * pr.basis[g];

    PopulationFit out;
    out.theta = pr.lu.solve(c);
    out.tau_h = out.theta(0);
    out.delta.resize(pd.size());
    for (std::size_t g = 0; g < pd.size(); ++g) out.delta[g] = pd.cef[g] - pr.basis[g].dot(out.theta);
    return out;
}

InfluenceWeights influence_weights(const PopulationDesign& pd) {
    const Projection pr = make_projection(pd);
    const Eigen::VectorXd v = pr.lu.solve(Eigen::VectorXd::Unit(pd.design.k(), 0));
    InfluenceWeights out;
    out.omega.resize(pd.size());
    for (std::size_t g = 0; g < pd.size(); ++g) {
        const double e1qm = v.dot(pr.basis[g]);
        out.omega[g] = pd.masses[g] * e1qm * e1qm;
        out.sigma2_tau += pd.variances[g] * out.omega[g];
    }
    return out;
}

FixedGExpectation fixed_g_expectation(const PopulationDesign& pd, std::size_t n_h) {
    const Projection pr = make_projection(pd);
    const PopulationFit pf = population_fit(pd);
    const InfluenceWeights iw = influence_weights(pd);
    const int k = pd.design.k();

    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(k, k);  // sum_j sigma^2_j Q_j
    for (std::size_t g = 0; g < pd.size(); ++g)
        s.noalias() += pd.variances[g] * pd.masses[g] * pr.basis[g] * pr.basis[g].transpose();

    double first = 0.0, second = 0.0, sum_omega = 0.0, trace_term = 0.0;
    bool homoskedastic = true;
    for (std::size_t g = 0; g < pd.size(); ++g) {
        const double d = std::sqrt(static_cast<double>(n_h)) * pf.delta[g];
        const double pw = pd.masses[g] * iw.omega[g];
        first += d * d * pw;
        const Eigen::VectorXd u = pr.lu.solve(pr.basis[g]);
        const double mqm = pr.basis[g].dot(u);
        second += (u.dot(s * u) - 2.0 * pd.variances[g] * mqm) * pw;
        trace_term += mqm * pw;
        sum_omega += iw.omega[g];
        if (pd.variances[g] != pd.variances[0]) homoskedastic = false;
    }

    FixedGExpectation out;
    out.e_crv_inf = iw.sigma2_tau + first + second;
    out.homoskedastic = homoskedastic;
    const double sigma2_bar = homoskedastic ? pd.variances[0] : iw.sigma2_tau / sum_omega;
    out.t1 = sigma2_bar > 0 ? first / (sigma2_bar * sum_omega) : 0.0;
    out.t2 = -trace_term / sum_omega;
    return out;
}

double large_g_value(const PopulationDesign& pd, std::size_t n) {
    const Projection pr = make_projection(pd);
    const PopulationFit pf = population_fit(pd);
    const InfluenceWeights iw = influence_weights(pd);
    const Eigen::VectorXd v = pr.lu.solve(Eigen::VectorXd::Unit(pd.design.k(), 0));

    double value = 0.0;
    for (std::size_t g = 0; g < pd.size(); ++g) {
        const double e1qm = v.dot(pr.basis[g]);
        const double omega_contrib =
            (pd.variances[g] + pf.delta[g] * pf.delta[g]) * pd.masses[g] * e1qm * e1qm;
        value += omega_contrib;
        value += (static_cast<double>(n) - 1.0) * pd.masses[g] * pf.delta[g] * pf.delta[g] * iw.omega[g];
    }
    return value;
}

DecompositionReport decompose(const PopulationDesign& pd, std::size_t reference_n) {
    const PopulationFit pf = population_fit(pd);
    const InfluenceWeights iw = influence_weights(pd);

    DecompositionReport r;
    r.theta_h = pf.theta;
    r.tau_h = pf.tau_h;
    r.delta = pf.delta;
    r.omega = iw.omega;
    r.sigma2_tau = iw.sigma2_tau;
    const double root_n = std::sqrt(static_cast<double>(reference_n));
    r.d.resize(pd.size());
    for (std::size_t g = 0; g < pd.size(); ++g) r.d[g] = root_n * pf.delta[g];
    r.b = root_n * (pf.tau_h - pd.true_tau);
    r.fixed_g = fixed_g_expectation(pd, reference_n);
    r.large_g_value = large_g_value(pd, reference_n);
    r.reference_n = reference_n;
    return r;
}

}  // namespace rdd
