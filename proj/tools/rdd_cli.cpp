// Command-line front end: analyze a dataset, run simulations, print population
// decompositions, and bound the smoothness constant.

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rdd/asymptotics.hpp"
#include "rdd/data.hpp"
#include "rdd/honest.hpp"
#include "rdd/montecarlo.hpp"
#include "rdd/report.hpp"
#include "rdd/smoothness.hpp"
#include "rdd/variance.hpp"

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int resolve_threads(int flag_value) {
    if (const char* env = std::getenv("RD_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return flag_value;
}

double parse_bandwidth(const std::string& text) {
    if (text == "inf" || text == "Inf" || text == "INF") return kInf;
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos == text.size() && v > 0) return v;
    } catch (const std::exception&) {
    }
    throw CLI::ValidationError("--bandwidth", "expected a positive number, 'inf' or 'bsd-optimal'");
}

std::vector<rdd::CiMethod> parse_methods(const std::string& list) {
    static const std::map<std::string, rdd::CiMethod> names = {
        {"ehw", rdd::CiMethod::EHW}, {"crv", rdd::CiMethod::CRV}, {"crv2", rdd::CiMethod::CRV2},
        {"bm", rdd::CiMethod::BM},   {"nn", rdd::CiMethod::NN},   {"bsd", rdd::CiMethod::BSD},
        {"bme", rdd::CiMethod::BME}};
    std::vector<rdd::CiMethod> methods;
    std::stringstream ss(list);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        for (auto& c : token) c = static_cast<char>(std::tolower(c));
        if (token == "all") {
            return {rdd::CiMethod::EHW, rdd::CiMethod::CRV, rdd::CiMethod::CRV2,
                    rdd::CiMethod::BM,  rdd::CiMethod::NN,  rdd::CiMethod::BSD,
                    rdd::CiMethod::BME};
        }
        const auto it = names.find(token);
        if (it == names.end())
            throw CLI::ValidationError("--methods", "unknown method '" + token + "'");
        methods.push_back(it->second);
    }
    if (methods.empty()) throw CLI::ValidationError("--methods", "method list is empty");
    return methods;
}

struct DgpChoice {
    std::string name = "linear";
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

DgpChoice resolve_dgp(const std::string& name) {
    if (name == "linear") return {"linear", 0.0, 0.0};
    if (name == "sin") return {"sin", 0.05, 0.0};
    if (name == "cos") return {"cos", 0.0, 0.05};
    throw CLI::ValidationError("--dgp", "expected one of linear, sin, cos");
}

// Minimal numeric-table reader for the decompose command (columns by name,
// no quoting needed for numeric data).
std::map<std::string, std::vector<double>> read_numeric_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("'" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> names;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) names.push_back(tok);
    }
    std::map<std::string, std::vector<double>> cols;
    for (const auto& n : names) cols[n] = {};
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        std::stringstream ss(line);
        std::string tok;
        std::size_t j = 0;
        while (std::getline(ss, tok, ',')) {
            if (j >= names.size()) break;
            try {
                cols[names[j]].push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw std::runtime_error("cannot parse '" + tok + "' in column '" + names[j] +
                                         "', row " + std::to_string(row));
            }
            ++j;
        }
        if (j != names.size())
            throw std::runtime_error("row " + std::to_string(row) + " has " + std::to_string(j) +
                                     " fields, expected " + std::to_string(names.size()));
    }
    return cols;
}

struct AnalyzeOptions {
    std::string input, x_col = "x", y_col = "y";
    double cutoff = 0.0;
    int p = 1;
    std::string bandwidth = "inf";
    std::string methods = "ehw,crv";
    double level = 0.95;
    double k = -1.0;
    bool no_stata_factor = false;
    std::string bsd_variance = "nn";
    std::string format = "table";
};

int run_analyze(const AnalyzeOptions& opt) {
    using namespace rdd;
    const auto methods = parse_methods(opt.methods);
    const auto format = parse_output_format(opt.format);
    const bool wants_bsd =
        std::find(methods.begin(), methods.end(), CiMethod::BSD) != methods.end();
    const BsdVariance bsd_var =
        opt.bsd_variance == "ehw" ? BsdVariance::EHW : BsdVariance::NN;
    if (wants_bsd && opt.k < 0)
        throw std::runtime_error("BSD requires --k (bound on the second derivative)");
    if (wants_bsd && opt.p != 1) throw std::runtime_error("BSD requires p=1");

    const Sample sample = load_csv(opt.input, opt.x_col, opt.y_col, opt.cutoff);

    std::optional<HonestResult> bsd_result;
    double h = kInf;
    if (opt.bandwidth == "bsd-optimal") {
        if (!wants_bsd)
            throw std::runtime_error("--bandwidth bsd-optimal requires the bsd method");
        BsdInput in;
        in.k = opt.k;
        in.level = opt.level;
        in.variance = bsd_var;
        bsd_result = bsd_ci(sample, in);
        h = *bsd_result->chosen_h;
    } else {
        h = parse_bandwidth(opt.bandwidth);
    }

    const Design design{opt.p, h};
    const FitResult f = fit(sample, design);
    const GroupedSample grouped = group(window(sample, h));

    AnalyzeReport report;
    report.tau = f.tau;
    report.n_h = f.n_h;
    report.g_minus = grouped.g_minus;
    report.g_plus = grouped.g_plus;
    report.h = h;
    report.p = opt.p;
    report.level = opt.level;

    for (CiMethod m : methods) {
        AnalyzeRow row;
        const auto fill_wald = [&](const VarianceEstimate& ve) {
            const ConfidenceInterval ci = wald_ci(f.tau, ve, opt.level);
            row.method = ci.method;
            row.se = ve.se;
            row.lower = ci.lower;
            row.upper = ci.upper;
            row.critical_value = ci.critical_value;
            row.dof = ve.dof;
            for (const auto& w : ve.warnings) std::cerr << "warning: " << w << "\n";
        };
        switch (m) {
            case CiMethod::EHW: fill_wald(ehw(f)); break;
            case CiMethod::CRV: fill_wald(crv(f, grouped, !opt.no_stata_factor)); break;
            case CiMethod::CRV2: fill_wald(crv2(f, grouped)); break;
            case CiMethod::BM: fill_wald(bm(f, grouped)); break;
            case CiMethod::NN: fill_wald(nn(f, grouped)); break;
            case CiMethod::BSD: {
                HonestResult hr;
                if (bsd_result) {
                    hr = *bsd_result;
                } else {
                    const VarianceEstimate ve =
                        bsd_var == BsdVariance::NN ? nn(f, grouped) : ehw(f);
                    hr = bsd_ci_fixed(f, ve, opt.k, opt.level);
                }
                row.method = "BSD";
                row.se = hr.se_used;
                row.lower = hr.ci.lower;
                row.upper = hr.ci.upper;
                row.critical_value = hr.ci.critical_value;
                row.k = opt.k;
                row.max_bias = hr.max_bias;
                row.h = hr.chosen_h;
                break;
            }
            case CiMethod::BME: {
                const HonestResult hr = bme_ci(f, grouped, opt.level);
                row.method = "BME";
                row.se = hr.ci.width() / (2.0 * hr.ci.critical_value);
                row.lower = hr.ci.lower;
                row.upper = hr.ci.upper;
                row.critical_value = hr.ci.critical_value;
                row.max_bias = hr.max_bias;
                break;
            }
        }
        report.rows.push_back(row);
    }
    std::cout << render(report, format);
    return 0;
}

struct SimulateOptions {
    std::string dgp = "linear";
    double lambda1 = 0.0, lambda2 = 0.0;
    bool lambda_set = false;
    std::vector<int> g = {5, 5};
    std::size_t n = 100;
    double noise_variance = 0.1;
    std::size_t reps = 1000;
    std::uint64_t seed = 0;
    std::string methods = "ehw,crv";
    double level = 0.95;
    double k = -1.0;
    bool no_stata_factor = false;
    std::string target = "true";
    int p = 1;
    std::string bandwidth = "inf";
    int threads = 0;
    std::string format = "table";
    std::string population;
    std::string x_col = "x", y_col = "y";
    double cutoff = 0.0;
    bool without_replacement = false;
};

int run_simulate(const SimulateOptions& opt) {
    using namespace rdd;
    RunConfig config;
    config.methods = parse_methods(opt.methods);
    const auto format = parse_output_format(opt.format);
    if (opt.reps < 1) throw CLI::ValidationError("--reps", "must be >= 1");
    config.reps = opt.reps;
    config.seed = opt.seed;
    config.level = opt.level;
    config.stata_factor = !opt.no_stata_factor;
    config.threads = resolve_threads(opt.threads);
    if (opt.target == "true")
        config.target = CoverageTarget::TrueTau;
    else if (opt.target == "tauh")
        config.target = CoverageTarget::TauH;
    else
        throw CLI::ValidationError("--target", "expected 'true' or 'tauh'");
    const bool wants_bsd =
        std::find(config.methods.begin(), config.methods.end(), CiMethod::BSD) !=
        config.methods.end();
    if (wants_bsd) {
        if (opt.k < 0) throw std::runtime_error("BSD requires --k");
        config.bsd_k = opt.k;
    }

    SimulateReport report;
    if (!opt.population.empty()) {
        PopulationFileSpec spec;
        spec.path = opt.population;
        spec.x_column = opt.x_col;
        spec.y_column = opt.y_col;
        spec.cutoff = opt.cutoff;
        spec.h = parse_bandwidth(opt.bandwidth);
        spec.n_h = opt.n;
        spec.with_replacement = !opt.without_replacement;
        config.design = Design{opt.p, spec.h};
        report.dgp = "population:" + opt.population;
        report.n = opt.n;
        report.result = run(spec, config);
    } else {
        DgpSpec spec;
        const DgpChoice choice = resolve_dgp(opt.dgp);
        spec.lambda1 = opt.lambda_set ? opt.lambda1 : choice.lambda1;
        spec.lambda2 = opt.lambda_set ? opt.lambda2 : choice.lambda2;
        if (opt.g.size() != 2) throw CLI::ValidationError("--g", "expected two counts: G+ G-");
        spec.g_plus = opt.g[0];
        spec.g_minus = opt.g[1];
        spec.n = opt.n;
        spec.noise_variance = opt.noise_variance;
        config.design = Design{opt.p, parse_bandwidth(opt.bandwidth)};
        report.dgp = opt.lambda_set ? "custom" : choice.name;
        report.g_plus = spec.g_plus;
        report.g_minus = spec.g_minus;
        report.n = opt.n;
        report.result = run(spec, config);
    }
    std::cout << render(report, format);
    return 0;
}

struct DecomposeOptions {
    std::string dgp = "linear";
    double lambda1 = 0.0, lambda2 = 0.0;
    bool lambda_set = false;
    std::vector<int> g = {5, 5};
    double noise_variance = 0.1;
    std::size_t n = 10000;
    int p = 1;
    std::string table;
    std::string format = "table";
};

int run_decompose(const DecomposeOptions& opt) {
    using namespace rdd;
    PopulationDesign pd;
    if (!opt.table.empty()) {
        auto cols = read_numeric_csv(opt.table);
        for (const char* name : {"x", "mass", "mu", "sigma2"})
            if (cols.find(name) == cols.end())
                throw std::runtime_error("decompose table needs column '" + std::string(name) + "'");
        pd.support = cols["x"];
        pd.masses = cols["mass"];
        pd.cef = cols["mu"];
        pd.variances = cols["sigma2"];
        pd.design = Design{opt.p, kInf};
    } else {
        DgpSpec spec;
        const DgpChoice choice = resolve_dgp(opt.dgp);
        spec.lambda1 = opt.lambda_set ? opt.lambda1 : choice.lambda1;
        spec.lambda2 = opt.lambda_set ? opt.lambda2 : choice.lambda2;
        if (opt.g.size() != 2) throw CLI::ValidationError("--g", "expected two counts: G+ G-");
        spec.g_plus = opt.g[0];
        spec.g_minus = opt.g[1];
        spec.noise_variance = opt.noise_variance;
        pd = spec.to_population(Design{opt.p, kInf});
    }
    DecomposeReport report;
    report.decomposition = decompose(pd, opt.n);
    report.true_tau = pd.true_tau;
    std::cout << render(report, parse_output_format(opt.format));
    return 0;
}

struct BoundOptions {
    std::string input, x_col = "x", y_col = "y";
    double cutoff = 0.0;
    std::string bandwidth = "inf";
    std::size_t s = 2;
    double level = 0.95;
    std::uint64_t seed = 0;
    std::size_t draws = 100000;
    std::string format = "table";
};

int run_bound(const BoundOptions& opt) {
    using namespace rdd;
    const Sample sample =
        window(load_csv(opt.input, opt.x_col, opt.y_col, opt.cutoff), parse_bandwidth(opt.bandwidth));
    const GroupedSample grouped = group(sample);
    SmoothnessReport report;
    report.bound = k_lower_bound(grouped, opt.s, opt.level, opt.seed, opt.draws);
    std::cout << render(report, parse_output_format(opt.format));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Estimation and honest inference for sharp regression discontinuity designs "
                 "with a discrete running variable"};
    app.require_subcommand(1);

    AnalyzeOptions an;
    auto* analyze = app.add_subcommand("analyze", "Estimate the jump and report CIs for a dataset");
    analyze->add_option("--input", an.input, "CSV file")->required();
    analyze->add_option("--x-col", an.x_col, "running variable column");
    analyze->add_option("--y-col", an.y_col, "outcome column");
    analyze->add_option("--cutoff", an.cutoff, "cutoff value subtracted from x");
    analyze->add_option("-p,--order", an.p, "polynomial order");
    analyze->add_option("--bandwidth", an.bandwidth, "number, 'inf' or 'bsd-optimal'");
    analyze->add_option("--methods", an.methods, "comma list: ehw,crv,crv2,bm,nn,bsd,bme or all");
    analyze->add_option("--level", an.level, "nominal coverage");
    analyze->add_option("--k", an.k, "second-derivative bound for BSD");
    analyze->add_flag("--no-stata-factor", an.no_stata_factor, "drop the CRV finite-cluster factor");
    analyze->add_option("--bsd-variance", an.bsd_variance, "nn or ehw")
        ->check(CLI::IsMember({"nn", "ehw"}));
    analyze->add_option("--format", an.format, "table, json or csv");

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo study of the CI methods");
    simulate->add_option("--dgp", sim.dgp, "linear, sin or cos");
    simulate->add_option("--lambda1", sim.lambda1, "sine amplitude")->each([&](const std::string&) {
        sim.lambda_set = true;
    });
    simulate->add_option("--lambda2", sim.lambda2, "cosine amplitude")->each([&](const std::string&) {
        sim.lambda_set = true;
    });
    simulate->add_option("--g", sim.g, "support counts: G+ G-")->expected(2);
    simulate->add_option("--n", sim.n, "sample size per replication");
    simulate->add_option("--noise-variance", sim.noise_variance, "outcome noise variance");
    simulate->add_option("--reps", sim.reps, "replications");
    simulate->add_option("--seed", sim.seed, "master seed");
    simulate->add_option("--methods", sim.methods, "comma list or all");
    simulate->add_option("--level", sim.level, "nominal coverage");
    simulate->add_option("--k", sim.k, "second-derivative bound for BSD");
    simulate->add_flag("--no-stata-factor", sim.no_stata_factor, "drop the CRV factor");
    simulate->add_option("--target", sim.target, "coverage target: true or tauh");
    simulate->add_option("-p,--order", sim.p, "polynomial order");
    simulate->add_option("--bandwidth", sim.bandwidth, "number or 'inf'");
    simulate->add_option("--threads", sim.threads, "worker count (0 = hardware)");
    simulate->add_option("--format", sim.format, "table, json or csv");
    simulate->add_option("--population", sim.population, "population CSV for resampling");
    simulate->add_option("--x-col", sim.x_col, "running variable column");
    simulate->add_option("--y-col", sim.y_col, "outcome column");
    simulate->add_option("--cutoff", sim.cutoff, "cutoff for the population file");
    simulate->add_flag("--without-replacement", sim.without_replacement,
                       "draw without replacement");

    DecomposeOptions dec;
    auto* decompose_cmd = app.add_subcommand("decompose", "Population-level variance decomposition");
    decompose_cmd->add_option("--dgp", dec.dgp, "linear, sin or cos");
    decompose_cmd->add_option("--lambda1", dec.lambda1, "sine amplitude")
        ->each([&](const std::string&) { dec.lambda_set = true; });
    decompose_cmd->add_option("--lambda2", dec.lambda2, "cosine amplitude")
        ->each([&](const std::string&) { dec.lambda_set = true; });
    decompose_cmd->add_option("--g", dec.g, "support counts: G+ G-")->expected(2);
    decompose_cmd->add_option("--noise-variance", dec.noise_variance, "outcome noise variance");
    decompose_cmd->add_option("--n", dec.n, "reference sample size");
    decompose_cmd->add_option("-p,--order", dec.p, "polynomial order");
    decompose_cmd->add_option("--table", dec.table,
                              "explicit population CSV with columns x,mass,mu,sigma2");
    decompose_cmd->add_option("--format", dec.format, "table, json or csv");

    BoundOptions bnd;
    auto* bound = app.add_subcommand("bound-smoothness", "Lower bound for the smoothness constant");
    bound->add_option("--input", bnd.input, "CSV file")->required();
    bound->add_option("--x-col", bnd.x_col, "running variable column");
    bound->add_option("--y-col", bnd.y_col, "outcome column");
    bound->add_option("--cutoff", bnd.cutoff, "cutoff value");
    bound->add_option("--bandwidth", bnd.bandwidth, "number or 'inf'");
    bound->add_option("--s", bnd.s, "support points per block");
    bound->add_option("--level", bnd.level, "one-sided confidence level");
    bound->add_option("--seed", bnd.seed, "simulation seed");
    bound->add_option("--draws", bnd.draws, "sup-t simulation draws");
    bound->add_option("--format", bnd.format, "table, json or csv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(analyze)) return run_analyze(an);
        if (app.got_subcommand(simulate)) return run_simulate(sim);
        if (app.got_subcommand(decompose_cmd)) return run_decompose(dec);
        if (app.got_subcommand(bound)) return run_bound(bnd);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
