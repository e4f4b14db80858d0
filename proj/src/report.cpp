#include "rdd/report.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rdd {

namespace {

using Json = nlohmann::ordered_json;

// 17 significant digits: parse -> print round-trips exactly.
std::string num17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string num6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string render_table(const std::vector<std::vector<std::string>>& cells) {
    std::vector<std::size_t> widths;
    for (const auto& row : cells) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (std::size_t j = 0; j < row.size(); ++j) widths[j] = std::max(widths[j], row[j].size());
    }
    std::ostringstream out;
    for (const auto& row : cells) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out << "  ";
            out << pad(row[j], widths[j]);
        }
        out << "\n";
    }
    return out.str();
}

std::string csv_line(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t j = 0; j < fields.size(); ++j) {
        if (j) line += ",";
        line += fields[j];
    }
    return line + "\n";
}

std::string opt_str(const std::optional<double>& v, const std::string& absent) {
    return v ? num6(*v) : absent;
}

}  // namespace

OutputFormat parse_output_format(const std::string& name) {
    if (name == "table") return OutputFormat::Table;
    if (name == "json") return OutputFormat::Json;
    if (name == "csv") return OutputFormat::Csv;
    throw std::invalid_argument("unknown output format '" + name + "'");
}

std::string render(const AnalyzeReport& r, OutputFormat format) {
    if (format == OutputFormat::Json) {
        Json j;
        j["tau"] = r.tau;
        j["n_h"] = r.n_h;
        j["g_minus"] = r.g_minus;
        j["g_plus"] = r.g_plus;
        j["h"] = r.h;
        j["p"] = r.p;
        j["level"] = r.level;
        j["methods"] = Json::array();
        for (const auto& row : r.rows) {
            Json m;
            m["method"] = row.method;
            m["se"] = row.se;
            m["ci_lower"] = row.lower;
            m["ci_upper"] = row.upper;
            m["critical_value"] = row.critical_value;
            if (row.dof) m["dof"] = *row.dof;
            if (row.k) m["k"] = *row.k;
            if (row.max_bias) m["max_bias"] = *row.max_bias;
            if (row.h) m["h"] = *row.h;
            j["methods"].push_back(m);
        }
        return j.dump(2) + "\n";
    }
    if (format == OutputFormat::Csv) {
        std::string out = csv_line({"method", "se", "ci_lower", "ci_upper", "critical_value",
                                    "dof", "k", "max_bias", "h"});
        for (const auto& row : r.rows)
            out += csv_line({row.method, num17(row.se), num17(row.lower), num17(row.upper),
                             num17(row.critical_value), row.dof ? num17(*row.dof) : "",
                             row.k ? num17(*row.k) : "", row.max_bias ? num17(*row.max_bias) : "",
                             row.h ? num17(*row.h) : ""});
        return out;
    }

    std::ostringstream head;
    head << "tau_hat = " << num6(r.tau) << "   N_h = " << r.n_h << "   G- = " << r.g_minus
         << "   G+ = " << r.g_plus << "   p = " << r.p << "   h = " << num6(r.h)
         << "   level = " << num6(r.level) << "\n\n";
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"method", "SE", "CI lower", "CI upper", "crit", "dof", "K", "max bias", "h"});
    for (const auto& row : r.rows)
        cells.push_back({row.method, num6(row.se), num6(row.lower), num6(row.upper),
                         num6(row.critical_value), opt_str(row.dof, "-"), opt_str(row.k, "-"),
                         opt_str(row.max_bias, "-"), opt_str(row.h, "-")});
    return head.str() + render_table(cells);
}

std::string render(const SimulateReport& r, OutputFormat format) {
    const auto& res = r.result;
    if (format == OutputFormat::Json) {
        Json j;
        j["dgp"] = r.dgp;
        j["g_plus"] = r.g_plus;
        j["g_minus"] = r.g_minus;
        j["n"] = r.n;
        j["reps"] = res.reps;
        j["seed"] = res.seed;
        j["level"] = res.level;
        j["target_value"] = res.target_value;
        j["mean_tau"] = res.mean_tau;
        j["sd_tau"] = res.sd_tau;
        j["methods"] = Json::array();
        for (const auto& m : res.methods) {
            Json mj;
            mj["method"] = to_string(m.method);
            mj["avg_normalized_se"] = m.avg_normalized_se;
            mj["coverage"] = m.coverage;
            mj["mean_sigma2"] = m.mean_sigma2;
            j["methods"].push_back(mj);
        }
        if (res.rate_crv_gt_ehw) j["rate_crv_gt_ehw"] = *res.rate_crv_gt_ehw;
        return j.dump(2) + "\n";
    }
    if (format == OutputFormat::Csv) {
        std::vector<std::string> header = {"dgp",  "g_plus", "g_minus", "n",
                                           "reps", "seed",   "target_value", "sd_tau"};
        std::vector<std::string> row = {r.dgp,
                                        std::to_string(r.g_plus),
                                        std::to_string(r.g_minus),
                                        std::to_string(r.n),
                                        std::to_string(res.reps),
                                        std::to_string(res.seed),
                                        num17(res.target_value),
                                        num17(res.sd_tau)};
        for (const auto& m : res.methods) {
            header.push_back("se_" + to_string(m.method));
            row.push_back(num17(m.avg_normalized_se));
        }
        for (const auto& m : res.methods) {
            header.push_back("cov_" + to_string(m.method));
            row.push_back(num17(m.coverage));
        }
        if (res.rate_crv_gt_ehw) {
            header.push_back("rate_crv_gt_ehw");
            row.push_back(num17(*res.rate_crv_gt_ehw));
        }
        return csv_line(header) + csv_line(row);
    }

    std::ostringstream head;
    head << "dgp = " << r.dgp << "   (G+, G-, N) = (" << r.g_plus << ", " << r.g_minus << ", "
         << r.n << ")   reps = " << res.reps << "   seed = " << res.seed << "\n"
         << "target = " << num6(res.target_value) << "   mean(tau_hat) = " << num6(res.mean_tau)
         << "   sd(tau_hat) = " << num6(res.sd_tau) << "\n\n";
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"method", "avg norm SE", "coverage"});
    for (const auto& m : res.methods)
        cells.push_back({to_string(m.method), num6(m.avg_normalized_se), num6(m.coverage)});
    std::string tail;
    if (res.rate_crv_gt_ehw)
        tail = "\nrate CRV SE > EHW SE: " + num6(*res.rate_crv_gt_ehw) + "\n";
    return head.str() + render_table(cells) + tail;
}

std::string render(const SmoothnessReport& r, OutputFormat format) {
    const auto& b = r.bound;
    if (format == OutputFormat::Json) {
        Json j;
        j["k_point"] = b.k_point;
        j["k_lower"] = b.k_lower;
        j["level"] = b.level;
        j["s"] = b.s;
        j["sup_t"] = b.sup_t;
        j["triples"] = Json::array();
        for (const auto& [d, sd] : b.triples) {
            Json t;
            t["delta_hat"] = d;
            t["sd"] = sd;
            j["triples"].push_back(t);
        }
        return j.dump(2) + "\n";
    }
    if (format == OutputFormat::Csv) {
        std::string out = csv_line({"k_point", "k_lower", "level", "s", "sup_t", "n_triples"});
        out += csv_line({num17(b.k_point), num17(b.k_lower), num17(b.level), std::to_string(b.s),
                         num17(b.sup_t), std::to_string(b.triples.size())});
        return out;
    }
    std::ostringstream out;
    out << "smoothness bound (s = " << b.s << ", level = " << num6(b.level) << ")\n"
        << "K point estimate: " << num6(b.k_point) << "\n"
        << "K lower bound:    " << num6(b.k_lower) << "   (CI [" << num6(b.k_lower) << ", inf))\n"
        << "sup-t statistic:  " << num6(b.sup_t) << "\n\n";
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"triple", "delta_hat", "sd"});
    for (std::size_t i = 0; i < b.triples.size(); ++i)
        cells.push_back({std::to_string(i + 1), num6(b.triples[i].first), num6(b.triples[i].second)});
    return out.str() + render_table(cells);
}

std::string render(const DecomposeReport& r, OutputFormat format) {
    const auto& d = r.decomposition;
    if (format == OutputFormat::Json) {
        Json j;
        j["tau_h"] = d.tau_h;
        j["true_tau"] = r.true_tau;
        j["b"] = d.b;
        j["sigma2_tau"] = d.sigma2_tau;
        j["t1"] = d.fixed_g.t1;
        j["t2"] = d.fixed_g.t2;
        j["homoskedastic"] = d.fixed_g.homoskedastic;
        j["e_crv_inf"] = d.fixed_g.e_crv_inf;
        j["large_g_value"] = d.large_g_value;
        j["reference_n"] = d.reference_n;
        j["theta_h"] = Json::array();
        for (Eigen::Index i = 0; i < d.theta_h.size(); ++i) j["theta_h"].push_back(d.theta_h(i));
        j["delta"] = d.delta;
        j["omega"] = d.omega;
        j["d"] = d.d;
        return j.dump(2) + "\n";
    }
    if (format == OutputFormat::Csv) {
        std::string out = csv_line({"tau_h", "b", "sigma2_tau", "t1", "t2", "e_crv_inf",
                                    "large_g_value", "reference_n", "homoskedastic"});
        out += csv_line({num17(d.tau_h), num17(d.b), num17(d.sigma2_tau), num17(d.fixed_g.t1),
                         num17(d.fixed_g.t2), num17(d.fixed_g.e_crv_inf), num17(d.large_g_value),
                         std::to_string(d.reference_n), d.fixed_g.homoskedastic ? "1" : "0"});
        return out;
    }
    std::ostringstream out;
    out << "population decomposition at reference N_h = " << d.reference_n << "\n"
        << "tau_h = " << num6(d.tau_h) << "   b = sqrt(N_h)(tau_h - tau) = " << num6(d.b) << "\n"
        << "sigma2_tau = " << num6(d.sigma2_tau) << "\n"
        << "T1 = " << num6(d.fixed_g.t1) << "   T2 = " << num6(d.fixed_g.t2)
        << (d.fixed_g.homoskedastic ? "" : "   (heteroskedastic: T1/T2 approximate)") << "\n"
        << "predicted CRV/EHW variance ratio (fixed G): " << num6(1.0 + d.fixed_g.t1 + d.fixed_g.t2)
        << "\n"
        << "E[sigma2_CRV,inf] = " << num6(d.fixed_g.e_crv_inf) << "\n"
        << "large-G value at N = " << d.reference_n << ": " << num6(d.large_g_value) << "\n\n";
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"g", "delta", "omega", "d"});
    for (std::size_t g = 0; g < d.delta.size(); ++g)
        cells.push_back({std::to_string(g + 1), num6(d.delta[g]), num6(d.omega[g]), num6(d.d[g])});
    return out.str() + render_table(cells);
}

}  // namespace rdd
