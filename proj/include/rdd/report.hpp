#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rdd/asymptotics.hpp"
#include "rdd/montecarlo.hpp"
#include "rdd/smoothness.hpp"

namespace rdd {

enum class OutputFormat { Table, Json, Csv };

OutputFormat parse_output_format(const std::string& name);

// One method's line in the analyze report.
struct AnalyzeRow {
    std::string method;
    double se = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double critical_value = 0.0;
    std::optional<double> dof;
    std::optional<double> k;
    std::optional<double> max_bias;
    std::optional<double> h;  // BSD's chosen bandwidth
};

struct AnalyzeReport {
    double tau = 0.0;
    std::size_t n_h = 0;
    std::size_t g_minus = 0;
    std::size_t g_plus = 0;
    double h = 0.0;
    int p = 1;
    double level = 0.95;
    std::vector<AnalyzeRow> rows;
};

struct SimulateReport {
    std::string dgp;
    int g_plus = 0;
    int g_minus = 0;
    std::size_t n = 0;
    SimulationResult result;
};

struct SmoothnessReport {
    SmoothnessBound bound;
};

struct DecomposeReport {
    DecompositionReport decomposition;
    double true_tau = 0.0;
};

std::string render(const AnalyzeReport& r, OutputFormat format);
std::string render(const SimulateReport& r, OutputFormat format);
std::string render(const SmoothnessReport& r, OutputFormat format);
std::string render(const DecomposeReport& r, OutputFormat format);

}  // namespace rdd
