#include "rdd/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rdd {

Sample::Sample(std::vector<Observation> obs) : obs_(std::move(obs)) {
    if (obs_.empty()) throw std::invalid_argument("Sample: needs at least one observation");
    for (std::size_t i = 0; i < obs_.size(); ++i) {
        if (!std::isfinite(obs_[i].x) || !std::isfinite(obs_[i].y))
            throw std::invalid_argument("Sample: non-finite value at row " + std::to_string(i + 1));
    }
}

namespace {

// Splits one CSV record. Quoted fields may contain commas, doubled quotes and
// are not unescaped beyond that.
std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, const std::string& column, std::size_t data_row) {
    const std::string cell = trim(raw);
    const std::string where = "column '" + column + "', row " + std::to_string(data_row);
    if (cell.empty()) throw std::runtime_error("load_csv: empty cell in " + where);
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw std::runtime_error("load_csv: cannot parse '" + cell + "' in " + where);
    if (!std::isfinite(value))
        throw std::runtime_error("load_csv: non-finite value in " + where);
    return value;
}

}  // namespace

Sample load_csv(const std::string& path, const std::string& x_column,
                const std::string& y_column, double cutoff) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: '" + path + "' is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    const auto header = split_record(line);
    std::ptrdiff_t xi = -1, yi = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        const std::string name = trim(header[j]);
        if (name == x_column) xi = static_cast<std::ptrdiff_t>(j);
        if (name == y_column) yi = static_cast<std::ptrdiff_t>(j);
    }
    if (xi < 0) throw std::runtime_error("load_csv: column '" + x_column + "' not found in '" + path + "'");
    if (yi < 0) throw std::runtime_error("load_csv: column '" + y_column + "' not found in '" + path + "'");

    std::vector<Observation> obs;
    std::size_t data_row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++data_row;
        const auto fields = split_record(line);
        if (static_cast<std::size_t>(std::max(xi, yi)) >= fields.size())
            throw std::runtime_error("load_csv: too few fields in row " + std::to_string(data_row));
        const double x = parse_cell(fields[static_cast<std::size_t>(xi)], x_column, data_row);
        const double y = parse_cell(fields[static_cast<std::size_t>(yi)], y_column, data_row);
        obs.push_back({x - cutoff, y});
    }
    if (obs.empty()) throw std::runtime_error("load_csv: no data rows in '" + path + "'");
    return Sample(std::move(obs));
}

Sample window(const Sample& sample, double h) {
    if (!(h > 0)) throw std::invalid_argument("window: h must be positive");
    std::vector<Observation> kept;
    kept.reserve(sample.n());
    for (const auto& o : sample.observations())
        if (std::abs(o.x) <= h) kept.push_back(o);
    if (kept.empty())
        throw std::runtime_error("window: no observations with |x| <= " + std::to_string(h));
    return Sample(std::move(kept));
}

GroupedSample group(const Sample& sample) {
    const auto& obs = sample.observations();
    std::vector<std::size_t> order(obs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (obs[a].x != obs[b].x) return obs[a].x < obs[b].x;
        return a < b;
    });

    GroupedSample g;
    g.n = obs.size();
    std::size_t i = 0;
    while (i < order.size()) {
        const double x = obs[order[i]].x;
        std::size_t j = i;
        while (j < order.size() && obs[order[j]].x == x) ++j;

        std::vector<std::size_t> members(order.begin() + static_cast<std::ptrdiff_t>(i),
                                         order.begin() + static_cast<std::ptrdiff_t>(j));
        const std::size_t ng = members.size();
        double mean = 0.0;
        for (std::size_t r : members) mean += obs[r].y;
        mean /= static_cast<double>(ng);
        double ss = 0.0;
        for (std::size_t r : members) {
            const double d = obs[r].y - mean;
            ss += d * d;
        }
        g.support.push_back(x);
        g.counts.push_back(ng);
        g.means.push_back(mean);
        g.variances.push_back(ng > 1 ? ss / static_cast<double>(ng - 1) : 0.0);
        g.rows.push_back(std::move(members));
        if (x < 0)
            ++g.g_minus;
        else
            ++g.g_plus;
        i = j;
    }
    return g;
}

}  // namespace rdd
