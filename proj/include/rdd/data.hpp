#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace rdd {

// One unit: running variable in cutoff-normalized units (cutoff at 0) and
// outcome. The treatment indicator 1{x >= 0} is derived, never stored.
struct Observation {
    double x = 0.0;
    double y = 0.0;
};

// Immutable random sample. Nonempty by construction.
class Sample {
  public:
    explicit Sample(std::vector<Observation> obs);

    const std::vector<Observation>& observations() const { return obs_; }
    std::size_t n() const { return obs_.size(); }
    const Observation& operator[](std::size_t i) const { return obs_[i]; }

  private:
    std::vector<Observation> obs_;
};

// Per-support-point view of a sample: the "cluster" structure when clustering
// on the running variable. Group g also keeps the row indices of its members
// in the source sample, in ascending order.
struct GroupedSample {
    std::vector<double> support;           // strictly increasing
    std::vector<std::size_t> counts;       // n_g
    std::vector<double> means;             // mean of y within group
    std::vector<double> variances;         // unbiased, divisor n_g - 1; 0 if n_g <= 1
    std::vector<std::vector<std::size_t>> rows;  // member row indices per group
    std::size_t g_minus = 0;               // support points < 0
    std::size_t g_plus = 0;                // support points >= 0
    std::size_t n = 0;                     // total observations

    std::size_t size() const { return support.size(); }
};

// Reads (x, y) columns from a CSV file (RFC-4180 style quoting, header row
// required, '.' decimal separator) and subtracts `cutoff` from x. Row order is
// preserved. Throws std::runtime_error naming the data row on any missing or
// non-finite cell.
Sample load_csv(const std::string& path, const std::string& x_column,
                const std::string& y_column, double cutoff);

// Keeps exactly the rows with |x| <= h (closed window). h = +infinity is the
// identity. Throws if the result is empty.
Sample window(const Sample& sample, double h);

// Groups by exact equality of x and computes per-group moments. x = 0 belongs
// to the treated side.
GroupedSample group(const Sample& sample);

}  // namespace rdd
