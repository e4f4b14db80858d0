#pragma once

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace rdd {

inline double normal_cdf(double x) {
    static const boost::math::normal_distribution<double> n01;
    return boost::math::cdf(n01, x);
}

inline double normal_quantile(double p) {
    static const boost::math::normal_distribution<double> n01;
    return boost::math::quantile(n01, p);
}

inline double student_t_quantile(double dof, double p) {
    const boost::math::students_t_distribution<double> t(dof);
    return boost::math::quantile(t, p);
}

}  // namespace rdd
