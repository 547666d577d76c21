#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

namespace tsregret::truncnorm {

inline constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343818684758586311649;

inline double std_pdf(double z) { return inv_sqrt_2pi * std::exp(-0.5 * z * z); }

/// Lower-tail standard normal CDF.
inline double std_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Upper-tail standard normal CDF, accurate for large positive z.
inline double std_ccdf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

inline double std_quantile(double p) {
    p = std::clamp(p, std::numeric_limits<double>::min(), 1.0 - std::numeric_limits<double>::epsilon() / 2);
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

/// Probability mass of N(0,1) on [a, b], computed on the side of the
/// distribution that avoids cancellation.
inline double std_mass(double a, double b) {
    if (a >= 0.0) return std_ccdf(a) - std_ccdf(b);
    if (b <= 0.0) return std_cdf(b) - std_cdf(a);
    return 1.0 - std_cdf(a) - std_ccdf(b);
}

/// Standardized truncation bounds of N(mean, variance) on [lo, hi].
struct Standardized {
    double sigma;
    double a;
    double b;
    double mass;
};

inline Standardized standardize(double mean, double variance, double lo, double hi) {
    const double sigma = std::sqrt(variance);
    const double a = (lo - mean) / sigma;
    const double b = (hi - mean) / sigma;
    return {sigma, a, b, std_mass(a, b)};
}

inline double mean(double mean, double variance, double lo, double hi) {
    const auto st = standardize(mean, variance, lo, hi);
    return mean + st.sigma * (std_pdf(st.a) - std_pdf(st.b)) / st.mass;
}

/// Log density of the renormalized truncated normal; -inf outside [lo, hi].
inline double log_pdf(double mean, double variance, double lo, double hi, double r) {
    if (!(r >= lo && r <= hi)) return -std::numeric_limits<double>::infinity();
    const auto st = standardize(mean, variance, lo, hi);
    const double z = (r - mean) / st.sigma;
    return -0.5 * z * z - std::log(st.sigma) - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(st.mass);
}

/// Inverse-CDF draw from a uniform u in [0, 1). Works on whichever tail keeps
/// the CDF values away from 1 so that far-tail truncations stay accurate.
inline double from_uniform(double mean, double variance, double lo, double hi, double u) {
    const auto st = standardize(mean, variance, lo, hi);
    double z;
    if (st.a >= 0.0) {
        const double ql = std_ccdf(st.b);
        const double qh = std_ccdf(st.a);
        z = -std_quantile(ql + u * (qh - ql));
    } else {
        const double pl = std_cdf(st.a);
        const double ph = std_cdf(st.b);
        z = std_quantile(pl + u * (ph - pl));
    }
    return std::clamp(mean + st.sigma * z, lo, hi);
}

}  // namespace tsregret::truncnorm
