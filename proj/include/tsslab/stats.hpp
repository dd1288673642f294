#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "tsslab/errors.hpp"

namespace tsslab {

// Small statistical toolbox: running moments, the normal quantile needed by the
// Wilson interval, the interval itself, and total-variation distance between
// distributions on a shared finite support.

class RunningStats {
public:
    void add(double x) {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }
    std::int64_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const {  // sample variance
        return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
    }
    double stddev() const { return std::sqrt(variance()); }
    double stderror() const {
        return n_ > 0 ? stddev() / std::sqrt(static_cast<double>(n_)) : 0.0;
    }

private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// Acklam's rational approximation to the standard normal quantile; relative
// error below 1.15e-9 over (0,1), ample for confidence limits.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw PreconditionError("normal_quantile: p must lie in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
    double estimate = 0.0;

    bool contains(double p) const { return lo <= p && p <= hi; }
    bool intersects(double band_lo, double band_hi) const {
        return lo <= band_hi && band_lo <= hi;
    }
};

// Wilson score interval for a binomial proportion.
inline WilsonInterval wilson_ci(std::int64_t successes, std::int64_t trials,
                                double level = 0.95) {
    if (trials <= 0) throw PreconditionError("wilson_ci: trials must be positive");
    if (successes < 0 || successes > trials)
        throw PreconditionError("wilson_ci: successes out of range");
    if (!(level > 0.0 && level < 1.0))
        throw PreconditionError("wilson_ci: level must lie in (0,1)");
    const double z = normal_quantile(0.5 + level / 2.0);
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (phat + z2 / (2.0 * n)) / denom;
    const double half =
        z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    WilsonInterval w;
    w.lo = centre - half;
    w.hi = centre + half;
    w.estimate = phat;
    if (w.lo < 0.0) w.lo = 0.0;
    if (w.hi > 1.0) w.hi = 1.0;
    return w;
}

// Total-variation distance between two probability vectors on the same support.
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size())
        throw PreconditionError("total_variation: supports differ in size");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
    return 0.5 * s;
}

}  // namespace tsslab
