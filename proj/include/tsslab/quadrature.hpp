#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "tsslab/errors.hpp"

namespace tsslab {

// Gauss-Legendre quadrature. Nodes and weights on [-1,1] are generated by
// Newton iteration on the Legendre recurrence (converges to machine precision
// in a handful of steps); diagnostics-grade accuracy is all the consumers need.

struct QuadratureRule {
    std::vector<double> nodes;    // on [-1,1], ascending
    std::vector<double> weights;
};

inline QuadratureRule gauss_legendre(int order) {
    if (order < 1) throw PreconditionError("gauss_legendre: order must be >= 1");
    const std::size_t n = static_cast<std::size_t>(order);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double pi = 3.14159265358979323846;
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        // Chebyshev-based initial guess for the i-th root (descending order).
        double x = std::cos(pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Evaluate P_n(x) and P_{n-1}(x) by upward recurrence.
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * static_cast<double>(k) - 1.0) * x * p1 -
                                   (static_cast<double>(k) - 1.0) * p0) /
                                  static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            pp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n == 1) {
        rule.nodes[0] = 0.0;
        rule.weights[0] = 2.0;
    }
    return rule;
}

// Integrate f over [a,b] with a given rule.
inline double integrate(const QuadratureRule& rule, double a, double b,
                        const std::function<double(double)>& f) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        s += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return s * half;
}

}  // namespace tsslab
