#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tsslab/errors.hpp"

namespace tsslab {

// A trait value is a point in a d-dimensional box. Plain vector<double>: traits
// flow through rate evaluations by the million and want no ceremony.
using TraitPoint = std::vector<double>;

inline TraitPoint make_trait(std::initializer_list<double> coords) {
    return TraitPoint(coords);
}

inline double squared_distance(const TraitPoint& a, const TraitPoint& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline std::string trait_to_string(const TraitPoint& x) {
    std::string out = "(";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(x[i]);
    }
    return out + ")";
}

// Axis-aligned compact trait space [lo_0,hi_0] x ... x [lo_{d-1},hi_{d-1}].
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t dimension() const { return lo.size(); }

    double width(std::size_t i) const { return hi[i] - lo[i]; }

    bool contains(const TraitPoint& x) const {
        if (x.size() != lo.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        return true;
    }

    // Fold a coordinate into [lo,hi] by reflection at both walls. Used by the
    // gaussian-reflected mutation kernel; exact for any displacement size.
    double reflect(std::size_t i, double v) const {
        const double a = lo[i];
        const double len = hi[i] - lo[i];
        if (len <= 0.0) return a;
        double z = std::fmod(v - a, 2.0 * len);
        if (z < 0.0) z += 2.0 * len;
        return a + (z <= len ? z : 2.0 * len - z);
    }

    TraitPoint reflect(const TraitPoint& x) const {
        TraitPoint out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = reflect(i, x[i]);
        return out;
    }

    TraitPoint clamp(const TraitPoint& x) const {
        TraitPoint out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            out[i] = x[i];
            if (out[i] < lo[i]) out[i] = lo[i];
            if (out[i] > hi[i]) out[i] = hi[i];
        }
        return out;
    }

    void validate() const {
        if (lo.empty() || lo.size() != hi.size())
            throw InvalidModelError("trait box: lo/hi must be non-empty and of equal dimension");
        for (std::size_t i = 0; i < lo.size(); ++i) {
            if (!(std::isfinite(lo[i]) && std::isfinite(hi[i])))
                throw InvalidModelError("trait box: bounds must be finite");
            if (!(lo[i] < hi[i]))
                throw InvalidModelError("trait box: lo < hi required in every coordinate");
        }
    }
};

// Evenly spaced validation lattice including both endpoints, res points per
// dimension, enumerated in row-major order.
inline std::vector<TraitPoint> lattice_points(const Box& box, int res) {
    const std::size_t d = box.dimension();
    std::vector<TraitPoint> pts;
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= static_cast<std::size_t>(res);
    pts.reserve(total);
    std::vector<int> idx(d, 0);
    for (;;) {
        TraitPoint p(d);
        for (std::size_t i = 0; i < d; ++i) {
            p[i] = res == 1 ? box.lo[i]
                            : box.lo[i] + box.width(i) * static_cast<double>(idx[i]) /
                                              static_cast<double>(res - 1);
        }
        pts.push_back(std::move(p));
        std::size_t k = d;
        while (k > 0) {
            --k;
            if (++idx[k] < res) break;
            idx[k] = 0;
            if (k == 0) return pts;
        }
        if (d == 0) return pts;
    }
}

}  // namespace tsslab
