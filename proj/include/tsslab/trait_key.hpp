#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <vector>

#include "tsslab/trait.hpp"

namespace tsslab {

// Canonical fixed-precision identity for trait atoms. Two points are the same
// atom iff their coordinates quantize to the same integer cell; the default
// resolution is 2^-32 of the box width per coordinate. decode() returns the
// cell centre, so decode(encode(x)) is within one quantum of x.

struct TraitKey {
    std::vector<std::uint64_t> cells;

    friend auto operator<=>(const TraitKey&, const TraitKey&) = default;
};

class Quantizer {
public:
    Quantizer() = default;
    Quantizer(Box box, int bits = 32) : box_(std::move(box)), bits_(bits) {
        if (bits_ < 1 || bits_ > 62)
            throw PreconditionError("Quantizer: bits must lie in [1,62]");
    }

    const Box& box() const { return box_; }
    int bits() const { return bits_; }

    TraitKey encode(const TraitPoint& x) const {
        const std::uint64_t cells_per_dim = std::uint64_t{1} << bits_;
        TraitKey key;
        key.cells.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double w = box_.width(i);
            double t = w > 0.0 ? (x[i] - box_.lo[i]) / w : 0.0;
            if (t < 0.0) t = 0.0;
            if (t > 1.0) t = 1.0;
            auto c = static_cast<std::uint64_t>(t * static_cast<double>(cells_per_dim));
            if (c >= cells_per_dim) c = cells_per_dim - 1;  // t == 1.0 lands in the top cell
            key.cells[i] = c;
        }
        return key;
    }

    TraitPoint decode(const TraitKey& key) const {
        const double cells_per_dim = static_cast<double>(std::uint64_t{1} << bits_);
        TraitPoint x(key.cells.size());
        for (std::size_t i = 0; i < key.cells.size(); ++i) {
            const double centre = (static_cast<double>(key.cells[i]) + 0.5) / cells_per_dim;
            x[i] = box_.lo[i] + centre * box_.width(i);
        }
        return x;
    }

    bool same_atom(const TraitPoint& a, const TraitPoint& b) const {
        return encode(a) == encode(b);
    }

private:
    Box box_;
    int bits_ = 32;
};

}  // namespace tsslab
