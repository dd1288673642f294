#pragma once

#include <cstdint>
#include <functional>
#include <map>

#include "tsslab/errors.hpp"
#include "tsslab/trait.hpp"
#include "tsslab/trait_key.hpp"

namespace tsslab {

// Population state: the rescaled point measure (1/K) sum of delta_{x_i},
// stored as integer counts per quantized trait atom. Counts are exact 64-bit
// bookkeeping; only observables are floating point. Atoms are kept in key
// order, which fixes the deterministic iteration order used everywhere
// (rate scans, CSV rows, replay).

class PointMeasure {
public:
    using AtomMap = std::map<TraitKey, std::int64_t>;

    PointMeasure(Quantizer quant, std::int64_t K) : quant_(std::move(quant)), K_(K) {
        if (K_ < 1) throw PreconditionError("PointMeasure: K must be positive");
    }

    std::int64_t K() const { return K_; }
    const Quantizer& quantizer() const { return quant_; }
    const AtomMap& atoms() const { return atoms_; }

    std::int64_t total_count() const { return total_; }
    std::size_t support_size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }

    std::int64_t count(const TraitPoint& x) const {
        const auto it = atoms_.find(quant_.encode(x));
        return it == atoms_.end() ? 0 : it->second;
    }

    double mass() const {
        return static_cast<double>(total_) / static_cast<double>(K_);
    }

    // <mu, f> = sum f(atom) count / K, atoms visited in key order.
    double observable(const std::function<double(const TraitPoint&)>& f) const {
        double s = 0.0;
        for (const auto& [key, n] : atoms_)
            s += f(quant_.decode(key)) * static_cast<double>(n);
        return s / static_cast<double>(K_);
    }

    void add_individual(const TraitPoint& x, std::int64_t n = 1) {
        if (n < 1) throw PreconditionError("add_individual: count must be >= 1");
        atoms_[quant_.encode(x)] += n;
        total_ += n;
    }

    void remove_individual(const TraitPoint& x) {
        const auto it = atoms_.find(quant_.encode(x));
        if (it == atoms_.end())
            throw InconsistentStateError("remove_individual: no atom at " +
                                         trait_to_string(x));
        if (--it->second == 0) atoms_.erase(it);
        --total_;
    }

    // Visits (trait, count) pairs in key order.
    void for_each(const std::function<void(const TraitPoint&, std::int64_t)>& fn) const {
        for (const auto& [key, n] : atoms_) fn(quant_.decode(key), n);
    }

    friend bool operator==(const PointMeasure& a, const PointMeasure& b) {
        return a.K_ == b.K_ && a.atoms_ == b.atoms_;
    }

private:
    Quantizer quant_;
    std::int64_t K_ = 1;
    std::int64_t total_ = 0;
    AtomMap atoms_;
};

inline double mass(const PointMeasure& mu) { return mu.mass(); }

inline double observable(const PointMeasure& mu,
                         const std::function<double(const TraitPoint&)>& f) {
    return mu.observable(f);
}

}  // namespace tsslab
