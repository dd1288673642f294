#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "tsslab/errors.hpp"
#include "tsslab/model.hpp"
#include "tsslab/point_measure.hpp"
#include "tsslab/rng.hpp"

namespace tsslab {

// Exact event-driven simulation of the individual-based process. One stepper
// instance per replicate; the atom table is kept sorted by trait key and the
// per-atom competition loads are maintained incrementally in O(S) per event.
//
// The arithmetic here is canonical and mirrored verbatim by the two-type
// chain in branching.hpp: per-atom birth rate = count * b, death rate =
// count * (d + T/K) with T the alpha-weighted count sum accumulated in key
// order, total folded left over atoms, selection scanning (birth, death) per
// atom in key order, one exponential draw for timing and one uniform for
// selection per event, plus one uniform per birth iff u_K > 0. With matched
// parameters and a shared seed the two modules consume identical randomness.

enum class EventKind { BirthClonal, BirthMutant, Death };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::BirthClonal: return "birth";
        case EventKind::BirthMutant: return "birth_mutant";
        case EventKind::Death: return "death";
    }
    return "?";
}

struct Event {
    EventKind kind = EventKind::BirthClonal;
    double time = 0.0;
    TraitPoint parent;  // acting atom (canonical decoded trait)
    TraitPoint child;   // clonal: = parent; mutant: child trait; death: empty
};

// Fresh per-atom rate table for a measure, used for reporting and as the
// cross-check oracle against the stepper's incremental bookkeeping.
struct AtomRates {
    TraitPoint trait;
    std::int64_t count = 0;
    double birth = 0.0;
    double death = 0.0;
};

struct RateTable {
    double birth_total = 0.0;
    double death_total = 0.0;
    std::vector<AtomRates> atoms;
    double total() const { return birth_total + death_total; }
};

inline RateTable total_rates(const ModelSpec& spec, const PointMeasure& mu) {
    RateTable table;
    const double Kd = static_cast<double>(mu.K());
    std::vector<TraitPoint> traits;
    std::vector<std::int64_t> counts;
    traits.reserve(mu.support_size());
    counts.reserve(mu.support_size());
    for (const auto& [key, n] : mu.atoms()) {
        traits.push_back(mu.quantizer().decode(key));
        counts.push_back(n);
    }
    for (std::size_t i = 0; i < traits.size(); ++i) {
        double load = 0.0;  // T_i = sum_j alpha(x_i, x_j) count_j, key order
        for (std::size_t j = 0; j < traits.size(); ++j)
            load += spec.alpha(traits[i], traits[j]) * static_cast<double>(counts[j]);
        AtomRates r;
        r.trait = traits[i];
        r.count = counts[i];
        r.birth = static_cast<double>(counts[i]) * spec.birth(traits[i]);
        r.death = static_cast<double>(counts[i]) *
                  (spec.death(traits[i]) + load / Kd);
        table.birth_total += r.birth;
        table.death_total += r.death;
        table.atoms.push_back(std::move(r));
    }
    return table;
}

class IbmStepper {
public:
    struct AtomState {
        TraitKey key;
        TraitPoint trait;  // canonical decoded point
        std::int64_t count = 0;
        double b = 0.0, d = 0.0, p = 0.0;
        double comp = 0.0;  // T_i, alpha-weighted count sum incl. self
    };

    IbmStepper(const ModelSpec& spec, const PointMeasure& initial)
        : spec_(&spec), quant_(spec.quantizer()), u_(spec.mutation_rate()) {
        if (initial.K() != spec.K)
            throw PreconditionError("IbmStepper: measure K does not match spec K");
        for (const auto& [key, n] : initial.atoms()) {
            AtomState a;
            a.key = key;
            a.trait = quant_.decode(key);
            a.count = n;
            a.b = spec.birth(a.trait);
            a.d = spec.death(a.trait);
            a.p = spec.mut_prob(a.trait);
            atoms_.push_back(std::move(a));
            total_count_ += n;
        }
        recompute_loads();
    }

    double time() const { return time_; }
    bool absorbed() const { return total_count_ == 0; }
    // Absorbed, or alive but rateless (possible only for degenerate specs with
    // zero rates off the validation lattice); either way no event can fire.
    bool stuck() const { return total_count_ == 0 || frozen_; }
    std::int64_t total_count() const { return total_count_; }
    std::size_t support_size() const { return atoms_.size(); }
    double mass() const {
        return static_cast<double>(total_count_) / static_cast<double>(spec_->K);
    }
    const std::vector<AtomState>& atoms() const { return atoms_; }
    const ModelSpec& spec() const { return *spec_; }

    PointMeasure to_measure() const {
        PointMeasure mu(quant_, spec_->K);
        for (const auto& a : atoms_) mu.add_individual(a.trait, a.count);
        return mu;
    }

    enum class StepKind { None, BirthClonal, BirthMutant, Death };

    // Traits of the last applied event, valid until the next step. Kept in
    // reused buffers so the hot loop performs no allocation.
    const TraitPoint& last_parent() const { return last_parent_; }
    const TraitPoint& last_child() const { return last_child_; }

    // Advances at most one event, never beyond t_limit. Returns None when the
    // population is absorbed (time frozen) or the waiting time would cross
    // t_limit (clock advanced to t_limit, event discarded — sound by
    // memorylessness of the exponential).
    StepKind step_core(double t_limit, RngStream& rng) {
        if (total_count_ == 0 || time_ >= t_limit) return StepKind::None;
        const double Kd = static_cast<double>(spec_->K);

        double total = 0.0;
        for (const AtomState& a : atoms_) {
            const double cnt = static_cast<double>(a.count);
            const double birth = cnt * a.b;
            const double death = cnt * (a.d + a.comp / Kd);
            total += birth + death;
        }
        if (!(total > 0.0)) {
            frozen_ = true;
            return StepKind::None;
        }

        const double dt = rng.exponential(total);
        if (time_ + dt > t_limit) {
            time_ = t_limit;
            return StepKind::None;
        }
        time_ += dt;

        double pick = rng.uniform() * total;
        std::size_t idx = atoms_.size();
        bool is_birth = false;
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            const AtomState& a = atoms_[i];
            const double cnt = static_cast<double>(a.count);
            const double birth = cnt * a.b;
            const double death = cnt * (a.d + a.comp / Kd);
            if (pick < birth) {
                idx = i;
                is_birth = true;
                break;
            }
            pick -= birth;
            if (pick < death) {
                idx = i;
                is_birth = false;
                break;
            }
            pick -= death;
        }
        if (idx == atoms_.size()) {
            // rounding pushed the selection past the last slot; attribute to
            // the last atom's death (measure-zero edge)
            idx = atoms_.size() - 1;
            is_birth = false;
        }

        last_parent_ = atoms_[idx].trait;
        if (is_birth) {
            bool mutant = false;
            if (u_ > 0.0) mutant = rng.uniform() < u_ * atoms_[idx].p;
            if (mutant) {
                const TraitPoint child = sample_mutant(*spec_, atoms_[idx].trait, rng);
                last_child_ = apply_birth(quant_.encode(child));
                return StepKind::BirthMutant;
            }
            last_child_ = apply_birth(atoms_[idx].key);
            return StepKind::BirthClonal;
        }
        last_child_.clear();
        apply_death(idx);
        return StepKind::Death;
    }

    std::optional<Event> step_until(double t_limit, RngStream& rng) {
        const StepKind kind = step_core(t_limit, rng);
        if (kind == StepKind::None) return std::nullopt;
        Event ev;
        ev.time = time_;
        ev.parent = last_parent_;
        ev.child = last_child_;
        switch (kind) {
            case StepKind::BirthClonal: ev.kind = EventKind::BirthClonal; break;
            case StepKind::BirthMutant: ev.kind = EventKind::BirthMutant; break;
            case StepKind::Death: ev.kind = EventKind::Death; break;
            case StepKind::None: break;
        }
        return ev;
    }

private:
    void recompute_loads() {
        for (AtomState& a : atoms_) {
            double load = 0.0;
            for (const AtomState& b : atoms_)
                load += spec_->alpha(a.trait, b.trait) * static_cast<double>(b.count);
            a.comp = load;
        }
    }

    // Adds one individual at the given key, creating the atom if needed, and
    // updates every competition load. Returns the canonical child trait
    // (reference stays valid until the next structural change).
    const TraitPoint& apply_birth(const TraitKey& key) {
        auto it = std::lower_bound(
            atoms_.begin(), atoms_.end(), key,
            [](const AtomState& a, const TraitKey& k) { return a.key < k; });
        if (it == atoms_.end() || it->key != key) {
            AtomState a;
            a.key = key;
            a.trait = quant_.decode(key);
            a.b = spec_->birth(a.trait);
            a.d = spec_->death(a.trait);
            a.p = spec_->mut_prob(a.trait);
            a.count = 0;
            it = atoms_.insert(it, std::move(a));
        }
        it->count += 1;
        ++total_count_;
        const TraitPoint& child = it->trait;
        // incremental load update: everyone feels one more individual at child
        for (AtomState& a : atoms_)
            a.comp += spec_->alpha(a.trait, child);
        // fresh fold for a newly created atom (its own load was never built)
        if (it->count == 1) {
            double load = 0.0;
            for (const AtomState& a : atoms_)
                load += spec_->alpha(child, a.trait) * static_cast<double>(a.count);
            it->comp = load;
        }
        return child;
    }

    void apply_death(std::size_t idx) {
        const TraitPoint& gone = atoms_[idx].trait;  // stable until the erase below
        for (AtomState& a : atoms_)
            a.comp -= spec_->alpha(a.trait, gone);
        atoms_[idx].count -= 1;
        --total_count_;
        if (atoms_[idx].count == 0)
            atoms_.erase(atoms_.begin() + static_cast<std::ptrdiff_t>(idx));
    }

    const ModelSpec* spec_;
    Quantizer quant_;
    std::vector<AtomState> atoms_;  // sorted by key
    double time_ = 0.0;
    double u_ = 0.0;
    std::int64_t total_count_ = 0;
    bool frozen_ = false;
    TraitPoint last_parent_;  // reused buffers, see last_parent()/last_child()
    TraitPoint last_child_;
};

// --- full-trajectory simulation --------------------------------------------

struct Appearance {
    double time = 0.0;
    TraitPoint trait;
};

struct Snapshot {
    double time = 0.0;
    PointMeasure state;
};

struct Trajectory {
    PointMeasure initial;
    PointMeasure final_state;
    std::vector<Event> events;
    std::vector<Snapshot> snapshots;
    std::vector<Appearance> appearances;  // initial support at time 0, then mutants
    double horizon = 0.0;
    double end_time = 0.0;
    bool absorbed = false;
    double absorbed_time = 0.0;
    double clock_scale = 1.0;  // 1 = raw clock; K u_K = evolutionary clock
    bool events_recorded = true;
};

struct SimulateOptions {
    int snapshots = 512;        // evenly spaced; 0 = none beyond initial/final
    bool record_events = true;
};

namespace detail {

inline Trajectory simulate_core(const ModelSpec& spec, const PointMeasure& initial,
                                double horizon, const SimulateOptions& opts,
                                RngStream& rng, double clock_scale) {
    if (!(horizon > 0.0)) throw PreconditionError("simulate: horizon must be positive");
    if (opts.snapshots < 0) throw PreconditionError("simulate: snapshots must be >= 0");

    IbmStepper stepper(spec, initial);
    Trajectory traj{initial, initial, {}, {}, {}, horizon * clock_scale};
    traj.clock_scale = clock_scale;
    traj.events_recorded = opts.record_events;
    for (const auto& [key, n] : initial.atoms())
        traj.appearances.push_back({0.0, initial.quantizer().decode(key)});

    const int grid = opts.snapshots;
    int next_snap = 1;
    auto snap_time = [&](int k) {
        return k >= grid ? horizon
                         : horizon * static_cast<double>(k) / static_cast<double>(grid);
    };

    for (;;) {
        const double bound = grid > 0 ? snap_time(next_snap) : horizon;
        auto ev = stepper.step_until(bound, rng);
        if (ev) {
            ev->time *= clock_scale;
            if (ev->kind == EventKind::BirthMutant)
                traj.appearances.push_back({ev->time, ev->child});
            if (opts.record_events) traj.events.push_back(std::move(*ev));
            continue;
        }
        if (stepper.stuck() && !traj.absorbed) {
            traj.absorbed = true;
            traj.absorbed_time = stepper.time() * clock_scale;
        }
        if (grid > 0 && (stepper.time() >= bound || stepper.stuck())) {
            // absorbed runs still fill the remaining grid with the frozen state
            traj.snapshots.push_back({snap_time(next_snap) * clock_scale,
                                      stepper.to_measure()});
            if (++next_snap > grid) break;
            continue;
        }
        if (stepper.stuck() || stepper.time() >= horizon) break;
    }
    traj.end_time = horizon * clock_scale;
    traj.final_state = stepper.to_measure();
    return traj;
}

}  // namespace detail

inline Trajectory simulate(const ModelSpec& spec, const PointMeasure& initial,
                           double horizon, RngStream& rng,
                           const SimulateOptions& opts = {}) {
    return detail::simulate_core(spec, initial, horizon, opts, rng, 1.0);
}

// Same dynamics on the compressed clock t -> t/(K u_K): the raw horizon is
// horizon_evolutionary/(K u_K) and all reported times are multiplied back.
inline Trajectory simulate_rescaled(const ModelSpec& spec, const PointMeasure& initial,
                                    double horizon_evolutionary, RngStream& rng,
                                    const SimulateOptions& opts = {}) {
    const double scale = static_cast<double>(spec.K) * spec.mutation_rate();
    if (!(scale > 0.0))
        throw PreconditionError("simulate_rescaled: needs u_K > 0 (set u_coeff)");
    return detail::simulate_core(spec, initial, horizon_evolutionary / scale, opts,
                                 rng, scale);
}

// Rebuilds the state at the end of an event list starting from a measure;
// used by replay tests and the CSV round-trip.
inline PointMeasure replay_events(const PointMeasure& initial,
                                  const std::vector<Event>& events,
                                  std::size_t upto) {
    PointMeasure mu = initial;
    for (std::size_t i = 0; i < upto && i < events.size(); ++i) {
        const Event& e = events[i];
        switch (e.kind) {
            case EventKind::BirthClonal:
            case EventKind::BirthMutant:
                mu.add_individual(e.child);
                break;
            case EventKind::Death:
                mu.remove_individual(e.parent);
                break;
        }
    }
    return mu;
}

}  // namespace tsslab
