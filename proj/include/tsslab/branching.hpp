#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsslab/errors.hpp"
#include "tsslab/model.hpp"
#include "tsslab/rng.hpp"

namespace tsslab {

// Linear birth-death branching processes and the two-type density-dependent
// chain, used both as analytic oracles (extinction probabilities, exit
// bounds, martingale identities) and as pathwise coupling partners for the
// individual-based engine.

// --- one-type linear branching ---------------------------------------------

struct BranchingLaw {
    double birth = 0.0;          // per-capita
    double death = 0.0;          // per-capita; ignored when death_infinite
    bool death_infinite = false; // encodes the identically-zero process
    std::int64_t initial = 0;

    static BranchingLaw zero_process() {
        BranchingLaw law;
        law.death_infinite = true;
        return law;
    }
};

// P(eventual extinction) = min(1, d/b)^n; 1 whenever d >= b or b = 0 with
// individuals present; 0 for a pure-birth process with individuals.
inline double extinction_probability(const BranchingLaw& law) {
    if (law.initial < 0)
        throw PreconditionError("extinction_probability: initial count must be >= 0");
    if (law.initial == 0) return 1.0;
    if (law.death_infinite) return 1.0;
    if (!(law.birth >= 0.0) || !(law.death >= 0.0))
        throw PreconditionError("extinction_probability: rates must be nonnegative");
    if (law.birth == 0.0) return 1.0;
    if (law.death == 0.0) return 0.0;
    const double ratio = law.death / law.birth;
    if (ratio >= 1.0) return 1.0;
    return std::pow(ratio, static_cast<double>(law.initial));
}

// Large-deviation exit bound for a density-K linear chain: probability of
// climbing by K*eps against a downward drift (b < d), or of dropping by K*eps
// against an upward drift (b > d), is at most exp(-K eps |log(d/b)|).
inline double exit_bound(double b, double d, std::int64_t K, double eps) {
    if (!(b > 0.0) || !(d > 0.0))
        throw PreconditionError("exit_bound: rates must be positive");
    if (b == d) throw PreconditionError("exit_bound: inapplicable when b = d");
    if (K < 1) throw PreconditionError("exit_bound: K must be positive");
    if (!(eps >= 0.0)) throw PreconditionError("exit_bound: eps must be >= 0");
    const double log_ratio = b < d ? std::log(d / b) : std::log(b / d);
    return std::exp(-static_cast<double>(K) * eps * log_ratio);
}

struct StopSpec {
    std::optional<std::int64_t> upper;  // stop when count >= upper
    std::optional<double> horizon;      // stop at this time
};

enum class BranchingExit { Extinct, Upper, Horizon, Frozen };

inline const char* to_string(BranchingExit e) {
    switch (e) {
        case BranchingExit::Extinct: return "extinct";
        case BranchingExit::Upper: return "upper";
        case BranchingExit::Horizon: return "horizon";
        case BranchingExit::Frozen: return "frozen";
    }
    return "?";
}

struct BranchingStep {
    double time = 0.0;
    int delta = 0;  // +1 birth, -1 death
};

struct BranchingPath {
    std::int64_t initial = 0;
    std::vector<BranchingStep> steps;  // empty when record_steps = false
    BranchingExit exit = BranchingExit::Horizon;
    double exit_time = 0.0;
    std::int64_t final_count = 0;

    // State at time t (requires recorded steps).
    std::int64_t count_at(double t) const {
        std::int64_t n = initial;
        for (const auto& s : steps) {
            if (s.time > t) break;
            n += s.delta;
        }
        return n;
    }
};

inline BranchingPath simulate_branching(const BranchingLaw& law, const StopSpec& stop,
                                        RngStream& rng, bool record_steps = true) {
    if (law.initial < 0)
        throw PreconditionError("simulate_branching: initial count must be >= 0");
    if (!stop.upper && !stop.horizon && !law.death_infinite && law.death < law.birth)
        throw PreconditionError(
            "simulate_branching: a supercritical law needs an upper level or horizon");

    BranchingPath path;
    if (law.death_infinite) {
        // identically-zero process, regardless of the nominal initial count
        path.initial = 0;
        path.exit = BranchingExit::Extinct;
        return path;
    }
    path.initial = law.initial;
    std::int64_t n = law.initial;
    double t = 0.0;
    for (;;) {
        if (n == 0) {
            path.exit = BranchingExit::Extinct;
            break;
        }
        if (stop.upper && n >= *stop.upper) {
            path.exit = BranchingExit::Upper;
            break;
        }
        const double total = static_cast<double>(n) * (law.birth + law.death);
        if (!(total > 0.0)) {
            path.exit = BranchingExit::Frozen;
            if (stop.horizon) {
                t = *stop.horizon;
                path.exit = BranchingExit::Horizon;
            }
            break;
        }
        const double dt = rng.exponential(total);
        if (stop.horizon && t + dt > *stop.horizon) {
            t = *stop.horizon;
            path.exit = BranchingExit::Horizon;
            break;
        }
        t += dt;
        const bool is_birth = rng.uniform() * (law.birth + law.death) < law.birth;
        n += is_birth ? 1 : -1;
        if (record_steps) path.steps.push_back({t, is_birth ? 1 : -1});
    }
    path.exit_time = t;
    path.final_count = n;
    return path;
}

// --- two-type density-dependent chain --------------------------------------

// Transition rates, in individuals (m residents of type 1, n of type 2):
//   m -> m+1 at m b1               n -> n+1 at n b2
//   m -> m-1 at m d1(m,n)         n -> n-1 at n d2(m,n)
// with per-capita deaths d_i(m,n) = d_i0 + (a_i1 m + a_i2 n)/K.
//
// The arithmetic mirrors IbmStepper exactly (see the note there): with
// matched parameters, u_K = 0 and a shared seed, step_until produces
// bit-identical event times and kinds.

struct TwoTypeChain {
    double b1 = 0.0, b2 = 0.0;
    double d1_0 = 0.0, d2_0 = 0.0;
    double a11 = 1.0, a12 = 1.0, a21 = 1.0, a22 = 1.0;
    std::int64_t K = 1;
    std::int64_t m0 = 0, n0 = 0;
    // exit region S = [A,B) x [C,D), in individuals; defaults stop when a
    // type dies out
    double A = 1.0;
    double B = std::numeric_limits<double>::infinity();
    double C = 1.0;
    double D = std::numeric_limits<double>::infinity();

    // Builds the chain for the (x,y) pair with rates evaluated at the
    // canonical quantized traits, so they are bit-equal to the engine's. The
    // engine scans atoms in key order; to share an event construction the
    // resident must come first, hence the key-order requirement.
    static TwoTypeChain from_spec(const ModelSpec& spec, const TraitPoint& x,
                                  const TraitPoint& y, std::int64_t m0,
                                  std::int64_t n0) {
        const Quantizer q = spec.quantizer();
        const TraitKey kx = q.encode(x), ky = q.encode(y);
        if (kx == ky)
            throw PreconditionError("TwoTypeChain: x and y quantize to the same atom");
        if (ky < kx)
            throw PreconditionError(
                "TwoTypeChain: resident must precede mutant in key order (swap arguments)");
        const TraitPoint cx = q.decode(kx), cy = q.decode(ky);
        TwoTypeChain c;
        c.b1 = spec.birth(cx);
        c.b2 = spec.birth(cy);
        c.d1_0 = spec.death(cx);
        c.d2_0 = spec.death(cy);
        c.a11 = spec.alpha(cx, cx);
        c.a12 = spec.alpha(cx, cy);
        c.a21 = spec.alpha(cy, cx);
        c.a22 = spec.alpha(cy, cy);
        c.K = spec.K;
        c.m0 = m0;
        c.n0 = n0;
        return c;
    }

    // Per-capita death rates (density-dependent, nondecreasing in m and n).
    double death1(std::int64_t m, std::int64_t n) const {
        double load = 0.0;
        load += a11 * static_cast<double>(m);
        load += a12 * static_cast<double>(n);
        return d1_0 + load / static_cast<double>(K);
    }
    double death2(std::int64_t m, std::int64_t n) const {
        double load = 0.0;
        load += a21 * static_cast<double>(m);
        load += a22 * static_cast<double>(n);
        return d2_0 + load / static_cast<double>(K);
    }

    bool in_region(std::int64_t m, std::int64_t n) const {
        const double md = static_cast<double>(m), nd = static_cast<double>(n);
        return md >= A && md < B && nd >= C && nd < D;
    }
};

enum class TwoTypeExit {
    Coord1Low,
    Coord1High,
    Coord2Low,
    Coord2High,
    Horizon,
    Frozen
};

inline const char* to_string(TwoTypeExit e) {
    switch (e) {
        case TwoTypeExit::Coord1Low: return "coord1_low";
        case TwoTypeExit::Coord1High: return "coord1_high";
        case TwoTypeExit::Coord2Low: return "coord2_low";
        case TwoTypeExit::Coord2High: return "coord2_high";
        case TwoTypeExit::Horizon: return "horizon";
        case TwoTypeExit::Frozen: return "frozen";
    }
    return "?";
}

struct TwoTypeEvent {
    double time = 0.0;
    int which = 1;  // 1 or 2
    int delta = 0;  // +1 or -1
};

struct TwoTypePath {
    std::int64_t m0 = 0, n0 = 0;
    std::vector<TwoTypeEvent> events;
    TwoTypeExit exit = TwoTypeExit::Horizon;
    double exit_time = 0.0;
    std::int64_t m_final = 0, n_final = 0;
};

inline TwoTypePath simulate_two_type(const TwoTypeChain& chain, RngStream& rng,
                                     std::optional<double> horizon = std::nullopt,
                                     bool record_events = true) {
    if (!chain.in_region(chain.m0, chain.n0))
        throw PreconditionError("simulate_two_type: initial state outside the exit region");
    TwoTypePath path;
    path.m0 = chain.m0;
    path.n0 = chain.n0;
    std::int64_t m = chain.m0, n = chain.n0;
    double t = 0.0;
    const double t_limit =
        horizon ? *horizon : std::numeric_limits<double>::infinity();

    for (;;) {
        const double md = static_cast<double>(m), nd = static_cast<double>(n);
        // canonical shapes, mirrored by IbmStepper: see header note
        const double birth1 = md * chain.b1;
        const double death1 = md * (chain.d1_0 + (chain.a11 * md + chain.a12 * nd) /
                                                     static_cast<double>(chain.K));
        const double birth2 = nd * chain.b2;
        const double death2 = nd * (chain.d2_0 + (chain.a21 * md + chain.a22 * nd) /
                                                     static_cast<double>(chain.K));
        const double s1 = birth1 + death1;
        const double s2 = birth2 + death2;
        const double total = s1 + s2;
        if (!(total > 0.0)) {
            path.exit = TwoTypeExit::Frozen;
            break;
        }
        const double dt = rng.exponential(total);
        if (t + dt > t_limit) {
            t = t_limit;
            path.exit = TwoTypeExit::Horizon;
            break;
        }
        t += dt;

        double pick = rng.uniform() * total;
        int which;
        int delta;
        if (pick < birth1) {
            which = 1;
            delta = 1;
        } else if ((pick -= birth1) < death1) {
            which = 1;
            delta = -1;
        } else if ((pick -= death1) < birth2) {
            which = 2;
            delta = 1;
        } else if ((pick -= birth2) < death2) {
            which = 2;
            delta = -1;
        } else {
            which = n > 0 ? 2 : 1;  // rounding fallthrough: last positive death
            delta = -1;
        }
        if (which == 1)
            m += delta;
        else
            n += delta;
        if (record_events) path.events.push_back({t, which, delta});

        if (!chain.in_region(m, n)) {
            const double mdd = static_cast<double>(m), ndd = static_cast<double>(n);
            if (mdd < chain.A)
                path.exit = TwoTypeExit::Coord1Low;
            else if (mdd >= chain.B)
                path.exit = TwoTypeExit::Coord1High;
            else if (ndd < chain.C)
                path.exit = TwoTypeExit::Coord2Low;
            else
                path.exit = TwoTypeExit::Coord2High;
            break;
        }
    }
    path.exit_time = t;
    path.m_final = m;
    path.n_final = n;
    return path;
}

// --- invasion band and domination coupling ---------------------------------

// Frozen-environment death bounds for a rare type-2 mutant while the resident
// density stays within eps of its equilibrium:
//   d2+(eps) = d(y) + a(y,x)(n̂_x + 2 eps) + 2 a(y,y) eps
//   d2-(eps) = d(y) + a(y,x)(n̂_x - 2 eps)
// The bracketing invasion probability band is [1 - d2+/b(y), 1 - d2-/b(y)].
inline std::pair<double, double> mutant_death_bounds(const ModelSpec& spec,
                                                     const TraitPoint& x,
                                                     const TraitPoint& y,
                                                     double eps) {
    if (!(eps >= 0.0)) throw PreconditionError("mutant_death_bounds: eps must be >= 0");
    const double nhat = equilibrium_mass(spec, x);
    const double dy = spec.death(y);
    const double ayx = spec.alpha(y, x);
    const double ayy = spec.alpha(y, y);
    const double d2_minus = dy + ayx * (nhat - 2.0 * eps);
    const double d2_plus = dy + ayx * (nhat + 2.0 * eps) + 2.0 * ayy * eps;
    return {d2_minus, d2_plus};
}

inline std::pair<double, double> invasion_band(const ModelSpec& spec,
                                               const TraitPoint& x,
                                               const TraitPoint& y, double eps) {
    const auto [d2m, d2p] = mutant_death_bounds(spec, x, y, eps);
    const double by = spec.birth(y);
    if (!(by > 0.0)) throw PreconditionError("invasion_band: b(y) must be positive");
    double lo = 1.0 - d2p / by;
    double hi = 1.0 - d2m / by;
    if (lo < 0.0) lo = 0.0;
    if (hi > 1.0) hi = 1.0;
    return {lo, hi};
}

// Reference time scale log K << t_K << 1/(K u_K) used by the long-window
// statements; (log K)^2 satisfies the sandwich for every admissible u_K rule.
inline double default_t_K(std::int64_t K) {
    const double lk = std::log(static_cast<double>(K));
    return lk * lk;
}

struct DominationBounds {
    double d1_minus = 0.0, d1_plus = 0.0;  // constant per-capita death bounds, type 1
    double d2_minus = 0.0, d2_plus = 0.0;  // type 2
};

struct CoupleOptions {
    std::optional<std::int64_t> z1_minus, z1_plus;  // initial bound counts
    std::optional<std::int64_t> z2_minus, z2_plus;  // default: chain's m0/n0
    std::optional<double> horizon;
    std::int64_t max_events = 10'000'000;
};

struct CoupledState {
    double time = 0.0;
    std::int64_t lower1 = 0, actual1 = 0, upper1 = 0;
    std::int64_t lower2 = 0, actual2 = 0, upper2 = 0;
};

struct CoupledPaths {
    std::vector<CoupledState> states;  // state after each applied event
    CoupledState final_state;
    TwoTypeExit exit = TwoTypeExit::Horizon;  // of the actual chain
    double exit_time = 0.0;
    bool domination_ok = true;                // order held at every event
    std::vector<std::string> breaches;        // bound-hypothesis violations seen
    std::int64_t events = 0;
};

// Monotone common-randomness coupling of five processes: the actual two-type
// chain N = (N1, N2) and four linear bounds, lower_i with per-capita death
// d_i+ and upper_i with d_i-, all sharing per-capita births b_i. Each epoch
// draws one timing exponential against the maximal total rate (carried by the
// upper processes) and one selection uniform that addresses an individual
// level and a residual death threshold; every process applies the slot
// according to its own membership and rate, which preserves the order
// lower <= actual <= upper deterministically as long as the bound hypotheses
// d_i- <= d_i(m,n) <= d_i+ hold at the visited states. Hypothesis failures
// are recorded as breaches, never raised.
inline CoupledPaths coupled_domination(const TwoTypeChain& chain,
                                       const DominationBounds& bounds, RngStream& rng,
                                       const CoupleOptions& opts = {},
                                       bool record_states = true) {
    if (!(bounds.d1_minus >= 0.0) || !(bounds.d2_minus >= 0.0))
        throw PreconditionError("coupled_domination: death bounds must be nonnegative");
    if (bounds.d1_minus > bounds.d1_plus || bounds.d2_minus > bounds.d2_plus)
        throw PreconditionError("coupled_domination: need d- <= d+ per type");

    CoupledPaths out;
    CoupledState st;
    st.lower1 = opts.z1_minus.value_or(chain.m0);
    st.actual1 = chain.m0;
    st.upper1 = opts.z1_plus.value_or(chain.m0);
    st.lower2 = opts.z2_minus.value_or(chain.n0);
    st.actual2 = chain.n0;
    st.upper2 = opts.z2_plus.value_or(chain.n0);
    if (st.lower1 > st.actual1 || st.actual1 > st.upper1 || st.lower2 > st.actual2 ||
        st.actual2 > st.upper2)
        throw PreconditionError("coupled_domination: initial counts must be ordered");
    if (!chain.in_region(st.actual1, st.actual2))
        throw PreconditionError("coupled_domination: initial state outside the region");

    const double t_limit =
        opts.horizon ? *opts.horizon : std::numeric_limits<double>::infinity();

    auto check_hypotheses = [&] {
        const double dd1 = chain.death1(st.actual1, st.actual2);
        const double dd2 = chain.death2(st.actual1, st.actual2);
        if (!(bounds.d1_minus <= dd1 && dd1 <= bounds.d1_plus))
            out.breaches.push_back("d1 bound fails at (m,n)=(" +
                                   std::to_string(st.actual1) + "," +
                                   std::to_string(st.actual2) + "): d1=" +
                                   std::to_string(dd1));
        if (!(bounds.d2_minus <= dd2 && dd2 <= bounds.d2_plus))
            out.breaches.push_back("d2 bound fails at (m,n)=(" +
                                   std::to_string(st.actual1) + "," +
                                   std::to_string(st.actual2) + "): d2=" +
                                   std::to_string(dd2));
    };

    for (;;) {
        if (out.events >= opts.max_events) {
            out.exit = TwoTypeExit::Horizon;
            break;
        }
        check_hypotheses();
        const double u1 = static_cast<double>(st.upper1);
        const double u2 = static_cast<double>(st.upper2);
        const double slice1 = u1 * (chain.b1 + bounds.d1_plus);
        const double slice2 = u2 * (chain.b2 + bounds.d2_plus);
        const double lambda = slice1 + slice2;
        if (!(lambda > 0.0)) {
            out.exit = TwoTypeExit::Frozen;
            break;
        }
        const double dt = rng.exponential(lambda);
        if (st.time + dt > t_limit) {
            st.time = t_limit;
            out.exit = TwoTypeExit::Horizon;
            break;
        }
        st.time += dt;
        ++out.events;

        double v = rng.uniform() * lambda;
        const bool type1 = v < slice1;
        if (!type1) v -= slice1;
        const double b = type1 ? chain.b1 : chain.b2;
        const double dplus = type1 ? bounds.d1_plus : bounds.d2_plus;
        const double dminus = type1 ? bounds.d1_minus : bounds.d2_minus;
        const double ucount = type1 ? u1 : u2;
        std::int64_t& lower = type1 ? st.lower1 : st.lower2;
        std::int64_t& actual = type1 ? st.actual1 : st.actual2;
        std::int64_t& upper = type1 ? st.upper1 : st.upper2;
        const double dactual = type1 ? chain.death1(st.actual1, st.actual2)
                                     : chain.death2(st.actual1, st.actual2);

        if (v < ucount * b) {
            // birth slot addressed to level floor(v/b)+1
            const auto level = static_cast<std::int64_t>(v / b) + 1;
            if (level <= lower) ++lower;
            if (level <= actual) ++actual;
            if (level <= upper) ++upper;
        } else {
            const double w0 = v - ucount * b;
            auto level = static_cast<std::int64_t>(w0 / dplus) + 1;
            if (level > upper) level = upper;  // rounding edge at the slice end
            const double w = w0 - static_cast<double>(level - 1) * dplus;
            // per-process death thresholds: lower carries d+, upper carries d-
            if (level <= lower && w < dplus) --lower;
            if (level <= actual && w < dactual) --actual;
            if (level <= upper && w < dminus) --upper;
        }

        if (st.lower1 > st.actual1 || st.actual1 > st.upper1 ||
            st.lower2 > st.actual2 || st.actual2 > st.upper2)
            out.domination_ok = false;
        if (record_states) out.states.push_back(st);

        if (!chain.in_region(st.actual1, st.actual2)) {
            const double mdd = static_cast<double>(st.actual1);
            const double ndd = static_cast<double>(st.actual2);
            if (mdd < chain.A)
                out.exit = TwoTypeExit::Coord1Low;
            else if (mdd >= chain.B)
                out.exit = TwoTypeExit::Coord1High;
            else if (ndd < chain.C)
                out.exit = TwoTypeExit::Coord2Low;
            else
                out.exit = TwoTypeExit::Coord2High;
            break;
        }
    }
    out.final_state = st;
    out.exit_time = st.time;
    return out;
}

}  // namespace tsslab
