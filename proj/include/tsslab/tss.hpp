#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "tsslab/errors.hpp"
#include "tsslab/model.hpp"
#include "tsslab/quadrature.hpp"
#include "tsslab/rng.hpp"

namespace tsslab {

// The trait substitution sequence: a jump process on traits that leaves x at
// rate lambda(x) = b(x) p(x) n̂_x * Int [Fit(y,x)]+ / b(y) m(x,dy) and lands
// on the accepted mutant. Simulation is exact thinning — candidate epochs at
// the kernel-free rate b(x) p(x) n̂_x, acceptance [Fit]+/b(y), which never
// exceeds 1 — so path laws carry no quadrature error; jump_rate() is the
// diagnostic rate evaluator (exact for atomic kernels, Gauss-Legendre for
// continuous ones).

namespace detail {

// Effective atomic kernel at x: targets that quantize onto x are excluded and
// the remaining weights renormalized, matching sample_mutant.
inline double atomic_jump_integral(const ModelSpec& spec, const TraitPoint& x,
                                   double nhat) {
    const Quantizer q = spec.quantizer();
    const TraitKey self = q.encode(x);
    double wsum = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < spec.kernel.targets.size(); ++i) {
        if (q.encode(spec.kernel.targets[i]) == self) continue;
        const TraitPoint& y = spec.kernel.targets[i];
        const double w = spec.kernel.weights[i];
        wsum += w;
        const double fit = spec.birth(y) - spec.death(y) - spec.alpha(y, x) * nhat;
        if (fit > 0.0) acc += w * fit / spec.birth(y);
    }
    return wsum > 0.0 ? acc / wsum : 0.0;
}

// Tensor-product Gauss-Legendre over the mutant displacement, reflecting each
// node into the box. Diagnostics-grade: exact in the limit for the gaussian
// kernel; the ball indicator is exact in 1-D and approximate above.
inline double continuous_jump_integral(const ModelSpec& spec, const TraitPoint& x,
                                       double nhat, int order) {
    const std::size_t d = spec.dimension;
    const QuadratureRule rule = gauss_legendre(order);
    std::vector<double> half(d);
    const bool gaussian = spec.kernel.kind == MutationKind::GaussianReflected;
    for (std::size_t i = 0; i < d; ++i)
        half[i] = gaussian ? 8.0 * spec.kernel.sigma[i] : spec.kernel.radius;

    double ball_volume = 1.0;
    if (!gaussian) {
        // volume of the d-ball of radius r: pi^(d/2) r^d / Gamma(d/2+1)
        const double r = spec.kernel.radius;
        ball_volume = std::pow(3.14159265358979323846, static_cast<double>(d) / 2.0) *
                      std::pow(r, static_cast<double>(d)) /
                      std::tgamma(static_cast<double>(d) / 2.0 + 1.0);
    }

    std::vector<std::size_t> idx(d, 0);
    TraitPoint delta(d), y(d);
    double acc = 0.0;
    const std::size_t nodes = rule.nodes.size();
    for (;;) {
        double w = 1.0, r2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            delta[i] = half[i] * rule.nodes[idx[i]];
            w *= half[i] * rule.weights[idx[i]];
            r2 += delta[i] * delta[i];
        }
        double density;
        if (gaussian) {
            density = 1.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double s = spec.kernel.sigma[i];
                density *= std::exp(-delta[i] * delta[i] / (2.0 * s * s)) /
                           (s * std::sqrt(2.0 * 3.14159265358979323846));
            }
        } else {
            density = r2 <= spec.kernel.radius * spec.kernel.radius
                          ? 1.0 / ball_volume
                          : 0.0;
        }
        if (density > 0.0) {
            for (std::size_t i = 0; i < d; ++i)
                y[i] = spec.box.reflect(i, x[i] + delta[i]);
            const double by = spec.birth(y);
            const double fit = by - spec.death(y) - spec.alpha(y, x) * nhat;
            if (fit > 0.0 && by > 0.0) acc += w * density * fit / by;
        }
        std::size_t k = d;
        bool done = true;
        while (k > 0) {
            --k;
            if (++idx[k] < nodes) {
                done = false;
                break;
            }
            idx[k] = 0;
        }
        if (done) break;
    }
    return acc;
}

}  // namespace detail

inline double jump_rate(const ModelSpec& spec, const TraitPoint& x,
                        int quad_order = 64) {
    const double nhat = equilibrium_mass(spec, x);
    const double base = spec.birth(x) * spec.mut_prob(x) * nhat;
    const double integral =
        spec.kernel.kind == MutationKind::Atomic
            ? detail::atomic_jump_integral(spec, x, nhat)
            : detail::continuous_jump_integral(spec, x, nhat, quad_order);
    return base * integral;
}

struct JumpSample {
    bool absorbed = false;
    double wait = 0.0;  // infinity when absorbed
    TraitPoint target;
};

inline JumpSample sample_jump(const ModelSpec& spec, const TraitPoint& x,
                              RngStream& rng,
                              std::uint64_t max_candidates = 1'000'000) {
    JumpSample out;
    const double nhat = equilibrium_mass(spec, x);
    const double candidate_rate = spec.birth(x) * spec.mut_prob(x) * nhat;
    // Atomic kernels admit an exact zero-rate test; continuous kernels rely on
    // the candidate budget.
    if (!(candidate_rate > 0.0) ||
        (spec.kernel.kind == MutationKind::Atomic &&
         detail::atomic_jump_integral(spec, x, nhat) <= 0.0)) {
        out.absorbed = true;
        out.wait = std::numeric_limits<double>::infinity();
        return out;
    }
    double wait = 0.0;
    for (std::uint64_t k = 0; k < max_candidates; ++k) {
        wait += rng.exponential(candidate_rate);
        const TraitPoint y = sample_mutant(spec, x, rng);
        const double by = spec.birth(y);
        const double fit = by - spec.death(y) - spec.alpha(y, x) * nhat;
        if (fit > 0.0 && rng.uniform() * by < fit) {
            out.wait = wait;
            out.target = y;
            return out;
        }
    }
    out.absorbed = true;
    out.wait = std::numeric_limits<double>::infinity();
    return out;
}

struct TssJump {
    double time = 0.0;  // evolutionary clock
    TraitPoint trait;
};

struct TssPath {
    TraitPoint initial;
    std::vector<TssJump> jumps;
    double horizon = 0.0;
    bool absorbed = false;     // evolutionarily trapped before the horizon
    double absorbed_time = 0.0;

    const TraitPoint& trait_at(double t) const {
        const TraitPoint* cur = &initial;
        for (const auto& j : jumps) {
            if (j.time > t) break;
            cur = &j.trait;
        }
        return *cur;
    }
};

inline TssPath simulate_tss(const ModelSpec& spec, const TraitPoint& x0,
                            double horizon, RngStream& rng,
                            std::uint64_t max_candidates = 1'000'000) {
    if (!(horizon >= 0.0))
        throw PreconditionError("simulate_tss: horizon must be >= 0");
    TssPath path;
    path.initial = x0;
    path.horizon = horizon;
    TraitPoint x = x0;
    double t = 0.0;
    for (;;) {
        const JumpSample js = sample_jump(spec, x, rng, max_candidates);
        if (js.absorbed) {
            path.absorbed = true;
            path.absorbed_time = t;
            break;
        }
        t += js.wait;
        if (t > horizon) break;
        // generator sanity: every accepted target must be a strict invader
        if (!(fitness(spec, js.target, x) > 0.0))
            throw InconsistentStateError("simulate_tss: accepted a non-invading target");
        path.jumps.push_back({t, js.target});
        x = js.target;
    }
    return path;
}

// The support-equilibrium measure n̂_x delta_x the TSS occupies between jumps.
struct EquilibriumAtom {
    TraitPoint trait;
    double mass = 0.0;
};

// Time the path's equilibrium measure spends in A over [0, t]:
// Int_0^t 1_A(n̂_{x(s)} delta_{x(s)}) ds by sojourn accounting.
inline double occupation_measure(const TssPath& path, double t, const ModelSpec& spec,
                                 const std::function<bool(const EquilibriumAtom&)>& A) {
    if (t > path.horizon + 1e-12)
        throw PreconditionError("occupation_measure: t exceeds the path horizon");
    double acc = 0.0;
    TraitPoint cur = path.initial;
    double seg_start = 0.0;
    auto flush = [&](double seg_end) {
        if (seg_end <= seg_start) return;
        const EquilibriumAtom atom{cur, equilibrium_mass(spec, cur)};
        if (A(atom)) acc += seg_end - seg_start;
    };
    for (const auto& j : path.jumps) {
        if (j.time >= t) break;
        flush(j.time);
        seg_start = j.time;
        cur = j.trait;
    }
    flush(t);
    return acc;
}

}  // namespace tsslab
