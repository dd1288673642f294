#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsslab/errors.hpp"
#include "tsslab/rng.hpp"
#include "tsslab/trait.hpp"
#include "tsslab/trait_key.hpp"

namespace tsslab {

// Parametric rate functions over the trait box. Four families cover every
// experiment in the suite: constants, affine ramps, gaussian bumps, and
// tabulated values with multilinear interpolation.

enum class RateKind { Constant, Affine, GaussianBump, GridTable };

struct RateSpec {
    RateKind kind = RateKind::Constant;
    double constant = 0.0;

    // affine: c0 + gradient . x
    double affine_c0 = 0.0;
    std::vector<double> affine_gradient;

    // gaussian-bump: base + amplitude * exp(-|x-center|^2 / (2 width^2))
    std::vector<double> bump_center;
    double bump_width = 1.0;
    double bump_base = 0.0;
    double bump_amplitude = 0.0;

    // grid-table: row-major values on an inclusive lattice over the box
    std::vector<int> table_shape;
    std::vector<double> table_values;

    static RateSpec make_constant(double c) {
        RateSpec r;
        r.kind = RateKind::Constant;
        r.constant = c;
        return r;
    }
    static RateSpec make_affine(double c0, std::vector<double> gradient) {
        RateSpec r;
        r.kind = RateKind::Affine;
        r.affine_c0 = c0;
        r.affine_gradient = std::move(gradient);
        return r;
    }
    static RateSpec make_gaussian_bump(std::vector<double> center, double width,
                                       double base, double amplitude) {
        RateSpec r;
        r.kind = RateKind::GaussianBump;
        r.bump_center = std::move(center);
        r.bump_width = width;
        r.bump_base = base;
        r.bump_amplitude = amplitude;
        return r;
    }
    static RateSpec make_grid_table(std::vector<int> shape, std::vector<double> values) {
        RateSpec r;
        r.kind = RateKind::GridTable;
        r.table_shape = std::move(shape);
        r.table_values = std::move(values);
        return r;
    }

    double eval(const TraitPoint& x, const Box& box) const {
        switch (kind) {
            case RateKind::Constant:
                return constant;
            case RateKind::Affine: {
                double v = affine_c0;
                for (std::size_t i = 0; i < x.size(); ++i) v += affine_gradient[i] * x[i];
                return v;
            }
            case RateKind::GaussianBump: {
                const double s2 = squared_distance(x, bump_center);
                return bump_base +
                       bump_amplitude * std::exp(-s2 / (2.0 * bump_width * bump_width));
            }
            case RateKind::GridTable:
                return interpolate_table(x, box, table_shape, table_values, 0);
        }
        throw PreconditionError("RateSpec: unknown kind");
    }

    // Multilinear interpolation shared with CompetitionSpec's paired tables:
    // dims [offset, offset+shape.size()) of the evaluation point index the
    // table; the box supplies per-dimension bounds starting at dim_base.
    static double interpolate_table(const TraitPoint& x, const Box& box,
                                    const std::vector<int>& shape,
                                    const std::vector<double>& values,
                                    std::size_t dim_base) {
        const std::size_t d = shape.size();
        std::vector<std::size_t> i0(d);
        std::vector<double> frac(d);
        for (std::size_t i = 0; i < d; ++i) {
            const int res = shape[i];
            const std::size_t bi = dim_base + i;
            double t = res == 1 ? 0.0
                                : (x[i] - box.lo[bi]) / box.width(bi) *
                                      static_cast<double>(res - 1);
            if (t < 0.0) t = 0.0;
            if (t > static_cast<double>(res - 1)) t = static_cast<double>(res - 1);
            auto lo = static_cast<std::size_t>(t);
            if (lo + 1 >= static_cast<std::size_t>(res)) lo = res > 1 ? res - 2 : 0;
            i0[i] = lo;
            frac[i] = res == 1 ? 0.0 : t - static_cast<double>(lo);
        }
        double acc = 0.0;
        const std::size_t corners = std::size_t{1} << d;
        for (std::size_t c = 0; c < corners; ++c) {
            double w = 1.0;
            std::size_t flat = 0;
            for (std::size_t i = 0; i < d; ++i) {
                const bool hi = (c >> i) & 1u;
                w *= hi ? frac[i] : 1.0 - frac[i];
                flat = flat * static_cast<std::size_t>(shape[i]) + i0[i] + (hi ? 1 : 0);
            }
            acc += w * values[flat];
        }
        return acc;
    }
};

// Pairwise competition kernel alpha(x,y) with configured (or derived) bounds
// 0 < alpha_lo <= alpha <= alpha_hi, checked on the validation lattice.

enum class CompetitionKind { Constant, GaussianKernel, GridTable };

struct CompetitionSpec {
    CompetitionKind kind = CompetitionKind::Constant;
    double constant = 1.0;

    // gaussian-kernel: floor + exp(-|x-y|^2 / (2 scale^2))
    double kernel_scale = 1.0;
    double kernel_floor = 0.0;

    // grid-table over (x,y): shape lists d entries for x then d for y
    std::vector<int> table_shape;
    std::vector<double> table_values;

    // Bounds for the validation scan; when unset they are derived per kind.
    std::optional<double> alpha_lower;
    std::optional<double> alpha_upper;

    static CompetitionSpec make_constant(double c) {
        CompetitionSpec s;
        s.kind = CompetitionKind::Constant;
        s.constant = c;
        return s;
    }
    static CompetitionSpec make_gaussian_kernel(double scale, double floor) {
        CompetitionSpec s;
        s.kind = CompetitionKind::GaussianKernel;
        s.kernel_scale = scale;
        s.kernel_floor = floor;
        return s;
    }
    static CompetitionSpec make_grid_table(std::vector<int> shape,
                                           std::vector<double> values) {
        CompetitionSpec s;
        s.kind = CompetitionKind::GridTable;
        s.table_shape = std::move(shape);
        s.table_values = std::move(values);
        return s;
    }

    double eval(const TraitPoint& x, const TraitPoint& y, const Box& box) const {
        switch (kind) {
            case CompetitionKind::Constant:
                return constant;
            case CompetitionKind::GaussianKernel:
                return kernel_floor +
                       std::exp(-squared_distance(x, y) /
                                (2.0 * kernel_scale * kernel_scale));
            case CompetitionKind::GridTable: {
                TraitPoint xy;
                xy.reserve(x.size() + y.size());
                xy.insert(xy.end(), x.begin(), x.end());
                xy.insert(xy.end(), y.begin(), y.end());
                Box paired;
                paired.lo = box.lo;
                paired.hi = box.hi;
                paired.lo.insert(paired.lo.end(), box.lo.begin(), box.lo.end());
                paired.hi.insert(paired.hi.end(), box.hi.begin(), box.hi.end());
                return RateSpec::interpolate_table(xy, paired, table_shape, table_values, 0);
            }
        }
        throw PreconditionError("CompetitionSpec: unknown kind");
    }

    std::pair<double, double> bounds() const {
        if (alpha_lower && alpha_upper) return {*alpha_lower, *alpha_upper};
        double lo = 0.0, hi = 0.0;
        switch (kind) {
            case CompetitionKind::Constant:
                lo = hi = constant;
                break;
            case CompetitionKind::GaussianKernel:
                lo = kernel_floor;
                hi = kernel_floor + 1.0;
                break;
            case CompetitionKind::GridTable: {
                lo = hi = table_values.empty() ? 0.0 : table_values.front();
                for (double v : table_values) {
                    if (v < lo) lo = v;
                    if (v > hi) hi = v;
                }
                break;
            }
        }
        if (alpha_lower) lo = *alpha_lower;
        if (alpha_upper) hi = *alpha_upper;
        return {lo, hi};
    }
};

// Mutation kernel m(x, dy), always supported on the box: atomic target lists
// (finite trait sets), gaussian steps reflected at the walls, or uniform steps
// in a ball, also reflected.

enum class MutationKind { Atomic, GaussianReflected, UniformBall };

struct MutationSpec {
    MutationKind kind = MutationKind::GaussianReflected;

    std::vector<TraitPoint> targets;   // atomic
    std::vector<double> weights;       // atomic, sum to 1

    std::vector<double> sigma;         // gaussian-reflected, per dimension
    double radius = 0.1;               // uniform-ball

    static MutationSpec make_atomic(std::vector<TraitPoint> targets,
                                    std::vector<double> weights) {
        MutationSpec m;
        m.kind = MutationKind::Atomic;
        m.targets = std::move(targets);
        m.weights = std::move(weights);
        return m;
    }
    static MutationSpec make_gaussian_reflected(std::vector<double> sigma) {
        MutationSpec m;
        m.kind = MutationKind::GaussianReflected;
        m.sigma = std::move(sigma);
        return m;
    }
    static MutationSpec make_uniform_ball(double radius) {
        MutationSpec m;
        m.kind = MutationKind::UniformBall;
        m.radius = radius;
        return m;
    }
};

// Full model parameterization. Immutable in use; every simulator takes a
// const reference and treats evaluation as pure.

struct ModelSpec {
    std::size_t dimension = 1;
    Box box;
    RateSpec birth_spec;
    RateSpec death_spec;
    RateSpec mut_prob_spec;  // p(x), per-birth mutation probability scale
    CompetitionSpec competition;
    MutationSpec kernel;
    std::int64_t K = 1000;
    double u_coeff = 0.0;     // c in u_K = c K^-a; 0 switches mutation off
    double u_exponent = 2.0;  // a > 1
    int lattice_resolution = 33;
    int key_bits = 32;        // atom-identity quantization, per coordinate

    double birth(const TraitPoint& x) const { return birth_spec.eval(x, box); }
    double death(const TraitPoint& x) const { return death_spec.eval(x, box); }
    double mut_prob(const TraitPoint& x) const { return mut_prob_spec.eval(x, box); }
    double alpha(const TraitPoint& x, const TraitPoint& y) const {
        return competition.eval(x, y, box);
    }

    // u_K = c K^-a
    double mutation_rate() const {
        return u_coeff * std::pow(static_cast<double>(K), -u_exponent);
    }

    Quantizer quantizer() const { return Quantizer(box, key_bits); }

    ModelSpec with_K(std::int64_t new_K) const {
        ModelSpec s = *this;
        s.K = new_K;
        return s;
    }
    ModelSpec without_mutation() const {
        ModelSpec s = *this;
        s.u_coeff = 0.0;
        return s;
    }
};

// --- validation ------------------------------------------------------------

struct ValidationIssue {
    std::string condition;  // short machine-friendly tag, e.g. "assumption-A"
    std::string message;
    TraitPoint x;           // offending point (or first of a pair)
    TraitPoint y;           // second of a pair for competition issues, else empty
};

struct ValidationReport {
    std::vector<ValidationIssue> violations;
    bool valid() const { return violations.empty(); }
};

namespace detail {

// Structural sanity. Throws InvalidModelError: a spec whose containers do not
// line up cannot even be scanned.
inline void check_structure(const ModelSpec& spec) {
    if (spec.dimension == 0) throw InvalidModelError("dimension must be >= 1");
    spec.box.validate();
    if (spec.box.dimension() != spec.dimension)
        throw InvalidModelError("box dimension does not match model dimension");
    if (spec.K < 1) throw InvalidModelError("K must be a positive integer");
    if (!(spec.u_coeff >= 0.0) || !std::isfinite(spec.u_coeff))
        throw InvalidModelError("u_K coefficient must be finite and >= 0");
    if (!(spec.u_exponent > 1.0))
        throw InvalidModelError("u_K exponent must be > 1");
    if (spec.lattice_resolution < 2)
        throw InvalidModelError("validation lattice needs at least 2 points per dimension");
    auto check_rate = [&](const RateSpec& r, const char* name) {
        if (r.kind == RateKind::Affine && r.affine_gradient.size() != spec.dimension)
            throw InvalidModelError(std::string(name) + ": affine gradient dimension mismatch");
        if (r.kind == RateKind::GaussianBump) {
            if (r.bump_center.size() != spec.dimension)
                throw InvalidModelError(std::string(name) + ": bump center dimension mismatch");
            if (!(r.bump_width > 0.0))
                throw InvalidModelError(std::string(name) + ": bump width must be positive");
        }
        if (r.kind == RateKind::GridTable) {
            if (r.table_shape.size() != spec.dimension)
                throw InvalidModelError(std::string(name) + ": table shape dimension mismatch");
            std::size_t n = 1;
            for (int s : r.table_shape) {
                if (s < 1) throw InvalidModelError(std::string(name) + ": table shape entries must be >= 1");
                n *= static_cast<std::size_t>(s);
            }
            if (r.table_values.size() != n)
                throw InvalidModelError(std::string(name) + ": table value count does not match shape");
        }
    };
    check_rate(spec.birth_spec, "birth");
    check_rate(spec.death_spec, "death");
    check_rate(spec.mut_prob_spec, "mut_prob");
    const auto& c = spec.competition;
    if (c.kind == CompetitionKind::GaussianKernel && !(c.kernel_scale > 0.0))
        throw InvalidModelError("competition: kernel scale must be positive");
    if (c.kind == CompetitionKind::GridTable) {
        if (c.table_shape.size() != 2 * spec.dimension)
            throw InvalidModelError("competition: paired table needs 2*d shape entries");
        std::size_t n = 1;
        for (int s : c.table_shape) {
            if (s < 1) throw InvalidModelError("competition: table shape entries must be >= 1");
            n *= static_cast<std::size_t>(s);
        }
        if (c.table_values.size() != n)
            throw InvalidModelError("competition: table value count does not match shape");
    }
    if (!(spec.u_coeff > 0.0)) return;  // mutation off: the kernel is never consulted
    const auto& m = spec.kernel;
    switch (m.kind) {
        case MutationKind::Atomic:
            if (m.targets.empty())
                throw InvalidModelError("mutation kernel: atomic target list is empty");
            if (m.targets.size() != m.weights.size())
                throw InvalidModelError("mutation kernel: targets/weights length mismatch");
            for (const auto& t : m.targets)
                if (t.size() != spec.dimension)
                    throw InvalidModelError("mutation kernel: target dimension mismatch");
            break;
        case MutationKind::GaussianReflected:
            if (m.sigma.size() != spec.dimension)
                throw InvalidModelError("mutation kernel: sigma dimension mismatch");
            for (double s : m.sigma)
                if (!(s > 0.0))
                    throw InvalidModelError("mutation kernel: sigma must be positive");
            break;
        case MutationKind::UniformBall:
            if (!(m.radius > 0.0))
                throw InvalidModelError("mutation kernel: ball radius must be positive");
            break;
    }
}

}  // namespace detail

// Scans the validation lattice for assumption violations. The assumption
// taxonomy is the one documented in the README: (A) supercritical growth
// b-d > 0 with p in (0,1], (C) two-sided positive competition bounds, plus
// the mutation-probability range 0 <= u_K p <= 1 and kernel support checks.
inline ValidationReport validate_spec(const ModelSpec& spec) {
    detail::check_structure(spec);
    ValidationReport report;
    auto add = [&](std::string cond, std::string msg, TraitPoint x, TraitPoint y = {}) {
        report.violations.push_back(
            {std::move(cond), std::move(msg), std::move(x), std::move(y)});
    };

    const auto pts = lattice_points(spec.box, spec.lattice_resolution);
    const double u = spec.mutation_rate();
    for (const auto& x : pts) {
        const double b = spec.birth(x);
        const double d = spec.death(x);
        const double p = spec.mut_prob(x);
        if (!std::isfinite(b) || b < 0.0)
            add("rate-range", "birth rate must be finite and nonnegative, got " +
                                  std::to_string(b) + " at " + trait_to_string(x), x);
        if (!std::isfinite(d) || d < 0.0)
            add("rate-range", "death rate must be finite and nonnegative, got " +
                                  std::to_string(d) + " at " + trait_to_string(x), x);
        if (!(b - d > 0.0))
            add("assumption-A", "assumption (A) violated: b - d must be positive, got " +
                                    std::to_string(b - d) + " at " + trait_to_string(x), x);
        if (!(p > 0.0 && p <= 1.0))
            add("assumption-A", "assumption (A) violated: p must lie in (0,1], got " +
                                    std::to_string(p) + " at " + trait_to_string(x), x);
        if (!(u * p >= 0.0 && u * p <= 1.0))
            add("mutation-probability", "u_K * p must lie in [0,1], got " +
                                            std::to_string(u * p) + " at " +
                                            trait_to_string(x), x);
    }

    const auto [alo, ahi] = spec.competition.bounds();
    if (!(alo > 0.0)) {
        add("assumption-C",
            "assumption (C) violated: configured lower competition bound must be positive, got " +
                std::to_string(alo), {});
    }
    for (const auto& x : pts) {
        for (const auto& y : pts) {
            const double a = spec.alpha(x, y);
            if (!std::isfinite(a) || a < alo || a > ahi) {
                add("assumption-C",
                    "assumption (C) violated: alpha outside [" + std::to_string(alo) +
                        ", " + std::to_string(ahi) + "], got " + std::to_string(a) +
                        " at " + trait_to_string(x) + ", " + trait_to_string(y),
                    x, y);
            }
        }
    }

    if (spec.u_coeff > 0.0 && spec.kernel.kind == MutationKind::Atomic) {
        double wsum = 0.0;
        for (std::size_t i = 0; i < spec.kernel.targets.size(); ++i) {
            const double w = spec.kernel.weights[i];
            if (!(w >= 0.0) || !std::isfinite(w))
                add("kernel-weights", "atomic kernel weights must be finite and nonnegative",
                    spec.kernel.targets[i]);
            wsum += w;
            if (!spec.box.contains(spec.kernel.targets[i]))
                add("kernel-support", "atomic kernel target outside the trait box: " +
                                          trait_to_string(spec.kernel.targets[i]),
                    spec.kernel.targets[i]);
        }
        if (std::fabs(wsum - 1.0) > 1e-9)
            add("kernel-weights", "atomic kernel weights must sum to 1, got " +
                                      std::to_string(wsum), {});
    }
    return report;
}

// --- derived analytic quantities -------------------------------------------

// Monomorphic equilibrium density n̂_x = (b(x) - d(x)) / alpha(x,x).
inline double equilibrium_mass(const ModelSpec& spec, const TraitPoint& x) {
    const double b = spec.birth(x);
    const double d = spec.death(x);
    if (!(b - d > 0.0))
        throw InvalidModelError("equilibrium_mass: b(x) - d(x) must be positive at " +
                                trait_to_string(x));
    const double axx = spec.alpha(x, x);
    if (!(axx > 0.0))
        throw InvalidModelError("equilibrium_mass: alpha(x,x) must be positive at " +
                                trait_to_string(x));
    return (b - d) / axx;
}

// Invasion fitness of a rare y-mutant against an x-resident at equilibrium:
// Fit(y,x) = b(y) - d(y) - alpha(y,x) n̂_x.
inline double fitness(const ModelSpec& spec, const TraitPoint& y, const TraitPoint& x) {
    const double nhat = equilibrium_mass(spec, x);
    return spec.birth(y) - spec.death(y) - spec.alpha(y, x) * nhat;
}

enum class IisOutcome { YFixates, XFixates, Coexistence, Degenerate };

inline const char* to_string(IisOutcome o) {
    switch (o) {
        case IisOutcome::YFixates: return "YFixates";
        case IisOutcome::XFixates: return "XFixates";
        case IisOutcome::Coexistence: return "Coexistence";
        case IisOutcome::Degenerate: return "Degenerate";
    }
    return "?";
}

// Sign classification of the invasion-implies-substitution condition
// (assumption (B)). q1 > 0 means y invades x; q2 > 0 means x invades y.
// YFixates = y invades and x cannot re-invade; XFixates covers q1 < 0 (the
// invader dies out, including the bistable pattern q1 < 0, q2 < 0);
// Coexistence (both positive) violates the assumption.
inline IisOutcome check_iis(const ModelSpec& spec, const TraitPoint& x,
                            const TraitPoint& y, double tol = 1e-12) {
    const double gx = spec.birth(x) - spec.death(x);
    const double gy = spec.birth(y) - spec.death(y);
    const double q1 = gy * spec.alpha(x, x) - gx * spec.alpha(y, x);
    const double q2 = gx * spec.alpha(y, y) - gy * spec.alpha(x, y);
    if (std::fabs(q1) <= tol || std::fabs(q2) <= tol) return IisOutcome::Degenerate;
    if (q1 < 0.0) return IisOutcome::XFixates;
    if (q2 < 0.0) return IisOutcome::YFixates;
    return IisOutcome::Coexistence;
}

// Draws a mutant child trait from m(x, dy). Atomic kernels never return the
// source atom: targets that quantize onto x are excluded and the remaining
// weights renormalized (a kernel whose every target collides with x
// degenerates to a point mass at x and returns x).
inline TraitPoint sample_mutant(const ModelSpec& spec, const TraitPoint& x,
                                RngStream& rng) {
    const auto& m = spec.kernel;
    switch (m.kind) {
        case MutationKind::Atomic: {
            const Quantizer q = spec.quantizer();
            const TraitKey self = q.encode(x);
            double total = 0.0;
            for (std::size_t i = 0; i < m.targets.size(); ++i)
                if (q.encode(m.targets[i]) != self) total += m.weights[i];
            if (!(total > 0.0)) return x;
            double pick = rng.uniform() * total;
            for (std::size_t i = 0; i < m.targets.size(); ++i) {
                if (q.encode(m.targets[i]) == self) continue;
                pick -= m.weights[i];
                if (pick < 0.0) return m.targets[i];
            }
            // numeric slack: fall through to the last eligible target
            for (std::size_t i = m.targets.size(); i-- > 0;)
                if (q.encode(m.targets[i]) != self) return m.targets[i];
            return x;
        }
        case MutationKind::GaussianReflected: {
            TraitPoint y(x.size());
            for (std::size_t i = 0; i < x.size(); ++i)
                y[i] = spec.box.reflect(i, x[i] + m.sigma[i] * rng.normal());
            return y;
        }
        case MutationKind::UniformBall: {
            const std::size_t d = x.size();
            std::vector<double> delta(d);
            for (;;) {
                double s2 = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    delta[i] = rng.uniform(-m.radius, m.radius);
                    s2 += delta[i] * delta[i];
                }
                if (s2 <= m.radius * m.radius) break;
            }
            TraitPoint y(d);
            for (std::size_t i = 0; i < d; ++i)
                y[i] = spec.box.reflect(i, x[i] + delta[i]);
            return y;
        }
    }
    throw PreconditionError("sample_mutant: unknown kernel kind");
}

// Threshold radii for the branching-domination arguments. For a favorable
// mutant (Fit(y,x) > 0), eps0 solves d(y) + a(y,x)(n̂_x + 2e) + 2 a(y,y) e = b(y);
// below it the lower bounding process stays supercritical. For an unfavorable
// mutant, eps0 solves d(y) + a(y,x)(n̂_x - 2e) = b(y) and keeps the upper
// bounding process subcritical.
inline double epsilon0_favorable(const ModelSpec& spec, const TraitPoint& y,
                                 const TraitPoint& x) {
    const double fit = fitness(spec, y, x);
    if (!(fit > 0.0))
        throw PreconditionError("epsilon0_favorable: Fit(y,x) must be positive");
    return fit / (2.0 * (spec.alpha(y, x) + spec.alpha(y, y)));
}

inline double epsilon0_unfavorable(const ModelSpec& spec, const TraitPoint& y,
                                   const TraitPoint& x) {
    const double fit = fitness(spec, y, x);
    if (!(fit < 0.0))
        throw PreconditionError("epsilon0_unfavorable: Fit(y,x) must be negative");
    return -fit / (2.0 * spec.alpha(y, x));
}

}  // namespace tsslab
