#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tsslab/errors.hpp"
#include "tsslab/model.hpp"

namespace tsslab {

// Deterministic two-type competition ODE
//   n_x' = n_x (b(x) - d(x) - a_xx n_x - a_xy n_y)
//   n_y' = n_y (b(y) - d(y) - a_yx n_x - a_yy n_y)
// with fixed-step RK4 integration, closed-form equilibria, and stability by
// the analytic Jacobian.

struct LvState {
    double nx = 0.0;
    double ny = 0.0;
};

struct LvSystem {
    double bx = 0.0, dx = 0.0;
    double by = 0.0, dy = 0.0;
    double axx = 1.0, axy = 1.0, ayx = 1.0, ayy = 1.0;

    static LvSystem from_spec(const ModelSpec& spec, const TraitPoint& x,
                              const TraitPoint& y) {
        LvSystem s;
        s.bx = spec.birth(x);
        s.dx = spec.death(x);
        s.by = spec.birth(y);
        s.dy = spec.death(y);
        s.axx = spec.alpha(x, x);
        s.axy = spec.alpha(x, y);
        s.ayx = spec.alpha(y, x);
        s.ayy = spec.alpha(y, y);
        return s;
    }

    double growth_x() const { return bx - dx; }
    double growth_y() const { return by - dy; }
    double nhat_x() const { return (bx - dx) / axx; }
    double nhat_y() const { return (by - dy) / ayy; }
};

inline LvState rhs(const LvSystem& s, const LvState& n) {
    return {n.nx * (s.bx - s.dx - s.axx * n.nx - s.axy * n.ny),
            n.ny * (s.by - s.dy - s.ayx * n.nx - s.ayy * n.ny)};
}

enum class EquilibriumType { Extinction, MonomorphicX, MonomorphicY, Interior };
enum class FeasibilityLabel { Feasible, Infeasible, Degenerate };

struct LvEquilibrium {
    EquilibriumType type = EquilibriumType::Extinction;
    LvState point;
    FeasibilityLabel label = FeasibilityLabel::Feasible;
};

inline const char* to_string(EquilibriumType t) {
    switch (t) {
        case EquilibriumType::Extinction: return "extinction";
        case EquilibriumType::MonomorphicX: return "monomorphic_x";
        case EquilibriumType::MonomorphicY: return "monomorphic_y";
        case EquilibriumType::Interior: return "interior";
    }
    return "?";
}

inline const char* to_string(FeasibilityLabel l) {
    switch (l) {
        case FeasibilityLabel::Feasible: return "feasible";
        case FeasibilityLabel::Infeasible: return "infeasible";
        case FeasibilityLabel::Degenerate: return "degenerate";
    }
    return "?";
}

// The four stationary solutions: the origin, the two monomorphic equilibria
// (n̂_x, 0), (0, n̂_y), and the interior solution of the 2x2 linear system when
// the competition determinant is nonzero. Nonnegative coordinates = feasible.
inline std::vector<LvEquilibrium> equilibria(const LvSystem& s, double tol = 1e-12) {
    std::vector<LvEquilibrium> out;
    out.push_back({EquilibriumType::Extinction, {0.0, 0.0}, FeasibilityLabel::Feasible});

    const LvState mono_x{s.nhat_x(), 0.0};
    out.push_back({EquilibriumType::MonomorphicX, mono_x,
                   mono_x.nx >= 0.0 ? FeasibilityLabel::Feasible
                                    : FeasibilityLabel::Infeasible});
    const LvState mono_y{0.0, s.nhat_y()};
    out.push_back({EquilibriumType::MonomorphicY, mono_y,
                   mono_y.ny >= 0.0 ? FeasibilityLabel::Feasible
                                    : FeasibilityLabel::Infeasible});

    const double det = s.axx * s.ayy - s.axy * s.ayx;
    LvEquilibrium interior;
    interior.type = EquilibriumType::Interior;
    if (std::fabs(det) <= tol) {
        interior.label = FeasibilityLabel::Degenerate;
    } else {
        interior.point.nx = (s.growth_x() * s.ayy - s.growth_y() * s.axy) / det;
        interior.point.ny = (s.growth_y() * s.axx - s.growth_x() * s.ayx) / det;
        interior.label = (interior.point.nx >= 0.0 && interior.point.ny >= 0.0)
                             ? FeasibilityLabel::Feasible
                             : FeasibilityLabel::Infeasible;
    }
    out.push_back(interior);
    return out;
}

struct LvTrajectory {
    std::vector<double> times;
    std::vector<LvState> states;  // sampled, includes initial and final
    LvState final_state;
    std::size_t clamp_events = 0;  // times a coordinate was clipped at 0
};

// Classical RK4 with a fixed step; negative coordinates are clamped to zero
// after each step (count reported). Non-finite state aborts: the step is too
// large for the system.
inline LvTrajectory integrate(const LvSystem& s, LvState init, double t_end,
                              double step = 1e-2, std::size_t max_samples = 2048) {
    if (!(step > 0.0)) throw PreconditionError("integrate: step must be positive");
    if (!(t_end >= 0.0)) throw PreconditionError("integrate: t_end must be >= 0");
    if (init.nx < 0.0 || init.ny < 0.0)
        throw PreconditionError("integrate: initial state must be nonnegative");

    const auto nsteps = static_cast<std::size_t>(std::ceil(t_end / step - 1e-12));
    const std::size_t stride =
        nsteps <= max_samples ? 1 : (nsteps + max_samples - 1) / max_samples;

    LvTrajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(init);

    LvState n = init;
    double t = 0.0;
    for (std::size_t k = 0; k < nsteps; ++k) {
        const double h = std::min(step, t_end - t);
        const LvState k1 = rhs(s, n);
        const LvState k2 = rhs(s, {n.nx + 0.5 * h * k1.nx, n.ny + 0.5 * h * k1.ny});
        const LvState k3 = rhs(s, {n.nx + 0.5 * h * k2.nx, n.ny + 0.5 * h * k2.ny});
        const LvState k4 = rhs(s, {n.nx + h * k3.nx, n.ny + h * k3.ny});
        n.nx += h / 6.0 * (k1.nx + 2.0 * k2.nx + 2.0 * k3.nx + k4.nx);
        n.ny += h / 6.0 * (k1.ny + 2.0 * k2.ny + 2.0 * k3.ny + k4.ny);
        if (!std::isfinite(n.nx) || !std::isfinite(n.ny))
            throw InstabilityError("integrate: non-finite state at t = " +
                                   std::to_string(t + h) + " (reduce the step)");
        if (n.nx < 0.0) {
            n.nx = 0.0;
            ++traj.clamp_events;
        }
        if (n.ny < 0.0) {
            n.ny = 0.0;
            ++traj.clamp_events;
        }
        t += h;
        if ((k + 1) % stride == 0 || k + 1 == nsteps) {
            traj.times.push_back(t);
            traj.states.push_back(n);
        }
    }
    traj.final_state = n;
    return traj;
}

enum class Stability { Stable, Unstable, Saddle, NonHyperbolic };

inline const char* to_string(Stability st) {
    switch (st) {
        case Stability::Stable: return "stable";
        case Stability::Unstable: return "unstable";
        case Stability::Saddle: return "saddle";
        case Stability::NonHyperbolic: return "non_hyperbolic";
    }
    return "?";
}

// Eigenvalue signs of the analytic Jacobian
//   J11 = bx - dx - 2 axx nx - axy ny   J12 = -axy nx
//   J21 = -ayx ny                       J22 = by - dy - ayx nx - 2 ayy ny
// at an equilibrium point. Real parts within hyp_tol of zero => NonHyperbolic.
inline Stability classify_stability(const LvSystem& s, const LvState& point,
                                    double eq_tol = 1e-8, double hyp_tol = 1e-10) {
    const LvState r = rhs(s, point);
    if (std::fabs(r.nx) > eq_tol || std::fabs(r.ny) > eq_tol)
        throw PreconditionError("classify_stability: point is not an equilibrium");

    const double j11 = s.bx - s.dx - 2.0 * s.axx * point.nx - s.axy * point.ny;
    const double j12 = -s.axy * point.nx;
    const double j21 = -s.ayx * point.ny;
    const double j22 = s.by - s.dy - s.ayx * point.nx - 2.0 * s.ayy * point.ny;

    const double tr = j11 + j22;
    const double det = j11 * j22 - j12 * j21;
    const double disc = tr * tr - 4.0 * det;

    double re1, re2;  // real parts of the eigenvalues
    if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        re1 = 0.5 * (tr + sq);
        re2 = 0.5 * (tr - sq);
    } else {
        re1 = re2 = 0.5 * tr;
    }
    if (std::fabs(re1) <= hyp_tol || std::fabs(re2) <= hyp_tol)
        return Stability::NonHyperbolic;
    if (re1 < 0.0 && re2 < 0.0) return Stability::Stable;
    if (re1 > 0.0 && re2 > 0.0) return Stability::Unstable;
    return Stability::Saddle;
}

}  // namespace tsslab
