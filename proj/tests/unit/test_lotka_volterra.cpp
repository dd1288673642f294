#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "test_support.hpp"
#include "tsslab/errors.hpp"
#include "tsslab/lotka_volterra.hpp"

using namespace tsslab;

static LvSystem symmetric_coexistence() {
    LvSystem s;
    s.bx = 2.0;
    s.dx = 1.0;
    s.by = 2.0;
    s.dy = 1.0;
    s.axx = 1.0;
    s.ayy = 1.0;
    s.axy = 0.5;
    s.ayx = 0.5;
    return s;
}

TEST_CASE("equilibria of the symmetric system are pinned", "[lv]") {
    const LvSystem s = symmetric_coexistence();
    const auto eqs = equilibria(s);
    REQUIRE(eqs.size() == 4);

    CHECK(eqs[0].type == EquilibriumType::Extinction);
    CHECK(eqs[1].type == EquilibriumType::MonomorphicX);
    CHECK(eqs[1].point.nx == Catch::Approx(1.0));
    CHECK(eqs[2].type == EquilibriumType::MonomorphicY);
    CHECK(eqs[2].point.ny == Catch::Approx(1.0));
    CHECK(eqs[3].type == EquilibriumType::Interior);
    CHECK(eqs[3].label == FeasibilityLabel::Feasible);
    CHECK(eqs[3].point.nx == Catch::Approx(2.0 / 3.0));
    CHECK(eqs[3].point.ny == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("stability classification across the quadrants", "[lv]") {
    const LvSystem s = symmetric_coexistence();
    CHECK(classify_stability(s, {0.0, 0.0}) == Stability::Unstable);
    CHECK(classify_stability(s, {1.0, 0.0}) == Stability::Saddle);
    CHECK(classify_stability(s, {2.0 / 3.0, 2.0 / 3.0}) == Stability::Stable);
    CHECK_THROWS_AS(classify_stability(s, {0.4, 0.4}), PreconditionError);
}

TEST_CASE("transverse eigenvalue at a monomorphic rest point is the invasion fitness",
          "[lv]") {
    const ModelSpec pair = fixtures::pair_spec(1000);
    const LvSystem s = LvSystem::from_spec(pair, {0.0}, {1.0});
    // Fit(y,x) = 8 > 0: (n_hat_x, 0) is invadable, a saddle
    CHECK(classify_stability(s, {s.nhat_x(), 0.0}) == Stability::Saddle);
    // Fit(x,y) = -8 < 0 and the resident is internally stable: attracting
    CHECK(classify_stability(s, {0.0, s.nhat_y()}) == Stability::Stable);
}

TEST_CASE("interior equilibrium is degenerate when the determinant vanishes", "[lv]") {
    LvSystem s = symmetric_coexistence();
    s.axy = 1.0;
    s.ayx = 1.0;  // det = 0: a whole line of rest points
    const auto eqs = equilibria(s);
    CHECK(eqs[3].label == FeasibilityLabel::Degenerate);
    CHECK(classify_stability(s, {1.0, 0.0}) == Stability::NonHyperbolic);
}

TEST_CASE("infeasible interior equilibria are labelled, not hidden", "[lv]") {
    LvSystem s = symmetric_coexistence();
    s.by = 10.0;  // growth 9 forces the algebraic crossing outside the quadrant
    s.axy = 0.4;
    s.ayx = 2.0;  // det = 1 - 0.8 = 0.2
    const auto eqs = equilibria(s);
    REQUIRE(eqs.size() == 4);
    CHECK(eqs[3].type == EquilibriumType::Interior);
    CHECK(eqs[3].label == FeasibilityLabel::Infeasible);
    CHECK(eqs[3].point.nx == Catch::Approx(-13.0));
    CHECK(eqs[3].point.ny == Catch::Approx(35.0));
}

TEST_CASE("integration converges to the coexistence point", "[lv]") {
    const LvSystem s = symmetric_coexistence();
    const LvTrajectory traj = integrate(s, {0.1, 1.4}, 80.0);
    CHECK(traj.final_state.nx == Catch::Approx(2.0 / 3.0).margin(1e-8));
    CHECK(traj.final_state.ny == Catch::Approx(2.0 / 3.0).margin(1e-8));
    CHECK(traj.clamp_events == 0);
    CHECK(traj.times.front() == 0.0);
    CHECK(traj.times.back() == Catch::Approx(80.0));
}

TEST_CASE("step halving shrinks the error like a fourth-order method", "[lv]") {
    const LvSystem s = symmetric_coexistence();
    const LvState a = integrate(s, {0.3, 0.9}, 10.0, 1e-2).final_state;
    const LvState b = integrate(s, {0.3, 0.9}, 10.0, 5e-3).final_state;
    CHECK(std::fabs(a.nx - b.nx) < 1e-9);
    CHECK(std::fabs(a.ny - b.ny) < 1e-9);
}

TEST_CASE("sampling stride respects max_samples", "[lv]") {
    const LvSystem s = symmetric_coexistence();
    const LvTrajectory traj = integrate(s, {0.5, 0.5}, 10.0, 1e-2, 16);
    CHECK(traj.times.size() <= 17);  // grid plus the exact final point
    CHECK(traj.times.size() >= 8);
}

TEST_CASE("bad arguments and unstable steps are rejected", "[lv]") {
    const LvSystem s = symmetric_coexistence();
    CHECK_THROWS_AS(integrate(s, {0.5, 0.5}, 10.0, 0.0), PreconditionError);
    CHECK_THROWS_AS(integrate(s, {0.5, 0.5}, -1.0), PreconditionError);
    CHECK_THROWS_AS(integrate(s, {-0.1, 0.5}, 1.0), PreconditionError);

    // Moderate divergence is rescued by the zero clamp, so the instability
    // guard is about genuine overflow: one explicit step from a huge state
    // runs the quadratic stages past the double range before the clamp can
    // act, and the integrator must refuse rather than return garbage.
    CHECK_THROWS_AS(integrate(s, {1e20, 3.0}, 1.0, 1.0), InstabilityError);
}
