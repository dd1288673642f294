#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>

#include "test_support.hpp"
#include "tsslab/branching.hpp"
#include "tsslab/ibm_engine.hpp"
#include "tsslab/point_measure.hpp"
#include "tsslab/rng.hpp"
#include "tsslab/stats.hpp"

using namespace tsslab;

TEST_CASE("extinction probability closed form", "[branching]") {
    BranchingLaw law;
    law.birth = 4.0;
    law.death = 2.0;
    law.initial = 1;
    CHECK(extinction_probability(law) == 0.5);

    law.initial = 3;
    CHECK(extinction_probability(law) == 0.125);

    // subcritical and critical laws die out almost surely
    law.birth = 1.0;
    law.death = 2.0;
    CHECK(extinction_probability(law) == 1.0);
    law.birth = 2.0;
    CHECK(extinction_probability(law) == 1.0);

    // pure birth with individuals never dies; without individuals it already has
    law.birth = 3.0;
    law.death = 0.0;
    CHECK(extinction_probability(law) == 0.0);
    law.initial = 0;
    CHECK(extinction_probability(law) == 1.0);

    CHECK(extinction_probability(BranchingLaw::zero_process()) == 1.0);

    BranchingLaw bad;
    bad.initial = -1;
    CHECK_THROWS_AS(extinction_probability(bad), PreconditionError);
}

TEST_CASE("exit bound closed form", "[branching]") {
    // climbing K*eps = 10 levels against drift b=4 > d=2 costs 2^-10
    CHECK_THAT(exit_bound(4.0, 2.0, 100, 0.1),
               Catch::Matchers::WithinRel(9.765625e-4, 1e-12));
    // symmetric in the drift direction
    CHECK(exit_bound(2.0, 4.0, 100, 0.1) == exit_bound(4.0, 2.0, 100, 0.1));
    // eps = 0 gives the trivial bound
    CHECK(exit_bound(4.0, 2.0, 100, 0.0) == 1.0);

    CHECK_THROWS_AS(exit_bound(2.0, 2.0, 100, 0.1), PreconditionError);
    CHECK_THROWS_AS(exit_bound(0.0, 2.0, 100, 0.1), PreconditionError);
    CHECK_THROWS_AS(exit_bound(4.0, 2.0, 0, 0.1), PreconditionError);
    CHECK_THROWS_AS(exit_bound(4.0, 2.0, 100, -0.5), PreconditionError);
}

TEST_CASE("pure-birth barrier crossing time matches the harmonic sum",
          "[branching][stochastic]") {
    BranchingLaw law;
    law.birth = 1.0;
    law.death = 0.0;
    law.initial = 50;
    StopSpec stop;
    stop.upper = 100;

    // time from 50 to 100 is a sum of independent exponentials with rates
    // 50..99, so its mean is the harmonic stretch sum_{k=50}^{99} 1/k
    double expected = 0.0;
    double var = 0.0;
    for (int k = 50; k < 100; ++k) {
        expected += 1.0 / k;
        var += 1.0 / (static_cast<double>(k) * k);
    }

    const int reps = 400;
    RunningStats ts;
    for (int r = 0; r < reps; ++r) {
        RngStream rng(substream(505, static_cast<std::uint64_t>(r)));
        const BranchingPath path = simulate_branching(law, stop, rng, false);
        REQUIRE(path.exit == BranchingExit::Upper);
        REQUIRE(path.final_count == 100);
        ts.add(path.exit_time);
    }
    const double margin = 4.0 * std::sqrt(var / reps);
    CHECK_THAT(ts.mean(), Catch::Matchers::WithinAbs(expected, margin));
}

TEST_CASE("subcritical path dies out and replays through count_at", "[branching]") {
    BranchingLaw law;
    law.birth = 0.5;
    law.death = 2.0;
    law.initial = 3;
    StopSpec stop;
    stop.horizon = 1e9;

    RngStream rng(99);
    const BranchingPath path = simulate_branching(law, stop, rng);
    REQUIRE(path.exit == BranchingExit::Extinct);
    CHECK(path.final_count == 0);
    CHECK(path.count_at(0.0) == 3);
    CHECK(path.count_at(path.exit_time) == 0);

    // the step record replays to the final count
    std::int64_t n = path.initial;
    for (const auto& s : path.steps) n += s.delta;
    CHECK(n == path.final_count);
    CHECK(static_cast<std::int64_t>(path.steps.size()) >= 3);
}

TEST_CASE("degenerate stopping rules", "[branching]") {
    BranchingLaw law;
    law.birth = 4.0;
    law.death = 2.0;
    law.initial = 5;

    // a supercritical law with no stopping rule would never return
    RngStream rng(7);
    CHECK_THROWS_AS(simulate_branching(law, StopSpec{}, rng), PreconditionError);

    // already at or above the barrier: immediate exit
    StopSpec at_barrier;
    at_barrier.upper = 5;
    const BranchingPath hit = simulate_branching(law, at_barrier, rng);
    CHECK(hit.exit == BranchingExit::Upper);
    CHECK(hit.exit_time == 0.0);
    CHECK(hit.steps.empty());

    // rateless population freezes, or coasts to the horizon when one is set
    BranchingLaw inert;
    inert.initial = 5;
    const BranchingPath frozen = simulate_branching(inert, StopSpec{}, rng);
    CHECK(frozen.exit == BranchingExit::Frozen);
    CHECK(frozen.final_count == 5);
    StopSpec horizon_only;
    horizon_only.horizon = 7.0;
    const BranchingPath coast = simulate_branching(inert, horizon_only, rng);
    CHECK(coast.exit == BranchingExit::Horizon);
    CHECK(coast.exit_time == 7.0);
    CHECK(coast.final_count == 5);

    // the identically-zero process is extinct from the start
    const BranchingPath zero = simulate_branching(BranchingLaw::zero_process(),
                                                  StopSpec{}, rng);
    CHECK(zero.exit == BranchingExit::Extinct);
    CHECK(zero.initial == 0);
}

TEST_CASE("stopped martingale identity", "[branching][stochastic]") {
    // For B(t) with b=4, d=2, (d/b)^{B(t smallest sigma)} is a bounded
    // martingale, so its mean stays (1/2)^{n0} = 0.03125 at every stopping
    // time below the barrier.
    BranchingLaw law;
    law.birth = 4.0;
    law.death = 2.0;
    law.initial = 5;
    StopSpec stop;
    stop.upper = 40;
    stop.horizon = 3.0;

    const int reps = 2000;
    RunningStats ms;
    for (int r = 0; r < reps; ++r) {
        RngStream rng(substream(606, static_cast<std::uint64_t>(r)));
        const BranchingPath path = simulate_branching(law, stop, rng, false);
        ms.add(std::pow(0.5, static_cast<double>(path.final_count)));
    }
    CHECK_THAT(ms.mean(), Catch::Matchers::WithinAbs(0.03125, 0.012));
}

TEST_CASE("two-type chain construction from a model", "[branching]") {
    const ModelSpec spec = fixtures::pair_spec(100).without_mutation();
    const Quantizer q = spec.quantizer();
    const TraitPoint x{0.0}, y{1.0};
    const TraitPoint cx = q.decode(q.encode(x)), cy = q.decode(q.encode(y));

    const TwoTypeChain chain = TwoTypeChain::from_spec(spec, x, y, 60, 40);
    CHECK(chain.b1 == spec.birth(cx));
    CHECK(chain.b2 == spec.birth(cy));
    CHECK(chain.d1_0 == spec.death(cx));
    CHECK(chain.d2_0 == spec.death(cy));
    CHECK(chain.a12 == spec.alpha(cx, cy));
    CHECK(chain.K == 100);
    CHECK(chain.m0 == 60);

    // same atom, and arguments in the wrong key order, are both rejected
    CHECK_THROWS_AS(TwoTypeChain::from_spec(spec, x, x, 1, 1), PreconditionError);
    CHECK_THROWS_AS(TwoTypeChain::from_spec(spec, y, x, 60, 40), PreconditionError);
}

TEST_CASE("two-type chain reproduces the engine bit for bit", "[branching][ibm]") {
    // Matched parameters, matched seed, mutation off: the chain and the
    // engine draw the same exponentials and uniforms against identical
    // floating-point rate sums, so their event streams coincide exactly.
    const ModelSpec spec = fixtures::pair_spec(100).without_mutation();
    const Quantizer q = spec.quantizer();
    const TraitPoint x{0.0}, y{1.0};
    const TraitPoint cx = q.decode(q.encode(x)), cy = q.decode(q.encode(y));
    const std::int64_t m0 = 60, n0 = 40;
    const double horizon = 0.25;

    const TwoTypeChain chain = TwoTypeChain::from_spec(spec, x, y, m0, n0);
    RngStream rng_chain(substream(2024, 7));
    const TwoTypePath path = simulate_two_type(chain, rng_chain, horizon);
    REQUIRE(path.events.size() > 100);
    REQUIRE(path.exit == TwoTypeExit::Horizon);

    PointMeasure mu(q, spec.K);
    mu.add_individual(x, m0);
    mu.add_individual(y, n0);
    IbmStepper stepper(spec, mu);
    RngStream rng_engine(substream(2024, 7));

    for (const TwoTypeEvent& ev : path.events) {
        const auto engine_ev = stepper.step_until(horizon, rng_engine);
        REQUIRE(engine_ev.has_value());
        // bitwise-identical event clock
        REQUIRE(engine_ev->time == ev.time);
        // same actor and same direction
        const TraitPoint& expected_parent = ev.which == 1 ? cx : cy;
        REQUIRE(engine_ev->parent == expected_parent);
        if (ev.delta == 1) {
            REQUIRE(engine_ev->kind == EventKind::BirthClonal);
        } else {
            REQUIRE(engine_ev->kind == EventKind::Death);
        }
    }

    // both sides agree that the horizon ends the run, and on the census
    const auto tail = stepper.step_until(horizon, rng_engine);
    CHECK_FALSE(tail.has_value());
    CHECK(stepper.time() == horizon);
    CHECK(stepper.total_count() == path.m_final + path.n_final);
}

TEST_CASE("invasion band brackets the branching heuristic", "[branching]") {
    const ModelSpec spec = fixtures::pair_spec(1000);
    const TraitPoint x{0.0}, y{1.0};
    const double eps = 0.05;

    // n_hat = 1, alpha = 1, d(y) = 1, b(y) = 10 at the nominal traits
    const auto [d2m, d2p] = mutant_death_bounds(spec, x, y, eps);
    CHECK_THAT(d2m, Catch::Matchers::WithinAbs(1.9, 1e-6));
    CHECK_THAT(d2p, Catch::Matchers::WithinAbs(2.2, 1e-6));

    const auto [lo, hi] = invasion_band(spec, x, y, eps);
    CHECK_THAT(lo, Catch::Matchers::WithinAbs(0.78, 1e-6));
    CHECK_THAT(hi, Catch::Matchers::WithinAbs(0.81, 1e-6));

    // the frozen-environment survival probability sits inside the band
    const double fit = fitness(spec, y, x);
    const double target = fit / spec.birth(y);
    CHECK(lo < target);
    CHECK(target < hi);

    // the band collapses onto the target as eps -> 0
    const auto [lo0, hi0] = invasion_band(spec, x, y, 0.0);
    CHECK_THAT(lo0, Catch::Matchers::WithinAbs(target, 1e-12));
    CHECK_THAT(hi0, Catch::Matchers::WithinAbs(target, 1e-12));

    CHECK_THROWS_AS(mutant_death_bounds(spec, x, y, -0.1), PreconditionError);
}

TEST_CASE("reference time scale sits between log K and 1/(K u_K)", "[branching]") {
    for (std::int64_t K : {30L, 100L, 1000L, 100000L}) {
        const double lk = std::log(static_cast<double>(K));
        const double t = default_t_K(K);
        CHECK(t == lk * lk);
        CHECK(t > lk);
        // with u_K = K^-2 the upper side of the sandwich holds comfortably
        CHECK(t < static_cast<double>(K) * static_cast<double>(K));
    }
}

TEST_CASE("domination coupling preserves the sandwich order",
          "[branching][stochastic]") {
    // Symmetric two-type chain at K=100 with d_i(m,n) = 1 + (m+n)/100; the
    // region caps both coordinates at 110, so d in [1, 3.2] at every
    // reachable state and the constant bounds below are honest.
    TwoTypeChain chain;
    chain.b1 = chain.b2 = 2.0;
    chain.d1_0 = chain.d2_0 = 1.0;
    chain.K = 100;
    chain.m0 = chain.n0 = 40;
    chain.B = chain.D = 110.0;

    DominationBounds bounds;
    bounds.d1_minus = bounds.d2_minus = 1.0;
    bounds.d1_plus = bounds.d2_plus = 3.2;

    CoupleOptions opts;
    opts.horizon = 2.0;

    std::int64_t total_events = 0;
    for (int r = 0; r < 50; ++r) {
        RngStream rng(substream(321, static_cast<std::uint64_t>(r)));
        const CoupledPaths cp = coupled_domination(chain, bounds, rng, opts);
        REQUIRE(cp.domination_ok);
        REQUIRE(cp.breaches.empty());
        CHECK(cp.final_state.lower1 <= cp.final_state.actual1);
        CHECK(cp.final_state.actual1 <= cp.final_state.upper1);
        CHECK(cp.final_state.lower2 <= cp.final_state.actual2);
        CHECK(cp.final_state.actual2 <= cp.final_state.upper2);
        for (const CoupledState& st : cp.states) {
            REQUIRE(st.lower1 <= st.actual1);
            REQUIRE(st.actual1 <= st.upper1);
            REQUIRE(st.lower2 <= st.actual2);
            REQUIRE(st.actual2 <= st.upper2);
        }
        total_events += cp.events;
    }
    CHECK(total_events > 1000);

    // a deliberately false hypothesis is reported, not raised
    DominationBounds tight = bounds;
    tight.d1_plus = 1.5;  // d1 exceeds this whenever m + n > 50
    RngStream rng(substream(321, 0));
    const CoupledPaths breached = coupled_domination(chain, tight, rng, opts);
    CHECK_FALSE(breached.breaches.empty());

    // malformed bounds and disordered initials are preconditions
    RngStream scratch(1);
    DominationBounds inverted = bounds;
    inverted.d1_minus = 4.0;
    CHECK_THROWS_AS(coupled_domination(chain, inverted, scratch, opts),
                    PreconditionError);
    CoupleOptions disordered = opts;
    disordered.z1_minus = 50;  // above the actual initial count of 40
    CHECK_THROWS_AS(coupled_domination(chain, bounds, scratch, disordered),
                    PreconditionError);
}
