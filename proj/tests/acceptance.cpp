// Acceptance suite: end-to-end statistical checks of the simulation
// laboratory against its analytic oracles. Each criterion prints a single
// PASS/FAIL line; the process exits nonzero if any criterion fails.
//
// Tolerances are pinned here, next to the scenario that owns them. The
// stochastic gates are sized at >= 3 standard errors of their estimators, so
// a healthy build fails any single line with probability well under 1e-2.

#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "tsslab/branching.hpp"
#include "tsslab/harness.hpp"
#include "tsslab/ibm_engine.hpp"
#include "tsslab/lotka_volterra.hpp"
#include "tsslab/model.hpp"
#include "tsslab/point_measure.hpp"
#include "tsslab/rng.hpp"
#include "tsslab/stats.hpp"
#include "tsslab/tss.hpp"
#include "unit/test_support.hpp"

using namespace tsslab;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& title, const std::string& detail) {
    std::printf("[%2d] %s  %s — %s\n", id, pass ? "PASS" : "FAIL", title.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* pattern, ...) {
    va_list args;
    va_start(args, pattern);
    char buf[512];
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return buf;
}

// b = 2 + t used by the invasion criteria: at x = 0, y = 1 the resident
// equilibrium is 1, Fit(1,0) = 1 and the limit fixation probability 1/3.
ModelSpec gentle_spec(std::int64_t K) {
    ModelSpec spec = fixtures::baseline_spec(K);
    spec.birth_spec = RateSpec::make_affine(2.0, {1.0});
    return spec;
}

// --- criterion 1: the resident holds its carrying-capacity band -------------

void criterion_equilibrium() {
    EquilibriumOptions opts;
    opts.horizon = 200.0;  // window = [100, 200]
    const ExperimentReport rep = equilibrium_experiment(
        fixtures::baseline_spec(1000), {0.5}, {1000}, 50, 101, opts);
    const auto& row = rep.extra.at("per_K").at(0);
    report(1, rep.passed,
           "monomorphic resident stays within 5% of its equilibrium mass",
           fmt("K=1000, 50 runs over [100,200]: in-band fraction %.3f (need >= 0.90), "
               "mean |bias| %.4f",
               row.at("in_band_fraction").get<double>(),
               row.at("mean_abs_bias").get<double>()));
}

// --- criterion 2: fixation frequency matches Fit(y,x)/b(y) ------------------

void criterion_fixation() {
    const ExperimentReport rep =
        fixation_experiment(gentle_spec(300), {0.0}, {1.0}, 300, 10000, 202);
    const bool pass = !rep.refused && rep.passed;
    report(2, pass, "a fit mutant fixes with the predicted probability",
           fmt("K=300, 10000 trials: p_hat %.4f, 95%% CI [%.4f, %.4f], "
               "target 1/3 within band [%.4f, %.4f]",
               rep.point_estimate, rep.ci ? rep.ci->lo : 0.0,
               rep.ci ? rep.ci->hi : 0.0, rep.tolerance.at("band_lo").get<double>(),
               rep.tolerance.at("band_hi").get<double>()));
}

// --- criterion 3: branching survival probability ----------------------------

void criterion_branching_survival() {
    BranchingLaw law;
    law.birth = 4.0;
    law.death = 2.0;
    law.initial = 1;
    StopSpec stop;
    stop.upper = 200;  // reaching 200 counts as survival (miss mass 2^-200)

    const int reps = 100000;
    std::int64_t survived = 0;
    for (int r = 0; r < reps; ++r) {
        RngStream rng(substream(303, static_cast<std::uint64_t>(r)));
        const BranchingPath path = simulate_branching(law, stop, rng, false);
        if (path.exit == BranchingExit::Upper) ++survived;
    }
    const double p = static_cast<double>(survived) / reps;
    const bool pass = std::fabs(p - 0.5) < 0.005;
    report(3, pass, "supercritical branching survives with probability 1 - d/b",
           fmt("b=4, d=2, 100000 paths: p_hat %.4f vs 0.5, |diff| %.4f < 0.005", p,
               std::fabs(p - 0.5)));
}

// --- criterion 4: the stopped martingale keeps its mean ---------------------

void criterion_martingale() {
    BranchingLaw law;
    law.birth = 4.0;
    law.death = 2.0;
    law.initial = 5;
    const double expected = 0.03125;  // (d/b)^{n0}

    bool pass = true;
    std::string detail = "b=4, d=2, n0=5, barrier 60, 4000 paths each:";
    for (double t : {1.0, 2.0, 5.0}) {
        StopSpec stop;
        stop.upper = 60;
        stop.horizon = t;
        RunningStats stats;
        for (int r = 0; r < 4000; ++r) {
            RngStream rng(
                substream(404 + static_cast<std::uint64_t>(10.0 * t), r));
            const BranchingPath path = simulate_branching(law, stop, rng, false);
            stats.add(std::pow(0.5, static_cast<double>(path.final_count)));
        }
        const bool ok = std::fabs(stats.mean() - expected) <= 3.0 * stats.stderror();
        pass = pass && ok;
        detail += fmt(" t=%g mean %.5f (3se %.5f)", t, stats.mean(),
                      3.0 * stats.stderror());
    }
    report(4, pass, "(d/b)^count is conserved in mean at stopping times", detail);
}

// --- criterion 5: the drift observable shrinks as K grows -------------------

void criterion_drift_residual() {
    BResidualOptions opts;
    opts.horizon = 300.0;  // window = [150, 300]
    const ExperimentReport rep = b_residual_experiment(
        fixtures::baseline_spec(1000), {0.5}, {100, 300, 1000}, 50, 505, opts);
    const auto& rows = rep.extra.at("per_K");
    report(5, rep.passed,
           "the generator residual decreases strictly in the system size",
           fmt("mean |time-averaged drift| over 50 runs: K=100: %.5f, K=300: %.5f, "
               "K=1000: %.5f",
               rows.at(0).at("mean_abs_residual").get<double>(),
               rows.at(1).at("mean_abs_residual").get<double>(),
               rows.at(2).at("mean_abs_residual").get<double>()));
}

// --- criterion 6: invasion implies substitution, and the flow follows -------

void criterion_lv_substitution() {
    const ModelSpec spec = gentle_spec(1000);
    const IisOutcome iis = check_iis(spec, {0.0}, {1.0});

    const LvSystem sys = LvSystem::from_spec(spec, {0.0}, {1.0});
    const LvTrajectory traj = integrate(sys, LvState{1.0, 0.05}, 200.0);
    const double err = std::fmax(std::fabs(traj.final_state.nx),
                                 std::fabs(traj.final_state.ny - sys.nhat_y()));

    const Stability at_y = classify_stability(sys, LvState{0.0, sys.nhat_y()});
    const Stability at_x = classify_stability(sys, LvState{sys.nhat_x(), 0.0});

    const bool pass = iis == IisOutcome::YFixates && err <= 1e-6 &&
                      at_y == Stability::Stable && at_x == Stability::Saddle;
    report(6, pass, "the deterministic flow completes the predicted substitution",
           fmt("sign test: %s; flow from (1, 0.05) reaches (0, %g) within %.2e "
               "(need <= 1e-6); resident saddle, invader stable",
               to_string(iis), sys.nhat_y(), err));
}

// --- criterion 7: the substitution clock ticks at the analytic rate ---------

void criterion_jump_rate() {
    const ModelSpec spec = fixtures::lambda_spec(1000);
    const double lambda = jump_rate(spec, {0.0});
    const bool exact_ok = std::fabs(lambda - 1.0 / 15.0) <= 1e-14;

    const int reps = 10000;
    RunningStats waits;
    for (int r = 0; r < reps; ++r) {
        RngStream rng(substream(707, static_cast<std::uint64_t>(r)));
        const JumpSample js = sample_jump(spec, {0.0}, rng);
        waits.add(js.wait);
    }
    // waits are exponential(1/15): mean 15, 4 standard errors = 0.6
    const bool mc_ok = std::fabs(waits.mean() - 15.0) <= 0.6;
    report(7, exact_ok && mc_ok, "the trait-substitution jump rate is 1/15",
           fmt("lambda %.12f vs 1/15; mean of 10000 sampled waits %.3f vs 15.0 "
               "(tol 0.6)",
               lambda, waits.mean()));
}

// --- criterion 8: the population one-step law matches the jump process ------

void criterion_one_step_law() {
    const ExperimentReport rep =
        tss_vs_ibm(fixtures::pair_spec(1000), {0.0}, 1000, 2000, 808);
    if (rep.refused) {
        report(8, false, "first substitution matches the one-step law",
               "refused: " + rep.refusal_reason);
        return;
    }
    const double tv = rep.extra.at("tv_distance").get<double>();
    const double rel = rep.extra.at("mean_time_relative_error").get<double>();
    const auto resolved = rep.extra.at("resolved").get<std::int64_t>();
    const bool pass = resolved >= 1990 && tv < 0.06 && rel < 0.10;
    report(8, pass, "first substitution matches the one-step law",
           fmt("K=1000, 2000 runs: resolved %lld, total variation %.4f vs "
               "(0.2, 0.8) (tol 0.06), substitution time %.3f vs %.3f "
               "(rel err %.3f, tol 0.10)",
               static_cast<long long>(resolved), tv,
               rep.extra.at("mean_substitution_time_ibm").get<double>(),
               rep.extra.at("mean_substitution_time_tss").get<double>(), rel));
}

// --- criterion 9: the domination coupling never breaks order ----------------

void criterion_domination() {
    TwoTypeChain chain;
    chain.b1 = chain.b2 = 2.0;
    chain.d1_0 = chain.d2_0 = 1.0;
    chain.K = 100;
    chain.m0 = chain.n0 = 40;
    chain.B = chain.D = 110.0;  // exits cap the load at 220 individuals

    DominationBounds bounds;
    bounds.d1_minus = bounds.d2_minus = 1.0;
    bounds.d1_plus = bounds.d2_plus = 3.2;

    CoupleOptions opts;
    opts.horizon = 2.0;

    const int paths = 10000;
    std::int64_t violations = 0, epochs = 0;
    for (int r = 0; r < paths; ++r) {
        RngStream rng(substream(909, static_cast<std::uint64_t>(r)));
        const CoupledPaths cp = coupled_domination(chain, bounds, rng, opts, false);
        const bool ordered = cp.final_state.lower1 <= cp.final_state.actual1 &&
                             cp.final_state.actual1 <= cp.final_state.upper1 &&
                             cp.final_state.lower2 <= cp.final_state.actual2 &&
                             cp.final_state.actual2 <= cp.final_state.upper2;
        if (!cp.domination_ok || !cp.breaches.empty() || !ordered) ++violations;
        epochs += cp.events;
    }
    report(9, violations == 0,
           "lower and upper branching bounds sandwich the chain pathwise",
           fmt("10000 coupled paths, %lld epochs: %lld order violations (need 0)",
               static_cast<long long>(epochs), static_cast<long long>(violations)));
}

// --- criterion 10: runs are reproducible bit for bit ------------------------

void criterion_determinism() {
    const ModelSpec spec = fixtures::pair_spec(100);
    bool identical = true;
    for (int r = 0; r < 100 && identical; ++r) {
        PointMeasure init(spec.quantizer(), spec.K);
        init.add_individual({0.0}, 100);
        RngStream rng_a(substream(1010, static_cast<std::uint64_t>(r)));
        RngStream rng_b(substream(1010, static_cast<std::uint64_t>(r)));
        const Trajectory a = simulate(spec, init, 2.0, rng_a);
        const Trajectory b = simulate(spec, init, 2.0, rng_b);
        identical = a.events.size() == b.events.size() &&
                    a.final_state == b.final_state;
        for (std::size_t i = 0; identical && i < a.events.size(); ++i)
            identical = a.events[i].time == b.events[i].time &&
                        a.events[i].kind == b.events[i].kind &&
                        a.events[i].parent == b.events[i].parent &&
                        a.events[i].child == b.events[i].child;
    }

    // aggregation folds in replicate order, so thread count cannot matter
    BResidualOptions serial;
    serial.horizon = 40.0;
    serial.threads = 1;
    BResidualOptions threaded = serial;
    threaded.threads = 3;
    const ExperimentReport r1 =
        b_residual_experiment(fixtures::baseline_spec(50), {0.5}, {50}, 8, 1111, serial);
    const ExperimentReport r3 = b_residual_experiment(
        fixtures::baseline_spec(50), {0.5}, {50}, 8, 1111, threaded);
    const bool fold_stable =
        r1.extra == r3.extra && r1.point_estimate == r3.point_estimate;

    report(10, identical && fold_stable, "equal seeds give bit-identical histories",
           fmt("100 replicate pairs replayed exactly: %s; 1-thread vs 3-thread "
               "aggregate identical: %s",
               identical ? "yes" : "no", fold_stable ? "yes" : "no"));
}

}  // namespace

int main() {
    std::printf("acceptance: exact simulation laboratory vs analytic oracles\n");
    try {
        criterion_equilibrium();
        criterion_fixation();
        criterion_branching_survival();
        criterion_martingale();
        criterion_drift_residual();
        criterion_lv_substitution();
        criterion_jump_rate();
        criterion_one_step_law();
        criterion_domination();
        criterion_determinism();
    } catch (const std::exception& e) {
        std::printf("[--] FAIL  unhandled error — %s\n", e.what());
        ++g_failures;
    }
    if (g_failures == 0) {
        std::printf("all 10 criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
}
