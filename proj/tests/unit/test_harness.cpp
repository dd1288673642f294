#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>

#include "test_support.hpp"
#include "tsslab/harness.hpp"

using namespace tsslab;

static PointMeasure monomorphic(const ModelSpec& spec, double x, std::int64_t n) {
    PointMeasure mu(spec.quantizer(), spec.K);
    mu.add_individual({x}, n);
    return mu;
}

TEST_CASE("drift observable is exact at and away from capacity", "[harness]") {
    const ModelSpec spec = fixtures::baseline_spec(100);
    const TraitFn one = [](const TraitPoint&) { return 1.0; };
    const TraitFn sq = [](const TraitPoint& p) { return p[0] * p[0]; };
    const Differentiable id = Differentiable::identity();

    // constant f never touches the trait, so these two checks are dyadic-exact
    // at capacity: b - d - <mu, alpha> = 2 - 1 - 1 = 0
    CHECK(evaluate_B(spec, monomorphic(spec, 0.25, 100), one, id) == 0.0);

    // at half mass the per-capita surplus is 0.5, carried by mass 0.5
    CHECK(evaluate_B(spec, monomorphic(spec, 0.25, 50), one, id) == 0.25);

    // f = x^2 sees the canonical cell-centre trait (2^-33 above the nominal
    // 0.25), so the expectation is computed at that trait with the fold's own
    // operation order; equality is then bit for bit
    const Quantizer quant = spec.quantizer();
    const double xq = quant.decode(quant.encode({0.25}))[0];
    const double fq = xq * xq;
    const double drift_half = 0.5 * fq * 50.0 / 100.0;  // ~1/64
    CHECK(evaluate_B(spec, monomorphic(spec, 0.25, 50), sq, id) == drift_half);

    // chain rule: F(v) = v^2 multiplies by F'(<mu, f>) = 2 <mu, f>
    const Differentiable square{[](double v) { return v * v; },
                                [](double v) { return 2.0 * v; }};
    const double inner_half = fq * 50.0 / 100.0;
    CHECK(evaluate_B(spec, monomorphic(spec, 0.25, 50), sq, square) ==
          2.0 * inner_half * drift_half);

    // two atoms share the load <mu, alpha> = 0.75
    PointMeasure mixed = monomorphic(spec, 0.25, 50);
    mixed.add_individual({0.5}, 25);
    CHECK(evaluate_B(spec, mixed, one, id) == 0.1875);
}

TEST_CASE("streaming drift evaluation matches the fresh fold", "[harness]") {
    const ModelSpec spec = fixtures::pair_spec(100).without_mutation();
    PointMeasure init(spec.quantizer(), spec.K);
    init.add_individual({0.0}, 60);
    init.add_individual({1.0}, 40);
    IbmStepper stepper(spec, init);

    const TraitFn f = [](const TraitPoint& p) { return 1.0 + p[0]; };
    const Differentiable id = Differentiable::identity();

    RngStream rng(11);
    for (int block = 0; block < 6; ++block) {
        // with alpha constant the engine's incremental loads stay exact, so
        // the streaming view and the fresh measure fold agree bitwise
        CHECK(evaluate_B(stepper, f, id) ==
              evaluate_B(spec, stepper.to_measure(), f, id));
        for (int k = 0; k < 50; ++k) stepper.step_until(1e9, rng);
    }
}

TEST_CASE("neighborhood membership", "[harness]") {
    const ModelSpec spec = fixtures::baseline_spec(100);
    const Neighborhood nb(spec, {0.25}, 0.1);
    CHECK(nb.nhat == 1.0);

    CHECK(nb.contains(monomorphic(spec, 0.25, 100)));
    CHECK(nb.contains(monomorphic(spec, 0.25, 95)));
    CHECK_FALSE(nb.contains(monomorphic(spec, 0.25, 89)));   // mass too low
    CHECK_FALSE(nb.contains(monomorphic(spec, 0.5, 100)));   // wrong atom

    // any second atom disqualifies, whatever the mass
    PointMeasure dimorphic = monomorphic(spec, 0.25, 95);
    dimorphic.add_individual({0.5}, 1);
    CHECK_FALSE(nb.contains(dimorphic));

    const Quantizer quant = spec.quantizer();
    CHECK(nb.contains(EquilibriumAtom{{0.25}, 1.04}, quant));
    CHECK_FALSE(nb.contains(EquilibriumAtom{{0.25}, 1.2}, quant));
    CHECK_FALSE(nb.contains(EquilibriumAtom{{0.5}, 1.0}, quant));

    CHECK_THROWS_AS(Neighborhood(spec, {0.25}, 0.0), PreconditionError);
}

TEST_CASE("occupation estimates add up over complements and windows", "[harness]") {
    const ModelSpec spec = fixtures::baseline_spec(100);
    RngStream rng(17);
    const Trajectory traj = simulate(spec, monomorphic(spec, 0.25, 100), 3.0, rng);
    REQUIRE(traj.events_recorded);

    const auto busy = [](const PointMeasure& mu) { return mu.mass() >= 0.95; };
    const auto idle = [](const PointMeasure& mu) { return mu.mass() < 0.95; };

    const double in_busy = estimate_occupation(traj, 1.0, 3.0, busy);
    const double in_idle = estimate_occupation(traj, 1.0, 3.0, idle);
    CHECK_THAT(in_busy + in_idle, Catch::Matchers::WithinAbs(2.0, 1e-12));

    // windows concatenate
    const double whole = estimate_occupation(traj, 0.0, 3.0, busy);
    const double left = estimate_occupation(traj, 0.0, 1.5, busy);
    const double right = estimate_occupation(traj, 1.5, 3.0, busy);
    CHECK_THAT(left + right, Catch::Matchers::WithinAbs(whole, 1e-12));

    CHECK_THROWS_AS(estimate_occupation(traj, -1.0, 2.0, busy), PreconditionError);
    CHECK_THROWS_AS(estimate_occupation(traj, 0.0, 4.0, busy), PreconditionError);
    CHECK_THROWS_AS(estimate_occupation(traj, 2.0, 1.0, busy), PreconditionError);

    SimulateOptions lean;
    lean.record_events = false;
    RngStream rng2(17);
    const Trajectory no_events =
        simulate(spec, monomorphic(spec, 0.25, 100), 3.0, rng2, lean);
    CHECK_THROWS_AS(estimate_occupation(no_events, 0.0, 1.0, busy),
                    PreconditionError);
}

TEST_CASE("equilibrium experiment holds the band", "[harness][stochastic]") {
    EquilibriumOptions opts;
    opts.horizon = 80.0;
    opts.band = 0.2;
    const ExperimentReport report = equilibrium_experiment(
        fixtures::baseline_spec(100), {0.25}, {100, 400}, 8, 77, opts);

    CHECK_FALSE(report.refused);
    CHECK(report.passed);
    REQUIRE(report.extra.at("per_K").size() == 2);
    for (const auto& row : report.extra.at("per_K")) {
        CHECK(row.at("absorbed").get<std::int64_t>() == 0);
        CHECK(row.at("in_band_fraction").get<double>() >= 0.9);
    }
}

TEST_CASE("drift residual shrinks as K grows", "[harness][stochastic]") {
    BResidualOptions opts;
    opts.horizon = 60.0;
    const ExperimentReport report = b_residual_experiment(
        fixtures::baseline_spec(100), {0.25}, {50, 800}, 16, 99, opts);

    CHECK_FALSE(report.refused);
    CHECK(report.passed);
    CHECK(report.extra.at("decreasing").get<bool>());
    REQUIRE(report.extra.at("per_K").size() == 2);
    const double coarse = report.extra.at("per_K")[0].at("mean_abs_residual").get<double>();
    const double fine = report.extra.at("per_K")[1].at("mean_abs_residual").get<double>();
    CHECK(coarse > fine);
    CHECK(report.point_estimate == fine);
}

TEST_CASE("fixation experiment follows the invasion probability",
          "[harness][stochastic]") {
    const ExperimentReport report =
        fixation_experiment(fixtures::pair_spec(60), {0.0}, {1.0}, 60, 400, 1234);

    REQUIRE_FALSE(report.refused);
    CHECK_THAT(report.target, Catch::Matchers::WithinAbs(0.8, 1e-12));
    CHECK_THAT(report.tolerance.at("band_lo").get<double>(),
               Catch::Matchers::WithinAbs(0.78, 1e-9));
    CHECK_THAT(report.tolerance.at("band_hi").get<double>(),
               Catch::Matchers::WithinAbs(0.81, 1e-9));
    CHECK(report.parameters.at("residents").get<std::int64_t>() == 60);

    REQUIRE(report.ci.has_value());
    const auto fixed = report.extra.at("fixed").get<std::int64_t>();
    const auto extinct = report.extra.at("extinct").get<std::int64_t>();
    const auto undecided = report.extra.at("undecided").get<std::int64_t>();
    CHECK(fixed + extinct + undecided == 400);
    CHECK(undecided == 0);
    CHECK(report.passed);
}

TEST_CASE("fixation experiment refuses outside its regime", "[harness]") {
    // deleterious direction: Fit(x, y) = -1
    const ExperimentReport downhill =
        fixation_experiment(fixtures::pair_spec(60), {1.0}, {0.0}, 60, 10, 1);
    CHECK(downhill.refused);
    CHECK(downhill.refusal_reason.find("not positive") != std::string::npos);

    // mutual invasibility: narrow competition makes 0.2 and 0.8 coexist
    ModelSpec coex = fixtures::baseline_spec(100);
    coex.competition = CompetitionSpec::make_gaussian_kernel(0.25, 0.5);
    const ExperimentReport both =
        fixation_experiment(coex, {0.2}, {0.8}, 100, 10, 1);
    CHECK(both.refused);
    CHECK(both.refusal_reason.find("invasion does not imply substitution") !=
          std::string::npos);
}

TEST_CASE("neutral mutant fixes with probability one over the census",
          "[harness][stochastic]") {
    const ModelSpec spec = fixtures::baseline_spec(40);
    CHECK(neutral_fixation_target(spec, {0.25}) == 1.0 / 41.0);

    // direct engine check: identical rates, one tagged individual among 41
    const Quantizer quant = spec.quantizer();
    const TraitKey tag = quant.encode({0.75});
    const int reps = 2000;
    int fixed = 0;
    for (int r = 0; r < reps; ++r) {
        RngStream rng(substream(4242, static_cast<std::uint64_t>(r)));
        PointMeasure init(quant, spec.K);
        init.add_individual({0.25}, 40);
        init.add_individual({0.75}, 1);
        IbmStepper stepper(spec, init);
        for (;;) {
            const auto kind = stepper.step_core(1e9, rng);
            if (kind == IbmStepper::StepKind::None) break;
            if (stepper.support_size() == 1) {
                if (stepper.atoms().front().key == tag) ++fixed;
                break;
            }
        }
    }
    const double p_hat = static_cast<double>(fixed) / reps;
    CHECK_THAT(p_hat, Catch::Matchers::WithinAbs(1.0 / 41.0, 0.011));
}

TEST_CASE("one-step comparison refuses models it cannot score", "[harness]") {
    // no mutation: nothing to compare
    const ExperimentReport mute =
        tss_vs_ibm(fixtures::baseline_spec(100), {0.25}, 100, 4, 1);
    CHECK(mute.refused);
    CHECK(mute.refusal_reason.find("u_K = 0") != std::string::npos);

    // continuous kernel: total variation needs a finite trait set
    ModelSpec smooth = fixtures::baseline_spec(100);
    smooth.kernel = MutationSpec::make_gaussian_reflected({0.1});
    smooth.u_coeff = 1.0;
    const ExperimentReport cont = tss_vs_ibm(smooth, {0.25}, 100, 4, 1);
    CHECK(cont.refused);
    CHECK(cont.refusal_reason.find("atomic") != std::string::npos);
}

TEST_CASE("one-step law matches the population at moderate K",
          "[harness][stochastic]") {
    // pair model at K = 50: the first mutation resolves back to x0 with
    // probability 0.2 and substitutes y with probability 0.8 in the limit
    const ExperimentReport report =
        tss_vs_ibm(fixtures::pair_spec(50), {0.0}, 50, 100, 31);

    REQUIRE_FALSE(report.refused);
    CHECK(report.passed);
    const auto resolved = report.extra.at("resolved").get<std::int64_t>();
    CHECK(resolved >= 90);
    CHECK(report.point_estimate < 0.2);  // finite-K total variation
    CHECK_THAT(report.extra.at("mean_substitution_time_tss").get<double>(),
               Catch::Matchers::WithinRel(0.625, 1e-12));
    const double t_ibm =
        report.extra.at("mean_substitution_time_ibm").get<double>();
    CHECK_THAT(t_ibm, Catch::Matchers::WithinAbs(0.625, 0.3));
    CHECK(report.extra.at("law").size() == 2);
}
