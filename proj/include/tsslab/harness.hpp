#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsslab/branching.hpp"
#include "tsslab/errors.hpp"
#include "tsslab/ibm_engine.hpp"
#include "tsslab/model.hpp"
#include "tsslab/parallel.hpp"
#include "tsslab/point_measure.hpp"
#include "tsslab/rng.hpp"
#include "tsslab/stats.hpp"
#include "tsslab/tss.hpp"

namespace tsslab {

// Statistical experiments reproducing the limit statements at desk scale.
// Every experiment is deterministic given (spec, master seed, replicate
// count): replicate r uses RngStream::substream(seed, r) and aggregation is a
// fold over replicate index order regardless of thread count.

using json = nlohmann::ordered_json;

// F with an explicit derivative, for the drift observable below.
struct Differentiable {
    std::function<double(double)> value;
    std::function<double(double)> derivative;

    static Differentiable identity() {
        return {[](double v) { return v; }, [](double) { return 1.0; }};
    }
};

using TraitFn = std::function<double(const TraitPoint&)>;

namespace detail {

// Core of the drift observable: F'(<mu,f>) sum_i (b - d - <mu, alpha(x_i,.)>)
// f(x_i) count_i / K, folded in atom (key) order. load_i = K <mu, alpha(x_i,.)>
// is supplied by the caller so the streaming path can reuse the engine's
// incrementally maintained sums — same formula, same order.
template <typename AtomRange>
double evaluate_B_core(double K, const AtomRange& atoms, const TraitFn& f,
                       const Differentiable& F) {
    double inner = 0.0;  // <mu, f>
    for (const auto& [trait, count, b, d, load] : atoms)
        inner += f(trait) * static_cast<double>(count) / K;
    double drift = 0.0;
    for (const auto& [trait, count, b, d, load] : atoms)
        drift += (b - d - load / K) * f(trait) * static_cast<double>(count) / K;
    return F.derivative(inner) * drift;
}

struct BAtom {
    TraitPoint trait;
    std::int64_t count;
    double b, d, load;
};

}  // namespace detail

inline double evaluate_B(const ModelSpec& spec, const PointMeasure& mu,
                         const TraitFn& f, const Differentiable& F) {
    std::vector<detail::BAtom> atoms;
    atoms.reserve(mu.support_size());
    for (const auto& [key, n] : mu.atoms())
        atoms.push_back({mu.quantizer().decode(key), n, 0.0, 0.0, 0.0});
    for (auto& a : atoms) {
        a.b = spec.birth(a.trait);
        a.d = spec.death(a.trait);
        double load = 0.0;
        for (const auto& other : atoms)
            load += spec.alpha(a.trait, other.trait) * static_cast<double>(other.count);
        a.load = load;
    }
    return detail::evaluate_B_core(static_cast<double>(mu.K()), atoms, f, F);
}

// Streaming overload on a live stepper; uses its cached rates and loads.
inline double evaluate_B(const IbmStepper& stepper, const TraitFn& f,
                         const Differentiable& F) {
    struct View {
        const std::vector<IbmStepper::AtomState>* atoms;
        struct Iter {
            const IbmStepper::AtomState* p;
            bool operator!=(const Iter& o) const { return p != o.p; }
            void operator++() { ++p; }
            auto operator*() const {
                return std::tuple<const TraitPoint&, std::int64_t, double, double,
                                  double>(p->trait, p->count, p->b, p->d, p->comp);
            }
        };
        Iter begin() const { return {atoms->data()}; }
        Iter end() const { return {atoms->data() + atoms->size()}; }
    };
    return detail::evaluate_B_core(static_cast<double>(stepper.spec().K),
                                   View{&stepper.atoms()}, f, F);
}

// Measure-space neighborhood N_eps(x): monomorphic at x with mass within eps
// of the equilibrium n̂_x.
struct Neighborhood {
    TraitPoint center;
    double eps = 0.0;
    double nhat = 0.0;
    TraitKey center_key;

    Neighborhood(const ModelSpec& spec, TraitPoint x, double eps_)
        : center(std::move(x)), eps(eps_) {
        if (!(eps > 0.0)) throw PreconditionError("Neighborhood: eps must be positive");
        nhat = equilibrium_mass(spec, center);
        center_key = spec.quantizer().encode(center);
    }

    bool contains(const PointMeasure& mu) const {
        if (mu.support_size() != 1) return false;
        if (mu.atoms().begin()->first != center_key) return false;
        return std::fabs(mu.mass() - nhat) <= eps;
    }

    bool contains(const EquilibriumAtom& atom, const Quantizer& quant) const {
        if (quant.encode(atom.trait) != center_key) return false;
        return std::fabs(atom.mass - nhat) <= eps;
    }
};

// Time within [w0,w1] the trajectory's state satisfies A, by exact sojourn
// accounting over the recorded event list.
inline double estimate_occupation(const Trajectory& traj, double w0, double w1,
                                  const std::function<bool(const PointMeasure&)>& A) {
    if (!(w0 >= 0.0) || !(w1 <= traj.end_time + 1e-12) || !(w0 <= w1))
        throw PreconditionError("estimate_occupation: window outside the trajectory");
    if (!traj.events_recorded)
        throw PreconditionError(
            "estimate_occupation: trajectory was simulated without event recording");
    double acc = 0.0;
    PointMeasure state = traj.initial;
    double seg_start = 0.0;
    auto flush = [&](double seg_end) {
        const double lo = std::max(seg_start, w0);
        const double hi = std::min(seg_end, w1);
        if (hi > lo && A(state)) acc += hi - lo;
    };
    for (const Event& e : traj.events) {
        flush(e.time);
        seg_start = e.time;
        switch (e.kind) {
            case EventKind::BirthClonal:
            case EventKind::BirthMutant:
                state.add_individual(e.child);
                break;
            case EventKind::Death:
                state.remove_individual(e.parent);
                break;
        }
    }
    flush(traj.end_time);
    return acc;
}

// --- reports ----------------------------------------------------------------

struct ExperimentReport {
    std::string name;
    json parameters = json::object();
    json replicates = json::array();  // per-replicate outcome rows
    double point_estimate = std::numeric_limits<double>::quiet_NaN();
    std::optional<WilsonInterval> ci;
    double target = std::numeric_limits<double>::quiet_NaN();
    std::string target_note;  // where the target value comes from
    json tolerance = json::object();
    bool passed = false;
    bool refused = false;
    std::string refusal_reason;
    json extra = json::object();
    double runtime_seconds = 0.0;
};

namespace detail {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(clock::now() - start_).count();
    }

private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_ = clock::now();
};

}  // namespace detail

// --- equilibrium experiment -------------------------------------------------

struct EquilibriumOptions {
    double horizon = 200.0;
    double window_start_fraction = 0.5;  // averaging window [frac*h, h]
    double band = 0.05;                  // relative band around n̂_x
    double min_in_band_fraction = 0.9;   // pass threshold per K
    unsigned threads = 0;
    bool keep_replicate_rows = true;
};

// Monomorphic runs (mutation off) at each K: event-exact time average of the
// mass over the second half of the horizon, compared with n̂_x.
inline ExperimentReport equilibrium_experiment(const ModelSpec& base,
                                               const TraitPoint& x,
                                               const std::vector<std::int64_t>& Ks,
                                               int replicates, std::uint64_t seed,
                                               const EquilibriumOptions& opts = {}) {
    detail::Stopwatch watch;
    ExperimentReport report;
    report.name = "equilibrium";
    const double nhat = equilibrium_mass(base, x);
    report.target = nhat;
    report.target_note = "analytic equilibrium mass (b-d)/alpha";
    report.parameters = {{"replicates", replicates},
                         {"horizon", opts.horizon},
                         {"window_start_fraction", opts.window_start_fraction},
                         {"band", opts.band},
                         {"nhat", nhat}};
    report.tolerance = {{"relative_band", opts.band},
                        {"min_in_band_fraction", opts.min_in_band_fraction}};

    struct Row {
        double avg = 0.0;
        bool absorbed = false;
    };

    const double w0 = opts.horizon * opts.window_start_fraction;
    const double w1 = opts.horizon;
    bool all_pass = true;
    double last_fraction = 0.0;
    json per_k = json::array();
    std::vector<double> mean_abs_bias;

    for (std::size_t ik = 0; ik < Ks.size(); ++ik) {
        const ModelSpec spec = base.with_K(Ks[ik]).without_mutation();
        const auto n0 = static_cast<std::int64_t>(nhat * static_cast<double>(spec.K));
        std::vector<Row> rows(static_cast<std::size_t>(replicates));

        parallel_for(rows.size(), opts.threads, [&](std::size_t r) {
            RngStream rng = RngStream::substream(seed + ik, r);
            PointMeasure init(spec.quantizer(), spec.K);
            if (n0 > 0) init.add_individual(x, n0);
            IbmStepper stepper(spec, init);
            double integral = 0.0;
            double prev_t = 0.0;
            double prev_mass = stepper.mass();
            for (;;) {
                const auto kind = stepper.step_core(w1, rng);
                const double t = stepper.time();
                const double lo = std::max(prev_t, w0);
                if (t > lo) integral += prev_mass * (t - lo);
                if (kind == IbmStepper::StepKind::None) break;
                prev_t = t;
                prev_mass = stepper.mass();
            }
            rows[r].absorbed = stepper.stuck();
            rows[r].avg = integral / (w1 - w0);
        });

        std::int64_t in_band = 0, absorbed = 0;
        RunningStats bias;
        json k_rows = json::array();
        for (const Row& row : rows) {
            const bool ok =
                !row.absorbed && std::fabs(row.avg - nhat) <= opts.band * nhat;
            in_band += ok ? 1 : 0;
            absorbed += row.absorbed ? 1 : 0;
            bias.add(std::fabs(row.avg - nhat));
            if (opts.keep_replicate_rows)
                k_rows.push_back({{"avg_mass", row.avg},
                                  {"absorbed", row.absorbed},
                                  {"in_band", ok}});
        }
        const double fraction =
            static_cast<double>(in_band) / static_cast<double>(replicates);
        last_fraction = fraction;
        all_pass = all_pass && fraction >= opts.min_in_band_fraction;
        mean_abs_bias.push_back(bias.mean());
        per_k.push_back({{"K", Ks[ik]},
                         {"in_band", in_band},
                         {"absorbed", absorbed},
                         {"in_band_fraction", fraction},
                         {"mean_abs_bias", bias.mean()}});
        if (opts.keep_replicate_rows)
            report.replicates.push_back({{"K", Ks[ik]}, {"rows", std::move(k_rows)}});
    }

    bool bias_monotone = true;
    for (std::size_t i = 1; i < mean_abs_bias.size(); ++i)
        bias_monotone = bias_monotone && mean_abs_bias[i] <= mean_abs_bias[i - 1];

    report.point_estimate = last_fraction;
    report.extra = {{"per_K", std::move(per_k)}, {"bias_monotone", bias_monotone}};
    report.passed = all_pass;
    report.runtime_seconds = watch.seconds();
    return report;
}

// --- drift-residual experiment ---------------------------------------------

struct BResidualOptions {
    double horizon = 300.0;
    double window_start_fraction = 0.5;
    unsigned threads = 0;
};

// Mean over replicates of |time-averaged drift observable| (f == 1,
// F = identity) at equilibrium, per K. The absolute residual scales like the
// martingale noise sqrt(4 n̂ b / (T K)), so the sequence decreases in K.
inline ExperimentReport b_residual_experiment(const ModelSpec& base,
                                              const TraitPoint& x,
                                              const std::vector<std::int64_t>& Ks,
                                              int replicates, std::uint64_t seed,
                                              const BResidualOptions& opts = {}) {
    detail::Stopwatch watch;
    ExperimentReport report;
    report.name = "b_residual";
    const double nhat = equilibrium_mass(base, x);
    report.target = 0.0;
    report.target_note = "stationarity of the drift observable";
    report.parameters = {{"replicates", replicates},
                         {"horizon", opts.horizon},
                         {"window_start_fraction", opts.window_start_fraction}};

    const TraitFn f = [](const TraitPoint&) { return 1.0; };
    const Differentiable F = Differentiable::identity();
    const double w0 = opts.horizon * opts.window_start_fraction;
    const double w1 = opts.horizon;

    json per_k = json::array();
    std::vector<double> means;
    for (std::size_t ik = 0; ik < Ks.size(); ++ik) {
        const ModelSpec spec = base.with_K(Ks[ik]).without_mutation();
        const auto n0 = static_cast<std::int64_t>(nhat * static_cast<double>(spec.K));
        std::vector<double> residuals(static_cast<std::size_t>(replicates));

        parallel_for(residuals.size(), opts.threads, [&](std::size_t r) {
            RngStream rng = RngStream::substream(seed + 1000 + ik, r);
            PointMeasure init(spec.quantizer(), spec.K);
            if (n0 > 0) init.add_individual(x, n0);
            IbmStepper stepper(spec, init);
            double integral = 0.0;
            double prev_t = 0.0;
            double prev_B = evaluate_B(stepper, f, F);
            for (;;) {
                const auto kind = stepper.step_core(w1, rng);
                const double t = stepper.time();
                const double lo = std::max(prev_t, w0);
                if (t > lo) integral += prev_B * (t - lo);
                if (kind == IbmStepper::StepKind::None) break;
                prev_t = t;
                prev_B = evaluate_B(stepper, f, F);
            }
            residuals[r] = std::fabs(integral / (w1 - w0));
        });

        RunningStats stats;
        for (double v : residuals) stats.add(v);
        means.push_back(stats.mean());
        per_k.push_back({{"K", Ks[ik]},
                         {"mean_abs_residual", stats.mean()},
                         {"stderr", stats.stderror()}});
    }

    bool decreasing = true;
    for (std::size_t i = 1; i < means.size(); ++i)
        decreasing = decreasing && means[i] < means[i - 1];

    report.point_estimate = means.empty() ? 0.0 : means.back();
    report.extra = {{"per_K", std::move(per_k)}, {"decreasing", decreasing}};
    report.passed = decreasing;
    report.runtime_seconds = watch.seconds();
    return report;
}

// --- fixation experiment ----------------------------------------------------

struct FixationOptions {
    double eps = 0.05;          // branching-band evaluation radius
    double horizon_cap = 1e4;   // raw-time cap per replicate; beyond = undecided
    unsigned threads = 0;
    bool keep_replicate_rows = false;
};

enum class FixationOutcome { MutantFixed, MutantExtinct, Undecided };

// Invasion trial: floor(n̂_x K) residents plus one mutant, mutation off, run
// until one type dies out. Frequency of mutant fixation vs the limit
// Fit(y,x)/b(y), with the finite-eps branching band as the acceptance gate.
inline ExperimentReport fixation_experiment(const ModelSpec& base, const TraitPoint& x,
                                            const TraitPoint& y, std::int64_t K,
                                            int replicates, std::uint64_t seed,
                                            const FixationOptions& opts = {}) {
    detail::Stopwatch watch;
    ExperimentReport report;
    report.name = "fixation";
    const ModelSpec spec = base.with_K(K).without_mutation();

    double fit = 0.0;
    try {
        fit = fitness(spec, y, x);
    } catch (const Error& e) {
        report.refused = true;
        report.refusal_reason = e.what();
        report.runtime_seconds = watch.seconds();
        return report;
    }
    if (!(fit > 0.0)) {
        report.refused = true;
        report.refusal_reason =
            "Fit(y,x) = " + std::to_string(fit) + " is not positive; no invasion regime";
        report.runtime_seconds = watch.seconds();
        return report;
    }
    if (const auto iis = check_iis(spec, x, y); iis != IisOutcome::YFixates) {
        report.refused = true;
        report.refusal_reason = std::string("invasion does not imply substitution here: ") +
                                to_string(iis);
        report.runtime_seconds = watch.seconds();
        return report;
    }

    const double nhat = equilibrium_mass(spec, x);
    const auto m0 = static_cast<std::int64_t>(nhat * static_cast<double>(K));
    const auto [band_lo, band_hi] = invasion_band(spec, x, y, opts.eps);
    report.target = fit / spec.birth(y);
    report.target_note = "limit invasion probability Fit(y,x)/b(y)";
    report.parameters = {{"K", K},
                         {"replicates", replicates},
                         {"residents", m0},
                         {"eps", opts.eps},
                         {"horizon_cap", opts.horizon_cap}};
    report.tolerance = {{"band_lo", band_lo}, {"band_hi", band_hi}};

    const Quantizer quant = spec.quantizer();
    const TraitKey ky = quant.encode(y);
    std::vector<std::int8_t> outcomes(static_cast<std::size_t>(replicates));

    parallel_for(outcomes.size(), opts.threads, [&](std::size_t r) {
        RngStream rng = RngStream::substream(seed, r);
        PointMeasure init(quant, K);
        if (m0 > 0) init.add_individual(x, m0);
        init.add_individual(y, 1);
        IbmStepper stepper(spec, init);
        auto outcome = FixationOutcome::Undecided;
        for (;;) {
            const auto kind = stepper.step_core(opts.horizon_cap, rng);
            if (kind == IbmStepper::StepKind::None) {
                if (!stepper.stuck()) break;  // horizon cap
                outcome = FixationOutcome::MutantExtinct;  // total extinction
                break;
            }
            if (stepper.support_size() == 1) {
                outcome = stepper.atoms().front().key == ky
                              ? FixationOutcome::MutantFixed
                              : FixationOutcome::MutantExtinct;
                break;
            }
        }
        outcomes[r] = static_cast<std::int8_t>(outcome);
    });

    std::int64_t fixed = 0, extinct = 0, undecided = 0;
    for (std::int8_t o : outcomes) {
        switch (static_cast<FixationOutcome>(o)) {
            case FixationOutcome::MutantFixed: ++fixed; break;
            case FixationOutcome::MutantExtinct: ++extinct; break;
            case FixationOutcome::Undecided: ++undecided; break;
        }
        if (opts.keep_replicate_rows) report.replicates.push_back(static_cast<int>(o));
    }

    report.ci = wilson_ci(fixed, replicates, 0.95);
    report.point_estimate = report.ci->estimate;
    report.passed = report.ci->intersects(band_lo, band_hi);
    report.extra = {{"fixed", fixed},
                    {"extinct", extinct},
                    {"undecided", undecided},
                    {"fitness", fit}};
    report.runtime_seconds = watch.seconds();
    return report;
}

// Neutral-fixation oracle: probability that a single neutral mutant (same
// rates as the resident) fixates, classically 1/(initial total count).
inline double neutral_fixation_target(const ModelSpec& spec, const TraitPoint& x) {
    const double nhat = equilibrium_mass(spec, x);
    const auto m0 = static_cast<std::int64_t>(nhat * static_cast<double>(spec.K));
    return 1.0 / static_cast<double>(m0 + 1);
}

// --- TSS vs IBM -------------------------------------------------------------

struct TssVsIbmOptions {
    double horizon_evolutionary = 50.0;  // cap per replicate, evolutionary clock
    unsigned threads = 0;
};

// One-step comparison: the resident trait after the first mutation resolves
// (back to x0, or on to the mutant) against the analytic one-step mixture,
// plus the mean evolutionary-clock time of the first actual substitution
// against 1/lambda(x0). Requires an active mutation rule and an atomic
// kernel (finite support makes total variation exact).
inline ExperimentReport tss_vs_ibm(const ModelSpec& spec, const TraitPoint& x0,
                                   std::int64_t K, int replicates, std::uint64_t seed,
                                   const TssVsIbmOptions& opts = {}) {
    detail::Stopwatch watch;
    ExperimentReport report;
    report.name = "tss_vs_ibm";
    const ModelSpec run_spec = spec.with_K(K);
    if (!(run_spec.mutation_rate() > 0.0)) {
        report.refused = true;
        report.refusal_reason = "u_K = 0: the population never mutates, comparison refused";
        report.runtime_seconds = watch.seconds();
        return report;
    }
    if (run_spec.kernel.kind != MutationKind::Atomic) {
        report.refused = true;
        report.refusal_reason =
            "total-variation comparison needs an atomic kernel (finite trait set)";
        report.runtime_seconds = watch.seconds();
        return report;
    }

    const double nhat = equilibrium_mass(run_spec, x0);
    const double lambda = jump_rate(run_spec, x0);
    const Quantizer quant = run_spec.quantizer();
    const TraitKey kx = quant.encode(x0);

    // analytic one-step law over {stay at x0} + effective targets
    std::map<TraitKey, double> law;
    law[kx] = 0.0;
    {
        double wsum = 0.0;
        for (std::size_t i = 0; i < run_spec.kernel.targets.size(); ++i)
            if (quant.encode(run_spec.kernel.targets[i]) != kx)
                wsum += run_spec.kernel.weights[i];
        if (wsum > 0.0) {
            for (std::size_t i = 0; i < run_spec.kernel.targets.size(); ++i) {
                const TraitKey kt = quant.encode(run_spec.kernel.targets[i]);
                if (kt == kx) continue;
                const TraitPoint& y = run_spec.kernel.targets[i];
                const double w = run_spec.kernel.weights[i] / wsum;
                const double by = run_spec.birth(y);
                double acc = 0.0;
                const double fit = by - run_spec.death(y) - run_spec.alpha(y, x0) * nhat;
                if (fit > 0.0 && by > 0.0) acc = fit / by;
                law[kx] += w * (1.0 - acc);
                law[kt] += w * acc;
            }
        } else {
            law[kx] = 1.0;
        }
    }

    report.parameters = {{"K", K},
                         {"replicates", replicates},
                         {"horizon_evolutionary", opts.horizon_evolutionary},
                         {"lambda", lambda}};
    report.target = 0.0;
    report.target_note = "one-step substitution mixture; mean wait 1/lambda";

    const double scale = static_cast<double>(K) * run_spec.mutation_rate();
    const double raw_horizon = opts.horizon_evolutionary / scale;
    const auto n0 = static_cast<std::int64_t>(nhat * static_cast<double>(K));

    struct Row {
        std::int8_t resolved = 0;   // 1 = stayed at x0, 2 = moved to a mutant
        std::int8_t substituted = 0;
        TraitKey first_trait;       // resident after first resolution
        double substitution_time = 0.0;  // evolutionary clock
    };
    std::vector<Row> rows(static_cast<std::size_t>(replicates));

    parallel_for(rows.size(), opts.threads, [&](std::size_t r) {
        RngStream rng = RngStream::substream(seed, r);
        PointMeasure init(quant, K);
        if (n0 > 0) init.add_individual(x0, n0);
        IbmStepper stepper(run_spec, init);
        Row& row = rows[r];
        bool mutation_seen = false;
        for (;;) {
            const auto kind = stepper.step_core(raw_horizon, rng);
            if (kind == IbmStepper::StepKind::None) break;
            if (kind == IbmStepper::StepKind::BirthMutant) mutation_seen = true;
            if (mutation_seen && stepper.support_size() == 1) {
                const TraitKey& resident = stepper.atoms().front().key;
                if (!row.resolved) {
                    row.resolved = resident == kx ? 1 : 2;
                    row.first_trait = resident;
                }
                if (resident != kx) {
                    row.substituted = 1;
                    row.substitution_time = stepper.time() * scale;
                    break;
                }
            }
        }
    });

    std::map<TraitKey, std::int64_t> observed;
    std::int64_t resolved = 0, substituted = 0, undecided = 0;
    RunningStats sub_times;
    for (const Row& row : rows) {
        if (row.resolved) {
            ++resolved;
            ++observed[row.first_trait];
        } else {
            ++undecided;
        }
        if (row.substituted) {
            ++substituted;
            sub_times.add(row.substitution_time);
        }
    }

    double tv = 0.0;
    if (resolved > 0) {
        // union of analytic and observed supports
        std::map<TraitKey, double> empirical;
        for (const auto& [key, cnt] : observed)
            empirical[key] =
                static_cast<double>(cnt) / static_cast<double>(resolved);
        double acc = 0.0;
        std::map<TraitKey, double> all = law;
        for (const auto& [key, p] : empirical) all.try_emplace(key, 0.0);
        for (const auto& [key, p] : all) {
            const auto it = empirical.find(key);
            const double q = it == empirical.end() ? 0.0 : it->second;
            acc += std::fabs(p - q);
        }
        tv = 0.5 * acc;
    }

    const double mean_wait_tss = lambda > 0.0 ? 1.0 / lambda : 0.0;
    const double mean_wait_ibm = sub_times.count() > 0 ? sub_times.mean() : 0.0;
    const double rel_err = mean_wait_tss > 0.0 && sub_times.count() > 0
                               ? std::fabs(mean_wait_ibm - mean_wait_tss) / mean_wait_tss
                               : std::numeric_limits<double>::quiet_NaN();

    report.point_estimate = tv;
    json law_rows = json::array();
    for (const auto& [key, p] : law) {
        const TraitPoint pt = quant.decode(key);
        const auto it = observed.find(key);
        const double q = resolved > 0 && it != observed.end()
                             ? static_cast<double>(it->second) /
                                   static_cast<double>(resolved)
                             : 0.0;
        law_rows.push_back(
            {{"trait", pt}, {"analytic", p}, {"empirical", q}});
    }
    report.extra = {{"tv_distance", tv},
                    {"resolved", resolved},
                    {"substituted", substituted},
                    {"undecided", undecided},
                    {"mean_substitution_time_ibm", mean_wait_ibm},
                    {"mean_substitution_time_tss", mean_wait_tss},
                    {"mean_time_relative_error", rel_err},
                    {"law", std::move(law_rows)}};
    report.passed = resolved > 0;
    report.runtime_seconds = watch.seconds();
    return report;
}

}  // namespace tsslab
