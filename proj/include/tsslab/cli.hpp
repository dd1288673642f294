#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsslab/branching.hpp"
#include "tsslab/config.hpp"
#include "tsslab/errors.hpp"
#include "tsslab/harness.hpp"
#include "tsslab/ibm_engine.hpp"
#include "tsslab/io.hpp"
#include "tsslab/lotka_volterra.hpp"
#include "tsslab/model.hpp"
#include "tsslab/parallel.hpp"
#include "tsslab/tss.hpp"
#include "tsslab/version.hpp"

namespace tsslab {

// Exit codes: 0 success; 1 io/internal; 2 config syntax; 3 semantic (bad
// keys, unknown experiment, model validation); 4 precondition/refusal.
constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitSyntax = 2;
constexpr int kExitSemantic = 3;
constexpr int kExitPrecondition = 4;

namespace detail {

struct Failure {
    int code = kExitInternal;
    json error;
};

inline Failure classify_failure(const std::exception& e) {
    if (const auto* p = dynamic_cast<const ConfigSyntaxError*>(&e))
        return {kExitSyntax,
                {{"class", "config-syntax"}, {"message", p->what()}, {"line", p->line}}};
    if (const auto* p = dynamic_cast<const ConfigSemanticError*>(&e))
        return {kExitSemantic,
                {{"class", "config-semantic"},
                 {"message", p->what()},
                 {"line", p->line}}};
    if (dynamic_cast<const InvalidModelError*>(&e) != nullptr)
        return {kExitSemantic, {{"class", "invalid-model"}, {"message", e.what()}}};
    if (dynamic_cast<const PreconditionError*>(&e) != nullptr)
        return {kExitPrecondition, {{"class", "precondition"}, {"message", e.what()}}};
    if (dynamic_cast<const FileError*>(&e) != nullptr)
        return {kExitInternal, {{"class", "io"}, {"message", e.what()}}};
    return {kExitInternal, {{"class", "internal"}, {"message", e.what()}}};
}

inline const TraitPoint& need_point(const std::optional<TraitPoint>& p,
                                    const char* key) {
    if (!p)
        throw ConfigSemanticError(std::string("[experiment] is missing required key '") +
                                  key + "'");
    return *p;
}

inline double need_number(const std::optional<double>& v, const char* key) {
    if (!v)
        throw ConfigSemanticError(std::string("[experiment] is missing required key '") +
                                  key + "'");
    return *v;
}

inline std::string join_path(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

// --- subcommand bodies; each returns the report document and appends the
// --- files it wrote

inline json run_simulate_ibm(const RunConfig& cfg, const std::string& out_dir,
                             std::vector<std::string>& outputs, int& exit_code,
                             json& error) {
    (void)exit_code;
    (void)error;
    const ModelSpec& spec = cfg.model;
    const TraitPoint& x0 = need_point(cfg.experiment.x0, "x0");
    const double horizon = need_number(cfg.experiment.horizon, "horizon");
    std::int64_t n0;
    if (cfg.experiment.initial_count) {
        n0 = *cfg.experiment.initial_count;
        if (n0 < 1)
            throw ConfigSemanticError("initial_count must be >= 1");
    } else {
        n0 = static_cast<std::int64_t>(equilibrium_mass(spec, x0) *
                                       static_cast<double>(spec.K));
        if (n0 < 1) n0 = 1;
    }

    PointMeasure init(spec.quantizer(), spec.K);
    init.add_individual(x0, n0);
    RngStream rng = RngStream::substream(cfg.run.seed, 0);
    SimulateOptions opts;
    opts.snapshots = cfg.experiment.snapshots.value_or(512);
    const Trajectory traj =
        cfg.experiment.rescaled ? simulate_rescaled(spec, init, horizon, rng, opts)
                                : simulate(spec, init, horizon, rng, opts);

    write_events_csv(join_path(out_dir, "events.csv"), traj, spec.dimension);
    outputs.push_back("events.csv");
    write_snapshots_csv(join_path(out_dir, "snapshots.csv"), traj, spec.dimension);
    outputs.push_back("snapshots.csv");

    json appearances = json::array();
    for (const auto& a : traj.appearances)
        appearances.push_back({{"time", a.time}, {"trait", a.trait}});
    json doc;
    doc["name"] = "simulate-ibm";
    doc["parameters"] = {{"K", spec.K},
                         {"initial_count", n0},
                         {"horizon", horizon},
                         {"rescaled", cfg.experiment.rescaled},
                         {"seed", cfg.run.seed}};
    doc["events"] = traj.events.size();
    doc["final_mass"] = mass(traj.final_state);
    doc["final_support"] = traj.final_state.support_size();
    doc["absorbed"] = traj.absorbed;
    doc["absorbed_time"] = traj.absorbed ? json(traj.absorbed_time) : json(nullptr);
    doc["appearances"] = std::move(appearances);
    return doc;
}

inline json run_simulate_tss(const RunConfig& cfg, const std::string& out_dir,
                             std::vector<std::string>& outputs, int& exit_code,
                             json& error) {
    (void)exit_code;
    (void)error;
    const ModelSpec& spec = cfg.model;
    const TraitPoint& x0 = need_point(cfg.experiment.x0, "x0");
    const double horizon = need_number(cfg.experiment.horizon, "horizon");
    const std::uint64_t budget = cfg.experiment.budget.value_or(1'000'000);
    const int order = cfg.experiment.quad_order.value_or(64);

    RngStream rng = RngStream::substream(cfg.run.seed, 0);
    const TssPath path = simulate_tss(spec, x0, horizon, rng, budget);
    write_tss_path_csv(join_path(out_dir, "tss_path.csv"), path, spec);
    outputs.push_back("tss_path.csv");

    const TraitPoint& final_trait =
        path.jumps.empty() ? path.initial : path.jumps.back().trait;
    json doc;
    doc["name"] = "simulate-tss";
    doc["parameters"] = {{"horizon", horizon},
                         {"budget", budget},
                         {"quad_order", order},
                         {"seed", cfg.run.seed}};
    doc["jumps"] = path.jumps.size();
    doc["absorbed"] = path.absorbed;
    doc["final_trait"] = final_trait;
    doc["jump_rate_initial"] = jump_rate(spec, x0, order);
    doc["jump_rate_final"] = jump_rate(spec, final_trait, order);
    doc["nhat_final"] = equilibrium_mass(spec, final_trait);
    return doc;
}

inline json run_lv_ode(const RunConfig& cfg, const std::string& out_dir,
                       std::vector<std::string>& outputs, int& exit_code,
                       json& error) {
    (void)exit_code;
    (void)error;
    const ModelSpec& spec = cfg.model;
    const TraitPoint& x = need_point(cfg.experiment.x0, "x0");
    const TraitPoint& y = need_point(cfg.experiment.y, "y");
    const double horizon = need_number(cfg.experiment.horizon, "horizon");
    const double nx0 = need_number(cfg.experiment.nx0, "nx0");
    const double ny0 = need_number(cfg.experiment.ny0, "ny0");
    const double step = cfg.experiment.step.value_or(1e-2);

    const LvSystem sys = LvSystem::from_spec(spec, x, y);
    const LvTrajectory traj = integrate(sys, {nx0, ny0}, horizon, step);
    write_lv_csv(join_path(out_dir, "lv.csv"), traj);
    outputs.push_back("lv.csv");

    json eqs = json::array();
    for (const LvEquilibrium& e : equilibria(sys)) {
        json row = {{"type", to_string(e.type)},
                    {"n_x", e.point.nx},
                    {"n_y", e.point.ny},
                    {"feasibility", to_string(e.label)}};
        if (e.label == FeasibilityLabel::Feasible)
            row["stability"] = to_string(classify_stability(sys, e.point));
        eqs.push_back(std::move(row));
    }
    json doc;
    doc["name"] = "lv-ode";
    doc["parameters"] = {{"horizon", horizon}, {"step", step},
                         {"nx0", nx0},         {"ny0", ny0}};
    doc["final"] = {{"n_x", traj.final_state.nx}, {"n_y", traj.final_state.ny}};
    doc["clamp_events"] = traj.clamp_events;
    doc["equilibria"] = std::move(eqs);
    return doc;
}

inline json run_check_assumptions(const RunConfig& cfg, const std::string& out_dir,
                                  std::vector<std::string>& outputs, int& exit_code,
                                  json& error) {
    (void)out_dir;
    (void)outputs;
    (void)exit_code;
    (void)error;
    const ValidationReport report = validate_spec(cfg.model);
    json violations = json::array();
    for (const ValidationIssue& v : report.violations) {
        json row = {{"condition", v.condition}, {"message", v.message}, {"x", v.x}};
        if (!v.y.empty()) row["y"] = v.y;
        violations.push_back(std::move(row));
    }
    json doc;
    doc["name"] = "check-assumptions";
    doc["parameters"] = {{"lattice", cfg.model.lattice_resolution}};
    doc["valid"] = report.valid();
    doc["violations"] = std::move(violations);
    return doc;
}

inline json finish_experiment(const ExperimentReport& report,
                              const std::string& out_dir,
                              std::vector<std::string>& outputs, int& exit_code,
                              json& error) {
    write_report_csv(join_path(out_dir, "report.csv"), report);
    outputs.push_back("report.csv");
    if (report.refused) {
        exit_code = kExitPrecondition;
        error = {{"class", "refused"}, {"message", report.refusal_reason}};
    }
    return report_to_json(report);
}

inline json run_equilibrium(const RunConfig& cfg, const std::string& out_dir,
                            std::vector<std::string>& outputs, int& exit_code,
                            json& error) {
    const TraitPoint& x0 = need_point(cfg.experiment.x0, "x0");
    if (cfg.experiment.Ks.empty())
        throw ConfigSemanticError("[experiment] is missing required key 'Ks'");
    EquilibriumOptions opts;
    if (cfg.experiment.horizon) opts.horizon = *cfg.experiment.horizon;
    if (cfg.experiment.window_start) opts.window_start_fraction = *cfg.experiment.window_start;
    if (cfg.experiment.band) opts.band = *cfg.experiment.band;
    if (cfg.experiment.min_in_band) opts.min_in_band_fraction = *cfg.experiment.min_in_band;
    opts.threads = cfg.run.threads;
    const ExperimentReport report =
        equilibrium_experiment(cfg.model, x0, cfg.experiment.Ks, cfg.run.replicates,
                               cfg.run.seed, opts);
    return finish_experiment(report, out_dir, outputs, exit_code, error);
}

inline json run_fixation(const RunConfig& cfg, const std::string& out_dir,
                         std::vector<std::string>& outputs, int& exit_code,
                         json& error) {
    const TraitPoint& x0 = need_point(cfg.experiment.x0, "x0");
    const TraitPoint& y = need_point(cfg.experiment.y, "y");
    FixationOptions opts;
    if (cfg.experiment.eps) opts.eps = *cfg.experiment.eps;
    if (cfg.experiment.horizon_cap) opts.horizon_cap = *cfg.experiment.horizon_cap;
    opts.threads = cfg.run.threads;
    const ExperimentReport report = fixation_experiment(
        cfg.model, x0, y, cfg.model.K, cfg.run.replicates, cfg.run.seed, opts);
    return finish_experiment(report, out_dir, outputs, exit_code, error);
}

inline json run_tss_vs_ibm(const RunConfig& cfg, const std::string& out_dir,
                           std::vector<std::string>& outputs, int& exit_code,
                           json& error) {
    const TraitPoint& x0 = need_point(cfg.experiment.x0, "x0");
    TssVsIbmOptions opts;
    if (cfg.experiment.horizon) opts.horizon_evolutionary = *cfg.experiment.horizon;
    opts.threads = cfg.run.threads;
    const ExperimentReport report = tss_vs_ibm(cfg.model, x0, cfg.model.K,
                                               cfg.run.replicates, cfg.run.seed, opts);
    return finish_experiment(report, out_dir, outputs, exit_code, error);
}

inline json run_branching_oracle(const RunConfig& cfg, const std::string& out_dir,
                                 std::vector<std::string>& outputs, int& exit_code,
                                 json& error) {
    const ModelSpec& spec = cfg.model;
    const TraitPoint& x0 = need_point(cfg.experiment.x0, "x0");
    const TraitPoint& y = need_point(cfg.experiment.y, "y");
    if (!cfg.experiment.barrier && !cfg.experiment.horizon)
        throw ConfigSemanticError(
            "branching-oracle needs 'barrier' or 'horizon' to terminate");

    const double nhat = equilibrium_mass(spec, x0);
    BranchingLaw law;
    law.birth = spec.birth(y);
    law.death = spec.death(y) + spec.alpha(y, x0) * nhat;
    law.initial = cfg.experiment.initial_count.value_or(1);
    StopSpec stop;
    if (cfg.experiment.barrier) stop.upper = *cfg.experiment.barrier;
    if (cfg.experiment.horizon) stop.horizon = *cfg.experiment.horizon;

    detail::Stopwatch watch;
    const int R = cfg.run.replicates;
    std::vector<std::int8_t> extinct(static_cast<std::size_t>(R));
    std::vector<double> mart(static_cast<std::size_t>(R));
    const double ratio = law.birth > 0.0 ? law.death / law.birth : 0.0;
    parallel_for(extinct.size(), cfg.run.threads, [&](std::size_t r) {
        RngStream rng = RngStream::substream(cfg.run.seed, r);
        const BranchingPath path = simulate_branching(law, stop, rng, false);
        extinct[r] = path.exit == BranchingExit::Extinct ? 1 : 0;
        mart[r] = std::pow(ratio, static_cast<double>(path.final_count));
    });
    std::int64_t n_extinct = 0;
    RunningStats mart_stats;
    for (int r = 0; r < R; ++r) {
        n_extinct += extinct[static_cast<std::size_t>(r)];
        mart_stats.add(mart[static_cast<std::size_t>(r)]);
    }

    ExperimentReport report;
    report.name = "branching-oracle";
    report.parameters = {{"birth", law.birth},
                         {"death", law.death},
                         {"initial", law.initial},
                         {"replicates", R}};
    if (cfg.experiment.barrier) report.parameters["barrier"] = *cfg.experiment.barrier;
    if (cfg.experiment.horizon) report.parameters["horizon"] = *cfg.experiment.horizon;
    report.target = extinction_probability(law);
    report.target_note = "min(1, d/b)^n";
    report.ci = wilson_ci(n_extinct, R, 0.95);
    report.point_estimate = report.ci->estimate;
    report.passed = report.ci->contains(report.target);
    report.extra = {{"martingale_mean", mart_stats.mean()},
                    {"martingale_expected",
                     std::pow(ratio, static_cast<double>(law.initial))}};
    if (cfg.experiment.eps)
        report.extra["exit_bound"] =
            exit_bound(law.birth, law.death, spec.K, *cfg.experiment.eps);
    report.runtime_seconds = watch.seconds();
    return finish_experiment(report, out_dir, outputs, exit_code, error);
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"tsslab: stochastic laboratory for trait-structured "
                 "birth-death-mutation populations"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_value = 0;
    unsigned threads_value = 0;
    std::string out_value;
    for (const std::string& name : detail::known_experiments()) {
        CLI::App* sub = app.add_subcommand(name, "run the '" + name + "' experiment");
        sub->add_option("--config", config_path, "path to the run configuration")
            ->required();
        sub->add_option("--seed", seed_value, "override [run] seed");
        sub->add_option("--threads", threads_value, "override [run] threads");
        sub->add_option("--out", out_value, "override [run] out directory");
    }

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();

    int exit_code = kExitOk;
    json error = nullptr;
    json report = nullptr;
    std::vector<std::string> outputs;
    std::string out_dir;
    std::uint64_t seed_used = 0;
    std::uint64_t config_hash = 0;
    bool have_config = false;

    try {
        ParseOptions popts;
        popts.validate_model = name != "check-assumptions";
        RunConfig cfg = parse_config(config_path, popts);
        config_hash = fnv1a64(cfg.source_text);
        have_config = true;
        if (sub->count("--seed") > 0) cfg.run.seed = seed_value;
        if (sub->count("--threads") > 0) cfg.run.threads = threads_value;
        if (sub->count("--out") > 0) cfg.run.out_dir = out_value;
        out_dir = cfg.run.out_dir;
        seed_used = cfg.run.seed;
        if (cfg.experiment.name != name)
            throw ConfigSemanticError("config declares experiment '" +
                                      cfg.experiment.name + "' but the subcommand is '" +
                                      name + "'");
        std::filesystem::create_directories(out_dir);

        if (name == "simulate-ibm")
            report = detail::run_simulate_ibm(cfg, out_dir, outputs, exit_code, error);
        else if (name == "simulate-tss")
            report = detail::run_simulate_tss(cfg, out_dir, outputs, exit_code, error);
        else if (name == "lv-ode")
            report = detail::run_lv_ode(cfg, out_dir, outputs, exit_code, error);
        else if (name == "check-assumptions")
            report = detail::run_check_assumptions(cfg, out_dir, outputs, exit_code,
                                                   error);
        else if (name == "equilibrium")
            report = detail::run_equilibrium(cfg, out_dir, outputs, exit_code, error);
        else if (name == "fixation")
            report = detail::run_fixation(cfg, out_dir, outputs, exit_code, error);
        else if (name == "tss-vs-ibm")
            report = detail::run_tss_vs_ibm(cfg, out_dir, outputs, exit_code, error);
        else if (name == "branching-oracle")
            report = detail::run_branching_oracle(cfg, out_dir, outputs, exit_code,
                                                  error);
    } catch (const std::exception& e) {
        const detail::Failure f = detail::classify_failure(e);
        exit_code = f.code;
        error = f.error;
    }

    // Manifest is written in every outcome; when the config never parsed the
    // only known target is an explicit --out (else the working directory).
    if (out_dir.empty()) out_dir = sub->count("--out") > 0 ? out_value : ".";
    if (!report.is_null()) {
        try {
            write_json(detail::join_path(out_dir, "report.json"), report);
            outputs.push_back("report.json");
        } catch (const std::exception& e) {
            if (exit_code == kExitOk) {
                exit_code = kExitInternal;
                error = {{"class", "io"}, {"message", e.what()}};
            }
        }
    }
    json manifest;
    manifest["tool"] = "tsslab";
    manifest["version"] = std::string(kVersion);
    manifest["format_version"] = 1;
    manifest["subcommand"] = name;
    manifest["config_path"] = config_path;
    if (have_config) {
        char hex[19];
        std::snprintf(hex, sizeof(hex), "0x%016llx",
                      static_cast<unsigned long long>(config_hash));
        manifest["config_fnv1a64"] = hex;
        manifest["seed"] = seed_used;
    } else {
        manifest["config_fnv1a64"] = nullptr;
        manifest["seed"] = nullptr;
    }
    manifest["status"] = exit_code == kExitOk ? "ok" : "error";
    manifest["error"] = error;
    manifest["outputs"] = outputs;
    try {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        write_json(detail::join_path(out_dir, "manifest.json"), manifest);
    } catch (const std::exception&) {
        // no place left to record the failure
    }
    if (!error.is_null()) std::cerr << json({{"error", error}}).dump() << '\n';
    return exit_code;
}

inline int run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> storage;
    storage.reserve(args.size() + 1);
    storage.push_back("tsslab");
    for (const std::string& a : args) storage.push_back(a);
    std::vector<const char*> argv;
    argv.reserve(storage.size());
    for (const std::string& s : storage) argv.push_back(s.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace tsslab
