#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tsslab/errors.hpp"
#include "tsslab/model.hpp"
#include "tsslab/trait.hpp"

namespace tsslab {

// One flat INI-style file drives every run:
//
//   [model]
//   dimension = 1
//   box = 0 1                 # lo hi per dimension
//   K = 1000
//   birth = affine 2 1        # constant C | affine C0 G... | bump CENTER... W BASE AMP | table SHAPE... V...
//   death = constant 1
//   mut_prob = constant 0.1   # optional, default constant 1
//   alpha = constant 1        # constant C | gaussian SCALE FLOOR | table SHAPE... V...
//   kernel = atomic 0:1 1:1   # atomic PT:W ... | gaussian SIGMA... | ball R
//   u_coeff = 1               # u_K = u_coeff * K^-u_exponent
//   u_exponent = 2
//
//   [experiment]
//   name = fixation           # must match the subcommand being run
//   x0 = 0
//   y = 1
//
//   [run]
//   seed = 42
//   replicates = 1000
//   threads = 1
//   out = out
//
// '#' or ';' starts a comment. Errors are split into three classes: FileError
// (unreadable path), ConfigSyntaxError (malformed line or value, with line
// number), ConfigSemanticError (well-formed but contradicts the contract:
// unknown keys/sections, unknown experiment names, model validation
// failures).

struct ExperimentSettings {
    std::string name;
    std::optional<TraitPoint> x0;
    std::optional<TraitPoint> y;
    std::vector<std::int64_t> Ks;
    std::optional<double> horizon;
    std::optional<double> eps;
    std::optional<double> band;
    std::optional<double> window_start;
    std::optional<double> min_in_band;
    std::optional<double> horizon_cap;
    std::optional<double> step;
    std::optional<double> nx0, ny0;       // lv-ode initial masses
    std::optional<std::int64_t> barrier;  // branching upper stop
    std::optional<std::int64_t> initial_count;
    std::optional<int> snapshots;
    std::optional<std::uint64_t> budget;  // tss candidate budget
    std::optional<int> quad_order;
    bool rescaled = false;  // simulate-ibm on the evolutionary clock
};

struct RunSettings {
    std::uint64_t seed = 0;
    int replicates = 100;
    unsigned threads = 1;
    std::string out_dir = "out";
};

struct RunConfig {
    ModelSpec model;
    ExperimentSettings experiment;
    RunSettings run;
    std::string source_text;  // raw bytes, hashed into the manifest
};

struct ParseOptions {
    bool validate_model = true;  // lattice-scan the assumptions and throw on failure
};

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

namespace detail {

struct ConfigValue {
    std::string text;
    int line = 0;
    mutable bool consumed = false;
};

struct RawSection {
    int line = 0;  // line of the [section] header
    std::map<std::string, ConfigValue> entries;
};

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::vector<std::string> split_ws(const std::string& v) {
    std::vector<std::string> out;
    std::istringstream in(v);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline double to_number(const std::string& tok, int line, const std::string& what) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end != begin + tok.size() || tok.empty())
        throw ConfigSyntaxError(what + ": '" + tok + "' is not a number", line);
    if (!std::isfinite(v))
        throw ConfigSyntaxError(what + ": '" + tok + "' is not finite", line);
    return v;
}

inline std::int64_t to_integer(const std::string& tok, int line,
                               const std::string& what) {
    const double v = to_number(tok, line, what);
    const auto i = static_cast<std::int64_t>(v);
    if (static_cast<double>(i) != v)
        throw ConfigSyntaxError(what + ": '" + tok + "' is not an integer", line);
    return i;
}

inline std::uint64_t to_u64(const std::string& tok, int line, const std::string& what) {
    if (tok.empty() || tok[0] == '-')
        throw ConfigSyntaxError(what + ": '" + tok + "' is not an unsigned integer",
                                line);
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
    if (errno != 0 || end != tok.c_str() + tok.size())
        throw ConfigSyntaxError(what + ": '" + tok + "' is not an unsigned integer",
                                line);
    return static_cast<std::uint64_t>(v);
}

inline bool to_bool(const std::string& tok, int line, const std::string& what) {
    if (tok == "true" || tok == "1" || tok == "yes") return true;
    if (tok == "false" || tok == "0" || tok == "no") return false;
    throw ConfigSyntaxError(what + ": '" + tok + "' is not a boolean", line);
}

inline std::map<std::string, RawSection> scan_ini(const std::string& text) {
    std::map<std::string, RawSection> sections;
    RawSection* current = nullptr;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::size_t hash = raw.find_first_of("#;");
        std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3)
                throw ConfigSyntaxError("malformed section header: " + s, line);
            const std::string name = trim(s.substr(1, s.size() - 2));
            if (name != "model" && name != "experiment" && name != "run")
                throw ConfigSemanticError("unknown section [" + name + "]", line);
            auto [it, fresh] = sections.try_emplace(name);
            if (!fresh)
                throw ConfigSemanticError("duplicate section [" + name + "]", line);
            it->second.line = line;
            current = &it->second;
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigSyntaxError("expected 'key = value': " + s, line);
        if (current == nullptr)
            throw ConfigSyntaxError("key before any [section]: " + s, line);
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigSyntaxError("empty key", line);
        auto [it, fresh] = current->entries.try_emplace(key, ConfigValue{value, line});
        if (!fresh)
            throw ConfigSemanticError("duplicate key '" + key + "'", line);
    }
    return sections;
}

// Fetches an entry and marks it consumed; unconsumed leftovers become
// semantic errors at the end of the parse.
inline const ConfigValue* fetch(const RawSection& sec, const std::string& key) {
    const auto it = sec.entries.find(key);
    if (it == sec.entries.end()) return nullptr;
    it->second.consumed = true;
    return &it->second;
}

inline const ConfigValue& require(const RawSection& sec, const std::string& section,
                                  const std::string& key) {
    const ConfigValue* v = fetch(sec, key);
    if (v == nullptr)
        throw ConfigSemanticError("[" + section + "] is missing required key '" + key +
                                      "'",
                                  sec.line);
    return *v;
}

inline RateSpec parse_rate(const std::string& key, const ConfigValue& v,
                           std::size_t dim) {
    const auto toks = split_ws(v.text);
    if (toks.empty()) throw ConfigSyntaxError(key + ": empty value", v.line);
    const std::string& kind = toks[0];
    auto arity = [&](std::size_t want) {
        if (toks.size() != want)
            throw ConfigSyntaxError(key + " " + kind + ": expected " +
                                        std::to_string(want - 1) + " numbers, got " +
                                        std::to_string(toks.size() - 1),
                                    v.line);
    };
    if (kind == "constant") {
        arity(2);
        return RateSpec::make_constant(to_number(toks[1], v.line, key));
    }
    if (kind == "affine") {
        arity(2 + dim);
        std::vector<double> grad(dim);
        for (std::size_t i = 0; i < dim; ++i)
            grad[i] = to_number(toks[2 + i], v.line, key);
        return RateSpec::make_affine(to_number(toks[1], v.line, key), std::move(grad));
    }
    if (kind == "bump") {
        arity(1 + dim + 3);
        std::vector<double> center(dim);
        for (std::size_t i = 0; i < dim; ++i)
            center[i] = to_number(toks[1 + i], v.line, key);
        const double width = to_number(toks[1 + dim], v.line, key);
        const double base = to_number(toks[2 + dim], v.line, key);
        const double amp = to_number(toks[3 + dim], v.line, key);
        return RateSpec::make_gaussian_bump(std::move(center), width, base, amp);
    }
    if (kind == "table") {
        if (toks.size() < 1 + dim)
            throw ConfigSyntaxError(key + " table: missing shape", v.line);
        std::vector<int> shape(dim);
        std::size_t cells = 1;
        for (std::size_t i = 0; i < dim; ++i) {
            shape[i] = static_cast<int>(to_integer(toks[1 + i], v.line, key));
            cells *= static_cast<std::size_t>(shape[i] > 0 ? shape[i] : 0);
        }
        if (toks.size() != 1 + dim + cells)
            throw ConfigSyntaxError(key + " table: expected " + std::to_string(cells) +
                                        " values",
                                    v.line);
        std::vector<double> values(cells);
        for (std::size_t i = 0; i < cells; ++i)
            values[i] = to_number(toks[1 + dim + i], v.line, key);
        return RateSpec::make_grid_table(std::move(shape), std::move(values));
    }
    throw ConfigSemanticError(key + ": unknown rate kind '" + kind + "'", v.line);
}

inline CompetitionSpec parse_alpha(const ConfigValue& v, std::size_t dim) {
    const auto toks = split_ws(v.text);
    if (toks.empty()) throw ConfigSyntaxError("alpha: empty value", v.line);
    const std::string& kind = toks[0];
    if (kind == "constant") {
        if (toks.size() != 2)
            throw ConfigSyntaxError("alpha constant: expected 1 number", v.line);
        return CompetitionSpec::make_constant(to_number(toks[1], v.line, "alpha"));
    }
    if (kind == "gaussian") {
        if (toks.size() != 3)
            throw ConfigSyntaxError("alpha gaussian: expected SCALE FLOOR", v.line);
        return CompetitionSpec::make_gaussian_kernel(
            to_number(toks[1], v.line, "alpha"), to_number(toks[2], v.line, "alpha"));
    }
    if (kind == "table") {
        const std::size_t dd = 2 * dim;  // alpha lives on the doubled box
        if (toks.size() < 1 + dd)
            throw ConfigSyntaxError("alpha table: missing shape", v.line);
        std::vector<int> shape(dd);
        std::size_t cells = 1;
        for (std::size_t i = 0; i < dd; ++i) {
            shape[i] = static_cast<int>(to_integer(toks[1 + i], v.line, "alpha"));
            cells *= static_cast<std::size_t>(shape[i] > 0 ? shape[i] : 0);
        }
        if (toks.size() != 1 + dd + cells)
            throw ConfigSyntaxError(
                "alpha table: expected " + std::to_string(cells) + " values", v.line);
        std::vector<double> values(cells);
        for (std::size_t i = 0; i < cells; ++i)
            values[i] = to_number(toks[1 + dd + i], v.line, "alpha");
        return CompetitionSpec::make_grid_table(std::move(shape), std::move(values));
    }
    throw ConfigSemanticError("alpha: unknown competition kind '" + kind + "'", v.line);
}

inline MutationSpec parse_kernel(const ConfigValue& v, std::size_t dim) {
    const auto toks = split_ws(v.text);
    if (toks.empty()) throw ConfigSyntaxError("kernel: empty value", v.line);
    const std::string& kind = toks[0];
    if (kind == "atomic") {
        if (toks.size() < 2)
            throw ConfigSyntaxError("kernel atomic: needs at least one PT:W entry",
                                    v.line);
        std::vector<TraitPoint> targets;
        std::vector<double> weights;
        double wsum = 0.0;
        for (std::size_t i = 1; i < toks.size(); ++i) {
            const std::string& entry = toks[i];
            const std::size_t colon = entry.rfind(':');
            if (colon == std::string::npos)
                throw ConfigSyntaxError("kernel atomic: entry '" + entry +
                                            "' is not PT:W",
                                        v.line);
            TraitPoint pt;
            std::string coords = entry.substr(0, colon);
            std::size_t pos = 0;
            while (pos <= coords.size()) {
                const std::size_t comma = coords.find(',', pos);
                const std::string c = coords.substr(
                    pos, comma == std::string::npos ? std::string::npos : comma - pos);
                pt.push_back(to_number(c, v.line, "kernel atomic"));
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            if (pt.size() != dim)
                throw ConfigSyntaxError("kernel atomic: entry '" + entry + "' has " +
                                            std::to_string(pt.size()) +
                                            " coordinates, model has " +
                                            std::to_string(dim),
                                        v.line);
            const double w =
                to_number(entry.substr(colon + 1), v.line, "kernel atomic");
            if (!(w > 0.0))
                throw ConfigSemanticError(
                    "kernel atomic: weight of '" + entry + "' must be positive",
                    v.line);
            targets.push_back(std::move(pt));
            weights.push_back(w);
            wsum += w;
        }
        for (double& w : weights) w /= wsum;  // parser normalizes
        return MutationSpec::make_atomic(std::move(targets), std::move(weights));
    }
    if (kind == "gaussian") {
        if (toks.size() != 1 + dim)
            throw ConfigSyntaxError("kernel gaussian: expected one sigma per dimension",
                                    v.line);
        std::vector<double> sigma(dim);
        for (std::size_t i = 0; i < dim; ++i)
            sigma[i] = to_number(toks[1 + i], v.line, "kernel gaussian");
        return MutationSpec::make_gaussian_reflected(std::move(sigma));
    }
    if (kind == "ball") {
        if (toks.size() != 2)
            throw ConfigSyntaxError("kernel ball: expected RADIUS", v.line);
        return MutationSpec::make_uniform_ball(to_number(toks[1], v.line, "kernel"));
    }
    throw ConfigSemanticError("kernel: unknown kind '" + kind + "'", v.line);
}

inline TraitPoint parse_point(const ConfigValue& v, const std::string& key,
                              const ModelSpec& model) {
    const auto toks = split_ws(v.text);
    if (toks.size() != model.dimension)
        throw ConfigSyntaxError(key + ": expected " +
                                    std::to_string(model.dimension) + " coordinates",
                                v.line);
    TraitPoint pt(model.dimension);
    for (std::size_t i = 0; i < pt.size(); ++i)
        pt[i] = to_number(toks[i], v.line, key);
    if (!model.box.contains(pt))
        throw ConfigSemanticError(key + ": point is outside the trait box", v.line);
    return pt;
}

inline ModelSpec build_model(const RawSection& sec, bool validate) {
    ModelSpec model;
    {
        const ConfigValue& v = require(sec, "model", "dimension");
        const std::int64_t d = to_integer(v.text, v.line, "dimension");
        if (d < 1)
            throw ConfigSemanticError("dimension must be >= 1", v.line);
        model.dimension = static_cast<std::size_t>(d);
    }
    {
        const ConfigValue& v = require(sec, "model", "box");
        const auto toks = split_ws(v.text);
        if (toks.size() != 2 * model.dimension)
            throw ConfigSyntaxError("box: expected lo hi per dimension", v.line);
        Box box;
        for (std::size_t i = 0; i < model.dimension; ++i) {
            box.lo.push_back(to_number(toks[2 * i], v.line, "box"));
            box.hi.push_back(to_number(toks[2 * i + 1], v.line, "box"));
        }
        try {
            box.validate();
        } catch (const Error& e) {
            throw ConfigSemanticError(std::string("box: ") + e.what(), v.line);
        }
        model.box = std::move(box);
    }
    model.birth_spec = parse_rate("birth", require(sec, "model", "birth"),
                                  model.dimension);
    model.death_spec = parse_rate("death", require(sec, "model", "death"),
                                  model.dimension);
    if (const ConfigValue* v = fetch(sec, "mut_prob"))
        model.mut_prob_spec = parse_rate("mut_prob", *v, model.dimension);
    else
        model.mut_prob_spec = RateSpec::make_constant(1.0);
    model.competition = parse_alpha(require(sec, "model", "alpha"), model.dimension);
    if (const ConfigValue* v = fetch(sec, "alpha_lower"))
        model.competition.alpha_lower = to_number(v->text, v->line, "alpha_lower");
    if (const ConfigValue* v = fetch(sec, "alpha_upper"))
        model.competition.alpha_upper = to_number(v->text, v->line, "alpha_upper");
    if (const ConfigValue* v = fetch(sec, "K")) {
        model.K = to_integer(v->text, v->line, "K");
        if (model.K < 1) throw ConfigSemanticError("K must be >= 1", v->line);
    }
    if (const ConfigValue* v = fetch(sec, "u_coeff"))
        model.u_coeff = to_number(v->text, v->line, "u_coeff");
    if (const ConfigValue* v = fetch(sec, "u_exponent"))
        model.u_exponent = to_number(v->text, v->line, "u_exponent");
    if (const ConfigValue* v = fetch(sec, "lattice")) {
        model.lattice_resolution =
            static_cast<int>(to_integer(v->text, v->line, "lattice"));
    }
    if (const ConfigValue* v = fetch(sec, "key_bits"))
        model.key_bits = static_cast<int>(to_integer(v->text, v->line, "key_bits"));
    if (model.u_coeff > 0.0) {
        model.kernel = parse_kernel(require(sec, "model", "kernel"), model.dimension);
    } else if (const ConfigValue* v = fetch(sec, "kernel")) {
        model.kernel = parse_kernel(*v, model.dimension);
    }

    try {
        check_structure(model);
    } catch (const InvalidModelError& e) {
        throw ConfigSemanticError(e.what(), sec.line);
    }
    if (validate) {
        const ValidationReport report = validate_spec(model);
        if (!report.valid()) {
            std::string msg = "model fails validation: ";
            const std::size_t shown = std::min<std::size_t>(report.violations.size(), 3);
            for (std::size_t i = 0; i < shown; ++i) {
                if (i) msg += "; ";
                msg += report.violations[i].message;
            }
            if (report.violations.size() > shown)
                msg += " (+" + std::to_string(report.violations.size() - shown) +
                       " more)";
            throw ConfigSemanticError(msg, sec.line);
        }
    }
    return model;
}

inline const std::vector<std::string>& known_experiments() {
    static const std::vector<std::string> names = {
        "simulate-ibm", "simulate-tss",  "lv-ode",     "check-assumptions",
        "equilibrium",  "fixation",      "tss-vs-ibm", "branching-oracle"};
    return names;
}

inline ExperimentSettings build_experiment(const RawSection& sec,
                                           const ModelSpec& model) {
    ExperimentSettings exp;
    {
        const ConfigValue& v = require(sec, "experiment", "name");
        bool known = false;
        for (const std::string& n : known_experiments()) known = known || n == v.text;
        if (!known)
            throw ConfigSemanticError("unknown experiment name '" + v.text + "'",
                                      v.line);
        exp.name = v.text;
    }
    if (const ConfigValue* v = fetch(sec, "x0"))
        exp.x0 = parse_point(*v, "x0", model);
    if (const ConfigValue* v = fetch(sec, "y")) exp.y = parse_point(*v, "y", model);
    if (const ConfigValue* v = fetch(sec, "Ks")) {
        for (const std::string& tok : split_ws(v->text)) {
            const std::int64_t k = to_integer(tok, v->line, "Ks");
            if (k < 1) throw ConfigSemanticError("Ks entries must be >= 1", v->line);
            exp.Ks.push_back(k);
        }
        if (exp.Ks.empty())
            throw ConfigSemanticError("Ks must list at least one value", v->line);
    }
    auto opt_num = [&](const char* key, std::optional<double>& slot) {
        if (const ConfigValue* v = fetch(sec, key))
            slot = to_number(v->text, v->line, key);
    };
    opt_num("horizon", exp.horizon);
    opt_num("eps", exp.eps);
    opt_num("band", exp.band);
    opt_num("window_start", exp.window_start);
    opt_num("min_in_band", exp.min_in_band);
    opt_num("horizon_cap", exp.horizon_cap);
    opt_num("step", exp.step);
    opt_num("nx0", exp.nx0);
    opt_num("ny0", exp.ny0);
    if (const ConfigValue* v = fetch(sec, "barrier"))
        exp.barrier = to_integer(v->text, v->line, "barrier");
    if (const ConfigValue* v = fetch(sec, "initial_count"))
        exp.initial_count = to_integer(v->text, v->line, "initial_count");
    if (const ConfigValue* v = fetch(sec, "snapshots"))
        exp.snapshots = static_cast<int>(to_integer(v->text, v->line, "snapshots"));
    if (const ConfigValue* v = fetch(sec, "budget"))
        exp.budget = to_u64(v->text, v->line, "budget");
    if (const ConfigValue* v = fetch(sec, "quad_order"))
        exp.quad_order = static_cast<int>(to_integer(v->text, v->line, "quad_order"));
    if (const ConfigValue* v = fetch(sec, "rescaled"))
        exp.rescaled = to_bool(v->text, v->line, "rescaled");
    return exp;
}

inline RunSettings build_run(const RawSection& sec) {
    RunSettings run;
    if (const ConfigValue* v = fetch(sec, "seed"))
        run.seed = to_u64(v->text, v->line, "seed");
    if (const ConfigValue* v = fetch(sec, "replicates")) {
        run.replicates = static_cast<int>(to_integer(v->text, v->line, "replicates"));
        if (run.replicates < 1)
            throw ConfigSemanticError("replicates must be >= 1", v->line);
    }
    if (const ConfigValue* v = fetch(sec, "threads")) {
        const std::int64_t t = to_integer(v->text, v->line, "threads");
        if (t < 0) throw ConfigSemanticError("threads must be >= 0", v->line);
        run.threads = static_cast<unsigned>(t);
    }
    if (const ConfigValue* v = fetch(sec, "out")) run.out_dir = v->text;
    return run;
}

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text,
                                   const ParseOptions& opts = {}) {
    const auto sections = detail::scan_ini(text);
    RunConfig cfg;
    cfg.source_text = text;

    const auto model_it = sections.find("model");
    if (model_it == sections.end())
        throw ConfigSemanticError("config has no [model] section");
    cfg.model = detail::build_model(model_it->second, opts.validate_model);

    const auto exp_it = sections.find("experiment");
    if (exp_it == sections.end())
        throw ConfigSemanticError("config has no [experiment] section");
    cfg.experiment = detail::build_experiment(exp_it->second, cfg.model);

    if (const auto run_it = sections.find("run"); run_it != sections.end())
        cfg.run = detail::build_run(run_it->second);

    for (const auto& [name, sec] : sections)
        for (const auto& [key, value] : sec.entries)
            if (!value.consumed)
                throw ConfigSemanticError(
                    "unknown key '" + key + "' in section [" + name + "]", value.line);
    return cfg;
}

inline RunConfig parse_config(const std::string& path, const ParseOptions& opts = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), opts);
}

}  // namespace tsslab
