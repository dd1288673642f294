#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsslab/errors.hpp"
#include "tsslab/harness.hpp"
#include "tsslab/ibm_engine.hpp"
#include "tsslab/lotka_volterra.hpp"
#include "tsslab/model.hpp"
#include "tsslab/tss.hpp"
#include "tsslab/version.hpp"

namespace tsslab {

// CSV and JSON emission. All floats print with 17 significant digits,
// '.' decimal, no locale — the numbers round-trip exactly and identical runs
// produce byte-identical files.

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError("cannot open output file: " + path);
    return out;
}

inline void append_coord_header(std::string& line, const std::string& stem,
                                std::size_t dim) {
    for (std::size_t i = 0; i < dim; ++i)
        line += "," + stem + "_" + std::to_string(i + 1);
}

inline void append_point(std::string& line, const TraitPoint& pt, std::size_t dim) {
    for (std::size_t i = 0; i < dim; ++i) {
        line += ',';
        line += i < pt.size() ? format_double(pt[i]) : "";
    }
}

}  // namespace detail

inline void write_events_csv(const std::string& path, const Trajectory& traj,
                             std::size_t dim) {
    std::ofstream out = detail::open_out(path);
    std::string header = "time,kind";
    detail::append_coord_header(header, "parent", dim);
    detail::append_coord_header(header, "child", dim);
    out << header << '\n';
    for (const Event& e : traj.events) {
        std::string row = format_double(e.time);
        row += ',';
        row += to_string(e.kind);
        detail::append_point(row, e.parent, dim);
        detail::append_point(row, e.child, dim);  // empty cells for deaths
        out << row << '\n';
    }
}

inline void write_snapshots_csv(const std::string& path, const Trajectory& traj,
                                std::size_t dim) {
    std::ofstream out = detail::open_out(path);
    std::string header = "time";
    detail::append_coord_header(header, "trait", dim);
    header += ",count";
    out << header << '\n';
    auto emit = [&](double t, const PointMeasure& mu) {
        for (const auto& [key, n] : mu.atoms()) {
            std::string row = format_double(t);
            detail::append_point(row, mu.quantizer().decode(key), dim);
            row += ',' + std::to_string(n);
            out << row << '\n';
        }
    };
    emit(0.0, traj.initial);
    for (const Snapshot& s : traj.snapshots) emit(s.time, s.state);
}

inline void write_tss_path_csv(const std::string& path, const TssPath& tss_path,
                               const ModelSpec& spec) {
    std::ofstream out = detail::open_out(path);
    std::string header = "jump,time";
    detail::append_coord_header(header, "trait", spec.dimension);
    header += ",nhat";
    out << header << '\n';
    auto emit = [&](std::size_t idx, double t, const TraitPoint& x) {
        std::string row = std::to_string(idx) + ',' + format_double(t);
        detail::append_point(row, x, spec.dimension);
        row += ',' + format_double(equilibrium_mass(spec, x));
        out << row << '\n';
    };
    emit(0, 0.0, tss_path.initial);
    for (std::size_t i = 0; i < tss_path.jumps.size(); ++i)
        emit(i + 1, tss_path.jumps[i].time, tss_path.jumps[i].trait);
}

inline void write_lv_csv(const std::string& path, const LvTrajectory& traj) {
    std::ofstream out = detail::open_out(path);
    out << "t,n_x,n_y\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        out << format_double(traj.times[i]) << ',' << format_double(traj.states[i].nx)
            << ',' << format_double(traj.states[i].ny) << '\n';
}

inline json report_to_json(const ExperimentReport& report) {
    json doc;
    doc["name"] = report.name;
    doc["parameters"] = report.parameters;
    doc["point_estimate"] = report.point_estimate;
    if (report.ci) {
        doc["ci"] = {{"lo", report.ci->lo},
                     {"hi", report.ci->hi},
                     {"estimate", report.ci->estimate}};
    } else {
        doc["ci"] = nullptr;
    }
    doc["target"] = report.target;
    doc["target_note"] = report.target_note;
    doc["tolerance"] = report.tolerance;
    doc["passed"] = report.passed;
    doc["refused"] = report.refused;
    doc["refusal_reason"] = report.refusal_reason;
    doc["extra"] = report.extra;
    doc["replicates"] = report.replicates;
    // kept last and on its own: the one field allowed to differ between
    // otherwise identical runs
    doc["timing"] = {{"runtime_seconds", report.runtime_seconds}};
    return doc;
}

// Flat key,value mirror of the scalar report fields.
inline void write_report_csv(const std::string& path, const ExperimentReport& report) {
    std::ofstream out = detail::open_out(path);
    out << "field,value\n";
    out << "name," << report.name << '\n';
    out << "point_estimate," << format_double(report.point_estimate) << '\n';
    out << "ci_lo," << (report.ci ? format_double(report.ci->lo) : "") << '\n';
    out << "ci_hi," << (report.ci ? format_double(report.ci->hi) : "") << '\n';
    out << "target," << format_double(report.target) << '\n';
    out << "passed," << (report.passed ? "true" : "false") << '\n';
    out << "refused," << (report.refused ? "true" : "false") << '\n';
}

inline void write_json(const std::string& path, const json& doc) {
    std::ofstream out = detail::open_out(path);
    out << doc.dump(2) << '\n';
}

}  // namespace tsslab
