#pragma once

// Per-trial records and aggregated tables.
//
// Trial CSV columns, in order:
//   seed,trial,axis,axis_value,config_hash,architecture,final_wsr,bs_residual,
//   its_residual,bcd_iterations,dual_iterations,aso_sweeps,wall_clock_s,
//   termination,wsr_trace
// Floats are printed with 17 significant digits; wsr_trace is ';'-separated.
// A JSON sidecar "<path>.json" carries the full configuration.
//
// Aggregated table columns:
//   axis_value,architecture,mean_wsr,std_error,mean_iterations,mean_wall_clock_s,trials

#include "aits/config.hpp"

#include <json.hpp>

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace aits {

struct TrialRecord {
    std::uint64_t seed = 0;
    int trial = 0;
    std::string axis = "none";
    double axis_value = 0.0;
    std::string config_hash;
    std::string architecture;
    double final_wsr = 0.0;
    double bs_residual = 0.0;
    double its_residual = 0.0;
    int bcd_iterations = 0;
    long dual_iterations = 0;
    long aso_sweeps = 0;
    double wall_clock_s = 0.0;
    std::string termination;
    std::vector<double> wsr_trace;

    bool operator==(const TrialRecord&) const = default;

    /// Equality on everything except the wall clock.
    bool same_outcome(const TrialRecord& o) const {
        TrialRecord a = *this;
        a.wall_clock_s = o.wall_clock_s;
        return a == o;
    }
};

inline constexpr const char* kTrialColumns =
    "seed,trial,axis,axis_value,config_hash,architecture,final_wsr,bs_residual,its_residual,bcd_iterations,"
    "dual_iterations,aso_sweeps,wall_clock_s,termination,wsr_trace";

inline constexpr const char* kTableColumns =
    "axis_value,architecture,mean_wsr,std_error,mean_iterations,mean_wall_clock_s,trials";

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& ctx) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("malformed number '" + s + "' in " + ctx);
    }
}

template <class Int>
Int parse_int(const std::string& s, const std::string& ctx) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw IoError("malformed integer '" + s + "' in " + ctx);
    return v;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline void require_plain(const std::string& s, const char* what) {
    if (s.find_first_of(",;\n\"") != std::string::npos) {
        throw IoError(std::string(what) + " '" + s + "' contains a CSV separator");
    }
}

}  // namespace detail

inline void write_results(const std::vector<TrialRecord>& records, const std::string& path,
                          const SystemConfig& config) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open results file '" + path + "' for writing");
    out << kTrialColumns << '\n';
    for (const auto& r : records) {
        detail::require_plain(r.axis, "axis name");
        detail::require_plain(r.architecture, "architecture label");
        detail::require_plain(r.termination, "termination label");
        out << r.seed << ',' << r.trial << ',' << r.axis << ',' << detail::fmt17(r.axis_value) << ',' << r.config_hash
            << ',' << r.architecture << ',' << detail::fmt17(r.final_wsr) << ',' << detail::fmt17(r.bs_residual) << ','
            << detail::fmt17(r.its_residual) << ',' << r.bcd_iterations << ',' << r.dual_iterations << ','
            << r.aso_sweeps << ',' << detail::fmt17(r.wall_clock_s) << ',' << r.termination << ',';
        for (std::size_t i = 0; i < r.wsr_trace.size(); ++i) {
            if (i) out << ';';
            out << detail::fmt17(r.wsr_trace[i]);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for results file '" + path + "'");

    const std::string sidecar = path + ".json";
    std::ofstream js(sidecar);
    if (!js) throw IoError("cannot open sidecar '" + sidecar + "' for writing");
    nlohmann::json meta = {{"columns", detail::split(kTrialColumns, ',')},
                           {"records", records.size()},
                           {"config_hash", config_hash_hex(config)},
                           {"config", to_json(config)}};
    js << meta.dump(2) << '\n';
    if (!js) throw IoError("write failed for sidecar '" + sidecar + "'");
}

inline std::vector<TrialRecord> read_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open results file '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != kTrialColumns) throw IoError("unexpected header in '" + path + "'");
    std::vector<TrialRecord> out;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const std::string ctx = path + ":" + std::to_string(row);
        const auto cells = detail::split(line, ',');
        if (cells.size() != 15) throw IoError("expected 15 columns at " + ctx);
        TrialRecord r;
        r.seed = detail::parse_int<std::uint64_t>(cells[0], ctx);
        r.trial = detail::parse_int<int>(cells[1], ctx);
        r.axis = cells[2];
        r.axis_value = detail::parse_double(cells[3], ctx);
        r.config_hash = cells[4];
        r.architecture = cells[5];
        r.final_wsr = detail::parse_double(cells[6], ctx);
        r.bs_residual = detail::parse_double(cells[7], ctx);
        r.its_residual = detail::parse_double(cells[8], ctx);
        r.bcd_iterations = detail::parse_int<int>(cells[9], ctx);
        r.dual_iterations = detail::parse_int<long>(cells[10], ctx);
        r.aso_sweeps = detail::parse_int<long>(cells[11], ctx);
        r.wall_clock_s = detail::parse_double(cells[12], ctx);
        r.termination = cells[13];
        if (!cells[14].empty()) {
            for (const auto& v : detail::split(cells[14], ';')) r.wsr_trace.push_back(detail::parse_double(v, ctx));
        }
        out.push_back(std::move(r));
    }
    return out;
}

struct AggregateRow {
    double axis_value = 0.0;
    std::string architecture;
    double mean_wsr = 0.0;
    double std_error = 0.0;
    double mean_iterations = 0.0;
    double mean_wall_clock_s = 0.0;
    int trials = 0;
};

/// Groups by (axis_value, architecture) in order of first appearance.
inline std::vector<AggregateRow> aggregate(const std::vector<TrialRecord>& records) {
    std::vector<AggregateRow> rows;
    std::vector<std::vector<const TrialRecord*>> groups;
    std::map<std::pair<double, std::string>, std::size_t> index;
    for (const auto& r : records) {
        const auto key = std::make_pair(r.axis_value, r.architecture);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, rows.size()).first;
            rows.push_back({r.axis_value, r.architecture});
            groups.emplace_back();
        }
        groups[it->second].push_back(&r);
    }
    for (std::size_t g = 0; g < rows.size(); ++g) {
        const auto& members = groups[g];
        const double n = static_cast<double>(members.size());
        double wsr = 0.0, it = 0.0, wall = 0.0;
        for (const auto* r : members) {
            wsr += r->final_wsr;
            it += r->bcd_iterations;
            wall += r->wall_clock_s;
        }
        auto& row = rows[g];
        row.trials = static_cast<int>(members.size());
        row.mean_wsr = wsr / n;
        row.mean_iterations = it / n;
        row.mean_wall_clock_s = wall / n;
        if (members.size() > 1) {
            double ss = 0.0;
            for (const auto* r : members) ss += (r->final_wsr - row.mean_wsr) * (r->final_wsr - row.mean_wsr);
            row.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
        }
    }
    return rows;
}

inline void write_table(const std::vector<AggregateRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open table '" + path + "' for writing");
    out << kTableColumns << '\n';
    for (const auto& r : rows) {
        out << detail::fmt17(r.axis_value) << ',' << r.architecture << ',' << detail::fmt17(r.mean_wsr) << ','
            << detail::fmt17(r.std_error) << ',' << detail::fmt17(r.mean_iterations) << ','
            << detail::fmt17(r.mean_wall_clock_s) << ',' << r.trials << '\n';
    }
    if (!out) throw IoError("write failed for table '" + path + "'");
}

}  // namespace aits
