#pragma once

// Seeded Monte-Carlo sweeps. Trial i of every axis point and architecture uses
// the channel stream (seed, i, kChannelTag) and the init stream (seed, i, kInitTag),
// so comparisons at one point are paired. Work items run on a thread pool and
// are merged by index.

#include "aits/bcd.hpp"
#include "aits/results.hpp"

#include <atomic>
#include <functional>
#include <iostream>
#include <mutex>
#include <thread>

namespace aits {

struct SweepAxis {
    std::string name = "none";  // none | d_bi | n | p_its_max | kappa | iterations
    std::vector<double> values;

    /// "param=start:step:stop", inclusive of stop up to rounding.
    static SweepAxis parse(const std::string& text) {
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError("sweep must look like param=start:step:stop, got '" + text + "'");
        SweepAxis a;
        a.name = canonical(text.substr(0, eq));
        const auto parts = detail::split(text.substr(eq + 1), ':');
        if (parts.size() != 3) throw ConfigError("sweep range must be start:step:stop, got '" + text + "'");
        double start = 0.0, step = 0.0, stop = 0.0;
        try {
            start = detail::parse_double(parts[0], "sweep start");
            step = detail::parse_double(parts[1], "sweep step");
            stop = detail::parse_double(parts[2], "sweep stop");
        } catch (const IoError& e) {
            throw ConfigError(e.what());
        }
        if (!(step > 0.0) || stop < start) throw ConfigError("sweep needs step > 0 and stop >= start");
        const auto count = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (int i = 0; i < count; ++i) a.values.push_back(start + i * step);
        return a;
    }

    /// Default grid of a named axis.
    static SweepAxis standard(const std::string& name) {
        const std::string n = canonical(name);
        if (n == "d_bi") return {n, {5, 15, 25, 35, 45}};
        if (n == "n") return {n, {20, 40, 60}};
        if (n == "p_its_max") return {n, {20, 25, 30}};
        if (n == "kappa") return {n, {0.6, 0.7, 0.8}};
        if (n == "iterations") return {n, {}};
        if (n == "none") return {n, {0}};
        throw ConfigError("unknown sweep axis '" + name + "'");
    }

    static std::string canonical(const std::string& name) {
        std::string n;
        for (char ch : name) n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        if (n == "d_bi" || n == "dbi") return "d_bi";
        if (n == "n" || n == "elements") return "n";
        if (n == "p_its_max" || n == "p_its" || n == "p_its_max_dbm") return "p_its_max";
        if (n == "kappa") return "kappa";
        if (n == "iterations") return "iterations";
        if (n == "none") return "none";
        throw ConfigError("unknown sweep axis '" + name + "' (expected d_bi, n, p_its_max, kappa or iterations)");
    }
};

/// Config at one axis point. The element count keeps the configured vertical
/// dimension (N = H x V with V fixed) and resets the partition to single elements.
inline SystemConfig apply_axis(SystemConfig c, const std::string& axis, double value) {
    if (axis == "d_bi") {
        c.d_bi = value;
    } else if (axis == "n") {
        const int n = static_cast<int>(std::lround(value));
        const int v = c.its_array.vertical;
        if (n < 1 || n % v != 0) {
            throw ConfigError("invalid config: N = " + std::to_string(n) + " is not a multiple of the vertical size " +
                              std::to_string(v));
        }
        c.its_array.horizontal = n / v;
        c.block_sizes.assign(static_cast<std::size_t>(n), 1);
    } else if (axis == "p_its_max") {
        c.p_its_max_dbm = value;
    } else if (axis == "kappa") {
        c.kappa = value;
    } else if (axis != "none" && axis != "iterations") {
        throw ConfigError("unknown sweep axis '" + axis + "'");
    }
    validate(c);
    return c;
}

inline TrialRecord run_trial(const SystemConfig& c, const Architecture& arch, std::uint64_t seed, int trial,
                             const std::string& axis, double axis_value, bool paired = true, int arch_index = 0) {
    // unpaired runs give every architecture its own streams
    const auto offset = paired ? 0u : static_cast<std::uint32_t>(arch_index);
    Rng channel_rng = make_stream(seed, static_cast<std::uint64_t>(trial), kChannelTag + offset);
    Rng init_rng = make_stream(seed, static_cast<std::uint64_t>(trial), kInitTag + offset);
    const ChannelRealization ch = draw_channels(c, channel_rng);
    const BcdResult b = run_bcd(ch, c, arch, init_rng);
    TrialRecord r;
    r.seed = seed;
    r.trial = trial;
    r.axis = axis;
    r.axis_value = axis_value;
    r.config_hash = config_hash_hex(c);
    r.architecture = arch.label();
    r.final_wsr = b.wsr;
    r.bs_residual = b.bs_residual;
    r.its_residual = b.its_residual;
    r.bcd_iterations = b.bcd_iterations;
    r.dual_iterations = b.dual_iterations;
    r.aso_sweeps = b.aso_sweeps;
    r.wall_clock_s = b.wall_clock_s;
    r.termination = to_string(b.trace.termination);
    r.wsr_trace = b.trace.wsr;
    return r;
}

struct SweepOptions {
    int trials = 200;
    std::uint64_t seed = 1;
    int jobs = 1;
    bool paired = true;
    std::function<void(const std::string&)> warn = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
};

struct SweepResult {
    std::vector<TrialRecord> records;  // ordered by (axis point, architecture, trial)
    std::vector<AggregateRow> table;
};

/// Runs fn(0..count-1) on `jobs` threads; the first exception is rethrown.
inline void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex m;
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(m);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Per-iteration table for the "iterations" axis: mean WSR after t BCD iterations,
/// runs that stopped early holding their final value.
inline std::vector<AggregateRow> iteration_table(const std::vector<TrialRecord>& records) {
    std::vector<std::string> archs;
    for (const auto& r : records) {
        if (std::find(archs.begin(), archs.end(), r.architecture) == archs.end()) archs.push_back(r.architecture);
    }
    std::vector<AggregateRow> rows;
    for (const auto& a : archs) {
        std::size_t longest = 0;
        for (const auto& r : records) {
            if (r.architecture == a) longest = std::max(longest, r.wsr_trace.size());
        }
        for (std::size_t t = 0; t < longest; ++t) {
            std::vector<TrialRecord> at_t;
            for (const auto& r : records) {
                if (r.architecture != a || r.wsr_trace.empty()) continue;
                TrialRecord x = r;
                x.axis_value = static_cast<double>(t);
                x.final_wsr = r.wsr_trace[std::min(t, r.wsr_trace.size() - 1)];
                at_t.push_back(std::move(x));
            }
            auto agg = aggregate(at_t);
            rows.insert(rows.end(), agg.begin(), agg.end());
        }
    }
    return rows;
}

inline SweepResult run_sweep(const SystemConfig& base, const SweepAxis& axis, const std::vector<Architecture>& archs,
                             const SweepOptions& o) {
    if (o.trials < 1) throw ConfigError("trials must be >= 1");
    std::vector<std::pair<double, SystemConfig>> points;
    const std::vector<double> values = axis.values.empty() ? std::vector<double>{0.0} : axis.values;
    for (double v : values) {
        try {
            points.emplace_back(v, apply_axis(base, axis.name, v));
        } catch (const ConfigError& e) {
            o.warn("skipping " + axis.name + " = " + detail::fmt17(v) + ": " + e.what());
        }
    }
    const int per_point = static_cast<int>(archs.size()) * o.trials;
    const int total = static_cast<int>(points.size()) * per_point;
    SweepResult out;
    out.records.resize(static_cast<std::size_t>(total));
    parallel_for(total, o.jobs, [&](int i) {
        const auto& [value, cfg] = points[static_cast<std::size_t>(i / per_point)];
        const int a = (i % per_point) / o.trials;
        const int trial = i % o.trials;
        out.records[static_cast<std::size_t>(i)] =
            run_trial(cfg, archs[static_cast<std::size_t>(a)], o.seed, trial, axis.name, value, o.paired, a);
    });
    out.table = axis.name == "iterations" ? iteration_table(out.records) : aggregate(out.records);
    return out;
}

}  // namespace aits
