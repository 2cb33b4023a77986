// Seeded Monte-Carlo sweeps over the active-ITS scenario.
//
//   its_sweep --axis d_bi --arch element,passive --trials 200 --out dbi.csv
//   its_sweep --sweep kappa=0.5:0.1:0.9 --arch block:5 --seed 7 --out kappa.csv
//
// Writes the aggregated table to --out, the per-trial records to
// <out>.trials.csv (plus a JSON sidecar with the configuration).

#include "aits/aits.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw aits::IoError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<aits::Architecture> parse_archs(const std::vector<std::string>& items) {
    std::vector<aits::Architecture> out;
    for (const auto& item : items) {
        for (const auto& part : aits::detail::split(item, ',')) {
            if (!part.empty()) out.push_back(aits::Architecture::parse(part));
        }
    }
    if (out.empty()) throw aits::ConfigError("no architecture given");
    return out;
}

void write_traces(const std::vector<aits::TrialRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw aits::IoError("cannot open trace file '" + path + "' for writing");
    out << "axis_value,architecture,trial,iteration,wsr\n";
    for (const auto& r : records) {
        for (std::size_t t = 0; t < r.wsr_trace.size(); ++t) {
            out << aits::detail::fmt17(r.axis_value) << ',' << r.architecture << ',' << r.trial << ',' << t << ','
                << aits::detail::fmt17(r.wsr_trace[t]) << '\n';
        }
    }
    if (!out) throw aits::IoError("write failed for trace file '" + path + "'");
}

void dump_channels(const aits::SystemConfig& base, const aits::SweepAxis& axis, std::size_t archs,
                   const aits::SweepOptions& o, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::vector<double> values = axis.values.empty() ? std::vector<double>{0.0} : axis.values;
    for (std::size_t v = 0; v < values.size(); ++v) {
        aits::SystemConfig c;
        try {
            c = aits::apply_axis(base, axis.name, values[v]);
        } catch (const aits::ConfigError&) {
            continue;
        }
        for (std::size_t a = 0; a < (o.paired ? 1 : archs); ++a) {
            for (int t = 0; t < o.trials; ++t) {
                aits::Rng rng = aits::make_stream(o.seed, static_cast<std::uint64_t>(t),
                                                  aits::kChannelTag + static_cast<std::uint32_t>(a));
                const auto ch = aits::draw_channels(c, rng);
                std::string name = "point" + std::to_string(v);
                if (!o.paired) name += "_arch" + std::to_string(a);
                aits::write_channel_csv(ch, dir + "/" + name + "_trial" + std::to_string(t) + ".csv");
            }
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Seeded Monte-Carlo sweeps of the active-ITS sum-rate optimizer"};
    std::string config_path;
    std::uint64_t seed = 1;
    int trials = 200;
    bool full_scale = false;
    std::string sweep;
    std::string axis_name;
    bool paired = true;
    std::vector<std::string> arch_items{"element"};
    std::string out_path = "results.csv";
    std::string trace_path;
    std::string channel_dir;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    bool print_config = false;

    app.add_option("--config", config_path, "JSON configuration (missing keys take defaults)");
    app.add_option("--seed", seed, "master seed");
    auto* trials_opt = app.add_option("--trials", trials, "trials per axis point")->check(CLI::PositiveNumber);
    app.add_flag("--full-scale", full_scale, "1000 trials per axis point")->excludes(trials_opt);
    auto* sweep_opt = app.add_option("--sweep", sweep, "param=start:step:stop");
    app.add_option("--axis", axis_name, "standard grid: d_bi, n, p_its_max, kappa, iterations")->excludes(sweep_opt);
    app.add_flag("--paired,!--unpaired", paired, "share channel draws across architectures (default on)");
    app.add_option("--arch", arch_items, "element | block:<N_B> | block | passive (repeatable, comma-separated)");
    app.add_option("--out", out_path, "aggregated table CSV");
    app.add_option("--dump-trace", trace_path, "per-iteration WSR CSV");
    app.add_option("--dump-channels", channel_dir, "directory for per-trial channel CSVs");
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--print-config", print_config, "print the resolved configuration and exit");
    CLI11_PARSE(app, argc, argv);

    try {
        const aits::SystemConfig config = aits::load_config(config_path.empty() ? "" : read_file(config_path));
        if (print_config) {
            std::cout << aits::serialize(config) << '\n';
            return 0;
        }
        const auto archs = parse_archs(arch_items);
        aits::SweepAxis axis = !sweep.empty()       ? aits::SweepAxis::parse(sweep)
                               : !axis_name.empty() ? aits::SweepAxis::standard(axis_name)
                                                    : aits::SweepAxis::standard("none");
        aits::SweepOptions o;
        o.trials = full_scale ? 1000 : trials;
        o.seed = seed;
        o.jobs = jobs;
        o.paired = paired;
        if (!channel_dir.empty()) dump_channels(config, axis, archs.size(), o, channel_dir);

        const aits::SweepResult res = aits::run_sweep(config, axis, archs, o);
        aits::write_table(res.table, out_path);
        aits::write_results(res.records, out_path + ".trials.csv", config);
        if (!trace_path.empty()) write_traces(res.records, trace_path);
        std::cout << aits::kTableColumns << '\n';
        for (const auto& r : res.table) {
            std::cout << aits::detail::fmt17(r.axis_value) << ',' << r.architecture << ',' << r.mean_wsr << ','
                      << r.std_error << ',' << r.mean_iterations << ',' << r.mean_wall_clock_s << ',' << r.trials
                      << '\n';
        }
    } catch (const aits::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
