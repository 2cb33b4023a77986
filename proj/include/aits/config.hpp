#pragma once

// System configuration: scenario geometry, channel statistics, power budgets and
// solver knobs. Every power is stored as entered (dBm); solver code only sees the
// linear quantities produced by ModelParams / the *_watts() helpers below.

#include "aits/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace aits {

/// Thermal noise floor of a receiver with the given bandwidth.
inline double noise_power_dbm(double bandwidth_hz) {
    if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth must be positive");
    return -174.0 + 10.0 * std::log10(bandwidth_hz);
}

struct ArrayShape {
    int horizontal = 1;
    int vertical = 1;
    int count() const { return horizontal * vertical; }
    bool operator==(const ArrayShape&) const = default;
};

struct PathLossParams {
    double pl0_db = 0.0;
    double exponent = 2.0;
    double shadow_std_db = 0.0;
    bool operator==(const PathLossParams&) const = default;
};

inline constexpr PathLossParams kLosPathLoss{61.4, 2.0, 5.8};
inline constexpr PathLossParams kNlosPathLoss{72.0, 2.92, 8.7};

enum class AmplitudeFloor { kPaperFaithful, kClampedToOne };

/// Closed form used for the element amplitude.
///  kExactMinimizer    -- minimizer of the one-element quadratic, numerator |e_n|.
///  kUnitNumerator     -- the published formula with numerator 1.
enum class AmplitudeRule { kExactMinimizer, kUnitNumerator };

/// How the ITS amplification budget is enforced inside a coefficient sweep.
enum class BudgetMode { kPrice, kProjection };

struct SolverOptions {
    // BCD outer loop (absolute WSR change, bits/s/Hz).
    double bcd_tolerance = 1e-3;
    int bcd_max_iterations = 100;

    // Precoder: dual method.
    double dual_lambda0 = 1.0;
    double dual_mu0 = 1.0;
    double subgradient_step0 = 0.0;  // 0 selects 1 / (1 + P_BS_max[W])
    double subgradient_tolerance = 1e-8;
    double dual_objective_tolerance = 1e-10;
    int dual_max_iterations = 3000;
    double bisection_tolerance = 1e-10;  // relative to P_sum
    int bisection_max_iterations = 200;
    int bracket_max_doublings = 64;
    bool dual_warm_start = true;  // start each W-step from the previous BCD iteration's duals

    // ITS coefficients: ASO + price.
    double aso_tolerance = 1e-9;  // relative change of the sweep objective
    int aso_max_sweeps = 500;
    double eta_tolerance = 1e-4;  // relative distance to the budget
    int eta_max_doublings = 64;
    int eta_max_bisections = 100;

    AmplitudeFloor amplitude_floor = AmplitudeFloor::kPaperFaithful;
    AmplitudeRule amplitude_rule = AmplitudeRule::kExactMinimizer;
    BudgetMode element_budget = BudgetMode::kPrice;
    BudgetMode block_budget = BudgetMode::kProjection;
    bool deduct_circuit_power = true;
    double feasibility_tolerance = 1e-6;  // relative residual accepted at termination

    bool operator==(const SolverOptions&) const = default;
};

struct SystemConfig {
    ArrayShape bs_array{4, 2};
    ArrayShape ue_array{2, 2};
    ArrayShape its_array{10, 4};
    int users = 4;
    int streams = 2;

    double p_bs_max_dbm = 30.0;
    double p_its_max_dbm = 30.0;
    double p_sw_dbm = -10.0;
    double p_dc_dbm = -5.0;

    double kappa = 0.8;
    double bandwidth_hz = 251e6;
    double ue_noise_dbm = noise_power_dbm(251e6);
    double its_noise_dbm = noise_power_dbm(251e6);
    std::vector<double> weights = std::vector<double>(4, 1.0);

    // Geometry: BS at the origin, ITS and UE-circle centre on the y axis.
    double d_bu = 50.0;
    double d_bi = 45.0;
    double height_bs = 3.0;
    double height_its = 6.0;
    double height_ue = 1.5;
    double ue_radius = 5.0;

    int bs_its_paths = 4;
    int its_ue_paths = 4;
    PathLossParams los = kLosPathLoss;
    PathLossParams nlos = kNlosPathLoss;

    std::vector<int> block_sizes = std::vector<int>(40, 1);

    SolverOptions solver;

    int bs_antennas() const { return bs_array.count(); }
    int ue_antennas() const { return ue_array.count(); }
    int elements() const { return its_array.count(); }

    double p_bs_max_watts() const { return dbm_to_watts(p_bs_max_dbm); }
    double p_its_max_watts() const { return dbm_to_watts(p_its_max_dbm); }
    double ue_noise_watts() const { return dbm_to_watts(ue_noise_dbm); }
    double its_noise_watts() const { return dbm_to_watts(its_noise_dbm); }

    bool operator==(const SystemConfig&) const = default;
};

/// Linear-unit parameters consumed by the signal model.
struct ModelParams {
    double kappa = 1.0;
    double its_noise = 0.0;  // delta^2 [W]
    double ue_noise = 1.0;   // sigma^2 [W]
    std::vector<double> weights;
    int streams = 1;

    static ModelParams from(const SystemConfig& c) {
        return {c.kappa, c.its_noise_watts(), c.ue_noise_watts(), c.weights, c.streams};
    }
};

inline std::vector<int> even_partition(int n, int block_size) {
    if (n <= 0 || block_size <= 0) throw ConfigError("partition sizes must be positive");
    std::vector<int> p;
    for (int left = n; left > 0; left -= block_size) p.push_back(std::min(block_size, left));
    return p;
}

inline void validate(const SystemConfig& c) {
    auto fail = [](const std::string& m) { throw ConfigError("invalid config: " + m); };
    for (auto [name, a] : {std::pair{"bs_array", c.bs_array}, std::pair{"ue_array", c.ue_array},
                           std::pair{"its_array", c.its_array}}) {
        if (a.horizontal < 1 || a.vertical < 1) fail(std::string(name) + " must be H x V with H, V >= 1");
    }
    if (c.users < 1) fail("users must be >= 1");
    if (c.streams < 1) fail("streams must be >= 1");
    if (c.users * c.streams > c.bs_antennas()) fail("users * streams must not exceed BS antennas (K*s <= M_t)");
    if (c.streams > c.ue_antennas()) fail("streams must not exceed UE antennas (s <= M_r)");

    for (double p : {c.p_bs_max_dbm, c.p_its_max_dbm, c.p_sw_dbm, c.p_dc_dbm, c.ue_noise_dbm, c.its_noise_dbm}) {
        if (!std::isfinite(p)) fail("all powers must be finite");
    }
    if (!(c.kappa > 0.0 && c.kappa <= 1.0)) fail("kappa must lie in (0, 1]");
    if (!(c.bandwidth_hz > 0.0)) fail("bandwidth_hz must be positive");
    if (static_cast<int>(c.weights.size()) != c.users) fail("weights must have one entry per user");
    for (double w : c.weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) fail("weights must be finite and nonnegative");
    }
    if (!(c.d_bi > 0.0) || !(c.d_bu > 0.0)) fail("d_bi and d_bu must be positive");
    if (!(c.ue_radius >= 0.0)) fail("ue_radius must be nonnegative");
    if (c.bs_its_paths < 1 || c.its_ue_paths < 1) fail("path counts must be >= 1");

    if (c.block_sizes.empty()) fail("block_sizes must not be empty");
    for (int b : c.block_sizes) {
        if (b < 1) fail("every block size must be >= 1");
    }
    const long total = std::accumulate(c.block_sizes.begin(), c.block_sizes.end(), 0L);
    if (total != c.elements()) {
        fail("block_sizes sum to " + std::to_string(total) + " but the ITS has " + std::to_string(c.elements()) +
             " elements");
    }
    const auto& s = c.solver;
    if (!(s.bcd_tolerance > 0.0) || s.bcd_max_iterations < 1) fail("solver.bcd_* must be positive");
    if (s.dual_max_iterations < 1 || s.aso_max_sweeps < 1) fail("solver iteration caps must be positive");
    if (s.dual_lambda0 < 0.0 || s.dual_mu0 < 0.0) fail("initial duals must be nonnegative");
}

// ---------------------------------------------------------------------------
// JSON (de)serialization

namespace detail {

inline const char* to_string(AmplitudeFloor f) {
    return f == AmplitudeFloor::kClampedToOne ? "clamped-to-one" : "paper-faithful";
}
inline const char* to_string(AmplitudeRule r) {
    return r == AmplitudeRule::kUnitNumerator ? "unit-numerator" : "exact-minimizer";
}
inline const char* to_string(BudgetMode m) { return m == BudgetMode::kProjection ? "projection" : "price"; }

template <class E>
E enum_from(const nlohmann::json& j, const char* key, std::initializer_list<E> options) {
    const auto text = j.get<std::string>();
    for (E e : options) {
        if (text == to_string(e)) return e;
    }
    throw ConfigError(std::string("invalid config: unknown value '") + text + "' for " + key);
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known,
                           const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (auto k : known) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("invalid config: unknown key '" + where + it.key() + "'");
    }
}

inline ArrayShape array_from(const nlohmann::json& j, const char* key) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(std::string("invalid config: ") + key + " must be [H, V]");
    return {j[0].get<int>(), j[1].get<int>()};
}

inline PathLossParams path_loss_from(const nlohmann::json& j, PathLossParams p, const std::string& where) {
    reject_unknown(j, {"pl0_db", "exponent", "shadow_std_db"}, where + ".");
    p.pl0_db = j.value("pl0_db", p.pl0_db);
    p.exponent = j.value("exponent", p.exponent);
    p.shadow_std_db = j.value("shadow_std_db", p.shadow_std_db);
    return p;
}

}  // namespace detail

inline nlohmann::json to_json(const SystemConfig& c) {
    using nlohmann::json;
    auto pl = [](const PathLossParams& p) {
        return json{{"pl0_db", p.pl0_db}, {"exponent", p.exponent}, {"shadow_std_db", p.shadow_std_db}};
    };
    const auto& s = c.solver;
    json solver = {
        {"bcd_tolerance", s.bcd_tolerance},
        {"bcd_max_iterations", s.bcd_max_iterations},
        {"dual_lambda0", s.dual_lambda0},
        {"dual_mu0", s.dual_mu0},
        {"subgradient_step0", s.subgradient_step0},
        {"subgradient_tolerance", s.subgradient_tolerance},
        {"dual_objective_tolerance", s.dual_objective_tolerance},
        {"dual_max_iterations", s.dual_max_iterations},
        {"bisection_tolerance", s.bisection_tolerance},
        {"bisection_max_iterations", s.bisection_max_iterations},
        {"bracket_max_doublings", s.bracket_max_doublings},
        {"dual_warm_start", s.dual_warm_start},
        {"aso_tolerance", s.aso_tolerance},
        {"aso_max_sweeps", s.aso_max_sweeps},
        {"eta_tolerance", s.eta_tolerance},
        {"eta_max_doublings", s.eta_max_doublings},
        {"eta_max_bisections", s.eta_max_bisections},
        {"amplitude_floor", detail::to_string(s.amplitude_floor)},
        {"amplitude_rule", detail::to_string(s.amplitude_rule)},
        {"element_budget", detail::to_string(s.element_budget)},
        {"block_budget", detail::to_string(s.block_budget)},
        {"deduct_circuit_power", s.deduct_circuit_power},
        {"feasibility_tolerance", s.feasibility_tolerance},
    };
    return json{
        {"bs_array", {c.bs_array.horizontal, c.bs_array.vertical}},
        {"ue_array", {c.ue_array.horizontal, c.ue_array.vertical}},
        {"its_array", {c.its_array.horizontal, c.its_array.vertical}},
        {"users", c.users},
        {"streams", c.streams},
        {"p_bs_max_dbm", c.p_bs_max_dbm},
        {"p_its_max_dbm", c.p_its_max_dbm},
        {"p_sw_dbm", c.p_sw_dbm},
        {"p_dc_dbm", c.p_dc_dbm},
        {"kappa", c.kappa},
        {"bandwidth_hz", c.bandwidth_hz},
        {"ue_noise_dbm", c.ue_noise_dbm},
        {"its_noise_dbm", c.its_noise_dbm},
        {"weights", c.weights},
        {"d_bu", c.d_bu},
        {"d_bi", c.d_bi},
        {"height_bs", c.height_bs},
        {"height_its", c.height_its},
        {"height_ue", c.height_ue},
        {"ue_radius", c.ue_radius},
        {"bs_its_paths", c.bs_its_paths},
        {"its_ue_paths", c.its_ue_paths},
        {"path_loss_los", pl(c.los)},
        {"path_loss_nlos", pl(c.nlos)},
        {"block_sizes", c.block_sizes},
        {"solver", solver},
    };
}

inline std::string serialize(const SystemConfig& c) { return to_json(c).dump(2); }

/// Builds a validated config from a JSON document. Missing keys take the
/// scenario defaults; user count changes resize the weight vector and ITS size
/// changes reset the partition unless those are given explicitly.
inline SystemConfig config_from_json(const nlohmann::json& j) {
    using detail::reject_unknown;
    if (!j.is_object()) throw ConfigError("invalid config: top level must be an object");
    reject_unknown(j,
                   {"bs_array", "ue_array", "its_array", "users", "streams", "p_bs_max_dbm", "p_its_max_dbm",
                    "p_sw_dbm", "p_dc_dbm", "kappa", "bandwidth_hz", "ue_noise_dbm", "its_noise_dbm", "weights",
                    "d_bu", "d_bi", "height_bs", "height_its", "height_ue", "ue_radius", "bs_its_paths",
                    "its_ue_paths", "path_loss_los", "path_loss_nlos", "block_sizes", "solver"},
                   "");
    SystemConfig c;
    try {
        if (j.contains("bs_array")) c.bs_array = detail::array_from(j["bs_array"], "bs_array");
        if (j.contains("ue_array")) c.ue_array = detail::array_from(j["ue_array"], "ue_array");
        if (j.contains("its_array")) c.its_array = detail::array_from(j["its_array"], "its_array");
        c.users = j.value("users", c.users);
        c.streams = j.value("streams", c.streams);
        c.p_bs_max_dbm = j.value("p_bs_max_dbm", c.p_bs_max_dbm);
        c.p_its_max_dbm = j.value("p_its_max_dbm", c.p_its_max_dbm);
        c.p_sw_dbm = j.value("p_sw_dbm", c.p_sw_dbm);
        c.p_dc_dbm = j.value("p_dc_dbm", c.p_dc_dbm);
        c.kappa = j.value("kappa", c.kappa);
        c.bandwidth_hz = j.value("bandwidth_hz", c.bandwidth_hz);
        // UE noise follows the bandwidth unless pinned; ITS noise follows the UE noise.
        c.ue_noise_dbm = j.contains("ue_noise_dbm") ? j["ue_noise_dbm"].get<double>()
                         : c.bandwidth_hz > 0.0    ? noise_power_dbm(c.bandwidth_hz)
                                                   : c.ue_noise_dbm;
        c.its_noise_dbm = j.value("its_noise_dbm", c.ue_noise_dbm);
        c.weights = j.contains("weights") ? j["weights"].get<std::vector<double>>()
                                          : std::vector<double>(static_cast<std::size_t>(std::max(c.users, 0)), 1.0);
        c.d_bu = j.value("d_bu", c.d_bu);
        c.d_bi = j.value("d_bi", c.d_bi);
        c.height_bs = j.value("height_bs", c.height_bs);
        c.height_its = j.value("height_its", c.height_its);
        c.height_ue = j.value("height_ue", c.height_ue);
        c.ue_radius = j.value("ue_radius", c.ue_radius);
        c.bs_its_paths = j.value("bs_its_paths", c.bs_its_paths);
        c.its_ue_paths = j.value("its_ue_paths", c.its_ue_paths);
        if (j.contains("path_loss_los")) c.los = detail::path_loss_from(j["path_loss_los"], c.los, "path_loss_los");
        if (j.contains("path_loss_nlos"))
            c.nlos = detail::path_loss_from(j["path_loss_nlos"], c.nlos, "path_loss_nlos");
        c.block_sizes = j.contains("block_sizes")
                            ? j["block_sizes"].get<std::vector<int>>()
                            : std::vector<int>(static_cast<std::size_t>(std::max(c.elements(), 1)), 1);

        if (j.contains("solver")) {
            const auto& js = j["solver"];
            reject_unknown(js,
                           {"bcd_tolerance", "bcd_max_iterations", "dual_lambda0", "dual_mu0", "subgradient_step0",
                            "subgradient_tolerance", "dual_objective_tolerance", "dual_max_iterations",
                            "bisection_tolerance", "bisection_max_iterations", "bracket_max_doublings", "dual_warm_start",
                            "aso_tolerance", "aso_max_sweeps", "eta_tolerance", "eta_max_doublings",
                            "eta_max_bisections", "amplitude_floor", "amplitude_rule", "element_budget",
                            "block_budget", "deduct_circuit_power", "feasibility_tolerance"},
                           "solver.");
            auto& s = c.solver;
            s.bcd_tolerance = js.value("bcd_tolerance", s.bcd_tolerance);
            s.bcd_max_iterations = js.value("bcd_max_iterations", s.bcd_max_iterations);
            s.dual_lambda0 = js.value("dual_lambda0", s.dual_lambda0);
            s.dual_mu0 = js.value("dual_mu0", s.dual_mu0);
            s.subgradient_step0 = js.value("subgradient_step0", s.subgradient_step0);
            s.subgradient_tolerance = js.value("subgradient_tolerance", s.subgradient_tolerance);
            s.dual_objective_tolerance = js.value("dual_objective_tolerance", s.dual_objective_tolerance);
            s.dual_max_iterations = js.value("dual_max_iterations", s.dual_max_iterations);
            s.bisection_tolerance = js.value("bisection_tolerance", s.bisection_tolerance);
            s.bisection_max_iterations = js.value("bisection_max_iterations", s.bisection_max_iterations);
            s.bracket_max_doublings = js.value("bracket_max_doublings", s.bracket_max_doublings);
            s.dual_warm_start = js.value("dual_warm_start", s.dual_warm_start);
            s.aso_tolerance = js.value("aso_tolerance", s.aso_tolerance);
            s.aso_max_sweeps = js.value("aso_max_sweeps", s.aso_max_sweeps);
            s.eta_tolerance = js.value("eta_tolerance", s.eta_tolerance);
            s.eta_max_doublings = js.value("eta_max_doublings", s.eta_max_doublings);
            s.eta_max_bisections = js.value("eta_max_bisections", s.eta_max_bisections);
            using detail::enum_from;
            if (js.contains("amplitude_floor"))
                s.amplitude_floor = enum_from(js["amplitude_floor"], "amplitude_floor",
                                              {AmplitudeFloor::kPaperFaithful, AmplitudeFloor::kClampedToOne});
            if (js.contains("amplitude_rule"))
                s.amplitude_rule = enum_from(js["amplitude_rule"], "amplitude_rule",
                                             {AmplitudeRule::kExactMinimizer, AmplitudeRule::kUnitNumerator});
            if (js.contains("element_budget"))
                s.element_budget =
                    enum_from(js["element_budget"], "element_budget", {BudgetMode::kPrice, BudgetMode::kProjection});
            if (js.contains("block_budget"))
                s.block_budget =
                    enum_from(js["block_budget"], "block_budget", {BudgetMode::kPrice, BudgetMode::kProjection});
            s.deduct_circuit_power = js.value("deduct_circuit_power", s.deduct_circuit_power);
            s.feasibility_tolerance = js.value("feasibility_tolerance", s.feasibility_tolerance);
        }
    } catch (const nlohmann::json::type_error& e) {
        throw ConfigError(std::string("invalid config: wrong value type: ") + e.what());
    }
    validate(c);
    return c;
}

/// Parses a JSON document. An empty (or whitespace-only) document yields the defaults.
inline SystemConfig load_config(std::string_view document) {
    if (document.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        SystemConfig c;
        validate(c);
        return c;
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    return config_from_json(j);
}

/// 64-bit FNV-1a of the canonical serialization; stable across runs and platforms.
inline std::uint64_t config_hash(const SystemConfig& c) {
    const std::string text = to_json(c).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string config_hash_hex(const SystemConfig& c) {
    std::ostringstream os;
    os << std::hex << config_hash(c);
    return os.str();
}

}  // namespace aits
