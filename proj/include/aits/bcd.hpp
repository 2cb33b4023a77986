#pragma once

// Block coordinate descent over (U, F, W, Phi) for the element-amplifying,
// block-amplifying and passive surfaces.

#include "aits/bs_precoder.hpp"
#include "aits/its_optimizer.hpp"

#include <Eigen/SVD>

#include <chrono>
#include <string>

namespace aits {

struct Architecture {
    enum class Kind { kElement, kBlock, kPassive };
    Kind kind = Kind::kElement;
    int block_size = 0;  // elements per amplifier; 0 = take the partition from the config

    static Architecture element() { return {Kind::kElement, 1}; }
    static Architecture block(int size) { return {Kind::kBlock, size}; }
    static Architecture passive() { return {Kind::kPassive, 0}; }

    /// "element", "passive", "block" (config partition) or "block:<N_B>".
    static Architecture parse(const std::string& text) {
        if (text == "element") return element();
        if (text == "passive") return passive();
        if (text == "block") return block(0);
        if (text.rfind("block:", 0) == 0) {
            int size = 0;
            try {
                std::size_t used = 0;
                size = std::stoi(text.substr(6), &used);
                if (used != text.size() - 6) size = 0;
            } catch (const std::exception&) {
                size = 0;
            }
            if (size < 1) throw ConfigError("invalid architecture '" + text + "': block size must be a positive integer");
            return block(size);
        }
        throw ConfigError("invalid architecture '" + text + "' (expected element, block:<N_B> or passive)");
    }

    std::string label() const {
        switch (kind) {
            case Kind::kElement: return "element";
            case Kind::kPassive: return "passive";
            case Kind::kBlock: return block_size > 0 ? "block:" + std::to_string(block_size) : "block";
        }
        return "element";
    }

    bool passive_surface() const { return kind == Kind::kPassive; }

    std::vector<int> partition(const SystemConfig& c) const {
        const int n = c.elements();
        switch (kind) {
            case Kind::kElement:
            case Kind::kPassive: return std::vector<int>(static_cast<std::size_t>(n), 1);
            case Kind::kBlock:
                if (block_size == 0) return c.block_sizes;
                if (block_size > n) {
                    throw ConfigError("block size " + std::to_string(block_size) + " exceeds the " +
                                      std::to_string(n) + " ITS elements");
                }
                return even_partition(n, block_size);
        }
        return {};
    }

    /// Number of power amplifiers on the surface.
    int amplifiers(const SystemConfig& c) const {
        return passive_surface() ? 0 : static_cast<int>(partition(c).size());
    }

    bool operator==(const Architecture&) const = default;
};

/// BS budget of the passive baseline: P_BS + P_ITS in linear units, reported in dBm.
inline double fair_passive_budget_dbm(const SystemConfig& c) {
    return milliwatts_to_dbm(dbm_to_milliwatts(c.p_bs_max_dbm) + dbm_to_milliwatts(c.p_its_max_dbm));
}

/// Budget left for amplification [W]; the circuit draw is deducted unless disabled.
inline double amplification_budget_watts(const SystemConfig& c, const Architecture& arch) {
    if (arch.passive_surface()) return std::numeric_limits<double>::infinity();
    double mw = dbm_to_milliwatts(c.p_its_max_dbm);
    if (c.solver.deduct_circuit_power) {
        mw -= circuit_power_mw(c.elements(), arch.amplifiers(c), dbm_to_milliwatts(c.p_sw_dbm),
                               dbm_to_milliwatts(c.p_dc_dbm));
    }
    return mw / 1000.0;
}

inline double bs_budget_watts(const SystemConfig& c, const Architecture& arch) {
    return dbm_to_watts(arch.passive_surface() ? fair_passive_budget_dbm(c) : c.p_bs_max_dbm);
}

struct ComplexityEstimate {
    double receivers = 0;  // K M_r^3
    double weights = 0;    // K s^3
    double dual = 0;       // I_Dual K M_t^3
    double aso = 0;        // I_ASO N^2
    double per_iteration = 0;
    double total = 0;      // times I_BCD
};

inline ComplexityEstimate complexity_estimate(const SystemConfig& c, double i_bcd, double i_dual, double i_aso) {
    const double k = c.users;
    const double mr = c.ue_antennas();
    const double s = c.streams;
    const double mt = c.bs_antennas();
    const double n = c.elements();
    ComplexityEstimate e;
    e.receivers = k * mr * mr * mr;
    e.weights = k * s * s * s;
    e.dual = i_dual * k * mt * mt * mt;
    e.aso = i_aso * n * n;
    e.per_iteration = e.receivers + e.weights + e.dual + e.aso;
    e.total = i_bcd * e.per_iteration;
    return e;
}

enum class Termination { kTolerance, kCap };

inline const char* to_string(Termination t) { return t == Termination::kTolerance ? "tolerance" : "cap"; }

struct BcdStep {
    int iteration;
    double after_w;    // WSR after the W update
    double after_phi;  // WSR after the Phi update (= iteration value)
    bool phi_accepted;
};

struct BcdTrace {
    std::vector<double> wsr;  // entry 0 is the initial point, entry t the end of iteration t
    std::vector<BcdStep> steps;
    std::string architecture;
    Termination termination = Termination::kCap;
};

struct BcdResult {
    PrecoderSet W;
    ItsState its;
    BcdTrace trace;
    double wsr = 0.0;
    double bs_power = 0.0;
    double its_power = 0.0;
    double bs_budget = 0.0;
    double amp_budget = 0.0;
    double bs_residual = 0.0;   // relative excess over the budget, >= 0
    double its_residual = 0.0;
    double ceiling = 0.0;       // interference-free upper bound
    int bcd_iterations = 0;
    long dual_iterations = 0;
    long aso_sweeps = 0;
    bool dual_capped = false;
    bool aso_capped = false;
    double wall_clock_s = 0.0;
};

/// sum_k alpha_k s log2(1 + ||H_k||_2^2 P_out / sigma^2), P_out bounding the surface's
/// radiated power.
inline double interference_free_ceiling(const ChannelRealization& ch, const ModelParams& p, double p_out) {
    double acc = 0.0;
    for (int k = 0; k < ch.users(); ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const double h2 = ch.H[kk].size() ? Eigen::JacobiSVD<cmat>(ch.H[kk]).singularValues()(0) : 0.0;
        const int s = std::min<int>(p.streams, static_cast<int>(std::min(ch.H[kk].rows(), ch.H[kk].cols())));
        acc += p.weights[kk] * s * std::log2(1.0 + h2 * h2 * p_out / p.ue_noise);
    }
    return acc;
}

struct InitialPoint {
    PrecoderSet W;
    ItsState its;
};

/// theta uniform, W from the top-s right singular vectors of kappa H_k^H Phi G at
/// 90% of the BS budget, uniform amplitude saturating the amplification budget.
inline InitialPoint initial_point(const ChannelRealization& ch, const SystemConfig& c, const Architecture& arch,
                                  Rng& rng) {
    const ModelParams p = ModelParams::from(c);
    const int N = c.elements();
    InitialPoint ip;
    ip.its = ItsState::uniform(N);
    ip.its.partition = arch.partition(c);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    for (int n = 0; n < N; ++n) ip.its.phase(n) = phase(rng);

    const double per_stream = 0.9 * bs_budget_watts(c, arch) / (c.users * c.streams);
    const cvec phi = ip.its.coefficients();
    for (int k = 0; k < c.users; ++k) {
        Eigen::JacobiSVD<cmat> svd(effective_channel(ch, phi, p.kappa, k), Eigen::ComputeFullV);
        ip.W.push_back(svd.matrixV().leftCols(c.streams) * std::sqrt(per_stream));
    }
    if (arch.passive_surface()) return ip;

    const double budget = amplification_budget_watts(c, arch);
    if (!(budget > 0.0)) {
        throw ConfigError("infeasible initialization: circuit power leaves no amplification budget (" +
                          std::to_string(budget * 1000.0) + " mW)");
    }
    const double unit = its_power_diagonal(ch, ip.W, ip.its, p);
    double a = std::sqrt(budget / unit);
    if (c.solver.amplitude_floor == AmplitudeFloor::kClampedToOne && a < 1.0) {
        throw ConfigError("infeasible initialization: unit amplitudes exceed the amplification budget");
    }
    ip.its.amplitude.setConstant(a);
    return ip;
}

struct BcdOptions {
    bool record_inner_traces = false;
    std::vector<DualTraceRow>* dual_trace = nullptr;  // last W-step
    std::vector<AsoTraceRow>* aso_trace = nullptr;    // last Phi-step
};

inline BcdResult run_bcd(const ChannelRealization& ch, const SystemConfig& c, const Architecture& arch, Rng& rng,
                         const BcdOptions& bo = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    const SolverOptions& opt = c.solver;
    const ModelParams p = ModelParams::from(c);
    const bool passive = arch.passive_surface();

    BcdResult r;
    r.bs_budget = bs_budget_watts(c, arch);
    r.amp_budget = amplification_budget_watts(c, arch);
    InitialPoint ip = initial_point(ch, c, arch, rng);
    PrecoderSet W = std::move(ip.W);
    ItsState its = std::move(ip.its);
    r.trace.architecture = arch.label();

    double rate = wsr(ch, W, its, p);
    r.trace.wsr.push_back(rate);
    std::optional<DualState> warm;
    for (int t = 1; t <= opt.bcd_max_iterations; ++t) {
        const WmmseAux aux = update_wmmse(ch, W, its, p);
        const PrecoderProblem pr = make_precoder_problem(ch, its, aux.U, aux.F, p, r.bs_budget,
                                                         passive ? 0.0 : r.amp_budget, !passive);
        PrecoderResult pres = solve_precoder(pr, opt, &W, bo.dual_trace != nullptr, opt.dual_warm_start ? warm : std::nullopt);
        warm = pres.normalized_dual;
        r.dual_iterations += pres.iterations;
        r.dual_capped = r.dual_capped || !pres.converged;
        if (bo.dual_trace) *bo.dual_trace = std::move(pres.trace);
        W = std::move(pres.W);
        const double after_w = bo.record_inner_traces ? wsr(ch, W, its, p) : std::numeric_limits<double>::quiet_NaN();

        const SurrogateTerms terms = build_surrogate(ch, W, aux.U, aux.F, p);
        AsoResult ares = passive ? passive_phase_sweep(terms, its, opt, bo.aso_trace != nullptr)
                                 : optimize_its(terms, its, r.amp_budget, opt, bo.aso_trace != nullptr);
        r.aso_sweeps += ares.sweeps;
        r.aso_capped = r.aso_capped || ares.capped;
        if (bo.aso_trace) *bo.aso_trace = std::move(ares.trace);
        const bool within_budget = passive || amplification_power(terms, ares.state) <= r.amp_budget;
        const bool accepted = within_budget && surrogate_value(terms, ares.state) <= surrogate_value(terms, its);
        if (accepted) its = std::move(ares.state);

        const double next = wsr(ch, W, its, p);
        r.trace.wsr.push_back(next);
        r.trace.steps.push_back({t, after_w, next, accepted});
        r.bcd_iterations = t;
        const double change = std::abs(next - rate);
        rate = next;
        if (change < opt.bcd_tolerance) {
            r.trace.termination = Termination::kTolerance;
            break;
        }
    }

    r.W = std::move(W);
    r.its = std::move(its);
    r.wsr = rate;
    r.bs_power = bs_power(r.W);
    r.bs_residual = std::max(0.0, r.bs_power - r.bs_budget) / r.bs_budget;
    r.its_power = its_power(ch, r.W, r.its, p);
    r.its_residual = passive ? 0.0 : std::max(0.0, r.its_power - r.amp_budget) / r.amp_budget;
    const double p_out = passive ? p.kappa * p.kappa * std::pow(Eigen::JacobiSVD<cmat>(ch.G).singularValues()(0), 2) *
                                       r.bs_budget * r.its.amplitude.cwiseAbs2().maxCoeff()
                                 : r.amp_budget;
    r.ceiling = interference_free_ceiling(ch, p, p_out);
    r.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace aits
