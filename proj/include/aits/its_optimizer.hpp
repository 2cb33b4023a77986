#pragma once

// ITS coefficient subproblem. With U, F, W frozen the WMMSE objective depends on
// phi = Vecd(Phi) through
//   f(phi) = phi^H Omega phi + kappa^2 delta^2 sum_n a_n^2 d_n - 2 Re(phi^H c)
// and the amplification budget is g(a) = sum_n a_n^2 (t_n + kappa^2 delta^2).
// Element path: alternating single-coefficient updates (ASO) on h = f + eta g with
// a price eta. Block path: one amplitude per block, budget by projection.
//
// The block path with an all-ones partition performs the same floating-point
// operations in the same order as the element path.

#include "aits/system_model.hpp"

#include <fstream>
#include <limits>
#include <string>

namespace aits {

struct SurrogateTerms {
    cmat D;      // sum_k alpha_k H_k U_k F_k U_k^H H_k^H
    cmat T;      // kappa^2 G (sum_i W_i W_i^H) G^H
    cmat C;      // sum_k alpha_k kappa H_k U_k F_k W_k^H G^H
    cmat Omega;  // D o T^T
    cvec c;      // Vecd(C)
    rvec d;      // Vecd(D)
    rvec t;      // Vecd(T)
    double noise_amp = 0.0;  // kappa^2 delta^2

    int elements() const { return static_cast<int>(c.size()); }
};

inline SurrogateTerms build_surrogate(const ChannelRealization& ch, const PrecoderSet& w, const std::vector<cmat>& U,
                                      const std::vector<cmat>& F, const ModelParams& p) {
    const int n = ch.elements();
    SurrogateTerms s;
    s.D = cmat::Zero(n, n);
    s.C = cmat::Zero(n, n);
    cmat gw_sum = cmat::Zero(n, n);
    for (int k = 0; k < ch.users(); ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const cmat hu = ch.H[kk] * U[kk];
        const cmat gw = ch.G * w[kk];
        s.D.noalias() += p.weights[kk] * hu * F[kk] * hu.adjoint();
        s.C.noalias() += (p.weights[kk] * p.kappa) * hu * F[kk] * gw.adjoint();
        gw_sum.noalias() += gw * gw.adjoint();
    }
    s.D = hermitian_part(s.D);
    s.T = hermitian_part(p.kappa * p.kappa * gw_sum);
    s.Omega = hermitian_part(s.D.cwiseProduct(s.T.transpose()));
    s.c = s.C.diagonal();
    s.d = s.D.diagonal().real();
    s.t = s.T.diagonal().real();
    s.noise_amp = p.kappa * p.kappa * p.its_noise;
    return s;
}

/// f(phi) without constants.
inline double surrogate_value(const SurrogateTerms& s, const ItsState& its) {
    const cvec phi = its.coefficients();
    double noise = 0.0;
    for (int n = 0; n < s.elements(); ++n) noise += its.amplitude(n) * its.amplitude(n) * s.d(n);
    return (phi.adjoint() * s.Omega * phi)(0).real() + s.noise_amp * noise - 2.0 * phi.dot(s.c).real();
}

/// g(a): ITS output power for the frozen W.
inline double amplification_power(const SurrogateTerms& s, const ItsState& its) {
    double acc = 0.0;
    for (int n = 0; n < s.elements(); ++n) acc += its.amplitude(n) * its.amplitude(n) * (s.t(n) + s.noise_amp);
    return acc;
}

inline double penalized_value(const SurrogateTerms& s, const ItsState& its, double eta) {
    return surrogate_value(s, its) + eta * amplification_power(s, its);
}

namespace detail {

/// sum_{i != n} Omega_ni phi_i - c_n, summed in index order.
inline cdouble element_field(const SurrogateTerms& s, const cvec& phi, int n) {
    cdouble acc = 0.0;
    for (int i = 0; i < s.elements(); ++i) {
        if (i != n) acc += s.Omega(n, i) * phi(i);
    }
    return acc - s.c(n);
}

/// sum_{i not in [lo, hi)} a_i^2 (t_i + noise_amp), in index order.
inline double power_outside(const SurrogateTerms& s, const rvec& a, int lo, int hi) {
    double acc = 0.0;
    for (int i = 0; i < s.elements(); ++i) {
        if (i < lo || i >= hi) acc += a(i) * a(i) * (s.t(i) + s.noise_amp);
    }
    return acc;
}

inline cdouble unit_conj(double theta) { return std::polar(1.0, -theta); }

inline double apply_floor(double a, AmplitudeFloor floor) {
    return floor == AmplitudeFloor::kClampedToOne ? std::max(1.0, a) : a;
}

}  // namespace detail

/// Closed-form phase: arg(e_n) - pi, wrapped to [0, 2 pi); unchanged when e_n = 0.
inline double phase_from_field(cdouble e, double current) {
    if (e == cdouble(0.0, 0.0)) return current;
    return wrap_phase(std::arg(e) - kPi);
}

inline double aso_phase_update(const SurrogateTerms& s, const ItsState& its, int n) {
    return phase_from_field(detail::element_field(s, its.coefficients(), n), its.phase(n));
}

/// Amplitude minimizing a^2 den - 2 a num over a >= 0 (or the unit-numerator rule).
inline double amplitude_from(double num, double den, double current, AmplitudeRule rule) {
    if (rule == AmplitudeRule::kUnitNumerator) num = 1.0;
    if (!(den > 0.0)) {
        if (num > 0.0) throw NumericalError("nonpositive amplitude denominator with a descent direction");
        return current;
    }
    return std::max(0.0, num) / den;
}

/// Amplitude of element n at price eta, phases as currently set.
inline double aso_amplitude_update(const SurrogateTerms& s, const ItsState& its, int n, double eta,
                                   const SolverOptions& opt) {
    const cdouble e = detail::element_field(s, its.coefficients(), n);
    const double num = -(detail::unit_conj(its.phase(n)) * e).real();
    const double den = (s.Omega(n, n).real() + s.noise_amp * s.d(n)) + eta * (s.t(n) + s.noise_amp);
    return detail::apply_floor(amplitude_from(num, den, its.amplitude(n), opt.amplitude_rule), opt.amplitude_floor);
}

struct AsoTraceRow {
    int sweep;
    double h;
    double max_da;
    double max_dtheta;
};

struct AsoResult {
    ItsState state;
    double eta = 0.0;
    double h = 0.0;           // final penalized (price) or plain (projection) surrogate
    int sweeps = 0;           // summed over every ASO run
    bool capped = false;
    bool start_shrunk = false;
    double max_update_increase = 0.0;  // largest single-update increase of the swept objective
    std::vector<AsoTraceRow> trace;
};

struct SweepSettings {
    double eta = 0.0;
    BudgetMode budget = BudgetMode::kPrice;
    double p_amp = std::numeric_limits<double>::infinity();
    bool update_amplitude = true;
    bool monitor = false;  // evaluate the objective after every single update
};

namespace detail {

inline double swept_objective(const SurrogateTerms& s, const ItsState& its, const SweepSettings& set) {
    return set.budget == BudgetMode::kPrice ? penalized_value(s, its, set.eta) : surrogate_value(s, its);
}

inline void shrink_to_budget(const SurrogateTerms& s, ItsState& its, double p_amp, bool& shrunk) {
    const double g = amplification_power(s, its);
    if (g > p_amp) {
        its.amplitude *= p_amp > 0.0 ? std::sqrt(p_amp / g) : 0.0;
        shrunk = true;
    }
}

template <class SweepOnce>
AsoResult run_sweeps(const SurrogateTerms& s, ItsState its, const SweepSettings& set, const SolverOptions& opt,
                     bool record_trace, SweepOnce&& once) {
    AsoResult r;
    if (set.update_amplitude && set.budget == BudgetMode::kProjection) shrink_to_budget(s, its, set.p_amp, r.start_shrunk);
    double h = swept_objective(s, its, set);
    for (int l = 1; l <= opt.aso_max_sweeps; ++l) {
        const ItsState before = its;
        once(its, r);
        const double h_new = swept_objective(s, its, set);
        r.sweeps = l;
        if (record_trace) {
            r.trace.push_back({l, h_new, (its.amplitude - before.amplitude).cwiseAbs().maxCoeff(),
                               (its.phase - before.phase).cwiseAbs().maxCoeff()});
        }
        const double change = std::abs(h_new - h);
        h = h_new;
        if (change <= opt.aso_tolerance * std::max(std::abs(h), std::numeric_limits<double>::min())) {
            r.state = std::move(its);
            r.h = h;
            r.eta = set.eta;
            return r;
        }
    }
    r.capped = true;
    r.state = std::move(its);
    r.h = h;
    r.eta = set.eta;
    return r;
}

}  // namespace detail

/// Element-wise ASO at fixed price (or under projection), sweeping n = 0..N-1
/// until the relative change of the swept objective is below aso_tolerance.
inline AsoResult aso_sweep(const SurrogateTerms& s, const ItsState& start, const SweepSettings& set,
                           const SolverOptions& opt, bool record_trace = false) {
    const int N = s.elements();
    return detail::run_sweeps(s, start, set, opt, record_trace, [&](ItsState& its, AsoResult& r) {
        cvec phi = its.coefficients();
        for (int n = 0; n < N; ++n) {
            const double before = set.monitor ? detail::swept_objective(s, its, set) : 0.0;
            cdouble e = detail::element_field(s, phi, n);
            its.phase(n) = phase_from_field(e, its.phase(n));
            if (set.update_amplitude) {
                const double num = -(detail::unit_conj(its.phase(n)) * e).real();
                const double price = set.budget == BudgetMode::kPrice ? set.eta : 0.0;
                const double den = (s.Omega(n, n).real() + s.noise_amp * s.d(n)) + price * (s.t(n) + s.noise_amp);
                double a = amplitude_from(num, den, its.amplitude(n), opt.amplitude_rule);
                a = detail::apply_floor(a, opt.amplitude_floor);
                if (set.budget == BudgetMode::kProjection) {
                    const double room = set.p_amp - detail::power_outside(s, its.amplitude, n, n + 1);
                    a = std::min(a, std::sqrt(std::max(0.0, room) / (s.t(n) + s.noise_amp)));
                }
                its.amplitude(n) = a;
            }
            phi(n) = its.coefficient(n);
            if (set.monitor) {
                r.max_update_increase =
                    std::max(r.max_update_increase, detail::swept_objective(s, its, set) - before);
            }
        }
    });
}

/// Price search on eta: eta = 0 if the unpriced sweep already meets the budget,
/// otherwise bracket by doubling and bisect to the feasible side. Every ASO run
/// starts from `start`.
inline AsoResult search_eta(const SurrogateTerms& s, const ItsState& start, double p_amp, const SolverOptions& opt,
                            bool record_trace = false) {
    int total = 0;
    auto run = [&](double eta) {
        SweepSettings set;
        set.eta = eta;
        set.budget = BudgetMode::kPrice;
        set.p_amp = p_amp;
        AsoResult r = aso_sweep(s, start, set, opt, record_trace);
        total += r.sweeps;
        return r;
    };
    auto feasible = [&](const AsoResult& r) { return amplification_power(s, r.state) <= p_amp; };

    AsoResult best = run(0.0);
    if (feasible(best)) {
        best.sweeps = total;
        return best;
    }
    double scale = 0.0;
    for (int n = 0; n < s.elements(); ++n) {
        scale = std::max(scale, (s.Omega(n, n).real() + s.noise_amp * s.d(n)) / (s.t(n) + s.noise_amp));
    }
    double lo = 0.0;
    double hi = scale > 0.0 ? scale : 1.0;
    AsoResult at_hi = run(hi);
    int doublings = 0;
    while (!feasible(at_hi)) {
        lo = hi;
        hi *= 2.0;
        if (++doublings > opt.eta_max_doublings) {
            throw NumericalError("eta bracket not found after " + std::to_string(opt.eta_max_doublings) +
                                 " doublings");
        }
        at_hi = run(hi);
    }
    for (int it = 0; it < opt.eta_max_bisections; ++it) {
        if (p_amp - amplification_power(s, at_hi.state) <= opt.eta_tolerance * p_amp) break;
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        AsoResult at_mid = run(mid);
        if (feasible(at_mid)) {
            hi = mid;
            at_hi = std::move(at_mid);
        } else {
            lo = mid;
        }
    }
    at_hi.sweeps = total;
    return at_hi;
}

// ---------------------------------------------------------------------------
// block path

struct BlockTerms {
    std::vector<int> offsets;  // block r covers [offsets[r], offsets[r+1])
    rvec m;                    // theta_r^H Omega_rr theta_r + kappa^2 delta^2 sum d_r
    cvec z;                    // sum_{p in r} conj(theta_p) (sum_{i not in r} Omega_pi phi_i - c_p)
    rvec g;                    // sum t_r + kappa^2 delta^2 N_r
    rvec budget;               // P_amp - power of every other block

    int blocks() const { return static_cast<int>(m.size()); }
};

namespace detail {

inline double block_m(const SurrogateTerms& s, const rvec& theta, int lo, int hi) {
    double diag = 0.0;
    cdouble pairs = 0.0;
    double dsum = 0.0;
    cvec u(hi - lo);
    for (int p = lo; p < hi; ++p) u(p - lo) = std::polar(1.0, theta(p));
    for (int p = lo; p < hi; ++p) {
        diag += s.Omega(p, p).real();
        cdouble row = 0.0;
        for (int q = p + 1; q < hi; ++q) row += s.Omega(p, q) * u(q - lo);
        pairs += std::conj(u(p - lo)) * row;
        dsum += s.d(p);
    }
    return (diag + 2.0 * pairs.real()) + s.noise_amp * dsum;
}

inline cdouble block_z(const SurrogateTerms& s, const cvec& phi, const rvec& theta, int lo, int hi) {
    cdouble z = 0.0;
    for (int p = lo; p < hi; ++p) {
        cdouble acc = 0.0;
        for (int i = 0; i < s.elements(); ++i) {
            if (i < lo || i >= hi) acc += s.Omega(p, i) * phi(i);
        }
        z += unit_conj(theta(p)) * (acc - s.c(p));
    }
    return z;
}

inline double block_g(const SurrogateTerms& s, int lo, int hi) {
    double t = 0.0;
    for (int p = lo; p < hi; ++p) t += s.t(p);
    return t + s.noise_amp * (hi - lo);
}

}  // namespace detail

inline BlockTerms block_build(const SurrogateTerms& s, const ItsState& its, double p_amp) {
    BlockTerms b;
    b.offsets = its.block_offsets();
    const int R = its.blocks();
    const cvec phi = its.coefficients();
    b.m.resize(R);
    b.z.resize(R);
    b.g.resize(R);
    b.budget.resize(R);
    for (int r = 0; r < R; ++r) {
        const int lo = b.offsets[static_cast<std::size_t>(r)];
        const int hi = b.offsets[static_cast<std::size_t>(r) + 1];
        b.m(r) = detail::block_m(s, its.phase, lo, hi);
        b.z(r) = detail::block_z(s, phi, its.phase, lo, hi);
        b.g(r) = detail::block_g(s, lo, hi);
        b.budget(r) = p_amp - detail::power_outside(s, its.amplitude, lo, hi);
    }
    return b;
}

/// Minimizer of a^2 (m + eta g) + 2 a Re z over 0 <= a <= sqrt(budget / g) (the upper
/// bound only under projection).
inline double block_amplitude_update(double m, cdouble z, double g, double budget, double eta, BudgetMode mode,
                                     const SolverOptions& opt, double current) {
    const double price = mode == BudgetMode::kPrice ? eta : 0.0;
    double a = amplitude_from(-z.real(), m + price * g, current, opt.amplitude_rule);
    a = detail::apply_floor(a, opt.amplitude_floor);
    if (mode == BudgetMode::kProjection) a = std::min(a, std::sqrt(std::max(0.0, budget) / g));
    return a;
}

inline double block_amplitude_update(const BlockTerms& bt, int r, double eta, BudgetMode mode,
                                     const SolverOptions& opt, double current) {
    return block_amplitude_update(bt.m(r), bt.z(r), bt.g(r), bt.budget(r), eta, mode, opt, current);
}

/// One amplitude per block. Phases inside block r are updated element-wise first,
/// then the shared amplitude.
inline AsoResult block_sweep(const SurrogateTerms& s, const ItsState& start, const SweepSettings& set,
                             const SolverOptions& opt, bool record_trace = false) {
    const std::vector<int> off = start.block_offsets();
    return detail::run_sweeps(s, start, set, opt, record_trace, [&](ItsState& its, AsoResult& r) {
        cvec phi = its.coefficients();
        for (int b = 0; b < its.blocks(); ++b) {
            const int lo = off[static_cast<std::size_t>(b)];
            const int hi = off[static_cast<std::size_t>(b) + 1];
            const double before = set.monitor ? detail::swept_objective(s, its, set) : 0.0;
            for (int p = lo; p < hi; ++p) {
                its.phase(p) = phase_from_field(detail::element_field(s, phi, p), its.phase(p));
                phi(p) = its.coefficient(p);
            }
            if (set.update_amplitude) {
                const double m = detail::block_m(s, its.phase, lo, hi);
                const cdouble z = detail::block_z(s, phi, its.phase, lo, hi);
                const double g = detail::block_g(s, lo, hi);
                const double room = set.p_amp - detail::power_outside(s, its.amplitude, lo, hi);
                const double a = block_amplitude_update(m, z, g, room, set.eta, set.budget, opt, its.amplitude(lo));
                for (int p = lo; p < hi; ++p) {
                    its.amplitude(p) = a;
                    phi(p) = its.coefficient(p);
                }
            }
            if (set.monitor) {
                r.max_update_increase =
                    std::max(r.max_update_increase, detail::swept_objective(s, its, set) - before);
            }
        }
    });
}

/// Price search for the block path (block_budget = price).
inline AsoResult search_eta_blocks(const SurrogateTerms& s, const ItsState& start, double p_amp,
                                   const SolverOptions& opt, bool record_trace = false) {
    int total = 0;
    auto run = [&](double eta) {
        SweepSettings set;
        set.eta = eta;
        set.p_amp = p_amp;
        AsoResult r = block_sweep(s, start, set, opt, record_trace);
        total += r.sweeps;
        return r;
    };
    auto feasible = [&](const AsoResult& r) { return amplification_power(s, r.state) <= p_amp; };
    AsoResult at_hi = run(0.0);
    if (feasible(at_hi)) {
        at_hi.sweeps = total;
        return at_hi;
    }
    double scale = 0.0;
    for (int n = 0; n < s.elements(); ++n) {
        scale = std::max(scale, (s.Omega(n, n).real() + s.noise_amp * s.d(n)) / (s.t(n) + s.noise_amp));
    }
    double lo = 0.0;
    double hi = scale > 0.0 ? scale : 1.0;
    at_hi = run(hi);
    for (int doublings = 0; !feasible(at_hi); at_hi = run(hi)) {
        lo = hi;
        hi *= 2.0;
        if (++doublings > opt.eta_max_doublings) throw NumericalError("eta bracket not found for the block path");
    }
    for (int it = 0; it < opt.eta_max_bisections; ++it) {
        if (p_amp - amplification_power(s, at_hi.state) <= opt.eta_tolerance * p_amp) break;
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        AsoResult at_mid = run(mid);
        if (feasible(at_mid)) {
            hi = mid;
            at_hi = std::move(at_mid);
        } else {
            lo = mid;
        }
    }
    at_hi.sweeps = total;
    return at_hi;
}

/// Dispatch on partition and budget mode. An all-ones partition runs the element path.
inline AsoResult optimize_its(const SurrogateTerms& s, const ItsState& start, double p_amp, const SolverOptions& opt,
                              bool record_trace = false) {
    const bool element = std::all_of(start.partition.begin(), start.partition.end(), [](int b) { return b == 1; });
    const BudgetMode mode = element ? opt.element_budget : opt.block_budget;
    if (mode == BudgetMode::kPrice) {
        return element ? search_eta(s, start, p_amp, opt, record_trace)
                       : search_eta_blocks(s, start, p_amp, opt, record_trace);
    }
    SweepSettings set;
    set.budget = BudgetMode::kProjection;
    set.p_amp = p_amp;
    return element ? aso_sweep(s, start, set, opt, record_trace) : block_sweep(s, start, set, opt, record_trace);
}

/// Passive surface: amplitudes fixed, phase-only sweeps on f.
inline AsoResult passive_phase_sweep(const SurrogateTerms& s, const ItsState& start, const SolverOptions& opt,
                                     bool record_trace = false) {
    SweepSettings set;
    set.update_amplitude = false;
    return aso_sweep(s, start, set, opt, record_trace);
}

inline void write_aso_trace_csv(const std::vector<AsoTraceRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open ASO trace '" + path + "' for writing");
    out.precision(17);
    out << "sweep,h,max_abs_da,max_abs_dtheta\n";
    for (const auto& r : rows) out << r.sweep << ',' << r.h << ',' << r.max_da << ',' << r.max_dtheta << '\n';
    if (!out) throw IoError("write failed for ASO trace '" + path + "'");
}

}  // namespace aits
