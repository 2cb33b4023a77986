#pragma once

// Signal model of the ITS-assisted downlink. The cascaded channel of UE k is
// always built through effective_channel() as kappa * H_k^H Phi G, so every
// receiver, weight and precoder formula sees the same kappa placement.

#include "aits/channel.hpp"
#include "aits/config.hpp"
#include "aits/types.hpp"

#include <numeric>
#include <vector>

namespace aits {

using PrecoderSet = std::vector<cmat>;  // W_k, M_t x s each

inline double wrap_phase(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    if (t >= kTwoPi) t = 0.0;
    return t;
}

/// Amplitudes, phases and the block partition of the surface.
struct ItsState {
    rvec amplitude;
    rvec phase;
    std::vector<int> partition;

    static ItsState uniform(int n, double amplitude = 1.0, double phase = 0.0) {
        return {rvec::Constant(n, amplitude), rvec::Constant(n, phase), std::vector<int>(n, 1)};
    }

    int elements() const { return static_cast<int>(amplitude.size()); }
    int blocks() const { return static_cast<int>(partition.size()); }

    cdouble coefficient(int n) const { return std::polar(amplitude(n), phase(n)); }

    /// Vecd(Phi): phi_n = a_n e^{j theta_n}.
    cvec coefficients() const {
        cvec phi(amplitude.size());
        for (Eigen::Index n = 0; n < phi.size(); ++n) phi(n) = coefficient(static_cast<int>(n));
        return phi;
    }

    /// First element index of every block plus the end sentinel.
    std::vector<int> block_offsets() const {
        std::vector<int> off(partition.size() + 1, 0);
        std::partial_sum(partition.begin(), partition.end(), off.begin() + 1);
        return off;
    }
};

struct WmmseAux {
    std::vector<cmat> U;  // M_r x s
    std::vector<cmat> F;  // s x s, Hermitian PD
    std::vector<cmat> E;  // s x s
};

// ---------------------------------------------------------------------------
// building blocks

inline cmat effective_channel(const ChannelRealization& ch, const cvec& phi, double kappa, int k) {
    return kappa * (ch.H[static_cast<std::size_t>(k)].adjoint() * phi.asDiagonal()) * ch.G;
}

/// kappa^2 delta^2 H_k^H Phi Phi^H H_k + sigma^2 I.
inline cmat noise_covariance(const ChannelRealization& ch, const cvec& phi, const ModelParams& p, int k) {
    const cmat& hk = ch.H[static_cast<std::size_t>(k)];
    const rvec mag2 = phi.cwiseAbs2();
    cmat r = p.kappa * p.kappa * p.its_noise * (hk.adjoint() * mag2.asDiagonal() * hk);
    r.diagonal().array() += p.ue_noise;
    return hermitian_part(r);
}

/// Per-UE covariance pieces evaluated once for a given (W, Phi).
struct LinkState {
    std::vector<cmat> heff;     // kappa H_k^H Phi G, M_r x M_t
    std::vector<cmat> signal;   // S_k = Heff_k W_k W_k^H Heff_k^H
    std::vector<cmat> interference_plus_noise;  // V_k
    std::vector<cmat> total;    // Vbar_k = V_k + S_k

    static LinkState evaluate(const ChannelRealization& ch, const PrecoderSet& w, const ItsState& its,
                              const ModelParams& p) {
        const int K = ch.users();
        const cvec phi = its.coefficients();
        LinkState s;
        s.heff.reserve(K);
        for (int k = 0; k < K; ++k) s.heff.push_back(effective_channel(ch, phi, p.kappa, k));
        for (int k = 0; k < K; ++k) {
            cmat v = noise_covariance(ch, phi, p, k);
            cmat sig;
            for (int i = 0; i < K; ++i) {
                const cmat hw = s.heff[static_cast<std::size_t>(k)] * w[static_cast<std::size_t>(i)];
                if (i == k)
                    sig = hw * hw.adjoint();
                else
                    v.noalias() += hw * hw.adjoint();
            }
            v = hermitian_part(v);
            sig = hermitian_part(sig);
            s.total.push_back(v + sig);
            s.signal.push_back(std::move(sig));
            s.interference_plus_noise.push_back(std::move(v));
        }
        return s;
    }
};

// ---------------------------------------------------------------------------
// operations

/// Gamma_k = S_k V_k^{-1}.
inline cmat sinr_matrix(const ChannelRealization& ch, const PrecoderSet& w, const ItsState& its,
                        const ModelParams& p, int k) {
    const LinkState s = LinkState::evaluate(ch, w, its, p);
    const auto kk = static_cast<std::size_t>(k);
    Eigen::LLT<cmat> llt(s.interference_plus_noise[kk]);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("interference-plus-noise covariance is singular (UE noise power must be > 0)");
    }
    // (V^{-1} S)^H = S V^{-1} for Hermitian S, V
    return llt.solve(s.signal[kk]).adjoint();
}

/// log|I + Gamma_k| in nats for every UE, as log|V_k + S_k| - log|V_k|.
inline std::vector<double> user_rates_nats(const ChannelRealization& ch, const PrecoderSet& w,
                                           const ItsState& its, const ModelParams& p) {
    const LinkState s = LinkState::evaluate(ch, w, its, p);
    std::vector<double> r;
    for (int k = 0; k < ch.users(); ++k) {
        const auto kk = static_cast<std::size_t>(k);
        r.push_back(log_det_hpd(s.total[kk], "Vbar_k") - log_det_hpd(s.interference_plus_noise[kk], "V_k"));
    }
    return r;
}

/// Weighted sum-rate in bits per channel use.
inline double wsr(const ChannelRealization& ch, const PrecoderSet& w, const ItsState& its, const ModelParams& p) {
    const auto rates = user_rates_nats(ch, w, its, p);
    double acc = 0.0;
    for (std::size_t k = 0; k < rates.size(); ++k) acc += p.weights[k] * rates[k];
    return acc / kLn2;
}

/// MMSE receivers U_k = Vbar_k^{-1} Heff_k W_k.
inline std::vector<cmat> update_receivers(const ChannelRealization& ch, const PrecoderSet& w, const ItsState& its,
                                          const ModelParams& p) {
    const LinkState s = LinkState::evaluate(ch, w, its, p);
    std::vector<cmat> u;
    for (int k = 0; k < ch.users(); ++k) {
        const auto kk = static_cast<std::size_t>(k);
        Eigen::LLT<cmat> llt(s.total[kk]);
        if (llt.info() != Eigen::Success) throw NumericalError("Vbar_k is not positive definite");
        u.push_back(llt.solve(s.heff[kk] * w[kk]));
    }
    return u;
}

/// MSE matrix of UE k for an arbitrary receiver:
/// E_k = U^H Vbar U + I - U^H Heff W - W^H Heff^H U.
inline cmat mse_matrix(const LinkState& s, const PrecoderSet& w, const cmat& u, int k) {
    const auto kk = static_cast<std::size_t>(k);
    const cmat cross = u.adjoint() * s.heff[kk] * w[kk];
    cmat e = u.adjoint() * s.total[kk] * u - cross - cross.adjoint();
    e.diagonal().array() += 1.0;
    return hermitian_part(e);
}

/// Weights F_k = (E_k^*)^{-1} at the MMSE receiver; also returns E_k^*.
inline WmmseAux update_weights(const ChannelRealization& ch, const PrecoderSet& w, const ItsState& its,
                               const ModelParams& p, const std::vector<cmat>& u) {
    const LinkState s = LinkState::evaluate(ch, w, its, p);
    WmmseAux aux;
    aux.U = u;
    for (int k = 0; k < ch.users(); ++k) {
        const auto kk = static_cast<std::size_t>(k);
        cmat e = -(s.heff[kk] * w[kk]).adjoint() * u[kk];
        e.diagonal().array() += 1.0;
        e = hermitian_part(e);
        Eigen::LLT<cmat> llt(e);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("MSE matrix of UE " + std::to_string(k) + " lost positive definiteness");
        }
        aux.F.push_back(hermitian_part(llt.solve(cmat::Identity(e.rows(), e.cols()))));
        aux.E.push_back(std::move(e));
    }
    return aux;
}

/// Receivers and weights in one call.
inline WmmseAux update_wmmse(const ChannelRealization& ch, const PrecoderSet& w, const ItsState& its,
                             const ModelParams& p) {
    return update_weights(ch, w, its, p, update_receivers(ch, w, its, p));
}

/// sum_k alpha_k (log|F_k| - Tr(F_k E_k) + s) with E_k evaluated at the given U,
/// returned in bits (divided by ln 2) so it is directly comparable with wsr().
inline double wmmse_objective_bits(const ChannelRealization& ch, const PrecoderSet& w, const ItsState& its,
                                   const ModelParams& p, const std::vector<cmat>& u, const std::vector<cmat>& f) {
    const LinkState s = LinkState::evaluate(ch, w, its, p);
    double acc = 0.0;
    for (int k = 0; k < ch.users(); ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const cmat e = mse_matrix(s, w, u[kk], k);
        const double h = log_det_hpd(f[kk], "F_k") - (f[kk] * e).trace().real() + static_cast<double>(e.rows());
        acc += p.weights[kk] * h;
    }
    return acc / kLn2;
}

inline double bs_power(const PrecoderSet& w) {
    double acc = 0.0;
    for (const auto& wk : w) acc += wk.squaredNorm();
    return acc;
}

/// ITS output power sum_k kappa^2 ||Phi G W_k||^2 + delta^2 kappa^2 ||Phi||^2.
inline double its_power(const ChannelRealization& ch, const PrecoderSet& w, const ItsState& its,
                        const ModelParams& p) {
    const cvec phi = its.coefficients();
    const double k2 = p.kappa * p.kappa;
    double acc = 0.0;
    for (const auto& wk : w) acc += k2 * (phi.asDiagonal() * (ch.G * wk)).squaredNorm();
    return acc + p.its_noise * k2 * phi.squaredNorm();
}

/// Same quantity as sum_n a_n^2 (T_nn + delta^2 kappa^2), T = kappa^2 G (sum W W^H) G^H.
inline double its_power_diagonal(const ChannelRealization& ch, const PrecoderSet& w, const ItsState& its,
                                 const ModelParams& p) {
    const double k2 = p.kappa * p.kappa;
    rvec t = rvec::Zero(ch.elements());
    for (const auto& wk : w) t += k2 * (ch.G * wk).rowwise().squaredNorm();
    double acc = 0.0;
    for (int n = 0; n < ch.elements(); ++n) {
        const double a = its.amplitude(n);
        acc += a * a * (t(n) + p.its_noise * k2);
    }
    return acc;
}

/// Static consumption N P_SW + R P_DC of an ITS with R amplifiers [mW].
inline double circuit_power_mw(int elements, int amplifiers, double p_sw_mw, double p_dc_mw) {
    if (amplifiers > elements) throw ConfigError("amplifier count cannot exceed element count");
    return elements * p_sw_mw + amplifiers * p_dc_mw;
}

/// Budget left for amplification once the circuit consumption is paid [mW].
inline double residual_amplification_mw(double p_its_max_mw, int elements, int amplifiers, double p_sw_mw,
                                        double p_dc_mw) {
    return p_its_max_mw - circuit_power_mw(elements, amplifiers, p_sw_mw, p_dc_mw);
}

}  // namespace aits
