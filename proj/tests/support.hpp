#pragma once

#include "aits/aits.hpp"
#include "aits/verify/oracles.hpp"

#include <random>

namespace aits::testkit {

inline cmat random_cmat(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale / std::sqrt(2.0));
    cmat m(rows, cols);
    for (Eigen::Index j = 0; j < m.size(); ++j) m(j) = {n(rng), n(rng)};
    return m;
}

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

struct Instance {
    ChannelRealization ch;
    PrecoderSet W;
    ItsState its;
    ModelParams p;
};

/// Unit-scale random instance: Gaussian channels, random precoders and coefficients.
inline Instance random_instance(int mt, int mr, int n, int k, int s, Rng& rng, double its_noise = 0.1,
                                double ue_noise = 1.0) {
    Instance in;
    in.ch.G = random_cmat(n, mt, rng);
    for (int i = 0; i < k; ++i) in.ch.H.push_back(random_cmat(n, mr, rng));
    for (int i = 0; i < k; ++i) in.W.push_back(random_cmat(mt, s, rng, 0.5));
    in.its = ItsState::uniform(n);
    for (int i = 0; i < n; ++i) {
        in.its.amplitude(i) = uniform(rng, 0.2, 2.0);
        in.its.phase(i) = uniform(rng, 0.0, kTwoPi);
    }
    in.p.kappa = uniform(rng, 0.5, 1.0);
    in.p.its_noise = its_noise;
    in.p.ue_noise = ue_noise;
    in.p.streams = s;
    for (int i = 0; i < k; ++i) in.p.weights.push_back(uniform(rng, 0.5, 1.5));
    return in;
}

/// Scenario config shrunk to desk dimensions; the solver caps are kept.
inline SystemConfig small_config(int mt_h, int mt_v, int mr_h, int mr_v, int n_h, int n_v, int users, int streams) {
    SystemConfig c;
    c.bs_array = {mt_h, mt_v};
    c.ue_array = {mr_h, mr_v};
    c.its_array = {n_h, n_v};
    c.users = users;
    c.streams = streams;
    c.weights.assign(static_cast<std::size_t>(users), 1.0);
    c.block_sizes.assign(static_cast<std::size_t>(n_h * n_v), 1);
    validate(c);
    return c;
}

/// Oracle view of the precoder subproblem at (its, U, F) of an instance.
inline verify::P31Instance p31_instance(const Instance& in, const WmmseAux& aux, double p_bs, double p_amp,
                                        bool its_constrained = true) {
    verify::P31Instance o;
    o.G = in.ch.G;
    o.H = in.ch.H;
    o.phi = in.its.coefficients();
    o.U = aux.U;
    o.F = aux.F;
    o.weights = in.p.weights;
    o.kappa = in.p.kappa;
    o.its_noise = in.p.its_noise;
    o.p_bs = p_bs;
    o.p_amp = p_amp;
    o.its_constrained = its_constrained;
    return o;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace aits::testkit
