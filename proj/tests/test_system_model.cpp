#include "support.hpp"

#include <gtest/gtest.h>

using namespace aits;
using testkit::rel_diff;

namespace {

struct Scalar {
    double g = 0.7, h = 1.3, a = 1.8, w = 0.9, kappa = 0.8, delta2 = 0.05, sigma2 = 0.2, alpha = 1.2;

    ChannelRealization channel() const {
        ChannelRealization ch;
        ch.G = cmat::Constant(1, 1, g);
        ch.H = {cmat::Constant(1, 1, h)};
        return ch;
    }
    PrecoderSet precoder() const { return {cmat::Constant(1, 1, w)}; }
    ItsState its() const { return ItsState::uniform(1, a); }
    ModelParams params() const { return {kappa, delta2, sigma2, {alpha}, 1}; }
    double sinr() const {
        return kappa * kappa * h * h * a * a * g * g * w * w / (kappa * kappa * delta2 * h * h * a * a + sigma2);
    }
    double total() const {
        return kappa * kappa * h * h * a * a * g * g * w * w + kappa * kappa * delta2 * h * h * a * a + sigma2;
    }
};

}  // namespace

TEST(WrapPhase, Range) {
    EXPECT_DOUBLE_EQ(wrap_phase(0.0), 0.0);
    EXPECT_NEAR(wrap_phase(-kPi / 2), 1.5 * kPi, 1e-15);
    EXPECT_NEAR(wrap_phase(5 * kPi), kPi, 1e-14);
    EXPECT_GE(wrap_phase(-1e-18), 0.0);
    EXPECT_LT(wrap_phase(-1e-18), kTwoPi);
}

TEST(ItsState, CoefficientsAndOffsets) {
    ItsState s = ItsState::uniform(5, 2.0, 0.0);
    s.phase(3) = kPi / 2;
    s.partition = {2, 3};
    const cvec phi = s.coefficients();
    EXPECT_NEAR(std::abs(phi(3) - cdouble(0.0, 2.0)), 0.0, 1e-15);
    for (int n = 0; n < 5; ++n) {
        EXPECT_NEAR(std::abs(phi(n)), s.amplitude(n), 1e-15);
        EXPECT_NEAR(wrap_phase(std::arg(phi(n))), s.phase(n), 1e-15);
    }
    EXPECT_EQ(s.block_offsets(), (std::vector<int>{0, 2, 5}));
}

TEST(Sinr, ZeroPrecoderGivesZero) {
    Rng rng(1);
    auto in = testkit::random_instance(4, 2, 6, 2, 2, rng);
    for (auto& w : in.W) w.setZero();
    for (int k = 0; k < 2; ++k) EXPECT_EQ(sinr_matrix(in.ch, in.W, in.its, in.p, k).norm(), 0.0);
    EXPECT_EQ(wsr(in.ch, in.W, in.its, in.p), 0.0);
    const auto u = update_receivers(in.ch, in.W, in.its, in.p);
    for (const auto& uk : u) EXPECT_EQ(uk.norm(), 0.0);
    const auto aux = update_weights(in.ch, in.W, in.its, in.p, u);
    for (const auto& f : aux.F) EXPECT_LT((f - cmat::Identity(2, 2)).norm(), 1e-15);
}

TEST(Sinr, ScalarCase) {
    const Scalar s;
    const cmat gamma = sinr_matrix(s.channel(), s.precoder(), s.its(), s.params(), 0);
    EXPECT_LT(rel_diff(gamma(0, 0).real(), s.sinr()), 1e-14);
    EXPECT_NEAR(gamma(0, 0).imag(), 0.0, 1e-15);
    EXPECT_LT(rel_diff(wsr(s.channel(), s.precoder(), s.its(), s.params()), s.alpha * std::log2(1.0 + s.sinr())),
              1e-14);
}

TEST(Sinr, KappaAndAmplitudeEnterAsProduct) {
    Scalar s;
    const double before = s.sinr();
    const cmat g0 = sinr_matrix(s.channel(), s.precoder(), s.its(), s.params(), 0);
    s.kappa *= 0.5;
    s.a *= 2.0;
    const cmat g1 = sinr_matrix(s.channel(), s.precoder(), s.its(), s.params(), 0);
    EXPECT_LT(rel_diff(g0(0, 0).real(), g1(0, 0).real()), 1e-14);
    EXPECT_LT(rel_diff(before, s.sinr()), 1e-14);
}

TEST(Wsr, SymmetricUsersHaveEqualRates) {
    Rng rng(2);
    auto in = testkit::random_instance(4, 2, 6, 2, 1, rng);
    in.ch.H[1] = in.ch.H[0];
    in.W[1] = in.W[0];
    const auto r = user_rates_nats(in.ch, in.W, in.its, in.p);
    EXPECT_LT(rel_diff(r[0], r[1]), 1e-12);
}

TEST(Receivers, ScalarCase) {
    const Scalar s;
    const auto u = update_receivers(s.channel(), s.precoder(), s.its(), s.params());
    const double expected = s.kappa * s.h * s.a * s.g * s.w / s.total();
    EXPECT_LT(std::abs(u[0](0, 0) - expected), 1e-15);
}

TEST(Receivers, MatchScalarGridOracle) {
    const Scalar s;
    const auto ls = LinkState::evaluate(s.channel(), s.precoder(), s.its(), s.params());
    auto mse = [&](double u) { return mse_matrix(ls, s.precoder(), cmat::Constant(1, 1, u), 0)(0, 0).real(); };
    const auto coarse = verify::grid_minimize_1d(mse, -5.0, 5.0, 1e-3);
    const auto fine = verify::grid_minimize_1d(mse, coarse.argmin - 1e-3, coarse.argmin + 1e-3, 1e-8);
    const auto u = update_receivers(s.channel(), s.precoder(), s.its(), s.params());
    EXPECT_NEAR(u[0](0, 0).real(), fine.argmin, 1e-6);
}

TEST(Weights, ScalarCaseIsOnePlusSinr) {
    const Scalar s;
    const auto aux = update_wmmse(s.channel(), s.precoder(), s.its(), s.params());
    EXPECT_LT(rel_diff(aux.F[0](0, 0).real(), 1.0 + s.sinr()), 1e-13);
}

TEST(Weights, LogDetFEqualsRate) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto in = testkit::random_instance(6, 3, 8, 2, 2, rng);
        const auto aux = update_wmmse(in.ch, in.W, in.its, in.p);
        const auto rates = user_rates_nats(in.ch, in.W, in.its, in.p);
        for (std::size_t k = 0; k < rates.size(); ++k) {
            const double lhs = log_det_hpd(aux.F[k]) / kLn2;
            const double rhs = rates[k] / kLn2;
            EXPECT_LT(std::abs(lhs - rhs), 1e-9 * std::max(1.0, rhs));
        }
    }
}

TEST(Weights, SurrogateIsTightAtOptimalReceivers) {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        auto in = testkit::random_instance(8, 4, 8, 2, 2, rng);
        const auto aux = update_wmmse(in.ch, in.W, in.its, in.p);
        const double sur = wmmse_objective_bits(in.ch, in.W, in.its, in.p, aux.U, aux.F);
        const double rate = wsr(in.ch, in.W, in.its, in.p);
        EXPECT_LT(rel_diff(sur, rate), 1e-8);
        // any other receiver gives a lower bound
        std::vector<cmat> u = aux.U;
        u[0] += testkit::random_cmat(4, 2, rng, 0.1);
        EXPECT_LT(wmmse_objective_bits(in.ch, in.W, in.its, in.p, u, aux.F), rate);
    }
}

TEST(LinkState, CovariancesAreHermitianPsd) {
    Rng rng(5);
    auto in = testkit::random_instance(6, 3, 8, 3, 2, rng);
    const auto s = LinkState::evaluate(in.ch, in.W, in.its, in.p);
    for (int k = 0; k < 3; ++k) {
        for (const cmat* m : {&s.signal[k], &s.interference_plus_noise[k], &s.total[k]}) {
            EXPECT_LT((*m - m->adjoint()).norm(), 1e-12 * std::max(1.0, m->norm()));
            EXPECT_GE(Eigen::SelfAdjointEigenSolver<cmat>(*m).eigenvalues().minCoeff(), -1e-10);
        }
        EXPECT_GE(Eigen::SelfAdjointEigenSolver<cmat>(s.interference_plus_noise[k]).eigenvalues().minCoeff(),
                  in.p.ue_noise * (1 - 1e-12));
    }
}

TEST(ItsPower, ZeroAmplitudeIsZero) {
    Rng rng(6);
    auto in = testkit::random_instance(4, 2, 6, 2, 2, rng);
    in.its.amplitude.setZero();
    EXPECT_EQ(its_power(in.ch, in.W, in.its, in.p), 0.0);
    EXPECT_EQ(its_power_diagonal(in.ch, in.W, in.its, in.p), 0.0);
}

TEST(ItsPower, ScalarCase) {
    const Scalar s;
    const double expected = s.a * s.a * (s.kappa * s.kappa * s.g * s.g * s.w * s.w + s.delta2 * s.kappa * s.kappa);
    EXPECT_LT(rel_diff(its_power(s.channel(), s.precoder(), s.its(), s.params()), expected), 1e-14);
}

TEST(ItsPower, TwoFormulasAgree) {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        auto in = testkit::random_instance(8, 4, 12, 3, 2, rng);
        EXPECT_LT(rel_diff(its_power(in.ch, in.W, in.its, in.p), its_power_diagonal(in.ch, in.W, in.its, in.p)),
                  1e-12);
    }
}

TEST(BsPower, FrobeniusSum) {
    PrecoderSet w = {cmat::Constant(2, 1, cdouble(1.0, 1.0)), cmat::Constant(2, 1, cdouble(0.0, 2.0))};
    EXPECT_DOUBLE_EQ(bs_power(w), 4.0 + 8.0);
}

TEST(CircuitPower, WorkedExample) {
    EXPECT_NEAR(circuit_power_mw(60, 60, 0.1, 0.316), 24.96, 1e-9);
    EXPECT_NEAR(circuit_power_mw(60, 10, 0.1, 0.316), 9.16, 1e-9);
    EXPECT_NEAR(residual_amplification_mw(31.6, 60, 60, 0.1, 0.316), 6.64, 1e-9);
    EXPECT_NEAR(residual_amplification_mw(31.6, 60, 10, 0.1, 0.316), 22.44, 1e-9);
    EXPECT_THROW(circuit_power_mw(10, 11, 0.1, 0.316), ConfigError);
}
