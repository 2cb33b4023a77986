#include "support.hpp"

#include <gtest/gtest.h>

using namespace aits;
using testkit::rel_diff;

namespace {

verify::P31Instance oracle_instance(std::uint64_t seed, double p_bs, double p_amp, bool its_constrained) {
    Rng rng(seed);
    const auto in = testkit::random_instance(4, 2, 6, 2, 2, rng);
    const auto aux = update_wmmse(in.ch, in.W, in.its, in.p);
    return testkit::p31_instance(in, aux, p_bs, p_amp, its_constrained);
}

cmat stacked(const std::vector<cmat>& w) {
    Eigen::Index cols = 0;
    for (const auto& m : w) cols += m.cols();
    cmat out(w[0].rows(), cols);
    for (Eigen::Index c = 0; const auto& m : w) {
        out.middleCols(c, m.cols()) = m;
        c += m.cols();
    }
    return out;
}

}  // namespace

TEST(GridMinimize, QuadraticAndEndpoint) {
    const auto g = verify::grid_minimize_1d([](double x) { return (x - 0.3) * (x - 0.3); }, 0.0, 1.0, 1e-3);
    EXPECT_NEAR(g.argmin, 0.3, 1e-3);
    const auto e = verify::grid_minimize_1d([](double x) { return -x; }, 0.0, 1.05, 0.1);
    EXPECT_EQ(e.argmin, 1.05);
    EXPECT_THROW(verify::grid_minimize_1d([](double x) { return x; }, 1.0, 0.0, 0.1), Error);
}

TEST(ScalarGrid, ZeroBudgetGivesZeroRate) {
    verify::ScalarInstance s;
    s.p_bs = 0.0;
    EXPECT_EQ(verify::grid_oracle_scalar_system(s, {}).value, 0.0);
}

TEST(ScalarGrid, CoarseGridThrows) {
    verify::ScalarInstance s;
    EXPECT_THROW(verify::grid_oracle_scalar_system(s, {1, 8, 200}), Error);
    EXPECT_THROW(verify::grid_oracle_scalar_system(s, {200, 0, 200}), Error);
}

TEST(ScalarGrid, NoiselessClosedForm) {
    verify::ScalarInstance s;
    s.g = {0.6, 0.8};
    s.h = {0.0, 1.0};
    s.p_amp = 4.0;
    s.a_max = 2.0;
    // a^2 |w|^2 <= 4 with |w| <= 1: the optimum is a = 2, |w| = 1
    auto r = verify::grid_oracle_scalar_system(s, {100, 4, 100});
    EXPECT_NEAR(r.value, std::log2(5.0), 1e-12);
    EXPECT_TRUE(r.compare_max(std::log2(5.0), 1e-9).agrees);
}

TEST(Projector, BallAndEllipsoid) {
    Rng rng(1);
    const cmat m = [&] {
        const cmat a = testkit::random_cmat(4, 4, rng);
        return cmat(a * a.adjoint());
    }();
    const verify::IntersectionProjector proj(m, 2.0, 0.5, true);
    for (int i = 0; i < 20; ++i) {
        const cmat y = testkit::random_cmat(4, 3, rng, 3.0);
        const cmat x = proj(y);
        EXPECT_LE(x.squaredNorm(), 2.0 * (1 + 1e-9));
        EXPECT_LE((x.adjoint() * m * x).trace().real(), 0.5 * (1 + 1e-9));
        // variational inequality: <y - x, z - x> <= 0 for feasible z
        for (int j = 0; j < 10; ++j) {
            cmat z = testkit::random_cmat(4, 3, rng);
            z *= std::min(std::sqrt(2.0 / z.squaredNorm()), std::sqrt(0.5 / (z.adjoint() * m * z).trace().real()));
            EXPECT_LE((y - x).cwiseProduct((z - x).conjugate()).sum().real(), 1e-8);
        }
    }
    const cmat inside = cmat::Constant(4, 3, 1e-3);
    EXPECT_LT((proj(inside) - inside).norm(), 1e-14);
}

TEST(ProjectedGradient, InactiveConstraintsGiveClosedForm) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto in = oracle_instance(seed, 1e6, 1e6, true);
        const auto d = verify::p31_data(in);
        const cmat closed = d.Q.ldlt().solve(d.B);
        const auto s = verify::projected_gradient_p31(in, 1e-10);
        EXPECT_TRUE(s.converged);
        EXPECT_LT((stacked(s.W) - closed).norm(), 1e-6 * closed.norm());
    }
}

TEST(ProjectedGradient, BindingBsBudget) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto in = oracle_instance(seed, 0.05, 1e6, false);
        const auto s = verify::projected_gradient_p31(in);
        EXPECT_TRUE(s.converged);
        EXPECT_NEAR(std::sqrt(stacked(s.W).squaredNorm()), std::sqrt(0.05), 1e-6);
    }
}

TEST(ProjectedGradient, AgreesWithDualMethod) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        const auto in = testkit::random_instance(4, 2, 6, 2, 2, rng);
        const auto aux = update_wmmse(in.ch, in.W, in.its, in.p);
        const ModelParams& p = in.p;
        const double its_free = its_power(in.ch, in.W, in.its, p);
        const double p_amp = 0.5 * its_free;
        const auto pr = make_precoder_problem(in.ch, in.its, aux.U, aux.F, p, 0.5, p_amp, true);
        SolverOptions opt;
        const auto lib = solve_precoder(pr, opt);
        const auto oracle = verify::projected_gradient_p31(testkit::p31_instance(in, aux, 0.5, p_amp));
        ASSERT_TRUE(oracle.converged);
        EXPECT_LT(rel_diff(precoder_objective(pr, lib.W), oracle.objective), 1e-4);
    }
}

TEST(FiniteDiff, QuadraticGradient) {
    const auto fn = [](const rvec& x) { return (x.array() - 1.0).square().sum(); };
    EXPECT_NEAR(verify::finite_diff_stationarity(fn, rvec::Ones(3), 1e-5), 0.0, 1e-9);
    rvec x = rvec::Ones(3);
    x(1) = 2.0;
    EXPECT_NEAR(verify::finite_diff_stationarity(fn, x, 1e-5), 2.0, 1e-6);
}

TEST(FiniteDiff, PackRoundTrip) {
    Rng rng(3);
    const std::vector<cmat> w = {testkit::random_cmat(3, 2, rng), testkit::random_cmat(3, 1, rng)};
    const rvec x = verify::pack(w);
    EXPECT_EQ(x.size(), 18);
    EXPECT_EQ(x(1), w[0](0).imag());
    const auto back = verify::unpack(x, w);
    EXPECT_EQ(back[0], w[0]);
    EXPECT_EQ(back[1], w[1]);
}
