#pragma once

// BS precoder subproblem: minimize
//   v(W) = sum_k Tr(W_k^H Q W_k) - 2 Re Tr(B_k^H W_k)
// subject to sum_k ||W_k||^2 <= P_BS and sum_k ||kappa Phi G W_k||^2 <= P_hat,
// through the combined constraint lambda*bs + mu*its <= P_sum (multiplier eps)
// and a projected subgradient loop on (lambda, mu).

#include "aits/system_model.hpp"

#include <Eigen/Eigenvalues>

#include <fstream>
#include <limits>
#include <optional>
#include <string>

namespace aits {

/// Everything the W-step needs, with U, F, Phi frozen.
struct PrecoderProblem {
    cmat Q;                // M_t x M_t, Hermitian PSD
    std::vector<cmat> B;   // alpha_k Heff_k^H U_k F_k, M_t x s
    cmat its_gram;         // kappa^2 G^H Phi^H Phi G
    double p_bs = 0.0;     // W
    double p_its = 0.0;    // P_hat: amplification budget minus noise amplification, W
    bool its_constrained = true;

    int bs_antennas() const { return static_cast<int>(Q.rows()); }
    int users() const { return static_cast<int>(B.size()); }
};

/// Q = sum_k alpha_k Heff_k^H U_k F_k U_k^H Heff_k.
inline cmat build_Q(const ChannelRealization& ch, const ItsState& its, const std::vector<cmat>& U,
                    const std::vector<cmat>& F, const ModelParams& p) {
    const cvec phi = its.coefficients();
    cmat q = cmat::Zero(ch.G.cols(), ch.G.cols());
    for (int k = 0; k < ch.users(); ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const cmat x = effective_channel(ch, phi, p.kappa, k).adjoint() * U[kk];
        q.noalias() += p.weights[kk] * x * F[kk] * x.adjoint();
    }
    return hermitian_part(q);
}

/// p_amp is the amplification budget of the surface (watts); the noise it
/// amplifies, delta^2 kappa^2 ||Phi||^2, is deducted here.
inline PrecoderProblem make_precoder_problem(const ChannelRealization& ch, const ItsState& its,
                                             const std::vector<cmat>& U, const std::vector<cmat>& F,
                                             const ModelParams& p, double p_bs, double p_amp,
                                             bool its_constrained = true) {
    const cvec phi = its.coefficients();
    PrecoderProblem pr;
    pr.Q = build_Q(ch, its, U, F, p);
    for (int k = 0; k < ch.users(); ++k) {
        const auto kk = static_cast<std::size_t>(k);
        pr.B.push_back(p.weights[kk] * effective_channel(ch, phi, p.kappa, k).adjoint() * U[kk] * F[kk]);
    }
    const cmat pg = phi.asDiagonal() * ch.G;
    pr.its_gram = hermitian_part(p.kappa * p.kappa * (pg.adjoint() * pg));
    pr.p_bs = p_bs;
    pr.p_its = p_amp - p.its_noise * p.kappa * p.kappa * phi.squaredNorm();
    pr.its_constrained = its_constrained;
    return pr;
}

inline double precoder_objective(const PrecoderProblem& pr, const PrecoderSet& w) {
    double v = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        v += (w[k].adjoint() * pr.Q * w[k]).trace().real() - 2.0 * (pr.B[k].adjoint() * w[k]).trace().real();
    }
    return v;
}

inline double its_power_of(const PrecoderProblem& pr, const PrecoderSet& w) {
    double acc = 0.0;
    for (const auto& wk : w) acc += (wk.adjoint() * pr.its_gram * wk).trace().real();
    return acc;
}

struct DualState {
    double lambda = 1.0;
    double mu = 1.0;
    double epsilon = 0.0;

    /// lambda P_BS + mu P_hat
    double p_sum(const PrecoderProblem& pr) const {
        return lambda * pr.p_bs + (pr.its_constrained ? mu * pr.p_its : 0.0);
    }
};

/// W_k(eps) = Qhat(eps)^{-1} B_k with Qhat = Q + eps (lambda I + mu its_gram),
/// one Cholesky factorization shared by every UE.
inline PrecoderSet solve_w_given_epsilon(const PrecoderProblem& pr, const DualState& d) {
    cmat qhat = pr.Q;
    const double mu = pr.its_constrained ? d.mu : 0.0;
    qhat.diagonal().array() += d.epsilon * d.lambda;
    qhat += d.epsilon * mu * pr.its_gram;
    Eigen::LLT<cmat> llt(hermitian_part(qhat));
    if (llt.info() != Eigen::Success) {
        throw SingularSystemError("Qhat(eps) is singular at eps = " + std::to_string(d.epsilon) +
                                  "; use the eps > 0 branch");
    }
    PrecoderSet w;
    for (const auto& b : pr.B) w.push_back(llt.solve(b));
    return w;
}

/// Spectral form of the combined-constraint problem at fixed (lambda, mu).
/// All of Q, B and its_gram live in the range S of its_gram; in a whitened basis
/// of S the combined power is sum_j ||X_j||^2 / (Lambda_j + eps)^2.
class CombinedConstraintSolver {
public:
    CombinedConstraintSolver(const PrecoderProblem& pr, const DualState& d) : pr_(pr) {
        Eigen::SelfAdjointEigenSolver<cmat> es(pr.its_gram);
        const rvec& g = es.eigenvalues();
        const double gmax = g.size() ? g.maxCoeff() : 0.0;
        std::vector<Eigen::Index> keep;
        for (Eigen::Index j = 0; j < g.size(); ++j) {
            if (g(j) > 1e-12 * gmax && g(j) > 0.0) keep.push_back(j);
        }
        const auto r = static_cast<Eigen::Index>(keep.size());
        const int cols = total_streams();
        y_.resize(pr.bs_antennas(), r);
        rvec metric(r);
        const double mu = pr.its_constrained ? d.mu : 0.0;
        for (Eigen::Index j = 0; j < r; ++j) {
            y_.col(j) = es.eigenvectors().col(keep[static_cast<std::size_t>(j)]);
            metric(j) = d.lambda + mu * g(keep[static_cast<std::size_t>(j)]);
        }
        unconstrained_ = !(metric.size() == 0 || metric.minCoeff() > 0.0);
        linv_ = unconstrained_ ? rvec::Ones(r) : rvec(metric.cwiseSqrt().cwiseInverse());
        p_sum_ = d.p_sum(pr);

        cmat b(pr.bs_antennas(), cols);
        for (int k = 0, c = 0; k < pr.users(); ++k) {
            const auto& bk = pr.B[static_cast<std::size_t>(k)];
            b.middleCols(c, bk.cols()) = bk;
            c += static_cast<int>(bk.cols());
        }
        if (r == 0) {
            lambda_.resize(0);
            v_.resize(0, 0);
        } else {
            const cmat a = linv_.asDiagonal() * (y_.adjoint() * pr.Q * y_) * linv_.asDiagonal();
            Eigen::SelfAdjointEigenSolver<cmat> ea(hermitian_part(a));
            lambda_ = ea.eigenvalues().cwiseMax(0.0);
            v_ = ea.eigenvectors();
        }
        x_ = v_.adjoint() * linv_.asDiagonal() * (y_.adjoint() * b);
        xnorm2_ = x_.rowwise().squaredNorm();
        const double lmax = lambda_.size() ? lambda_.maxCoeff() : 0.0;
        singular_tol_ = 1e-12 * std::max(lmax, std::numeric_limits<double>::min());
    }

    bool unconstrained() const { return unconstrained_; }
    double p_sum() const { return p_sum_; }

    /// Combined power minus P_sum; +inf when eps = 0 meets a null direction with signal.
    double f(double eps) const {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < lambda_.size(); ++j) {
            const double den = lambda_(j) + eps;
            if (den <= singular_tol_) {
                if (xnorm2_(j) > 0.0) return std::numeric_limits<double>::infinity();
                continue;
            }
            acc += xnorm2_(j) / (den * den);
        }
        return acc - p_sum_;
    }

    bool q_invertible() const { return lambda_.size() == 0 || lambda_.minCoeff() > singular_tol_; }

    PrecoderSet precoders(double eps) const {
        rvec inv(lambda_.size());
        for (Eigen::Index j = 0; j < inv.size(); ++j) {
            const double den = lambda_(j) + eps;
            inv(j) = den > singular_tol_ ? 1.0 / den : 0.0;  // pseudo-inverse on exact null directions
        }
        const cmat z = y_ * linv_.asDiagonal() * v_ * inv.asDiagonal() * x_;
        PrecoderSet w;
        for (int k = 0, c = 0; k < pr_.users(); ++k) {
            const auto s = pr_.B[static_cast<std::size_t>(k)].cols();
            w.push_back(z.middleCols(c, s));
            c += static_cast<int>(s);
        }
        return w;
    }

    double trace_q() const { return pr_.Q.trace().real(); }

private:
    int total_streams() const {
        int c = 0;
        for (const auto& b : pr_.B) c += static_cast<int>(b.cols());
        return c;
    }

    const PrecoderProblem& pr_;
    cmat y_;
    rvec linv_;
    rvec lambda_;
    cmat v_;
    cmat x_;
    rvec xnorm2_;
    double p_sum_ = 0.0;
    double singular_tol_ = 0.0;
    bool unconstrained_ = false;
};

struct EpsilonResult {
    double epsilon = 0.0;
    PrecoderSet W;
    int iterations = 0;
};

/// Complementary slackness in eps. The eps = 0 branch is taken when Q is invertible on
/// the signal subspace and W(0) already meets the combined constraint.
inline EpsilonResult bisect_epsilon(const PrecoderProblem& pr, const DualState& d, const SolverOptions& opt) {
    const CombinedConstraintSolver s(pr, d);
    EpsilonResult out;
    if (s.unconstrained()) {
        out.W = s.precoders(0.0);
        return out;
    }
    if (s.f(0.0) <= 0.0) {
        if (s.q_invertible()) {
            out.W = s.precoders(0.0);
            return out;
        }
        const double floor = 1e-12 * std::max(s.trace_q(), 0.0) / pr.bs_antennas();
        out.epsilon = floor;
        out.W = s.precoders(floor);
        return out;
    }
    double lo = 0.0;
    double hi = 1.0;
    int doublings = 0;
    while (!(s.f(hi) < 0.0)) {
        lo = hi;
        hi *= 2.0;
        if (++doublings > opt.bracket_max_doublings) {
            throw NumericalError("eps bracket not found after " + std::to_string(opt.bracket_max_doublings) +
                                 " doublings (P_sum = " + std::to_string(s.p_sum()) + ")");
        }
    }
    const double tol = opt.bisection_tolerance * s.p_sum();
    int it = 0;
    for (; it < opt.bisection_max_iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = s.f(mid);
        if (fm <= 0.0) {
            hi = mid;
            if (-fm <= tol) break;
        } else {
            lo = mid;
        }
    }
    out.epsilon = hi;
    out.W = s.precoders(hi);
    out.iterations = it;
    return out;
}

/// f_BS = sum ||W_k||^2 - P_BS, f_ITS = sum ||kappa Phi G W_k||^2 - P_hat.
struct ConstraintValues {
    double f_bs = 0.0;
    double f_its = 0.0;
};

inline ConstraintValues constraint_values(const PrecoderProblem& pr, const PrecoderSet& w) {
    return {bs_power(w) - pr.p_bs, pr.its_constrained ? its_power_of(pr, w) - pr.p_its : 0.0};
}

/// One projected subgradient step on (lambda, mu).
inline DualState subgradient_duals(const DualState& d, const ConstraintValues& f, double step,
                                   bool its_constrained = true) {
    DualState n = d;
    n.lambda = std::max(0.0, d.lambda + step * f.f_bs);
    n.mu = its_constrained ? std::max(0.0, d.mu + step * f.f_its) : 0.0;
    return n;
}

struct DualTraceRow {
    int p;
    double lambda;
    double mu;
    double f_bs;
    double f_its;
};

struct PrecoderResult {
    PrecoderSet W;
    DualState dual;             // multipliers of the raw constraints
    DualState normalized_dual;  // iterate of the budget-normalized loop; pass as `start` to warm-start
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<DualTraceRow> trace;
};

/// Largest feasible scaling t W that minimizes v along the ray through W.
inline PrecoderSet scale_to_feasible(const PrecoderProblem& pr, const PrecoderSet& w) {
    const double bs = bs_power(w);
    double tmax = bs > pr.p_bs ? std::sqrt(pr.p_bs / bs) : 1.0;
    if (pr.its_constrained) {
        const double its = its_power_of(pr, w);
        if (pr.p_its <= 0.0)
            tmax = its > 0.0 ? 0.0 : tmax;
        else if (its > pr.p_its)
            tmax = std::min(tmax, std::sqrt(pr.p_its / its));
    }
    double q = 0.0;
    double r = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        q += (w[k].adjoint() * pr.Q * w[k]).trace().real();
        r += (pr.B[k].adjoint() * w[k]).trace().real();
    }
    double t = tmax;
    if (q > 0.0) t = std::clamp(r / q, 0.0, tmax);
    else if (r <= 0.0) t = 0.0;
    PrecoderSet out = w;
    for (auto& wk : out) wk *= t;
    return out;
}

inline bool precoder_feasible(const PrecoderProblem& pr, const PrecoderSet& w, double rel_tol) {
    if (bs_power(w) > pr.p_bs * (1.0 + rel_tol)) return false;
    if (!pr.its_constrained) return true;
    return its_power_of(pr, w) <= std::max(pr.p_its, 0.0) * (1.0 + rel_tol) + 1e-300;
}

/// Dual-based W update. `entry` (if feasible) is kept as a candidate so the
/// returned objective never exceeds v(entry).
inline PrecoderResult solve_precoder(const PrecoderProblem& pr, const SolverOptions& opt,
                                     const PrecoderSet* entry = nullptr, bool record_trace = false,
                                     std::optional<DualState> start = std::nullopt) {
    PrecoderResult best;
    best.objective = std::numeric_limits<double>::infinity();
    auto offer = [&](const PrecoderSet& w) {
        const double v = precoder_objective(pr, w);
        if (v < best.objective) {
            best.objective = v;
            best.W = w;
        }
    };
    if (entry && precoder_feasible(pr, *entry, opt.feasibility_tolerance)) offer(*entry);
    if (best.W.empty()) {
        PrecoderSet zero;
        for (const auto& b : pr.B) zero.push_back(cmat::Zero(b.rows(), b.cols()));
        offer(zero);
    }

    // Duals are iterated on the budget-normalized constraints bs/P_BS - 1 and
    // its/P_hat - 1; d holds the equivalent multipliers of the raw constraints.
    const double its_scale = pr.its_constrained && pr.p_its > 0.0 ? pr.p_its : 1.0;
    DualState nd = start.value_or(DualState{opt.dual_lambda0, opt.dual_mu0, 0.0});
    if (!pr.its_constrained) nd.mu = 0.0;
    auto raw = [&](const DualState& n) { return DualState{n.lambda / pr.p_bs, n.mu / its_scale, n.epsilon}; };
    const double xi0 = opt.subgradient_step0 > 0.0 ? opt.subgradient_step0 : 1.0 / (1.0 + pr.p_bs);
    double v_prev = std::numeric_limits<double>::quiet_NaN();
    DualState d = raw(nd);
    int p = 1;
    for (; p <= opt.dual_max_iterations; ++p) {
        d = raw(nd);
        const EpsilonResult e = bisect_epsilon(pr, d, opt);
        d.epsilon = nd.epsilon = e.epsilon;
        const ConstraintValues f = constraint_values(pr, e.W);
        offer(scale_to_feasible(pr, e.W));
        const double v = precoder_objective(pr, e.W);
        if (record_trace) best.trace.push_back({p, d.lambda, d.mu, f.f_bs, f.f_its});

        const ConstraintValues fn{f.f_bs / pr.p_bs, f.f_its / its_scale};
        const DualState next = subgradient_duals(nd, fn, xi0 / std::sqrt(static_cast<double>(p)), pr.its_constrained);
        const bool duals_still = std::abs(next.lambda - nd.lambda) <= opt.subgradient_tolerance &&
                                 std::abs(next.mu - nd.mu) <= opt.subgradient_tolerance;
        const bool objective_still =
            std::isfinite(v_prev) && std::abs(v - v_prev) / (1.0 + std::abs(v)) <= opt.dual_objective_tolerance;
        v_prev = v;
        if (duals_still && objective_still) {
            best.converged = true;
            break;
        }
        nd = next;
    }
    best.dual = d;
    best.normalized_dual = nd;
    best.iterations = std::min(p, opt.dual_max_iterations);
    return best;
}

inline void write_dual_trace_csv(const std::vector<DualTraceRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open dual trace '" + path + "' for writing");
    out.precision(17);
    out << "p,lambda,mu,f_pbs,f_pits\n";
    for (const auto& r : rows) out << r.p << ',' << r.lambda << ',' << r.mu << ',' << r.f_bs << ',' << r.f_its << '\n';
    if (!out) throw IoError("write failed for dual trace '" + path + "'");
}

}  // namespace aits
