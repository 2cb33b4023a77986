#pragma once

// Test oracles. These only depend on types.hpp and plain Eigen arithmetic; they
// rebuild every quantity they need from the raw channels and never call the
// solver modules they are used to check.

#include "aits/types.hpp"

#include <Eigen/Eigenvalues>

#include <functional>
#include <limits>
#include <vector>

namespace aits::verify {

struct OracleResult {
    double value = 0.0;
    std::vector<double> argument;
    double resolution = 0.0;
    double library_value = std::numeric_limits<double>::quiet_NaN();
    double tolerance = 0.0;
    bool agrees = false;

    /// Verdict for a maximization oracle: library >= oracle - tolerance.
    OracleResult& compare_max(double library, double tol) {
        library_value = library;
        tolerance = tol;
        agrees = library >= value - tol;
        return *this;
    }

    /// Verdict for two-sided agreement: |library - oracle| <= tolerance.
    OracleResult& compare_equal(double library, double tol) {
        library_value = library;
        tolerance = tol;
        agrees = std::abs(library - value) <= tol;
        return *this;
    }
};

// ---------------------------------------------------------------------------
// 1-D grids

struct GridMin {
    double argmin = 0.0;
    double min = std::numeric_limits<double>::infinity();
    long samples = 0;
};

/// Evaluates fn on lo, lo + step, ..., hi (hi always included).
inline GridMin grid_minimize_1d(const std::function<double(double)>& fn, double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw Error("grid needs step > 0 and hi >= lo");
    GridMin g;
    const auto count = static_cast<long>(std::floor((hi - lo) / step));
    for (long i = 0; i <= count + 1; ++i) {
        const double x = i <= count ? lo + static_cast<double>(i) * step : hi;
        const double v = fn(x);
        ++g.samples;
        if (v < g.min) {
            g.min = v;
            g.argmin = x;
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// scalar system: M_t = M_r = N = s = K = 1

struct ScalarInstance {
    cdouble g{1.0, 0.0};
    cdouble h{1.0, 0.0};
    double kappa = 1.0;
    double ue_noise = 1.0;
    double its_noise = 0.0;
    double p_bs = 1.0;
    double p_amp = 1.0;  // amplification budget including amplified noise
    double weight = 1.0;
    double a_max = 10.0;
};

struct GridResolution {
    int w_steps = 200;
    int theta_steps = 64;
    int a_steps = 200;
};

/// alpha log2(1 + kappa^2 |h|^2 a^2 |g|^2 |w|^2 / (kappa^2 delta^2 |h|^2 a^2 + sigma^2)).
inline double scalar_wsr(const ScalarInstance& s, cdouble w, double a, double theta) {
    const cdouble eff = s.kappa * std::conj(s.h) * std::polar(a, theta) * s.g;
    const double signal = std::norm(eff * w);
    const double noise = s.kappa * s.kappa * s.its_noise * std::norm(s.h) * a * a + s.ue_noise;
    return s.weight * std::log2(1.0 + signal / noise);
}

/// Exhaustive search of |w| in [0, sqrt(P_BS)], w phase and ITS phase in [0, 2 pi),
/// a in [0, a_max] under a^2 kappa^2 (|g w|^2 + delta^2) <= P_amp.
inline OracleResult grid_oracle_scalar_system(const ScalarInstance& s, const GridResolution& r) {
    if (r.w_steps < 2 || r.theta_steps < 1 || r.a_steps < 2) throw Error("grid resolution too coarse");
    OracleResult out;
    out.resolution = std::max(std::sqrt(std::max(s.p_bs, 0.0)) / r.w_steps, s.a_max / r.a_steps);
    out.value = -std::numeric_limits<double>::infinity();
    long feasible = 0;
    const double wmax = std::sqrt(std::max(s.p_bs, 0.0));
    for (int i = 0; i <= r.w_steps; ++i) {
        const double wm = wmax * i / r.w_steps;
        for (int j = 0; j <= r.a_steps; ++j) {
            const double a = s.a_max * j / r.a_steps;
            const double its = a * a * s.kappa * s.kappa * (std::norm(s.g) * wm * wm + s.its_noise);
            if (its > s.p_amp) continue;
            for (int k = 0; k < r.theta_steps; ++k) {
                const double th = kTwoPi * k / r.theta_steps;
                ++feasible;
                const double v = scalar_wsr(s, cdouble(wm, 0.0), a, th);
                if (v > out.value) {
                    out.value = v;
                    out.argument = {wm, th, a};
                }
            }
        }
    }
    if (feasible < 2) throw Error("grid resolution too coarse: feasible box unsampled");
    return out;
}

// ---------------------------------------------------------------------------
// projected gradient on the convex precoder subproblem

struct P31Instance {
    cmat G;                  // N x M_t
    std::vector<cmat> H;     // N x M_r
    cvec phi;                // ITS coefficients
    std::vector<cmat> U;     // M_r x s
    std::vector<cmat> F;     // s x s
    std::vector<double> weights;
    double kappa = 1.0;
    double its_noise = 0.0;
    double p_bs = 1.0;
    double p_amp = 1.0;
    bool its_constrained = true;
};

struct P31Data {
    cmat Q;     // M_t x M_t
    cmat B;     // M_t x (K s), users side by side
    cmat M;     // kappa^2 G^H |Phi|^2 G
    double p_hat = 0.0;
    std::vector<int> cols;  // streams per user
};

inline P31Data p31_data(const P31Instance& in) {
    P31Data d;
    const Eigen::Index mt = in.G.cols();
    d.Q = cmat::Zero(mt, mt);
    int total = 0;
    for (const auto& u : in.U) total += static_cast<int>(u.cols());
    d.B.resize(mt, total);
    for (std::size_t k = 0, c = 0; k < in.H.size(); ++k) {
        cmat heff(in.H[k].cols(), mt);  // kappa H^H diag(phi) G, row by row
        for (Eigen::Index r = 0; r < heff.rows(); ++r) {
            for (Eigen::Index m = 0; m < mt; ++m) {
                cdouble acc = 0.0;
                for (Eigen::Index n = 0; n < in.G.rows(); ++n) acc += std::conj(in.H[k](n, r)) * in.phi(n) * in.G(n, m);
                heff(r, m) = in.kappa * acc;
            }
        }
        const cmat x = heff.adjoint() * in.U[k];
        d.Q += in.weights[k] * x * in.F[k] * x.adjoint();
        d.B.middleCols(static_cast<Eigen::Index>(c), in.U[k].cols()) = in.weights[k] * x * in.F[k];
        d.cols.push_back(static_cast<int>(in.U[k].cols()));
        c += static_cast<std::size_t>(in.U[k].cols());
    }
    d.Q = 0.5 * (d.Q + d.Q.adjoint());
    d.M = cmat::Zero(mt, mt);
    for (Eigen::Index n = 0; n < in.G.rows(); ++n) {
        d.M += in.kappa * in.kappa * std::norm(in.phi(n)) * in.G.row(n).adjoint() * in.G.row(n);
    }
    d.M = 0.5 * (d.M + d.M.adjoint());
    d.p_hat = in.p_amp - in.its_noise * in.kappa * in.kappa * in.phi.squaredNorm();
    return d;
}

inline double p31_objective(const P31Data& d, const cmat& z) {
    return (z.adjoint() * d.Q * z).trace().real() - 2.0 * (d.B.adjoint() * z).trace().real();
}

/// Euclidean projection onto {X : ||X||^2 <= p, Tr(X^H M X) <= c}. The KKT point is
/// X = ((1 + alpha) I + beta M)^{-1} Y; alpha is found by bisection for every beta and
/// beta by bisection on the ellipsoid residual, which is monotone along alpha*(beta).
class IntersectionProjector {
public:
    IntersectionProjector(const cmat& m, double p, double c, bool with_ellipsoid)
        : eig_(m), p_(p), c_(c), with_ellipsoid_(with_ellipsoid) {
        g_ = eig_.eigenvalues().cwiseMax(0.0);
        const double gmax = g_.size() ? g_.maxCoeff() : 0.0;
        for (Eigen::Index j = 0; j < g_.size(); ++j) {
            if (g_(j) <= 1e-13 * gmax) g_(j) = 0.0;
        }
    }

    cmat operator()(const cmat& y) const {
        if (!with_ellipsoid_) return scale_ball(y);
        cmat yt = eig_.eigenvectors().adjoint() * y;
        if (c_ <= 0.0) {
            for (Eigen::Index j = 0; j < g_.size(); ++j) {
                if (g_(j) > 0.0) yt.row(j).setZero();
            }
            return eig_.eigenvectors() * scale_ball(yt);
        }
        const rvec r = yt.rowwise().squaredNorm();
        double beta = 0.0;
        double alpha = alpha_for(r, 0.0);
        if (ellipsoid(r, alpha, 0.0) > c_) {
            double lo = 0.0, hi = 1.0;
            while (ellipsoid(r, alpha_for(r, hi), hi) > c_) {
                lo = hi;
                hi *= 2.0;
                if (hi > 1e300) throw Error("projection bracket on beta failed");
            }
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                (ellipsoid(r, alpha_for(r, mid), mid) > c_ ? lo : hi) = mid;
            }
            beta = hi;
            alpha = alpha_for(r, beta);
        }
        for (Eigen::Index j = 0; j < g_.size(); ++j) yt.row(j) /= (1.0 + alpha + beta * g_(j));
        return eig_.eigenvectors() * yt;
    }

private:
    cmat scale_ball(const cmat& y) const {
        const double n2 = y.squaredNorm();
        if (n2 <= p_) return y;
        return p_ > 0.0 ? cmat(y * std::sqrt(p_ / n2)) : cmat(cmat::Zero(y.rows(), y.cols()));
    }

    double ball(const rvec& r, double alpha, double beta) const {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < r.size(); ++j) {
            const double den = 1.0 + alpha + beta * g_(j);
            acc += r(j) / (den * den);
        }
        return acc;
    }

    double ellipsoid(const rvec& r, double alpha, double beta) const {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < r.size(); ++j) {
            const double den = 1.0 + alpha + beta * g_(j);
            acc += g_(j) * r(j) / (den * den);
        }
        return acc;
    }

    double alpha_for(const rvec& r, double beta) const {
        if (ball(r, 0.0, beta) <= p_) return 0.0;
        if (p_ <= 0.0) return std::numeric_limits<double>::infinity();
        double lo = 0.0, hi = 1.0;
        while (ball(r, hi, beta) > p_) {
            lo = hi;
            hi *= 2.0;
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            (ball(r, mid, beta) > p_ ? lo : hi) = mid;
        }
        return hi;
    }

    Eigen::SelfAdjointEigenSolver<cmat> eig_;
    rvec g_;
    double p_;
    double c_;
    bool with_ellipsoid_;
};

struct P31Solution {
    std::vector<cmat> W;
    double objective = 0.0;
    double gradient_map_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// FISTA with adaptive restart on the precoder subproblem.
inline P31Solution projected_gradient_p31(const P31Instance& in, double tol = 1e-8, int max_iterations = 200000) {
    const P31Data d = p31_data(in);
    const IntersectionProjector proj(d.M, in.p_bs, d.p_hat, in.its_constrained);
    const double qmax = Eigen::SelfAdjointEigenSolver<cmat>(d.Q, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double L = 2.0 * std::max(qmax, 1e-300);

    cmat z = proj(cmat::Zero(d.B.rows(), d.B.cols()));
    cmat y = z;
    double t = 1.0;
    double f = p31_objective(d, z);
    P31Solution s;
    for (int k = 1; k <= max_iterations; ++k) {
        const cmat grad = 2.0 * (d.Q * y - d.B);
        const cmat z_new = proj(y - grad / L);
        const double gm = L * (y - z_new).norm();
        const double f_new = p31_objective(d, z_new);
        s.iterations = k;
        s.gradient_map_norm = gm;
        if (gm <= tol) {
            z = z_new;
            f = f_new;
            s.converged = true;
            break;
        }
        if (f_new > f && t > 1.0) {  // restart momentum
            y = z;
            t = 1.0;
            continue;
        }
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = z_new + ((t - 1.0) / t_new) * (z_new - z);
        z = z_new;
        t = t_new;
        f = f_new;
    }
    s.objective = f;
    for (std::size_t k = 0, c = 0; k < d.cols.size(); ++k) {
        s.W.push_back(z.middleCols(static_cast<Eigen::Index>(c), d.cols[k]));
        c += static_cast<std::size_t>(d.cols[k]);
    }
    return s;
}

// ---------------------------------------------------------------------------
// finite differences

/// Central differences of fn along every coordinate of x; returns max |df/dx_i|.
inline double finite_diff_stationarity(const std::function<double(const rvec&)>& fn, const rvec& x, double step) {
    double worst = 0.0;
    rvec p = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        p(i) = x(i) + step;
        const double up = fn(p);
        p(i) = x(i) - step;
        const double down = fn(p);
        p(i) = x(i);
        worst = std::max(worst, std::abs(up - down) / (2.0 * step));
    }
    return worst;
}

/// Real coordinates (re, im interleaved, column-major) of a list of complex matrices.
inline rvec pack(const std::vector<cmat>& ms) {
    Eigen::Index n = 0;
    for (const auto& m : ms) n += 2 * m.size();
    rvec x(n);
    Eigen::Index i = 0;
    for (const auto& m : ms) {
        for (Eigen::Index j = 0; j < m.size(); ++j) {
            x(i++) = m(j).real();
            x(i++) = m(j).imag();
        }
    }
    return x;
}

inline std::vector<cmat> unpack(const rvec& x, const std::vector<cmat>& shape) {
    std::vector<cmat> out;
    Eigen::Index i = 0;
    for (const auto& m : shape) {
        cmat c(m.rows(), m.cols());
        for (Eigen::Index j = 0; j < c.size(); ++j, i += 2) c(j) = {x(i), x(i + 1)};
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace aits::verify
