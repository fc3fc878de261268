#pragma once

#include <random>
#include <utility>
#include <vector>

#include "qve.hpp"
#include "system.hpp"

namespace quadid {

struct AffineFamily {
    Vec p0;
    Mat P;  // orthonormal basis of ker(C), r x (r-1)

    Vec point(const Vec& l) const { return p0 + P * l; }
};

inline AffineFamily parameterize_equilibrium(const RowVec& C, double alpha) {
    const Eigen::Index r = C.size();
    const double c2 = C.squaredNorm();
    if (c2 == 0.0) {
        if (alpha != 0.0) throw Error("C is zero but the DC value is not");
        return {Vec::Zero(r), Mat::Identity(r, r)};
    }
    AffineFamily f;
    f.p0 = C.transpose() * (alpha / c2);
    Eigen::HouseholderQR<Mat> qr(Mat(C.transpose()));
    Mat Qf = qr.householderQ() * Mat::Identity(r, r);
    f.P = Qf.rightCols(r - 1);
    return f;
}

struct EquilibriumSolution {
    Vec x_e;
    double dc = 0.0;
    Mat A_global;
    double residual = 0.0;
    NewtonResult newton;
};

// Solves A x - Q(x kron x) = 0 on the affine family: x marks the original origin seen from the local equilibrium.
inline QveProblem equilibrium_qve(const Mat& A, const Mat& Q, const AffineFamily& f) {
    const Eigen::Index r = A.rows(), m = f.P.cols();
    QveProblem p;
    p.S = A * f.p0 - Q * kron_vec(f.p0, f.p0);
    p.Z.resize(r, m);
    p.W.resize(r, m * m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Vec pi = f.P.col(i);
        p.Z.col(i) = A * pi - Q * kron_vec(f.p0, pi) - Q * kron_vec(pi, f.p0);
        for (Eigen::Index j = 0; j < m; ++j) p.W.col(i * m + j) = -Q * kron_vec(pi, Vec(f.P.col(j)));
    }
    return p;
}

inline EquilibriumSolution solve_equilibrium(const Mat& A, const Mat& Q, const AffineFamily& f, int seeds = 5,
                                             std::uint64_t seed = 1, NewtonOptions opt = {1e-12, 1e-13, 100, 1e12}) {
    EquilibriumSolution sol;
    if (f.P.cols() == 0) {
        sol.x_e = f.p0;
    } else {
        const QveProblem p = equilibrium_qve(A, Q, f);
        std::mt19937_64 rng(seed);
        // A wide seed spread: equilibria of identified models can sit far from the origin.
        MultiStartResult best = newton_multistart(p, seeds, rng, opt);
        std::normal_distribution<double> nd(0.0, 1.0);
        for (double scale : {1e2, 1e4}) {
            if (best.best.residual <= opt.gamma0 * std::max(1.0, p.S.norm())) break;
            for (int k = 0; k < seeds; ++k) {
                Vec l0(p.m());
                for (Eigen::Index i = 0; i < l0.size(); ++i) l0(i) = scale * nd(rng);
                try {
                    NewtonResult r = newton_qve(p, l0, opt);
                    if (r.residual < best.best.residual) best.best = r;
                } catch (const ConvergenceError&) {
                }
            }
        }
        sol.newton = best.best;
        sol.x_e = f.point(best.best.lambda);
    }
    sol.dc = 0.0;
    sol.residual = (A * sol.x_e - Q * kron_vec(sol.x_e, sol.x_e)).norm();
    sol.A_global = A - 2.0 * quad_left(Q, sol.x_e);
    return sol;
}

inline EquilibriumSolution solve_equilibrium(const QuadraticSystem& local, double dc, int seeds = 5, std::uint64_t seed = 1) {
    const QuadraticSystem s = absorb_descriptor(local);
    EquilibriumSolution sol = solve_equilibrium(s.A, s.Q, parameterize_equilibrium(s.C, dc), seeds, seed);
    sol.dc = s.C.dot(sol.x_e);
    return sol;
}

// Global model in coordinates centred at the original origin.
inline QuadraticSystem globalize(const QuadraticSystem& local, const EquilibriumSolution& eq) {
    QuadraticSystem g = absorb_descriptor(local);
    g.A = eq.A_global;
    g.x0 = Vec::Zero(g.n());
    return g;
}

struct X0Options {
    int seeds = 10;
    std::uint64_t seed = 1;
    double tol = 1e-13;
    int max_iter = 100;
};

namespace detail {

// Forward-Euler rollout; returns outputs at steps 0..K and dy/dlambda rows.
inline std::pair<Vec, Mat> euler_outputs(const QuadraticSystem& s, const AffineFamily& f, const Vec& l, double dt, int K) {
    const Eigen::Index r = s.n(), m = f.P.cols();
    Vec x = f.point(l);
    Mat J = f.P;
    Vec y(K + 1);
    Mat dy(K + 1, m);
    const Mat I = Mat::Identity(r, r);
    for (int k = 0;; ++k) {
        y(k) = s.C.dot(x);
        dy.row(k) = s.C * J;
        if (k == K) break;
        const Mat step = I + dt * (s.A + quad_left(s.Q, x) + quad_left(s.Q, x));
        const Vec xn = x + dt * (s.A * x + s.Q * kron_vec(x, x));
        J = step * J;
        x = xn;
        if (!x.allFinite()) break;
    }
    return {y, dy};
}

}  // namespace detail

// transient: samples y_k on the uniform grid t_k = k*dt (k = 0..K), u = 0.
inline Vec infer_x0_quadratic(const QuadraticSystem& model, const std::vector<double>& transient, double y0, double dt,
                              const X0Options& opt = {}) {
    const QuadraticSystem s = absorb_descriptor(model);
    const Eigen::Index r = s.n();
    const int K = static_cast<int>(transient.size()) - 1;
    if (K + 1 < r) throw Error("need at least r transient samples");
    const AffineFamily f = parameterize_equilibrium(s.C, y0);
    const Eigen::Index m = f.P.cols();
    if (m == 0) return f.p0;
    Vec target(K + 1);
    for (int k = 0; k <= K; ++k) target(k) = transient[k];
    const double scale = std::max(1.0, target.cwiseAbs().maxCoeff());

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Vec best_l = Vec::Zero(m);
    double best = INFINITY;
    std::vector<std::vector<double>> histories;
    for (int trial = 0; trial < std::max(1, opt.seeds); ++trial) {
        Vec l = Vec::Zero(m);
        if (trial > 0)
            for (Eigen::Index i = 0; i < m; ++i) l(i) = nd(rng) * std::pow(10.0, std::max(0, trial - 4) / 2);
        std::vector<double> hist;
        for (int it = 0; it < opt.max_iter; ++it) {
            auto [y, dy] = detail::euler_outputs(s, f, l, dt, K);
            const Vec res = (y - target).tail(K);
            const double nr = res.allFinite() ? res.norm() : INFINITY;
            hist.push_back(nr);
            if (!std::isfinite(nr)) break;
            if (nr < best) {
                best = nr;
                best_l = l;
            }
            if (nr <= opt.tol * scale) break;
            const Mat Jt = dy.bottomRows(K);
            Vec step = Jt.completeOrthogonalDecomposition().solve(res);
            // Backtracking keeps the Gauss-Newton iteration from leaving the basin.
            double t = 1.0;
            for (int b = 0; b < 30; ++b, t *= 0.5) {
                auto [y2, dy2] = detail::euler_outputs(s, f, Vec(l - t * step), dt, K);
                const Vec r2 = (y2 - target).tail(K);
                if (r2.allFinite() && r2.norm() < nr) break;
            }
            l -= t * step;
        }
        histories.push_back(hist);
        if (best <= opt.tol * scale) break;
    }
    if (!std::isfinite(best)) throw ConvergenceError("initial-condition solve failed from every seed", histories);
    return f.point(best_l);
}

}  // namespace quadid
