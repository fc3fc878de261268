#pragma once

#include <random>
#include <vector>

#include "system.hpp"

namespace quadid {

// Rows C A^k, k = 0..n-1.
inline Mat observability_matrix(const QuadraticSystem& sys) {
    const QuadraticSystem s = absorb_descriptor(sys);
    const Eigen::Index n = s.n();
    Mat O(n, n);
    RowVec row = s.C;
    for (Eigen::Index k = 0; k < n; ++k) {
        O.row(k) = row;
        row = row * s.A;
    }
    return O;
}

// Psi with apply_transform(sys1, Psi) equal to sys2 for similar realizations.
inline Mat observability_transform(const QuadraticSystem& sys1, const QuadraticSystem& sys2, double max_cond = 1e13) {
    if (sys1.n() != sys2.n()) throw DimensionError("systems have different orders");
    const Mat O1 = observability_matrix(sys1), O2 = observability_matrix(sys2);
    Eigen::JacobiSVD<Mat> svd(O1);
    const Vec& sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > 0.0) || sv(0) / sv(sv.size() - 1) > max_cond) throw Error("realization is not observable");
    return O1.fullPivLu().solve(O2);
}

struct QbcTriplet {
    Mat Q;
    Vec B;
    RowVec C;
};

inline QbcTriplet triplet(const QuadraticSystem& sys) {
    const QuadraticSystem s = absorb_descriptor(sys);
    return {s.Q, s.B, s.C};
}

struct AlignmentResult {
    Mat T;      // apply_transform(sys1, T) matches sys2 in (Q, B, C)
    Mat T_inv;
    double residual = 0.0;             // ||X Q2 - Q1 (X kron X)||_F
    double constraint_residual = 0.0;  // ||X B2 - B1|| + ||C1 X - C2||
    int iterations = 0;
    std::vector<double> history;
    bool converged = false;
};

// F(X) = X U - Q (X kron X) with U = Q2 and Q = Q1, plus X B2 = B1 and C1 X = C2.
inline Vec qbc_residual(const Mat& X, const QbcTriplet& t1, const QbcTriplet& t2) {
    const Eigen::Index n = X.rows();
    const Mat F = X * t2.Q - t1.Q * kron(X, X);
    Vec out(n * n * n + 2 * n);
    out.head(n * n * n) = Eigen::Map<const Vec>(F.data(), F.size());
    out.segment(n * n * n, n) = X * t2.B - t1.B;
    out.tail(n) = (t1.C * X - t2.C).transpose();
    return out;
}

// Exact derivative: N U - Q (X kron N) - Q (N kron X).
inline Mat frechet(const Mat& X, const Mat& N, const Mat& Q, const Mat& U) { return N * U - Q * kron(X, N) - Q * kron(N, X); }

// Stacked (n^3 + 2n) x n^2 Jacobian in column-major vec(N).
inline Mat qbc_jacobian(const Mat& X, const QbcTriplet& t1, const QbcTriplet& t2) {
    const Eigen::Index n = X.rows();
    Mat J(n * n * n + 2 * n, n * n);
    for (Eigen::Index b = 0; b < n; ++b)
        for (Eigen::Index a = 0; a < n; ++a) {
            Mat N = Mat::Zero(n, n);
            N(a, b) = 1.0;
            const Mat D = frechet(X, N, t1.Q, t2.Q);
            auto col = J.col(b * n + a);
            col.head(n * n * n) = Eigen::Map<const Vec>(D.data(), D.size());
            col.segment(n * n * n, n) = N * t2.B;
            col.tail(n) = (t1.C * N).transpose();
        }
    return J;
}

// One Newton step: minimum-norm least-squares correction of the stacked system.
inline Mat frechet_step(const Mat& X, const QbcTriplet& t1, const QbcTriplet& t2) {
    const Eigen::Index n = X.rows();
    const Mat J = qbc_jacobian(X, t1, t2);
    const Vec R = qbc_residual(X, t1, t2);
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(J);
    if (cod.rank() < n * n) throw Error("Newton step system is rank deficient");
    const Vec step = cod.solve(R);
    return X - Eigen::Map<const Mat>(step.data(), n, n);
}

struct QbcOptions {
    double gamma0 = 1e-9;
    int max_iter = 200;
    int restarts = 5;
    std::uint64_t seed = 1;
};

namespace detail {

inline AlignmentResult qbc_run(Mat X, const QbcTriplet& t1, const QbcTriplet& t2, const QbcOptions& opt) {
    const Eigen::Index n = X.rows();
    AlignmentResult out;
    double res = qbc_residual(X, t1, t2).norm();
    out.history.push_back(res);
    for (int it = 0; it < opt.max_iter && res > opt.gamma0; ++it) {
        const Mat J = qbc_jacobian(X, t1, t2);
        const Vec R = qbc_residual(X, t1, t2);
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(J);
        const Vec step = cod.solve(R);
        const Mat N = Eigen::Map<const Mat>(step.data(), n, n);
        // Backtracking on the stacked residual norm.
        double t = 1.0, trial = INFINITY;
        for (int b = 0; b < 40; ++b, t *= 0.5) {
            trial = qbc_residual(X - t * N, t1, t2).norm();
            if (std::isfinite(trial) && trial < res) break;
        }
        out.iterations = it + 1;
        if (!(trial < res)) break;
        X -= t * N;
        res = trial;
        out.history.push_back(res);
    }
    out.T = X;
    return out;
}

}  // namespace detail

inline AlignmentResult align_qbc_newton(const QbcTriplet& t1, const QbcTriplet& t2, const Mat& T0, const QbcOptions& opt = {}) {
    const Eigen::Index n = t1.Q.rows();
    if (t2.Q.rows() != n || T0.rows() != n || T0.cols() != n) throw DimensionError("triplets and seed must share the order");
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    AlignmentResult best;
    double best_res = INFINITY;
    std::vector<std::vector<double>> hist;
    for (int k = 0; k < std::max(1, opt.restarts); ++k) {
        Mat X = T0;
        if (k > 0)
            for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = nd(rng);
        AlignmentResult r = detail::qbc_run(X, t1, t2, opt);
        hist.push_back(r.history);
        const double fin = r.history.back();
        Eigen::FullPivLU<Mat> lu(r.T);
        if (lu.isInvertible() && fin < best_res) {
            best_res = fin;
            best = r;
        }
        if (best_res <= opt.gamma0) break;
    }
    if (!(best_res <= opt.gamma0)) throw ConvergenceError("alignment Newton failed from every seed", hist);
    best.T_inv = best.T.inverse();
    const Mat F = best.T * t2.Q - t1.Q * kron(best.T, best.T);
    best.residual = F.norm();
    best.constraint_residual = (best.T * t2.B - t1.B).norm() + (t1.C * best.T - t2.C).norm();
    best.converged = true;
    return best;
}

}  // namespace quadid
