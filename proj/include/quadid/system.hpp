#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "errors.hpp"
#include "kron.hpp"

namespace quadid {

// xdot = A x + Q (x kron x) + B u, y = C x. An empty E means identity.
struct QuadraticSystem {
    Mat E;
    Mat A;
    Mat Q;
    Vec B;
    RowVec C;
    Vec x0;

    Eigen::Index n() const { return A.rows(); }
    bool has_E() const { return E.size() > 0; }
};

inline Mat symmetrize_quadratic(const Mat& Qraw) {
    const Eigen::Index n = Qraw.rows();
    if (Qraw.cols() != n * n) throw DimensionError("quadratic operator must be n x n^2");
    Mat Q(n, n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            Q.col(i * n + j) = 0.5 * (Qraw.col(i * n + j) + Qraw.col(j * n + i));
    return Q;
}

inline double quadratic_asymmetry(const Mat& Q) {
    const Eigen::Index n = Q.rows();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            worst = std::max(worst, (Q.col(i * n + j) - Q.col(j * n + i)).cwiseAbs().maxCoeff());
    return worst;
}

inline void validate(const QuadraticSystem& s) {
    const Eigen::Index n = s.A.rows();
    if (n == 0 || s.A.cols() != n) throw DimensionError("A must be square and nonempty");
    if (s.Q.rows() != n || s.Q.cols() != n * n) throw DimensionError("Q must be n x n^2");
    if (s.B.size() != n) throw DimensionError("B must have n entries");
    if (s.C.size() != n) throw DimensionError("C must have n entries");
    if (s.x0.size() != n) throw DimensionError("x0 must have n entries");
    if (s.has_E()) {
        if (s.E.rows() != n || s.E.cols() != n) throw DimensionError("E must be n x n");
        Eigen::JacobiSVD<Mat> svd(s.E);
        const auto& sv = svd.singularValues();
        if (!(sv(n - 1) > 0.0) || sv(0) / sv(n - 1) > 1e14) throw Error("E is singular or numerically singular");
    }
    const double scale = std::max(1.0, s.Q.cwiseAbs().maxCoeff());
    if (quadratic_asymmetry(s.Q) > 1e-12 * scale) throw Error("Q is not Kronecker-symmetric; symmetrize it first");
}

inline QuadraticSystem make_system(Mat A, Mat Q, Vec B, RowVec C, Vec x0 = Vec(), Mat E = Mat()) {
    QuadraticSystem s{std::move(E), std::move(A), std::move(Q), std::move(B), std::move(C), std::move(x0)};
    if (s.x0.size() == 0) s.x0 = Vec::Zero(s.A.rows());
    validate(s);
    return s;
}

inline QuadraticSystem absorb_descriptor(const QuadraticSystem& s) {
    if (!s.has_E()) return s;
    Eigen::PartialPivLU<Mat> lu(s.E);
    QuadraticSystem out = s;
    out.E = Mat();
    out.A = lu.solve(s.A);
    out.Q = lu.solve(s.Q);
    out.B = lu.solve(s.B);
    return out;
}

inline Vec equilibrium_residual(const QuadraticSystem& s, const Vec& x) {
    return s.A * x + s.Q * kron_vec(x, x);
}

struct ShiftResult {
    QuadraticSystem system;
    double dc;
    Vec residual;
};

inline ShiftResult shift_to_equilibrium(const QuadraticSystem& s, const Vec& xe) {
    if (xe.size() != s.n()) throw DimensionError("equilibrium has wrong dimension");
    if (!xe.allFinite()) throw Error("equilibrium is not finite");
    ShiftResult r{s, s.C.dot(xe), equilibrium_residual(s, xe)};
    r.system.A = s.A + 2.0 * quad_left(s.Q, xe);
    r.system.x0 = s.x0 - xe;
    return r;
}

struct MarkovInvariants {
    double cb, cab, cqbb;
};

inline MarkovInvariants markov_invariants(const QuadraticSystem& sys) {
    const QuadraticSystem s = absorb_descriptor(sys);
    return {s.C.dot(s.B), s.C.dot(s.A * s.B), s.C.dot(s.Q * kron_vec(s.B, s.B))};
}

inline QuadraticSystem apply_transform(const QuadraticSystem& s, const Mat& Psi) {
    const Eigen::Index n = s.n();
    if (Psi.rows() != n || Psi.cols() != n) throw DimensionError("transform must be n x n");
    Eigen::FullPivLU<Mat> lu(Psi);
    if (!lu.isInvertible()) throw Error("transform is singular");
    QuadraticSystem out;
    out.A = lu.solve(s.A * Psi);
    out.Q = lu.solve(s.Q * kron(Psi, Psi));
    out.B = lu.solve(s.B);
    out.C = s.C * Psi;
    out.x0 = lu.solve(s.x0);
    if (s.has_E()) out.E = lu.solve(s.E * Psi);
    return out;
}

}  // namespace quadid
