#pragma once

// Kronecker-product helpers. The quadratic operator Q is n x n^2 with column
// index i*n+j multiplying x_i*x_j.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <vector>

#include "errors.hpp"

namespace quadid {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

template <typename DA, typename DB>
auto kron(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
    using S = typename Eigen::ScalarBinaryOpTraits<typename DA::Scalar, typename DB::Scalar>::ReturnType;
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b.template cast<S>();
    return out;
}

template <typename DA, typename DB>
auto kron_vec(const Eigen::MatrixBase<DA>& u, const Eigen::MatrixBase<DB>& v) {
    using S = typename Eigen::ScalarBinaryOpTraits<typename DA::Scalar, typename DB::Scalar>::ReturnType;
    Eigen::Matrix<S, Eigen::Dynamic, 1> out(u.size() * v.size());
    for (Eigen::Index i = 0; i < u.size(); ++i)
        out.segment(i * v.size(), v.size()) = u(i) * v.template cast<S>();
    return out;
}

// Q(X kron I) for an n-vector x: the n x n matrix with columns sum_a x_a Q(:, a*n+b).
template <typename DQ, typename DX>
auto quad_left(const Eigen::MatrixBase<DQ>& Q, const Eigen::MatrixBase<DX>& x) {
    using S = typename Eigen::ScalarBinaryOpTraits<typename DQ::Scalar, typename DX::Scalar>::ReturnType;
    const Eigen::Index n = x.size();
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> out = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>::Zero(Q.rows(), n);
    for (Eigen::Index a = 0; a < n; ++a)
        out += x(a) * Q.middleCols(a * n, n).template cast<S>();
    return out;
}

// Sparse list of quadratic nonzeros, used where n is large (Burgers FOM).
struct QuadAction {
    struct Term {
        Eigen::Index row, a, b;
        double q;
    };
    Eigen::Index n = 0;
    std::vector<Term> terms;

    QuadAction() = default;
    explicit QuadAction(const Mat& Q) : n(Q.rows()) {
        if (Q.cols() != n * n) throw DimensionError("quadratic operator must be n x n^2");
        for (Eigen::Index c = 0; c < Q.cols(); ++c)
            for (Eigen::Index r = 0; r < n; ++r)
                if (Q(r, c) != 0.0) terms.push_back({r, c / n, c % n, Q(r, c)});
    }

    template <typename S>
    Eigen::Matrix<S, Eigen::Dynamic, 1> apply(const Eigen::Matrix<S, Eigen::Dynamic, 1>& u,
                                              const Eigen::Matrix<S, Eigen::Dynamic, 1>& v) const {
        Eigen::Matrix<S, Eigen::Dynamic, 1> out = Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(n);
        for (const auto& t : terms) out(t.row) += t.q * u(t.a) * v(t.b);
        return out;
    }
};

// Symmetric coordinates of a row of Q: pairs (i<=j); off-diagonal coordinate p
// represents entries (i,j),(j,i) each equal to p/sqrt(2), so the map is an isometry.
inline std::vector<std::pair<int, int>> sym_pairs(int n) {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) out.emplace_back(i, j);
    return out;
}

inline Mat sym_to_full(const Vec& p, int n) {
    const auto pairs = sym_pairs(n);
    const Eigen::Index d = static_cast<Eigen::Index>(pairs.size());
    if (p.size() != n * d) throw DimensionError("symmetric coordinate vector has wrong length");
    Mat Q = Mat::Zero(n, n * n);
    const double h = 1.0 / std::sqrt(2.0);
    for (int r = 0; r < n; ++r)
        for (Eigen::Index k = 0; k < d; ++k) {
            auto [i, j] = pairs[k];
            double v = p(r * d + k);
            if (i == j) {
                Q(r, i * n + i) = v;
            } else {
                Q(r, i * n + j) = h * v;
                Q(r, j * n + i) = h * v;
            }
        }
    return Q;
}

inline Vec full_to_sym(const Mat& Q) {
    const int n = static_cast<int>(Q.rows());
    const auto pairs = sym_pairs(n);
    const Eigen::Index d = static_cast<Eigen::Index>(pairs.size());
    Vec p(n * d);
    const double h = 1.0 / std::sqrt(2.0);
    for (int r = 0; r < n; ++r)
        for (Eigen::Index k = 0; k < d; ++k) {
            auto [i, j] = pairs[k];
            p(r * d + k) = i == j ? Q(r, i * n + i) : h * (Q(r, i * n + j) + Q(r, j * n + i));
        }
    return p;
}

}  // namespace quadid
