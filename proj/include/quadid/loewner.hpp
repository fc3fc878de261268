#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "system.hpp"

namespace quadid {

struct DataPoint {
    cd s;
    cd h;
};

struct LoewnerPencil {
    CVec mu, lambda;
    CVec V;
    Eigen::RowVectorXcd W;
    CMat L, Ls;
    bool is_real = false;
};

struct RealizedLinear {
    int r = 0;
    Mat Ehat, Ahat;
    Vec Bhat;
    RowVec Chat;
    Vec singular_values;

    // Descriptor absorbed, Q = 0.
    QuadraticSystem system() const {
        Eigen::PartialPivLU<Mat> lu(Ehat);
        QuadraticSystem s;
        s.A = lu.solve(Ahat);
        s.B = lu.solve(Bhat);
        s.C = Chat;
        s.Q = Mat::Zero(r, r * r);
        s.x0 = Vec::Zero(r);
        return s;
    }
};

enum class SplitMode { interleaved, block };

namespace detail {

inline bool is_conj(cd a, cd b, double tol) { return std::abs(a - std::conj(b)) <= tol * std::max(1.0, std::abs(a)); }

// Groups of one real point or a conjugate pair (positive imaginary part first).
inline std::vector<std::vector<DataPoint>> conjugate_groups(const std::vector<DataPoint>& pts) {
    std::vector<bool> used(pts.size(), false);
    std::vector<std::vector<DataPoint>> groups;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        if (pts[i].s.imag() == 0.0) {
            groups.push_back({pts[i]});
            continue;
        }
        std::size_t partner = pts.size();
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (!used[j] && is_conj(pts[i].s, pts[j].s, 1e-14)) {
                partner = j;
                break;
            }
        if (partner == pts.size()) {
            groups.push_back({pts[i]});
            continue;
        }
        used[partner] = true;
        DataPoint a = pts[i], b = pts[partner];
        if (a.s.imag() < 0) std::swap(a, b);
        groups.push_back({a, b});
    }
    return groups;
}

}  // namespace detail

// Adds the conjugate partner (s*, h*) of every point that lacks one.
inline std::vector<DataPoint> conjugate_closure(const std::vector<DataPoint>& pts) {
    std::vector<DataPoint> out = pts;
    for (const auto& p : pts) {
        if (p.s.imag() == 0.0) continue;
        bool found = std::any_of(pts.begin(), pts.end(), [&](const DataPoint& q) { return detail::is_conj(p.s, q.s, 1e-14); });
        if (!found) out.push_back({std::conj(p.s), std::conj(p.h)});
    }
    return out;
}

inline std::pair<std::vector<DataPoint>, std::vector<DataPoint>> partition(const std::vector<DataPoint>& pts,
                                                                           SplitMode mode = SplitMode::interleaved) {
    if (pts.size() < 2) throw Error("need at least two samples to partition");
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (pts[i].s == pts[j].s) throw Error("duplicate sample point");
    auto groups = detail::conjugate_groups(pts);
    std::stable_sort(groups.begin(), groups.end(),
                     [](const auto& a, const auto& b) { return std::abs(a[0].s.imag()) < std::abs(b[0].s.imag()); });
    std::vector<DataPoint> left, right;
    const std::size_t half = (groups.size() + 1) / 2;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        bool to_left = mode == SplitMode::interleaved ? g % 2 == 0 : g < half;
        auto& side = to_left ? left : right;
        side.insert(side.end(), groups[g].begin(), groups[g].end());
    }
    return {left, right};
}

inline LoewnerPencil build_pencil(const std::vector<DataPoint>& left, const std::vector<DataPoint>& right) {
    const Eigen::Index nl = static_cast<Eigen::Index>(left.size()), nr = static_cast<Eigen::Index>(right.size());
    LoewnerPencil p;
    p.mu.resize(nl);
    p.V.resize(nl);
    p.lambda.resize(nr);
    p.W.resize(nr);
    for (Eigen::Index i = 0; i < nl; ++i) {
        p.mu(i) = left[i].s;
        p.V(i) = left[i].h;
    }
    for (Eigen::Index j = 0; j < nr; ++j) {
        p.lambda(j) = right[j].s;
        p.W(j) = right[j].h;
    }
    p.L.resize(nl, nr);
    p.Ls.resize(nl, nr);
    for (Eigen::Index i = 0; i < nl; ++i)
        for (Eigen::Index j = 0; j < nr; ++j) {
            const cd d = p.mu(i) - p.lambda(j);
            if (d == 0.0) throw Error("left and right sample points collide");
            p.L(i, j) = (p.V(i) - p.W(j)) / d;
            p.Ls(i, j) = (p.mu(i) * p.V(i) - p.lambda(j) * p.W(j)) / d;
        }
    return p;
}

namespace detail {

// Unitary block transform for one side: 1 for real points, [1 j; 1 -j]/sqrt(2) per conjugate pair.
inline CMat realify_block(const CVec& pts, const CVec& vals) {
    const Eigen::Index n = pts.size();
    CMat J = CMat::Zero(n, n);
    const double h = 1.0 / std::sqrt(2.0);
    for (Eigen::Index i = 0; i < n;) {
        if (pts(i).imag() == 0.0) {
            if (std::abs(vals(i).imag()) > 1e-12 * std::max(1.0, std::abs(vals(i))))
                throw Error("real sample point carries a complex value");
            J(i, i) = 1.0;
            ++i;
            continue;
        }
        if (i + 1 >= n || !is_conj(pts(i), pts(i + 1), 1e-14) || pts(i).imag() < 0)
            throw Error("data are not conjugate-closed (expected adjacent pairs s, conj(s))");
        const double vs = std::max(1.0, std::abs(vals(i)));
        if (std::abs(vals(i) - std::conj(vals(i + 1))) > 1e-10 * vs) throw Error("values violate H(conj s) = conj H(s)");
        J(i, i) = h;
        J(i, i + 1) = cd(0, h);
        J(i + 1, i) = h;
        J(i + 1, i + 1) = cd(0, -h);
        i += 2;
    }
    return J;
}

}  // namespace detail

inline LoewnerPencil realify(const LoewnerPencil& p) {
    if (p.is_real) return p;
    const CMat Jl = detail::realify_block(p.mu, p.V);
    const CMat Jr = detail::realify_block(p.lambda, p.W.transpose());
    LoewnerPencil out = p;
    const CMat L = Jl.adjoint() * p.L * Jr;
    const CMat Ls = Jl.adjoint() * p.Ls * Jr;
    const CVec V = Jl.adjoint() * p.V;
    const Eigen::RowVectorXcd W = p.W * Jr;
    const double scale = std::max({L.cwiseAbs().maxCoeff(), Ls.cwiseAbs().maxCoeff(), V.cwiseAbs().maxCoeff(),
                                   W.cwiseAbs().maxCoeff(), 1e-300});
    const double resid = std::max({L.imag().cwiseAbs().maxCoeff(), Ls.imag().cwiseAbs().maxCoeff(),
                                   V.imag().cwiseAbs().maxCoeff(), W.imag().cwiseAbs().maxCoeff()});
    if (resid > 1e-8 * scale) throw Error("realified pencil has a significant imaginary part");
    out.L = L.real().cast<cd>();
    out.Ls = Ls.real().cast<cd>();
    out.V = V.real().cast<cd>();
    out.W = W.real().cast<cd>();
    out.is_real = true;
    return out;
}

struct OrderResult {
    int r;
    Vec singular_values;  // normalized by the largest
};

inline OrderResult reveal_order(const LoewnerPencil& p, double tol = 1e-9) {
    CMat stack(p.L.rows(), 2 * p.L.cols());
    stack << p.L, p.Ls;
    Eigen::BDCSVD<CMat> svd(stack);
    Vec sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return {0, sv};
    sv /= sv(0);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++r;
    return {r, sv};
}

inline RealizedLinear realize(const LoewnerPencil& p, int r) {
    if (!p.is_real) throw Error("realize expects a realified pencil");
    const Mat L = p.L.real(), Ls = p.Ls.real();
    const Vec V = p.V.real();
    const RowVec W = p.W.real();
    const int maxr = static_cast<int>(std::min(L.rows(), L.cols()));
    if (r < 1 || r > maxr) throw Error("requested order exceeds pencil size");
    Mat row(L.rows(), 2 * L.cols());
    row << L, Ls;
    Mat col(2 * L.rows(), L.cols());
    col << L, Ls;
    Eigen::BDCSVD<Mat> sr(row, Eigen::ComputeThinU);
    Eigen::BDCSVD<Mat> sc(col, Eigen::ComputeThinV);
    const Mat Y = sr.matrixU().leftCols(r);
    const Mat X = sc.matrixV().leftCols(r);
    RealizedLinear out;
    out.r = r;
    out.Ehat = -Y.transpose() * L * X;
    out.Ahat = -Y.transpose() * Ls * X;
    out.Bhat = Y.transpose() * V;
    out.Chat = W * X;
    Vec sv = sr.singularValues();
    out.singular_values = sv / sv(0);
    Eigen::FullPivLU<Mat> lu(out.Ehat);
    if (!lu.isInvertible()) throw Error("realized E is singular at the chosen order");
    return out;
}

// Transfer function of a realization, (sE - A)^{-1} form.
inline cd realized_h1(const RealizedLinear& m, cd s) {
    CMat P = s * m.Ehat.cast<cd>() - m.Ahat.cast<cd>();
    Eigen::PartialPivLU<CMat> lu(P);
    if (!(lu.rcond() > 1e-14)) throw SingularResolventError(s);
    return m.Chat.cast<cd>().dot(lu.solve(m.Bhat.cast<cd>()));
}

// Least-squares solve of C e^{A t_k} x0 = y_k for an absorbed linear model.
inline Vec infer_x0_linear(const QuadraticSystem& model, const std::vector<std::pair<double, double>>& transient,
                           double max_cond = 1e12) {
    const Eigen::Index r = model.n();
    if (static_cast<Eigen::Index>(transient.size()) < r) throw Error("need at least r transient samples");
    Mat M(transient.size(), r);
    Vec y(transient.size());
    for (std::size_t k = 0; k < transient.size(); ++k) {
        Mat e = (model.A * transient[k].first).exp();
        M.row(k) = model.C * e;
        y(k) = transient[k].second;
    }
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& sv = svd.singularValues();
    if (!(sv(r - 1) > 0.0) || sv(0) / sv(r - 1) > max_cond) throw IllConditionedError("collocation matrix for x0 is ill-conditioned");
    return svd.solve(y);
}

inline Vec infer_x0_linear(const RealizedLinear& model, const std::vector<std::pair<double, double>>& transient) {
    return infer_x0_linear(model.system(), transient);
}

}  // namespace quadid
