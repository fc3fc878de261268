#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "kron.hpp"

namespace quadid {

// F(lambda) = W (lambda kron lambda) + Z lambda + S.
struct QveProblem {
    Mat W;
    Mat Z;
    Vec S;

    Eigen::Index m() const { return Z.cols(); }

    Vec residual(const Vec& l) const { return W * kron_vec(l, l) + Z * l + S; }

    Mat jacobian(const Vec& l) const {
        const Eigen::Index m = Z.cols();
        Mat J = Z + quad_left(W, l);
        for (Eigen::Index b = 0; b < m; ++b) J.col(b) += W.middleCols(b * m, m) * l;
        return J;
    }
};

struct NewtonOptions {
    double eta = 1e-8;
    double gamma0 = 1e-10;
    int max_iter = 100;
    double diverge_at = 1e12;
};

struct NewtonResult {
    Vec lambda;
    std::vector<double> history;
    double residual = 0.0;
    bool converged = false;
    bool stagnated = false;
    int iterations = 0;
    std::string stop;
};

inline NewtonResult newton_qve(const QveProblem& p, const Vec& l0, const NewtonOptions& opt = {}) {
    if (l0.size() != p.m()) throw DimensionError("seed has wrong length");
    NewtonResult out;
    Vec l = l0;
    Vec best = l;
    double best_res = INFINITY;
    for (int it = 0;; ++it) {
        const Vec F = p.residual(l);
        const double res = F.norm();
        out.history.push_back(res);
        if (!std::isfinite(res) || res > opt.diverge_at) {
            out.lambda = best;
            out.residual = best_res;
            out.stop = "diverged";
            out.iterations = it;
            throw ConvergenceError("Newton iteration diverged", {out.history});
        }
        if (res < best_res) {
            best_res = res;
            best = l;
        }
        if (res <= opt.gamma0) {
            out.converged = true;
            out.stop = "converged";
            out.iterations = it;
            break;
        }
        const std::size_t h = out.history.size();
        if (h > 5) {
            const double prev = out.history[h - 6];
            if (std::abs(prev - res) <= 1e-14 * prev) {
                out.stagnated = true;
                out.stop = "stagnated";
                out.iterations = it;
                break;
            }
        }
        if (it >= opt.max_iter) {
            out.stop = "max_iter";
            out.iterations = it;
            break;
        }
        const Mat J = p.jacobian(l);
        Vec step;
        bool done = false;
        if (J.rows() == J.cols()) {
            Eigen::PartialPivLU<Mat> lu(J);
            if (lu.rcond() > opt.eta) {
                step = lu.solve(F);
                done = true;
            }
        }
        if (!done) {
            Eigen::BDCSVD<Mat> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
            svd.setThreshold(opt.eta);
            step = svd.solve(F);
        }
        l -= step;
    }
    out.lambda = best;
    out.residual = best_res;
    return out;
}

struct MultiStartResult {
    NewtonResult best;
    std::vector<NewtonResult> runs;  // diverged runs carry only their history
    std::vector<Vec> seeds;
};

// Least-squares solution with the products l_i l_j treated as independent unknowns.
inline Vec lifted_seed(const QveProblem& p) {
    const Eigen::Index m = p.m();
    Mat L(p.W.rows(), m * (m + 1) / 2 + m);
    Eigen::Index c = 0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i; j < m; ++j) {
            L.col(c++) = i == j ? Vec(p.W.col(i * m + i)) : Vec(p.W.col(i * m + j) + p.W.col(j * m + i));
        }
    L.rightCols(m) = p.Z;
    const Vec x = Eigen::CompleteOrthogonalDecomposition<Mat>(L).solve(-p.S);
    return x.tail(m);
}

// Seeds: zero first, then `extra`, then unit-normal draws.
inline MultiStartResult newton_multistart(const QveProblem& p, int seeds, std::mt19937_64& rng, const NewtonOptions& opt = {},
                                          const std::vector<Vec>& extra = {}) {
    MultiStartResult out;
    std::normal_distribution<double> nd(0.0, 1.0);
    bool have = false;
    std::vector<Vec> starts{Vec::Zero(p.m())};
    for (const Vec& e : extra)
        if (e.size() == p.m() && e.allFinite()) starts.push_back(e);
    const int fixed = static_cast<int>(starts.size());
    for (int k = 0; k < std::max(1, seeds) + fixed - 1; ++k) {
        Vec l0 = k < fixed ? starts[k] : Vec(p.m());
        if (k >= fixed)
            for (Eigen::Index i = 0; i < l0.size(); ++i) l0(i) = nd(rng);
        out.seeds.push_back(l0);
        try {
            NewtonResult r = newton_qve(p, l0, opt);
            if (!have || r.residual < out.best.residual) {
                out.best = r;
                have = true;
            }
            out.runs.push_back(std::move(r));
        } catch (const ConvergenceError& e) {
            NewtonResult r;
            r.history = e.histories().front();
            r.stop = "diverged";
            r.residual = INFINITY;
            out.runs.push_back(std::move(r));
        }
    }
    if (!have) {
        std::vector<std::vector<double>> hs;
        for (const auto& r : out.runs) hs.push_back(r.history);
        throw ConvergenceError("Newton failed from every seed", hs);
    }
    return out;
}

// Left-projection onto the leading m left singular vectors of [W Z S].
inline QveProblem project_qve(const QveProblem& p, Eigen::Index m) {
    const Eigen::Index k = p.W.rows();
    if (m >= k) return p;
    Mat K(k, p.W.cols() + p.Z.cols() + 1);
    K << p.W, p.Z, p.S;
    Eigen::BDCSVD<Mat> svd(K, Eigen::ComputeThinU);
    const Mat U = svd.matrixU().leftCols(m);
    return {U.transpose() * p.W, U.transpose() * p.Z, U.transpose() * p.S};
}

}  // namespace quadid
