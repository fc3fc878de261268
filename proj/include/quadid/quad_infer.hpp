#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gfrf.hpp"
#include "loewner.hpp"
#include "measurements.hpp"
#include "qve.hpp"

namespace quadid {

struct H2System {
    Mat M;  // rows [Re; Im] of the complex sample rows, columns in symmetric coordinates
    Vec rhs;
    int r = 0;
};

struct ParameterizedQuadratic {
    Mat Q0;
    std::vector<Mat> basis;
    int m = 0;
    int rank_sym = 0;
    int rank = 0;  // counted with the r^2(r-1)/2 symmetry constraints, out of r^3
    Vec singular_values;

    Mat combine(const Vec& l) const {
        Mat Q = Q0;
        for (int i = 0; i < m; ++i) Q += l(i) * basis[i];
        return Q;
    }
};

inline H2System assemble_h2_ls(const QuadraticSystem& lin, const std::vector<GfrfSample>& samples) {
    const int r = static_cast<int>(lin.n());
    const auto pairs = sym_pairs(r);
    const int d = static_cast<int>(pairs.size());
    const Eigen::Index k = static_cast<Eigen::Index>(samples.size());
    GfrfEvaluator ev(lin);
    Eigen::MatrixXcd M(k, r * d);
    CVec rhs(k);
    const double h = 1.0 / std::sqrt(2.0);
    for (Eigen::Index row = 0; row < k; ++row) {
        const auto& g = samples[row];
        if (g.order != 2) throw Error("assemble_h2_ls expects order-2 samples");
        const Eigen::RowVectorXcd o = ev.o2(g.s[0], g.s[1]);
        const CVec a = ev.g1(g.s[0]), b = ev.g1(g.s[1]);
        const CVec K = kron_vec(a, b) + kron_vec(b, a);
        for (int p = 0; p < r; ++p)
            for (int c = 0; c < d; ++c) {
                auto [i, j] = pairs[c];
                const cd kij = i == j ? K(i * r + i) : h * (K(i * r + j) + K(j * r + i));
                M(row, p * d + c) = o(p) * kij;
            }
        rhs(row) = g.value;
    }
    H2System out;
    out.r = r;
    out.M.resize(2 * k, r * d);
    out.M << M.real(), M.imag();
    out.rhs.resize(2 * k);
    out.rhs << rhs.real(), rhs.imag();
    return out;
}

inline ParameterizedQuadratic solve_with_nullspace(const H2System& sys, double eta = 1e-8) {
    const int r = sys.r;
    const Eigen::Index dsym = sys.M.cols();
    ParameterizedQuadratic pq;
    Eigen::BDCSVD<Mat> svd(sys.M, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const Vec& sv = svd.singularValues();
    pq.singular_values = sv.size() > 0 && sv(0) > 0 ? Vec(sv / sv(0)) : sv;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(0) > 0 && sv(i) > eta * sv(0)) ++rank;
    Vec p = Vec::Zero(dsym);
    for (int i = 0; i < rank; ++i) p += svd.matrixV().col(i) * (svd.matrixU().col(i).dot(sys.rhs) / sv(i));
    pq.Q0 = sym_to_full(p, r);
    for (Eigen::Index i = rank; i < dsym; ++i) pq.basis.push_back(sym_to_full(svd.matrixV().col(i), r));
    pq.m = static_cast<int>(dsym - rank);
    pq.rank_sym = rank;
    pq.rank = rank + r * r * (r - 1) / 2;
    return pq;
}

// Rows [Re; Im] of A_ij = h3x(Qi,Qj), B_i = h3x(Qi,Q0)+h3x(Q0,Qi), C = h3x(Q0,Q0) - H3, each sample scaled to unit size.
inline QveProblem assemble_qve(const QuadraticSystem& lin, const ParameterizedQuadratic& pq, const std::vector<GfrfSample>& samples) {
    const int m = pq.m;
    if (m < 1) throw Error("assemble_qve needs a nonempty null-space basis");
    const Eigen::Index k = static_cast<Eigen::Index>(samples.size());
    GfrfEvaluator ev(lin);
    std::vector<QuadAction> acts;
    acts.emplace_back(pq.Q0);
    for (const auto& b : pq.basis) acts.emplace_back(b);
    std::vector<Mat> mats{pq.Q0};
    mats.insert(mats.end(), pq.basis.begin(), pq.basis.end());

    Eigen::MatrixXcd W(k, m * m), Z(k, m);
    CVec S(k);
    std::vector<Eigen::RowVectorXcd> rows(m + 1);
    std::vector<CVec> r3(m + 1);
    for (Eigen::Index s = 0; s < k; ++s) {
        const auto& g = samples[s];
        if (g.order != 3) throw Error("assemble_qve expects order-3 samples");
        const Eigen::RowVectorXcd o = ev.o3(g.s[0], g.s[1], g.s[2]);
        for (int a = 0; a <= m; ++a) {
            rows[a] = o * mats[a].cast<cd>();
            r3[a] = ev.r3(acts[a], g.s[0], g.s[1], g.s[2]);
        }
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) W(s, i * m + j) = (rows[i + 1] * r3[j + 1])(0);
            Z(s, i) = (rows[i + 1] * r3[0])(0) + (rows[0] * r3[i + 1])(0);
        }
        const cd c0 = (rows[0] * r3[0])(0);
        S(s) = c0 - g.value;
        // Row equilibration: kernel magnitudes span many decades across a grid.
        const double scale = std::max({W.row(s).cwiseAbs().maxCoeff(), Z.row(s).cwiseAbs().maxCoeff(), std::abs(c0),
                                       std::abs(g.value)});
        if (scale > 0.0) {
            W.row(s) /= scale;
            Z.row(s) /= scale;
            S(s) /= scale;
        }
    }
    QveProblem p;
    p.W.resize(2 * k, m * m);
    p.W << W.real(), W.imag();
    p.Z.resize(2 * k, m);
    p.Z << Z.real(), Z.imag();
    p.S.resize(2 * k);
    p.S << S.real(), S.imag();
    return p;
}

struct InferOptions {
    std::optional<int> order;  // fixed order; otherwise revealed with order_tol
    double order_tol = 1e-9;
    SplitMode split = SplitMode::interleaved;
    double eta_h2 = 1e-8;
    NewtonOptions newton{1e-8, 1e-10, 100, 1e12};
    int seeds = 5;
    bool project = true;  // project when rows exceed unknowns
    bool lifted_seed = true;
    std::uint64_t seed = 1;
};


struct StageRecord {
    std::string name;
    double seconds = 0.0;
    std::map<std::string, double> scalars;
};

struct InferenceResult {
    QuadraticSystem model;     // (A, Q, B, C) with x0 = 0
    QuadraticSystem model_q0;  // same linear part, Q = Q0
    RealizedLinear linear;
    ParameterizedQuadratic pq;
    std::optional<MultiStartResult> newton;
    double dc = 0.0;
    bool h3_used = false;
    double jacobian_min_sv = 0.0;
    std::vector<StageRecord> stages;
};

namespace detail {

class StageTimer {
public:
    StageTimer(std::vector<StageRecord>& log, std::string name) : log_(log), t0_(std::chrono::steady_clock::now()) {
        log_.push_back({std::move(name), 0.0, {}});
        idx_ = log_.size() - 1;
    }
    ~StageTimer() { log_[idx_].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }
    void set(const std::string& k, double v) { log_[idx_].scalars[k] = v; }

private:
    std::vector<StageRecord>& log_;
    std::size_t idx_;
    std::chrono::steady_clock::time_point t0_;
};

}  // namespace detail

inline RealizedLinear realize_from_h1(const std::vector<GfrfSample>& h1, const InferOptions& opt) {
    std::vector<DataPoint> pts;
    for (const auto& g : h1) pts.push_back({g.s[0], g.value});
    pts = conjugate_closure(pts);
    auto [left, right] = partition(pts, opt.split);
    LoewnerPencil pen = realify(build_pencil(left, right));
    OrderResult ord = reveal_order(pen, opt.order_tol);
    const int r = opt.order ? *opt.order : ord.r;
    RealizedLinear lin = realize(pen, r);
    lin.singular_values = ord.singular_values;
    return lin;
}

inline InferenceResult infer_quadratic(const MeasurementSet& ms, const InferOptions& opt = {}) {
    if (ms.h1().empty()) throw Error("no H1 samples");
    if (ms.h2().empty()) throw Error("no H2 samples");
    InferenceResult res;
    res.dc = ms.dc;
    {
        detail::StageTimer st(res.stages, "realize");
        res.linear = realize_from_h1(ms.h1(), opt);
        st.set("r", res.linear.r);
        if (res.linear.r < res.linear.singular_values.size()) st.set("sigma_next", res.linear.singular_values(res.linear.r));
    }
    const QuadraticSystem lin = res.linear.system();
    {
        detail::StageTimer st(res.stages, "h2_least_squares");
        H2System h2 = assemble_h2_ls(lin, ms.h2());
        res.pq = solve_with_nullspace(h2, opt.eta_h2);
        st.set("rows", double(h2.M.rows()));
        st.set("rank", res.pq.rank);
        st.set("m", res.pq.m);
    }
    res.model_q0 = lin;
    res.model_q0.Q = symmetrize_quadratic(res.pq.Q0);
    res.model = res.model_q0;
    if (ms.h3().empty() || res.pq.m == 0) return res;

    detail::StageTimer st(res.stages, "h3_newton");
    const QveProblem full = assemble_qve(lin, res.pq, ms.h3());
    st.set("rows", double(full.W.rows()));
    const bool projected = opt.project && full.W.rows() > full.m();
    const QveProblem p = projected ? project_qve(full, full.m()) : full;
    std::mt19937_64 rng(opt.seed);
    std::vector<Vec> extra;
    if (opt.lifted_seed) extra.push_back(lifted_seed(full));
    MultiStartResult ms_res = newton_multistart(p, opt.seeds, rng, opt.newton, extra);
    if (projected) {
        // Roots of the projected system need not solve the full one: polish each on the full system.
        double best_full = INFINITY;
        for (auto& run : ms_res.runs) {
            if (!std::isfinite(run.residual)) continue;
            try {
                NewtonResult pol = newton_qve(full, run.lambda, opt.newton);
                if (pol.residual < full.residual(run.lambda).norm()) run = pol;
            } catch (const ConvergenceError&) {
            }
            run.residual = full.residual(run.lambda).norm();
            if (run.residual < best_full) {
                best_full = run.residual;
                ms_res.best = run;
            }
        }
        // Every projected root was spurious: restart on the full system.
        if (!(best_full <= opt.newton.gamma0)) {
            std::mt19937_64 rng_full(opt.seed + 1);
            try {
                MultiStartResult direct = newton_multistart(full, opt.seeds, rng_full, opt.newton, extra);
                st.set("full_restart", 1.0);
                if (direct.best.residual < best_full) {
                    direct.runs.insert(direct.runs.begin(), ms_res.runs.begin(), ms_res.runs.end());
                    direct.seeds.insert(direct.seeds.begin(), ms_res.seeds.begin(), ms_res.seeds.end());
                    ms_res = std::move(direct);
                }
            } catch (const ConvergenceError&) {
            }
        }
    }
    const Vec& l = ms_res.best.lambda;
    res.model.Q = symmetrize_quadratic(res.pq.combine(l));
    res.h3_used = true;
    Eigen::BDCSVD<Mat> js(full.jacobian(l));
    res.jacobian_min_sv = js.singularValues().size() ? js.singularValues().tail(1)(0) : 0.0;
    st.set("residual", ms_res.best.residual);
    st.set("iterations", ms_res.best.iterations);
    res.newton = std::move(ms_res);
    return res;
}

}  // namespace quadid
