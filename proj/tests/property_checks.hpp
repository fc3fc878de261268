#pragma once

#include <random>
#include <string>
#include <vector>

#include "quadid/repro.hpp"

namespace quadid::props {

struct Outcome {
    std::string name;
    double worst = 0.0;
    double bound = 0.0;
    bool pass = false;
    std::string detail;
};

inline Mat randn(std::mt19937_64& g, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> nd;
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = nd(g);
    return m;
}

inline cd rand_point(std::mt19937_64& g) {
    std::uniform_real_distribution<double> re(-1.0, 1.0), im(-5.0, 5.0);
    return cd(re(g), im(g));
}

// Eigenvalues of A shifted into [-margin - spread, -margin].
inline Mat stable_matrix(std::mt19937_64& g, int n, double margin = 0.5) {
    Mat A = randn(g, n, n);
    Eigen::EigenSolver<Mat> es(A, false);
    return A - (es.eigenvalues().real().maxCoeff() + margin) * Mat::Identity(n, n);
}

inline QuadraticSystem random_system(std::mt19937_64& g, int n, double qscale = 1.0) {
    return make_system(stable_matrix(g, n), qscale * symmetrize_quadratic(randn(g, n, n * n)), randn(g, n, 1), randn(g, 1, n));
}

// Perturbed identity with condition number at most 10.
inline Mat well_conditioned(std::mt19937_64& g, int n) {
    for (;;) {
        const Mat T = Mat::Identity(n, n) + 0.3 * randn(g, n, n);
        const Vec sv = Eigen::JacobiSVD<Mat>(T).singularValues();
        if (sv(0) <= 10.0 * sv(n - 1)) return T;
    }
}

inline double rel(cd a, cd b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

inline Outcome permutation_symmetry(std::uint64_t seed, int cases = 500) {
    std::mt19937_64 g(seed);
    std::uniform_int_distribution<int> dn(1, 6);
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        GfrfEvaluator ev(random_system(g, dn(g)));
        const cd a = rand_point(g), b = rand_point(g), d = rand_point(g);
        worst = std::max(worst, rel(ev.h2(a, b), ev.h2(b, a)));
        const cd h = ev.h3(a, b, d);
        for (auto [x, y, z] : {std::tuple{a, d, b}, {b, a, d}, {b, d, a}, {d, a, b}, {d, b, a}}) worst = std::max(worst, rel(h, ev.h3(x, y, z)));
    }
    return {"GFRF permutation symmetry (relative)", worst, 1e-13, worst <= 1e-13, std::to_string(cases) + " cases, n <= 6"};
}

inline Outcome cross_kernel_bilinearity(std::uint64_t seed, int cases = 100) {
    std::mt19937_64 g(seed);
    std::uniform_int_distribution<int> dn(1, 5);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        const int n = dn(g);
        QuadraticSystem lin = random_system(g, n);
        lin.Q.setZero();
        const Mat Q1 = randn(g, n, n * n), Q2 = randn(g, n, n * n), Qj = randn(g, n, n * n);
        const double a = nd(g), b = nd(g);
        const cd s1 = rand_point(g), s2 = rand_point(g), s3 = rand_point(g);
        const cd lhs_i = h3_cross(lin, a * Q1 + b * Q2, Qj, s1, s2, s3);
        const cd rhs_i = a * h3_cross(lin, Q1, Qj, s1, s2, s3) + b * h3_cross(lin, Q2, Qj, s1, s2, s3);
        const cd lhs_j = h3_cross(lin, Qj, a * Q1 + b * Q2, s1, s2, s3);
        const cd rhs_j = a * h3_cross(lin, Qj, Q1, s1, s2, s3) + b * h3_cross(lin, Qj, Q2, s1, s2, s3);
        const double scale = std::abs(a * h3_cross(lin, Q1, Qj, s1, s2, s3)) + std::abs(b * h3_cross(lin, Q2, Qj, s1, s2, s3)) +
                             std::abs(a * h3_cross(lin, Qj, Q1, s1, s2, s3)) + std::abs(b * h3_cross(lin, Qj, Q2, s1, s2, s3));
        worst = std::max(worst, (std::abs(lhs_i - rhs_i) + std::abs(lhs_j - rhs_j)) / scale);
    }
    return {"cross-kernel bilinearity (relative)", worst, 1e-12, worst <= 1e-12, std::to_string(cases) + " cases"};
}

inline Outcome conjugate_symmetry(std::uint64_t seed, int cases = 200) {
    std::mt19937_64 g(seed);
    std::uniform_int_distribution<int> dn(1, 6);
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        GfrfEvaluator ev(random_system(g, dn(g)));
        const cd a = rand_point(g), b = rand_point(g), d = rand_point(g);
        const auto cj = [](cd z) { return std::conj(z); };
        worst = std::max(worst, rel(ev.h1(cj(a)), cj(ev.h1(a))));
        worst = std::max(worst, rel(ev.h2(cj(a), cj(b)), cj(ev.h2(a, b))));
        worst = std::max(worst, rel(ev.h3(cj(a), cj(b), cj(d)), cj(ev.h3(a, b, d))));
    }
    return {"kernel conjugate symmetry (relative)", worst, 1e-13, worst <= 1e-13, std::to_string(cases) + " cases"};
}

// Revealed order equals the McMillan degree of a random real rational function with separated poles.
inline Outcome loewner_rank(std::uint64_t seed, int cases = 40) {
    std::mt19937_64 g(seed);
    std::uniform_int_distribution<int> dd(1, 8);
    std::uniform_real_distribution<double> jitter(0.9, 1.1), osc(0.5, 4.0);
    int wrong = 0;
    std::string detail;
    for (int c = 0; c < cases; ++c) {
        const int d = dd(g);
        Mat D = Mat::Zero(d, d);
        double mag = 0.2;
        for (int i = 0; i < d; mag *= 1.8) {
            const double re = -mag * jitter(g);
            if (i + 1 < d && g() % 2) {
                const double im = osc(g);
                D(i, i) = D(i + 1, i + 1) = re;
                D(i, i + 1) = im;
                D(i + 1, i) = -im;
                i += 2;
            } else {
                D(i, i) = re;
                ++i;
            }
        }
        const Mat V = well_conditioned(g, d);
        const QuadraticSystem s = make_system(V * D * V.inverse(), Mat::Zero(d, d * d), randn(g, d, 1), randn(g, 1, d));
        MeasurementSet ms;
        for (cd z : logspace_jw(-2, 1.5, 2 * d + 6)) ms.add({1, {z}, h1(s, z)});
        InferOptions io;
        io.order_tol = 1e-11;
        const RealizedLinear lin = realize_from_h1(ms.h1(), io);
        if (lin.r != d) {
            ++wrong;
            detail += " degree " + std::to_string(d) + " -> " + std::to_string(lin.r);
        }
    }
    return {"Loewner order equals degree (mismatches)", double(wrong), 0.0, wrong == 0, std::to_string(cases) + " functions, degree <= 8" + detail};
}

inline Outcome similarity_invariance(std::uint64_t seed, int cases = 100) {
    std::mt19937_64 g(seed);
    std::uniform_int_distribution<int> dn(1, 6);
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        const int n = dn(g);
        const QuadraticSystem s = random_system(g, n);
        const QuadraticSystem t = apply_transform(s, well_conditioned(g, n));
        const auto m1 = markov_invariants(s), m2 = markov_invariants(t);
        for (auto [x, y] : {std::pair{m1.cb, m2.cb}, {m1.cab, m2.cab}, {m1.cqbb, m2.cqbb}})
            worst = std::max(worst, std::abs(x - y) / std::max(1.0, std::abs(x)));
        GfrfEvaluator a(s), b(t);
        const cd p = rand_point(g), q = rand_point(g), r = rand_point(g);
        worst = std::max(worst, rel(a.h1(p), b.h1(p)));
        worst = std::max(worst, rel(a.h2(p, q), b.h2(p, q)));
        worst = std::max(worst, rel(a.h3(p, q, r), b.h3(p, q, r)));
    }
    return {"similarity invariance of Markov parameters and kernels", worst, 1e-10, worst <= 1e-10, std::to_string(cases) + " transforms"};
}

inline Outcome frechet_vs_fd(std::uint64_t seed, int cases = 50) {
    std::mt19937_64 g(seed);
    std::uniform_int_distribution<int> dn(1, 4);
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        const int n = dn(g);
        const Mat X = randn(g, n, n), N = randn(g, n, n), Q = randn(g, n, n * n), U = randn(g, n, n * n);
        const auto F = [&](const Mat& Y) { return Mat(Y * U - Q * kron(Y, Y)); };
        const double h = 1e-7;
        const Mat fd = (F(X + h * N) - F(X)) / h;
        const Mat d = frechet(X, N, Q, U);
        worst = std::max(worst, (fd - d).norm() / d.norm());
    }
    return {"Frechet derivative vs finite differences (h=1e-7)", worst, 1e-5, worst <= 1e-5, std::to_string(cases) + " cases"};
}

struct ClosureDraw {
    int r = 0;
    double error = INFINITY;
    bool ok = false;
    std::string failure;
};

inline FrequencyGrids closure_grids() {
    const auto ax2 = logspace_jw(-1.5, 1, 6), ax3 = logspace_jw(-1.5, 1, 4);
    return tensor_grids(logspace_jw(-2, 2, 40), ax2, ax3);
}

// Identification from exact kernels of one random minimal system, aligned to the truth.
inline ClosureDraw self_closure_draw(std::mt19937_64& g, int r, std::uint64_t newton_seed) {
    ClosureDraw d;
    d.r = r;
    QuadraticSystem s;
    for (;;) {
        s = random_system(g, r, 0.5);
        const Mat O = observability_matrix(s);
        Mat K(r, r);
        Vec v = s.B;
        for (int k = 0; k < r; ++k) {
            K.col(k) = v;
            v = s.A * v;
        }
        Eigen::JacobiSVD<Mat> so(O), sk(K);
        const auto cond = [](const Eigen::JacobiSVD<Mat>& sv) { return sv.singularValues()(0) / sv.singularValues().tail(1)(0); };
        if (cond(so) < 1e4 && cond(sk) < 1e4) break;
    }
    try {
        InferOptions io;
        io.order = r;
        io.seed = newton_seed;
        const InferenceResult res = infer_quadratic(sample_kernels(GfrfEvaluator(s), closure_grids()), io);
        const QuadraticSystem al = align_to(s, res.model);
        const double scale = std::max({1.0, max_abs(s.A), max_abs(s.Q), max_abs(s.B), max_abs(s.C)});
        d.error = operator_error(al, s) / scale;
        d.ok = d.error <= 1e-7;
        if (!d.ok) d.failure = "aligned error " + fmt(d.error);
    } catch (const Error& e) {
        d.failure = e.what();
    }
    return d;
}

inline Outcome self_closure(std::uint64_t seed, int draws = 20, std::vector<ClosureDraw>* out = nullptr) {
    std::mt19937_64 g(seed);
    int ok = 0;
    std::string detail;
    for (int i = 0; i < draws; ++i) {
        const ClosureDraw d = self_closure_draw(g, 2 + i % 2, seed + i);
        if (d.ok) ++ok;
        else
            detail += " [draw " + std::to_string(i) + ", r=" + std::to_string(d.r) + ": " + d.failure + "]";
        if (out) out->push_back(d);
    }
    const double rate = double(ok) / draws;
    return {"self-closure success rate (aligned error <= 1e-7)", rate, 0.9, rate >= 0.9, std::to_string(draws) + " draws" + detail};
}

inline std::vector<Outcome> all_properties(std::uint64_t seed) {
    return {permutation_symmetry(seed), cross_kernel_bilinearity(seed + 1), conjugate_symmetry(seed + 2), loewner_rank(seed + 3),
            similarity_invariance(seed + 4), frechet_vs_fd(seed + 5), self_closure(seed + 6)};
}

}  // namespace quadid::props
