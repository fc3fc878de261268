#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "quadid/alignment.hpp"
#include "quadid/bench.hpp"
#include "quadid/gfrf.hpp"
#include "quadid/loewner.hpp"
#include "quadid/simulate.hpp"

using namespace quadid;

namespace {

Mat random_mat(std::mt19937_64& g, int r, int c) {
    std::normal_distribution<double> nd;
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = nd(g);
    return m;
}

QuadraticSystem random_linear(std::mt19937_64& g, int n) {
    Mat A = random_mat(g, n, n);
    A -= (A.eigenvalues().real().maxCoeff() + 0.5) * Mat::Identity(n, n);
    return make_system(A, Mat::Zero(n, n * n), random_mat(g, n, 1), random_mat(g, 1, n));
}

std::vector<DataPoint> sample_h1(const QuadraticSystem& s, const std::vector<cd>& pts) {
    std::vector<DataPoint> out;
    for (cd z : pts) out.push_back({z, h1(s, z)});
    return out;
}

std::vector<cd> intro_points() {
    std::vector<cd> pts;
    for (int i = 1; i <= 6; ++i) pts.emplace_back(0.0, 2 * M_PI * 5 * i);
    return pts;
}

std::vector<cd> jw_points(std::mt19937_64& g, int count, double lo, double hi) {
    std::uniform_real_distribution<double> ud(lo, hi);
    std::vector<cd> pts;
    for (int i = 0; i < count; ++i) pts.emplace_back(0.0, std::pow(10.0, ud(g)));
    return pts;
}

RealizedLinear realize_points(const QuadraticSystem& s, const std::vector<cd>& pts, int r, SplitMode mode = SplitMode::interleaved) {
    auto data = conjugate_closure(sample_h1(s, pts));
    auto [l, rt] = partition(data, mode);
    return realize(realify(build_pencil(l, rt)), r);
}

std::vector<double> sorted_real_eigs(const RealizedLinear& m) {
    Eigen::GeneralizedEigenSolver<Mat> ges(m.Ahat, m.Ehat, false);
    std::vector<double> out;
    for (Eigen::Index i = 0; i < ges.eigenvalues().size(); ++i) out.push_back(ges.eigenvalues()(i).real());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST(Partition, BlockSplitIntro) {
    auto data = sample_h1(make_linear_intro(), intro_points());
    auto [l, r] = partition(data, SplitMode::block);
    ASSERT_EQ(l.size(), 3u);
    ASSERT_EQ(r.size(), 3u);
    for (int i = 0; i < 3; ++i) {
        EXPECT_DOUBLE_EQ(l[i].s.imag(), 2 * M_PI * 5 * (i + 1));
        EXPECT_DOUBLE_EQ(r[i].s.imag(), 2 * M_PI * 5 * (i + 4));
    }
}

TEST(Partition, TwoPointsAndDuplicates) {
    std::vector<DataPoint> d{{cd(1, 0), 1.0}, {cd(2, 0), 2.0}};
    auto [l, r] = partition(d);
    EXPECT_EQ(l.size(), 1u);
    EXPECT_EQ(r.size(), 1u);
    d.push_back({cd(1, 0), 3.0});
    EXPECT_THROW(partition(d), Error);
    EXPECT_THROW(partition({{cd(1, 0), 1.0}}), Error);
}

TEST(Partition, InterleavedKeepsConjugatesTogether) {
    std::mt19937_64 g(3);
    auto s = random_linear(g, 3);
    auto data = sample_h1(s, jw_points(g, 8, -1, 1));
    auto [l, r] = partition(data);
    EXPECT_EQ(l.size(), 4u);
    EXPECT_EQ(r.size(), 4u);
    for (auto& a : l)
        for (auto& b : r) EXPECT_NE(a.s, b.s);
    auto closed = conjugate_closure(data);
    EXPECT_EQ(closed.size(), 16u);
    auto [lc, rc] = partition(closed);
    for (std::size_t i = 0; i < lc.size(); i += 2) EXPECT_EQ(lc[i].s, std::conj(lc[i + 1].s));
    for (std::size_t i = 0; i < rc.size(); i += 2) EXPECT_EQ(rc[i].s, std::conj(rc[i + 1].s));
}

TEST(Pencil, HandArithmetic) {
    auto p = build_pencil({{cd(1, 0), cd(2, 0)}}, {{cd(3, 0), cd(4, 0)}});
    EXPECT_EQ(p.L(0, 0), cd(1, 0));
    EXPECT_EQ(p.Ls(0, 0), cd(5, 0));
    EXPECT_THROW(build_pencil({{cd(1, 0), 1.0}}, {{cd(1, 0), 2.0}}), Error);
}

TEST(Pencil, ConstantFunctionGivesZeroL) {
    std::vector<DataPoint> l, r;
    for (int i = 0; i < 4; ++i) {
        l.push_back({cd(i + 1, 0), 2.5});
        r.push_back({cd(-i - 1, 0.5), 2.5});
    }
    EXPECT_EQ(build_pencil(l, r).L.norm(), 0.0);
}

TEST(Pencil, FirstOrderRationalHasRankOne) {
    std::vector<DataPoint> l, r;
    for (int i = 0; i < 8; ++i) {
        cd a(0.3 * i, 1.0 + i), b(-0.2 * i, -2.0 - i);
        l.push_back({a, 1.0 / (a + 1.0)});
        r.push_back({b, 1.0 / (b + 1.0)});
    }
    Eigen::JacobiSVD<CMat> svd(build_pencil(l, r).L);
    const Vec sv = svd.singularValues() / svd.singularValues()(0);
    EXPECT_GT(sv(0), 0.5);
    EXPECT_LT(sv(1), 1e-13);
}

TEST(Realify, RealPointsUnchanged) {
    std::vector<DataPoint> l{{cd(1, 0), 0.5}, {cd(2, 0), 1.0 / 3}}, r{{cd(3, 0), 0.25}, {cd(4, 0), 0.2}};
    auto p = build_pencil(l, r);
    auto q = realify(p);
    EXPECT_TRUE(q.is_real);
    EXPECT_EQ((q.L - p.L).norm(), 0.0);
    EXPECT_EQ((q.Ls - p.Ls).norm(), 0.0);
}

TEST(Realify, RejectsOpenData) {
    auto s = make_linear_intro();
    auto [l, r] = partition(sample_h1(s, intro_points()));
    EXPECT_THROW(realify(build_pencil(l, r)), Error);
}

TEST(Realify, ImaginaryResidueVanishes) {
    std::mt19937_64 g(5);
    auto s = random_linear(g, 4);
    auto data = conjugate_closure(sample_h1(s, jw_points(g, 5, -1, 1)));
    auto [l, r] = partition(data);
    auto p = build_pencil(l, r);
    const CMat Jl = detail::realify_block(p.mu, p.V), Jr = detail::realify_block(p.lambda, p.W.transpose());
    const CMat L = Jl.adjoint() * p.L * Jr, Ls = Jl.adjoint() * p.Ls * Jr;
    const double scale = std::max(L.cwiseAbs().maxCoeff(), Ls.cwiseAbs().maxCoeff());
    EXPECT_LT(L.imag().cwiseAbs().maxCoeff(), 1e-13 * scale);
    EXPECT_LT(Ls.imag().cwiseAbs().maxCoeff(), 1e-13 * scale);
    EXPECT_LT((Jl.adjoint() * p.V).imag().cwiseAbs().maxCoeff(), 1e-13 * scale);
    EXPECT_LT((p.W * Jr).imag().cwiseAbs().maxCoeff(), 1e-13 * scale);
}

TEST(Realify, PreservesTransferFunction) {
    std::mt19937_64 g(6);
    auto s = random_linear(g, 3);
    auto data = conjugate_closure(sample_h1(s, jw_points(g, 4, -1, 1)));
    auto [l, r] = partition(data);
    auto p = build_pencil(l, r);
    auto m = realize(realify(p), 3);
    for (const auto& d : data) EXPECT_LT(std::abs(realized_h1(m, d.s) - d.h), 1e-12 * std::abs(d.h));
}

TEST(Order, LinearIntro) {
    auto data = conjugate_closure(sample_h1(make_linear_intro(), intro_points()));
    auto [l, r] = partition(data);
    auto ord = reveal_order(realify(build_pencil(l, r)));
    EXPECT_EQ(ord.r, 2);
    EXPECT_LT(ord.singular_values(2), 1e-12);
    EXPECT_EQ(ord.singular_values(0), 1.0);
}

TEST(Order, LorenzCaseOne) {
    auto s = make_lorenz();
    std::vector<cd> pts = benchmark_grids("lorenz").h1;
    auto data = conjugate_closure(sample_h1(s, pts));
    auto [l, r] = partition(data);
    auto ord = reveal_order(realify(build_pencil(l, r)));
    EXPECT_EQ(ord.r, 3);
    EXPECT_LT(ord.singular_values(3), 1e-12);
}

TEST(Realize, LinearIntroEigenvalues) {
    for (auto mode : {SplitMode::interleaved, SplitMode::block}) {
        auto m = realize_points(make_linear_intro(), intro_points(), 2, mode);
        auto e = sorted_real_eigs(m);
        EXPECT_NEAR(e[0], -2.0, 1e-10);
        EXPECT_NEAR(e[1], -1.0, 1e-10);
    }
}

TEST(Realize, RandomOrderFourInterpolant) {
    std::mt19937_64 g(7);
    auto s = random_linear(g, 4);
    auto m = realize_points(s, jw_points(g, 8, -1, 1), 4);
    double worst = 0.0;
    for (cd z : jw_points(g, 100, -2, 2)) worst = std::max(worst, std::abs(realized_h1(m, z) - h1(s, z)) / std::abs(h1(s, z)));
    EXPECT_LT(worst, 1e-8);
}

TEST(Realize, RejectsComplexPencilAndBadOrder) {
    auto s = make_linear_intro();
    auto data = conjugate_closure(sample_h1(s, intro_points()));
    auto [l, r] = partition(data);
    auto p = build_pencil(l, r);
    EXPECT_THROW(realize(p, 2), Error);
    EXPECT_THROW(realize(realify(p), 7), Error);
}

TEST(InferX0, ZeroTransientGivesZero) {
    auto m = realize_points(make_linear_intro(), intro_points(), 2);
    Vec x = infer_x0_linear(m, {{0.0, 0.0}, {1.0, 0.0}});
    EXPECT_LT(x.norm(), 1e-15);
}

TEST(InferX0, LinearIntroAligns) {
    const auto truth = make_linear_intro();
    auto m = realize_points(truth, intro_points(), 2);
    auto model = m.system();
    // y(t) = 0.5 e^{-t} from x0 = (0.5, 0).
    Vec x = infer_x0_linear(model, {{0.0, 0.5}, {1.0, 0.5 * std::exp(-1.0)}});
    Mat psi = observability_transform(truth, model);
    Vec back = psi * x;
    EXPECT_NEAR(back(0), 0.5, 1e-6);
    EXPECT_NEAR(back(1), 0.0, 1e-6);
}

TEST(InferX0, RandomHeldOut) {
    std::mt19937_64 g(8);
    auto s = random_linear(g, 3);
    s.x0 = random_mat(g, 3, 1);
    auto m = realize_points(s, jw_points(g, 6, -1, 1), 3).system();
    SimOptions opt;
    opt.dt = 1e-3;
    auto tr = simulate<double>(s, [](double) { return 0.0; }, 0.0, 3.0, opt);
    std::vector<std::pair<double, double>> fit;
    for (int k : {0, 500, 1000, 1500}) fit.push_back({tr.t[k], tr.y[k]});
    m.x0 = infer_x0_linear(m, fit);
    double worst = 0.0;
    for (int k = 0; k < static_cast<int>(tr.t.size()); k += 97) {
        const double y = m.C.dot((m.A * tr.t[k]).exp() * m.x0);
        worst = std::max(worst, std::abs(y - tr.y[k]));
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(InferX0, IllConditionedRejected) {
    auto m = realize_points(make_linear_intro(), intro_points(), 2);
    EXPECT_THROW(infer_x0_linear(m, {{0.0, 1.0}, {1e-14, 1.0}}), IllConditionedError);
}
