#include <gtest/gtest.h>

#include <random>

#include "quadid/bench.hpp"
#include "quadid/gfrf.hpp"
#include "quadid/probing.hpp"

using namespace quadid;

namespace {

QuadraticSystem toy_local() {
    Vec xe(2);
    xe << 1, 0;
    return shift_to_equilibrium(make_quad_toy(), xe).system;
}

double rel(cd a, cd b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(SteadyState, ConstantStartsAtZero) {
    std::vector<double> y(1000, 3.0);
    EXPECT_EQ(detect_steady_state(y, 100, 1e-8), 0u);
}

TEST(SteadyState, DecayBound) {
    const std::size_t P = 6000;
    const double dt = 2 * M_PI / P;
    std::vector<double> y;
    for (int k = 0; k < 40000; ++k) {
        const double t = k * dt;
        y.push_back(std::exp(-t) + std::sin(t));
    }
    const double ts = detect_steady_state(y, P, 1e-6) * dt;
    EXPECT_GE(ts, 13.8);
    EXPECT_LT(ts, std::log(1e6) + 0.5);
}

TEST(SteadyState, DivergingAndShortTraces) {
    std::vector<double> y;
    for (int k = 0; k < 3000; ++k) y.push_back(std::exp(0.01 * k));
    EXPECT_THROW(detect_steady_state(y, 100, 1e-8), SteadyStateError);
    EXPECT_THROW(detect_steady_state(std::vector<double>(150, 1.0), 100, 1e-8), Error);
}

TEST(Plan, Validation) {
    ProbePlan p;
    p.tones = {{1.0, 1.0}, {1.0, 2.0}};
    EXPECT_THROW(validate_plan(p), BinCollisionError);
    p.tones = {{1.0, 1.0}, {1.0, 1.3}};
    EXPECT_NEAR(validate_plan(p), 10.0, 1e-12);
    p.window = 0.7;
    EXPECT_THROW(validate_plan(p), Error);
    p.window = 0.0;
    p.tones = {{0.0, 1.0}};
    EXPECT_THROW(validate_plan(p), Error);
    p.tones = {{1.0, 200.0}};
    EXPECT_THROW(validate_plan(p), Error);
    p.tones = {{1.0, 2.0, ToneKind::real}};
    EXPECT_NEAR(validate_plan(p), 0.5, 1e-15);
    EXPECT_EQ(harmonic_indices(p.tones, 3).size(), 7u);
}

TEST(Plan, HarmonicWeights) {
    EXPECT_EQ(harmonic_weight({1, 1}), 2.0);
    EXPECT_EQ(harmonic_weight({2, 1}), 3.0);
    EXPECT_EQ(harmonic_weight({1, 1, 1}), 6.0);
    EXPECT_EQ(harmonic_weight({3}), 1.0);
    EXPECT_EQ(harmonic_weight({0, 0}), 1.0);
}

TEST(Dft, Parseval) {
    std::mt19937_64 g(1);
    std::normal_distribution<double> nd;
    std::vector<cd> y;
    for (int k = 0; k < 256; ++k) y.push_back(cd(nd(g), nd(g)));
    CVec P = window_dft(y, 28, 200);
    double energy = 0.0;
    for (int k = 28; k < 228; ++k) energy += std::norm(y[k]);
    energy /= 200;
    EXPECT_NEAR(P.squaredNorm(), energy, 1e-10 * energy);
}

TEST(Probe, LinearSystemHasNoHarmonics) {
    ProbePlan p;
    p.settle_time = 30;
    auto k = probe_complex_single(make_linear_intro(), 1.0, 0.5, p);
    const cd bin1 = k.spectrum.bins.at({1});
    EXPECT_LT(std::abs(k.spectrum.bins.at({2})), 1e-10 * std::abs(bin1));
    EXPECT_LT(std::abs(k.spectrum.bins.at({3})), 1e-10 * std::abs(bin1));
    EXPECT_LT(rel(k.h1, h1(make_linear_intro(), cd(0, M_PI))), 1e-9);
    EXPECT_NEAR(k.dc, 0.0, 1e-10);
}

TEST(Probe, ToyMatchesClosedForm) {
    const auto local = toy_local();
    const double f = 0.5;
    const cd s(0, 2 * M_PI * f);
    ProbePlan p;
    p.settle_time = 40;
    auto k = probe_complex_single(make_quad_toy(), 1e-3, f, p);
    GfrfEvaluator ev(local);
    EXPECT_NEAR(k.dc, 1.0, 1e-9);
    EXPECT_LT(std::abs(k.h1 - ev.h1(s)), 1e-6 * std::abs(ev.h1(s)));
    EXPECT_LT(std::abs(k.h2 - ev.h2(s, s)), 1e-6 * std::abs(ev.h2(s, s)));
    EXPECT_LT(std::abs(k.h3 - ev.h3(s, s, s)), 1e-6);
    EXPECT_LT(std::abs(k.h3 - ev.h3(s, s, s)), 1e-2 * std::abs(ev.h3(s, s, s)));
}

TEST(Probe, LorenzTwoEquilibria) {
    // Both runs start from the origin; the decaying perturbation in u1 selects the other branch.
    const auto s = make_lorenz(10, 20, 8.0 / 3);
    ProbePlan p;
    p.settle_time = 400;
    auto u2 = probe_complex_single(s, 1.0, 1.0, p);
    p.transient = [](double t) { return 3.0 * std::exp(-0.1 * t) * sawtooth(t); };
    auto u1 = probe_complex_single(s, 1.0, 1.0, p);

    EXPECT_NEAR(u2.dc, 11.8819, 1e-4);
    EXPECT_NEAR(u2.h1.real(), 0.09303, 1e-5);
    EXPECT_NEAR(u2.h1.imag(), 0.05011, 1e-5);
    EXPECT_NEAR(u2.h2.real(), -3.0e-4, 1e-5);
    EXPECT_NEAR(u2.h2.imag(), -3.0e-3, 5e-5);
    EXPECT_NEAR(u2.h3.real(), 6.0e-6, 1e-7);
    EXPECT_NEAR(u2.h3.imag(), 5.3e-5, 1e-6);

    EXPECT_NEAR(u1.dc, 26.1181, 1e-4);
    EXPECT_NEAR(u1.h1.real(), -0.0148, 5e-5);
    EXPECT_NEAR(u1.h1.imag(), 0.297, 5e-4);
    EXPECT_NEAR(u1.h2.real(), -0.00687, 1e-5);
    EXPECT_NEAR(u1.h2.imag(), -0.00614, 1e-5);
    EXPECT_NEAR(u1.h3.real(), 1.74e-4, 1e-6);
    EXPECT_NEAR(u1.h3.imag(), -5.82e-5, 1e-6);

    // Each probe agrees with the closed-form kernels of the equilibrium it reached.
    auto [e1, e2] = lorenz_equilibria(20);
    const cd w(0, 2 * M_PI);
    for (auto [k, xe] : {std::pair{u2, e1}, std::pair{u1, e2}}) {
        GfrfEvaluator ev(shift_to_equilibrium(s, xe).system);
        EXPECT_LT(rel(k.h1, ev.h1(w)), 1e-8);
        EXPECT_LT(rel(k.h2, ev.h2(w, w)), 1e-7);
        EXPECT_LT(rel(k.h3, ev.h3(w, w, w)), 1e-5);
    }
}

TEST(Probe, MultiToneMatchesClosedForm) {
    const auto s = make_lorenz(10, 20, 8.0 / 3);
    auto [e1, e2] = lorenz_equilibria(20);
    const auto local = shift_to_equilibrium(s, e2).system;
    GfrfEvaluator ev(local);
    std::mt19937_64 g(3);
    std::uniform_int_distribution<int> ud(1, 20);
    ProbePlan p;
    p.settle_time = 300;
    p.max_order = 2;
    p.x_init = Vec::Zero(3);
    int done = 0;
    while (done < 10) {
        std::vector<Tone> tones{{0.05, ud(g) / 10.0}, {0.05, ud(g) / 10.0}};
        ProbePlan trial = p;
        trial.tones = tones;
        try {
            validate_plan(trial);
        } catch (const Error&) {
            continue;
        }
        SpectrumEstimate est;
        auto samples = probe_complex_multi(local, tones, p, &est);
        EXPECT_LT(std::abs(est.dc), 1e-2);
        bool found = false;
        for (const auto& sm : samples)
            if (sm.order == 2 && sm.s[0] != sm.s[1]) {
                EXPECT_LT(rel(sm.value, ev.h2(sm.s[0], sm.s[1])), 1e-5);
                found = true;
            }
        EXPECT_TRUE(found);
        ++done;
    }
}

TEST(Probe, SingleToneMultiDegenerates) {
    ProbePlan p;
    p.settle_time = 40;
    auto single = probe_complex_single(make_quad_toy(), 1e-2, 0.5, p);
    auto multi = probe_complex_multi(make_quad_toy(), {{1e-2, 0.5}}, p);
    ASSERT_EQ(multi.size(), 3u);
    EXPECT_EQ(multi[0].value, single.h1);
    EXPECT_EQ(multi[1].value, single.h2);
    EXPECT_EQ(multi[2].value, single.h3);
    EXPECT_THROW(probe_complex_multi(make_quad_toy(), {{1.0, 0.5, ToneKind::real}}, p), Error);
}

TEST(Sweep, ToyLadder) {
    const cd s(0, 2 * M_PI * 10);
    const cd h = h1(toy_local(), s);
    ProbePlan p;
    p.dt = 1e-4;
    p.settle_time = 40;
    auto sw = probe_real_amplitude_sweep(make_quad_toy(), 10.0, {10.0, 1.0, 1e-3}, p);
    std::vector<double> eh, ed;
    for (int i = 0; i < 3; ++i) {
        eh.push_back(std::abs(sw.h1_raw[i] - h));
        ed.push_back(std::abs(sw.y0[i] - 1.0));
    }
    EXPECT_GT(eh[0], eh[1]);
    EXPECT_GT(eh[1], eh[2]);
    EXPECT_GT(ed[0], ed[1]);
    EXPECT_GT(ed[1], ed[2]);
    // Reference error ladder, matched to within a factor 10.
    const double ph[3] = {2.7105e-05, 2.5666e-07, 2.1652e-11}, pd[3] = {5.35e-2, 5.07e-4, 5.06e-10};
    for (int i = 0; i < 2; ++i) {
        EXPECT_LT(eh[i], 10 * ph[i]);
        EXPECT_GT(eh[i], ph[i] / 10);
    }
    EXPECT_LT(eh[2], 10 * ph[2]);
    for (int i = 0; i < 3; ++i) {
        EXPECT_LT(ed[i], 10 * pd[i]);
        EXPECT_GT(ed[i], pd[i] / 10);
    }
}

TEST(Sweep, LinearFitIndependentOfAmplitude) {
    ProbePlan p;
    p.settle_time = 30;
    const auto s = make_linear_intro();
    auto sw = probe_real_amplitude_sweep(s, 0.5, {2.0, 0.5, 0.1}, p);
    for (const cd& r : sw.h1_raw) EXPECT_LT(std::abs(r - sw.h1_raw[0]), 1e-10);
    EXPECT_LT(std::abs(sw.h1 - sw.h1_raw[0]), 1e-10);
    EXPECT_LT(std::abs(sw.h2), 1e-10);
}

TEST(Sweep, IllConditionedRejected) {
    ProbePlan p;
    p.settle_time = 30;
    EXPECT_THROW(probe_real_amplitude_sweep(make_linear_intro(), 0.5, {1.0, 1.0 + 1e-12}, p), IllConditionedError);
}

TEST(Probe, UnstableSystemReported) {
    auto s = make_system(Mat::Constant(1, 1, 1.0), Mat::Zero(1, 1), Vec::Ones(1), RowVec::Ones(1));
    ProbePlan p;
    EXPECT_THROW(probe_complex_single(s, 1.0, 1.0, p), Error);
}
