#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "measurements.hpp"
#include "simulate.hpp"

namespace quadid {

enum class ToneKind { complex, real };

// Complex tone: a e^{j 2 pi f t}. Real tone: 2a cos(2 pi f t) = a e^{j 2 pi f t} + a e^{-j 2 pi f t}.
struct Tone {
    double amplitude = 1.0;
    double freq = 1.0;  // Hz
    ToneKind kind = ToneKind::complex;
};

struct ProbePlan {
    std::vector<Tone> tones;
    double settle_time = 0.0;  // 0: 50 periods of the slowest tone
    double window = 0.0;       // 0: shortest common period of all tones
    double dt = 1e-3;
    int substeps = 1;
    double tol = 1e-8;  // steady-state agreement, relative to the signal peak
    int max_order = 3;
    std::function<double(double)> transient;  // additive input perturbation
    std::optional<Vec> x_init;
};

using MultiIndex = std::vector<int>;

struct SpectrumEstimate {
    std::vector<double> base_freqs;
    std::map<MultiIndex, cd> bins;  // two-sided amplitude of e^{j 2 pi (m . f) t}
    double dc = 0.0;
    double window_start = 0.0;
    double steady_time = 0.0;  // detected start of the steady state
};

namespace detail {

inline bool near_integer(double x, double tol = 1e-9) { return std::abs(x - std::round(x)) <= tol * std::max(1.0, std::abs(x)); }

inline double common_period(const std::vector<double>& freqs) {
    const double f0 = *std::min_element(freqs.begin(), freqs.end());
    for (int k = 1; k <= 100000; ++k) {
        const double T = k / f0;
        if (std::all_of(freqs.begin(), freqs.end(), [&](double f) { return near_integer(f * T); })) return T;
    }
    throw Error("tone frequencies have no common period; set the window explicitly");
}

inline void enumerate(const std::vector<Tone>& tones, std::size_t i, int budget, MultiIndex& cur, std::vector<MultiIndex>& out) {
    if (i == tones.size()) {
        out.push_back(cur);
        return;
    }
    const int lo = tones[i].kind == ToneKind::real ? -budget : 0;
    for (int m = lo; m <= budget; ++m) {
        cur[i] = m;
        enumerate(tones, i + 1, budget - std::abs(m), cur, out);
    }
    cur[i] = 0;
}

inline std::string format_index(const MultiIndex& m) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < m.size(); ++i) os << (i ? "," : "") << m[i];
    os << ')';
    return os.str();
}

}  // namespace detail

// All harmonic multi-indices with |m|_1 <= max_order; real tones admit negative entries.
inline std::vector<MultiIndex> harmonic_indices(const std::vector<Tone>& tones, int max_order) {
    std::vector<MultiIndex> out;
    MultiIndex cur(tones.size(), 0);
    detail::enumerate(tones, 0, max_order, cur, out);
    return out;
}

// Checks commensurability and bin distinctness; returns the window length in seconds.
inline double validate_plan(const ProbePlan& plan) {
    if (plan.tones.empty()) throw Error("plan has no tones");
    if (!(plan.dt > 0.0)) throw Error("plan dt must be positive");
    std::vector<double> freqs;
    for (const auto& t : plan.tones) {
        if (!(t.amplitude > 0.0)) throw Error("tone amplitudes must be positive");
        if (!(t.freq > 0.0)) throw Error("tone frequencies must be positive");
        freqs.push_back(t.freq);
    }
    const double window = plan.window > 0.0 ? plan.window : detail::common_period(freqs);
    for (double f : freqs)
        if (!detail::near_integer(f * window)) throw Error("window is not an integer number of periods of every tone");
    if (!detail::near_integer(window / plan.dt)) throw Error("window is not an integer number of time steps");
    const long N = std::lround(window / plan.dt);
    std::map<long, MultiIndex> seen;
    std::ostringstream clash;
    for (const auto& m : harmonic_indices(plan.tones, plan.max_order)) {
        double f = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) f += m[i] * freqs[i];
        if (std::abs(f) * plan.dt >= 0.5) throw Error("harmonic " + detail::format_index(m) + " exceeds the Nyquist frequency");
        const long bin = std::lround(f * window);
        auto it = seen.find(bin);
        if (it != seen.end()) clash << ' ' << detail::format_index(it->second) << '=' << detail::format_index(m);
        else seen[bin] = m;
    }
    if (!clash.str().empty()) throw BinCollisionError("harmonic indices share a DFT bin:" + clash.str());
    if (N < 2) throw Error("window holds fewer than two samples");
    return window;
}

// Earliest index after which every pair of samples one period apart agrees to tol * peak,
// leaving room for two full periods.
template <typename S>
std::size_t detect_steady_state(const std::vector<S>& y, std::size_t period, double tol) {
    if (period == 0 || y.size() < 2 * period) throw Error("trace is shorter than two periods");
    double peak = 0.0;
    for (std::size_t k = y.size() - 2 * period; k < y.size(); ++k) {
        if (!std::isfinite(std::abs(y[k]))) throw SteadyStateError("trace is not finite");
        peak = std::max(peak, std::abs(y[k]));
    }
    const double thr = tol * std::max(peak, 1e-300);
    std::size_t start = 0;
    for (std::size_t k = 0; k + period < y.size(); ++k) {
        const double d = std::abs(y[k + period] - y[k]);
        if (!(d <= thr)) start = k + 1;
    }
    if (start + 2 * period > y.size()) throw SteadyStateError("steady state not reached within the simulated time");
    return start;
}

// Two-sided DFT amplitude at frequency f (Hz) over samples [start, start+N), referenced to absolute time.
template <typename S>
cd dft_bin(const std::vector<S>& y, const std::vector<double>& t, std::size_t start, std::size_t N, double f) {
    cd acc = 0.0;
    for (std::size_t k = start; k < start + N; ++k) acc += cd(y[k]) * std::exp(cd(0.0, -2.0 * M_PI * f * t[k]));
    return acc / double(N);
}

// Full N-point DFT of a window, normalized by 1/N.
template <typename S>
CVec window_dft(const std::vector<S>& y, std::size_t start, std::size_t N) {
    CVec out(N);
    for (std::size_t b = 0; b < N; ++b) {
        cd acc = 0.0;
        for (std::size_t k = 0; k < N; ++k) acc += cd(y[start + k]) * std::exp(cd(0.0, -2.0 * M_PI * double(b * k % N) / N));
        out(b) = acc / double(N);
    }
    return out;
}

namespace detail {

template <typename S>
SpectrumEstimate run_probe_as(const QuadraticSystem& sys, const ProbePlan& plan, double window) {
    double fmin = INFINITY;
    for (const auto& t : plan.tones) fmin = std::min(fmin, t.freq);
    const double settle = plan.settle_time > 0.0 ? plan.settle_time : 50.0 / fmin;
    const std::size_t N = static_cast<std::size_t>(std::lround(window / plan.dt));
    const double t1 = std::ceil(settle / window) * window + 2.0 * window;
    const auto tones = plan.tones;
    const auto transient = plan.transient;
    std::function<S(double)> input = [tones, transient](double t) {
        S u = transient ? S(transient(t)) : S(0.0);
        for (const auto& tn : tones) {
            const double ph = 2.0 * M_PI * tn.freq * t;
            if (tn.kind == ToneKind::real) u += S(2.0 * tn.amplitude * std::cos(ph));
            else if constexpr (std::is_same_v<S, cd>) u += tn.amplitude * cd(std::cos(ph), std::sin(ph));
        }
        return u;
    };
    SimOptions so;
    so.dt = plan.dt;
    so.substeps = plan.substeps;
    std::optional<Eigen::Matrix<S, Eigen::Dynamic, 1>> x0;
    if (plan.x_init) x0 = plan.x_init->template cast<S>();
    const auto tr = simulate<S>(sys, input, 0.0, t1, so, x0);
    // Drop the closing sample so the trace spans whole windows.
    std::vector<S> y(tr.y.begin(), tr.y.end() - 1);
    const std::size_t ss = detect_steady_state(y, N, plan.tol);
    SpectrumEstimate est;
    for (const auto& t : tones) est.base_freqs.push_back(t.freq);
    const std::size_t start = y.size() - N;
    est.window_start = tr.t[start];
    est.steady_time = tr.t[ss];
    for (const auto& m : harmonic_indices(tones, plan.max_order)) {
        double f = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) f += m[i] * tones[i].freq;
        est.bins[m] = dft_bin(y, tr.t, start, N, f);
    }
    est.dc = est.bins[MultiIndex(tones.size(), 0)].real();
    return est;
}

}  // namespace detail

inline SpectrumEstimate run_probe(const QuadraticSystem& sys, const ProbePlan& plan) {
    const double window = validate_plan(plan);
    const bool any_complex = std::any_of(plan.tones.begin(), plan.tones.end(), [](const Tone& t) { return t.kind == ToneKind::complex; });
    return any_complex ? detail::run_probe_as<cd>(sys, plan, window) : detail::run_probe_as<double>(sys, plan, window);
}

struct ProbeKernels {
    cd h1, h2, h3;
    double dc = 0.0;
    SpectrumEstimate spectrum;
};

// H_k(jw,...,jw) = P(k w) / a^k from one complex tone.
inline ProbeKernels probe_complex_single(const QuadraticSystem& sys, double a, double freq, ProbePlan plan) {
    plan.tones = {{a, freq, ToneKind::complex}};
    plan.max_order = std::max(plan.max_order, 3);
    ProbeKernels out;
    out.spectrum = run_probe(sys, plan);
    out.h1 = out.spectrum.bins.at({1}) / a;
    out.h2 = out.spectrum.bins.at({2}) / (a * a);
    out.h3 = out.spectrum.bins.at({3}) / (a * a * a);
    out.dc = out.spectrum.dc;
    return out;
}

// Multinomial weight |m|! / prod m_i! of a harmonic index.
inline double harmonic_weight(const MultiIndex& m) {
    auto fact = [](int k) {
        double f = 1.0;
        for (int i = 2; i <= k; ++i) f *= i;
        return f;
    };
    int order = 0;
    double den = 1.0;
    for (int v : m) {
        order += std::abs(v);
        den *= fact(std::abs(v));
    }
    return fact(order) / den;
}

// Kernel samples from complex tones: P(m . w) = weight(m) H_|m| prod a_i^{m_i}.
inline std::vector<GfrfSample> probe_complex_multi(const QuadraticSystem& sys, const std::vector<Tone>& tones, ProbePlan plan,
                                                   SpectrumEstimate* spectrum = nullptr) {
    for (const auto& t : tones)
        if (t.kind != ToneKind::complex) throw Error("probe_complex_multi expects complex tones");
    plan.tones = tones;
    const SpectrumEstimate est = run_probe(sys, plan);
    if (spectrum) *spectrum = est;
    std::vector<GfrfSample> out;
    for (const auto& [m, p] : est.bins) {
        int order = 0;
        double scale = harmonic_weight(m);
        GfrfSample g;
        for (std::size_t i = 0; i < m.size(); ++i) {
            order += m[i];
            scale *= std::pow(tones[i].amplitude, m[i]);
            for (int r = 0; r < m[i]; ++r) g.s.push_back(cd(0.0, 2.0 * M_PI * tones[i].freq));
        }
        if (order == 0) continue;
        g.order = order;
        g.value = p / scale;
        out.push_back(g);
    }
    return out;
}

struct SweepResult {
    std::vector<double> amplitudes;  // a, with u = 2a cos(2 pi f t)
    std::vector<cd> y1, y2;          // bins at f and 2f
    std::vector<double> y0;          // DC bin
    std::vector<cd> h1_raw;          // P(f)/a per amplitude
    cd h1, h2;                       // separated H1(jw) and H2(jw,jw)
    double dc = 0.0;                 // separated DC term
    double condition = 0.0;
};

namespace detail {

// Least-squares fit of v(a) = sum_k c_k a^{2k}, k < terms, with column scaling and QR.
inline CVec even_poly_fit(const std::vector<double>& a, const std::vector<cd>& v, int terms, double max_cond, double& cond) {
    const Eigen::Index n = static_cast<Eigen::Index>(a.size());
    Mat V(n, terms);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int k = 0; k < terms; ++k) V(i, k) = std::pow(a[i], 2 * k);
    Vec scale(terms);
    for (int k = 0; k < terms; ++k) {
        scale(k) = V.col(k).norm();
        if (scale(k) == 0.0) scale(k) = 1.0;
        V.col(k) /= scale(k);
    }
    Eigen::JacobiSVD<Mat> svd(V);
    const Vec& sv = svd.singularValues();
    cond = sv(terms - 1) > 0.0 ? sv(0) / sv(terms - 1) : INFINITY;
    if (cond > max_cond)
        throw IllConditionedError("amplitude-sweep Vandermonde system is ill-conditioned; use fewer or smaller, well-separated amplitudes");
    Eigen::ColPivHouseholderQR<Mat> qr(V);
    CVec rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) rhs(i) = v[i];
    Vec re = qr.solve(Vec(rhs.real())), im = qr.solve(Vec(rhs.imag()));
    CVec c(terms);
    for (int k = 0; k < terms; ++k) c(k) = cd(re(k), im(k)) / scale(k);
    return c;
}

}  // namespace detail

// Real single-tone sweep; Y1 = a H1 + 3a^3 H3(w,w,-w) + ..., Y2 = a^2 H2(w,w) + ..., Y0 = dc + 2a^2 H2(w,-w) + ...
inline SweepResult probe_real_amplitude_sweep(const QuadraticSystem& sys, double freq, const std::vector<double>& amplitudes, ProbePlan plan,
                                              int degree = 3, double max_cond = 1e10) {
    if (amplitudes.empty()) throw Error("amplitude sweep needs at least one amplitude");
    SweepResult out;
    out.amplitudes = amplitudes;
    for (double a : amplitudes) {
        plan.tones = {{a, freq, ToneKind::real}};
        const SpectrumEstimate est = run_probe(sys, plan);
        out.y1.push_back(est.bins.at({1}));
        out.y2.push_back(est.bins.at({2}));
        out.y0.push_back(est.dc);
        out.h1_raw.push_back(est.bins.at({1}) / a);
    }
    const int n = static_cast<int>(amplitudes.size());
    const int odd_terms = std::min(n, (degree + 1) / 2);
    const int even_terms = std::min(n, degree / 2 + 1);
    std::vector<cd> v1, v2, v0;
    for (int i = 0; i < n; ++i) {
        const double a = amplitudes[i];
        v1.push_back(out.y1[i] / a);
        v2.push_back(out.y2[i] / (a * a));
        v0.push_back(out.y0[i]);
    }
    double c1 = 0.0, c2 = 0.0, c0 = 0.0;
    out.h1 = detail::even_poly_fit(amplitudes, v1, odd_terms, max_cond, c1)(0);
    out.h2 = detail::even_poly_fit(amplitudes, v2, std::max(1, std::min(n, (degree - 2) / 2 + 1)), max_cond, c2)(0);
    out.dc = detail::even_poly_fit(amplitudes, v0, even_terms, max_cond, c0)(0).real();
    out.condition = std::max({c1, c2, c0});
    return out;
}

}  // namespace quadid
