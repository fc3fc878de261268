#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <vector>

#include "system.hpp"

namespace quadid {

template <typename S>
struct SimulationTrace {
    std::vector<double> t;
    std::vector<S> u;
    std::vector<S> y;
    Eigen::Matrix<S, Eigen::Dynamic, 1> x_final;

    double dt() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }
};

struct SimOptions {
    double dt = 1e-3;
    int substeps = 1;
};

namespace detail {

// Right-hand side with a sparse view of A and the quadratic term; E is factorized once.
class Rhs {
public:
    explicit Rhs(const QuadraticSystem& s) : A_(s.A.sparseView()), q_(s.Q), B_(s.B), has_E_(s.has_E()) {
        if (has_E_) {
            Eigen::SparseMatrix<double> E = s.E.sparseView();
            E.makeCompressed();
            lu_.compute(E);
            if (lu_.info() != Eigen::Success) throw Error("cannot factorize E");
        }
    }

    template <typename S>
    Eigen::Matrix<S, Eigen::Dynamic, 1> operator()(const Eigen::Matrix<S, Eigen::Dynamic, 1>& x, S u) const {
        Eigen::Matrix<S, Eigen::Dynamic, 1> f = A_.template cast<S>() * x + q_.apply<S>(x, x) + B_.template cast<S>() * u;
        if (!has_E_) return f;
        if constexpr (std::is_same_v<S, double>) {
            return lu_.solve(f);
        } else {
            Vec re = lu_.solve(Vec(f.real()));
            Vec im = lu_.solve(Vec(f.imag()));
            return re.template cast<S>() + S(0, 1) * im.template cast<S>();
        }
    }

private:
    Eigen::SparseMatrix<double> A_;
    QuadAction q_;
    Vec B_;
    bool has_E_;
    mutable Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

}  // namespace detail

// Fixed-step classical RK4 on the grid t0, t0+dt, ..., with `substeps` internal steps per grid step.
template <typename S>
SimulationTrace<S> simulate(const QuadraticSystem& sys, const std::function<S(double)>& input, double t0, double t1,
                            SimOptions opt = {}, std::optional<Eigen::Matrix<S, Eigen::Dynamic, 1>> x_init = std::nullopt) {
    if (!(opt.dt > 0.0) || opt.substeps < 1) throw Error("dt must be positive and substeps >= 1");
    if (!(t1 >= t0)) throw Error("empty time span");
    using V = Eigen::Matrix<S, Eigen::Dynamic, 1>;
    const detail::Rhs f(sys);
    const long steps = std::lround((t1 - t0) / opt.dt);
    const double h = opt.dt / opt.substeps;

    SimulationTrace<S> tr;
    tr.t.reserve(steps + 1);
    tr.u.reserve(steps + 1);
    tr.y.reserve(steps + 1);
    V x = x_init ? *x_init : V(sys.x0.template cast<S>());
    const Eigen::Matrix<S, 1, Eigen::Dynamic> C = sys.C.template cast<S>();

    for (long k = 0;; ++k) {
        const double t = t0 + k * opt.dt;
        if (!x.allFinite()) {
            std::ostringstream os;
            os << "simulation diverged at t = " << t;
            throw DivergenceError(os.str(), t);
        }
        tr.t.push_back(t);
        tr.u.push_back(input(t));
        tr.y.push_back(C * x);
        if (k == steps) break;
        for (int j = 0; j < opt.substeps; ++j) {
            const double ts = t + j * h;
            const S u0 = input(ts), um = input(ts + 0.5 * h), u1 = input(ts + h);
            const V k1 = f(x, u0);
            const V k2 = f(V(x + 0.5 * h * k1), um);
            const V k3 = f(V(x + 0.5 * h * k2), um);
            const V k4 = f(V(x + h * k3), u1);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    tr.x_final = x;
    return tr;
}

}  // namespace quadid
