#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <string>

#include "measurements.hpp"
#include "simulate.hpp"
#include "system.hpp"

namespace quadid {

inline QuadraticSystem make_linear_intro() {
    Mat A(2, 2);
    A << -1, 0, 0, -2;
    return make_system(A, Mat::Zero(2, 4), Vec::Ones(2), RowVec::Ones(2), Vec((Vec(2) << 0.5, 0.0).finished()));
}

inline QuadraticSystem make_quad_toy() {
    Mat A(2, 2);
    A << 1, 0, 0, -2;
    Mat Q = Mat::Zero(2, 4);
    Q(0, 0) = -1;
    return make_system(A, Q, Vec::Ones(2), RowVec::Ones(2), Vec((Vec(2) << 0.5, 0.0).finished()));
}

inline QuadraticSystem make_lorenz(double sigma = 10.0, double rho = 0.5, double beta = 8.0 / 3.0) {
    Mat A(3, 3);
    A << -sigma, sigma, 0, rho, -1, 0, 0, 0, -beta;
    Mat Q = Mat::Zero(3, 9);
    Q(1, 2) = Q(1, 6) = -0.5;  // -x z
    Q(2, 1) = Q(2, 3) = 0.5;   //  x y
    Vec B(3);
    B << 1, 0, 1;
    return make_system(A, Q, B, B.transpose());
}

// Non-zero equilibria (-, +) of the forced Lorenz system for rho > 1.
inline std::pair<Vec, Vec> lorenz_equilibria(double rho, double beta = 8.0 / 3.0) {
    const double a = std::sqrt(beta * (rho - 1.0));
    Vec e1(3), e2(3);
    e1 << -a, -a, rho - 1.0;
    e2 << a, a, rho - 1.0;
    return {e1, e2};
}

// Linear Lagrange elements on a uniform mesh of [0,1]; E is the mass matrix.
// Boundary terms follow nu v_x(0) + s0 v(0) = u and nu v_x(1) + s1 v(1) = 0.
inline QuadraticSystem make_burgers(double nu = 0.5, double s0 = 0.0, double s1 = 0.1, int n = 129) {
    if (n < 8) throw Error("Burgers model needs n >= 8");
    if (!(nu > 0.0)) throw Error("viscosity must be positive");
    const double h = 1.0 / (n - 1);
    Mat E = Mat::Zero(n, n), K = Mat::Zero(n, n);
    Mat Q = Mat::Zero(n, n * n);
    for (int e = 0; e + 1 < n; ++e) {
        const int a = e, b = e + 1;
        E(a, a) += h / 3;
        E(b, b) += h / 3;
        E(a, b) += h / 6;
        E(b, a) += h / 6;
        K(a, a) += 1 / h;
        K(b, b) += 1 / h;
        K(a, b) -= 1 / h;
        K(b, a) -= 1 / h;
        // -int v v_x phi_i over the element: -(v_b - v_a)(2 v_i + v_o)/6
        for (auto [i, o] : {std::pair{a, b}, std::pair{b, a}})
            for (auto [k, ck] : {std::pair{b, 1.0}, std::pair{a, -1.0}})
                for (auto [l, cl] : {std::pair{i, 2.0}, std::pair{o, 1.0}}) {
                    Q(i, k * n + l) -= ck * cl / 12.0;
                    Q(i, l * n + k) -= ck * cl / 12.0;
                }
    }
    Mat A = -nu * K;
    A(0, 0) += s0;
    A(n - 1, n - 1) -= s1;
    Vec B = Vec::Zero(n);
    B(0) = 1.0;
    RowVec C = RowVec::Constant(n, h);
    C(0) = C(n - 1) = h / 2;
    return make_system(A, Q, B, C, Vec::Zero(n), E);
}

// Internal RK4 sub-steps keeping |lambda| * dt / substeps inside the stability region.
inline int rk4_substeps(const QuadraticSystem& sys, double dt) {
    Mat A = sys.has_E() ? Mat(sys.E.partialPivLu().solve(sys.A)) : sys.A;
    Eigen::EigenSolver<Mat> es(A, false);
    const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    return std::max(1, static_cast<int>(std::ceil(rho * dt / 2.5)));
}

inline FrequencyGrids benchmark_grids(const std::string& name) {
    if (name == "lorenz") {
        const auto ax = logspace_jw(-3, 3, 10);
        return tensor_grids(logspace_jw(-3, 3, 100), ax, ax);
    }
    if (name == "burgers") return tensor_grids(logspace_jw(-2, 1, 100), logspace_jw(-2, 1, 20), logspace_jw(-2, 1, 6));
    if (name == "linear_intro" || name == "quad_toy") {
        std::vector<cd> pts;
        for (int i = 1; i <= 6; ++i) pts.emplace_back(0.0, 2.0 * M_PI * 5.0 * i);
        FrequencyGrids g = tensor_grids(pts, name == "quad_toy" ? pts : std::vector<cd>{}, {});
        if (name == "quad_toy") {
            g.h3.push_back({pts[0], pts[1], pts[2]});
            g.h3.push_back({pts[1], pts[3], pts[5]});
        }
        return g;
    }
    throw Error("unknown benchmark name: " + name);
}

inline double sawtooth(double t) {
    const double x = t / (2.0 * M_PI);
    return 2.0 * (x - std::floor(x)) - 1.0;
}

}  // namespace quadid
