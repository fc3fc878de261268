#pragma once

#include <Eigen/Dense>

#include <array>
#include <map>
#include <memory>

#include "system.hpp"

namespace quadid {

// Closed-form kernels with LU factorizations of (sE - A) memoized per frequency.
class GfrfEvaluator {
public:
    explicit GfrfEvaluator(QuadraticSystem sys) : sys_(std::move(sys)), q_(sys_.Q) {
        const Eigen::Index n = sys_.n();
        E_ = sys_.has_E() ? CMat(sys_.E.cast<cd>()) : CMat(CMat::Identity(n, n));
        A_ = sys_.A.cast<cd>();
        B_ = sys_.B.cast<cd>();
        C_ = sys_.C.cast<cd>();
    }

    const QuadraticSystem& system() const { return sys_; }

    const Eigen::PartialPivLU<CMat>& lu(cd s) const {
        auto key = std::make_pair(s.real(), s.imag());
        auto it = cache_.find(key);
        if (it != cache_.end()) return *it->second;
        auto f = std::make_unique<Eigen::PartialPivLU<CMat>>(CMat(s * E_ - A_));
        // rcond() is a cheap 1-norm estimate; reject near-singular pencils.
        const double rc = f->rcond();
        if (!(rc > 1e-14)) throw SingularResolventError(s);
        return *cache_.emplace(key, std::move(f)).first->second;
    }

    CMat resolvent(cd s) const { return lu(s).inverse(); }

    CVec g1(cd s) const { return lu(s).solve(B_); }

    // G2 for the operator acting through `q`.
    CVec g2(cd s1, cd s2, const QuadAction& q) const {
        const CVec a = g1(s1), b = g1(s2);
        return lu(s1 + s2).solve(CVec(0.5 * (q.apply<cd>(a, b) + q.apply<cd>(b, a))));
    }
    CVec g2(cd s1, cd s2) const { return g2(s1, s2, q_); }

    cd h1(cd s) const { return C_.dot(g1(s)); }
    cd h2(cd s1, cd s2) const { return C_.dot(g2(s1, s2)); }

    // Qi R3(Qj), the six-term sum applied through Qi without forming the n^2 vector.
    CVec qi_r3(const QuadAction& qi, const QuadAction& qj, cd s1, cd s2, cd s3) const {
        const std::array<std::array<cd, 3>, 3> splits{{{s1, s2, s3}, {s2, s1, s3}, {s3, s1, s2}}};
        CVec acc = CVec::Zero(sys_.n());
        for (const auto& sp : splits) {
            const CVec a = g1(sp[0]);
            const CVec b = g2(sp[1], sp[2], qj);
            acc += qi.apply<cd>(a, b) + qi.apply<cd>(b, a);
        }
        return acc;
    }

    cd h3_cross(const QuadAction& qi, const QuadAction& qj, cd s1, cd s2, cd s3) const {
        const CVec v = qi_r3(qi, qj, s1, s2, s3);
        return C_.dot(lu(s1 + s2 + s3).solve(v)) / 3.0;
    }
    cd h3(cd s1, cd s2, cd s3) const { return h3_cross(q_, q_, s1, s2, s3); }

    // R3 as an explicit n^2 vector (small n only).
    CVec r3(const QuadAction& qj, cd s1, cd s2, cd s3) const {
        const std::array<std::array<cd, 3>, 3> splits{{{s1, s2, s3}, {s2, s1, s3}, {s3, s1, s2}}};
        const Eigen::Index n = sys_.n();
        CVec acc = CVec::Zero(n * n);
        for (const auto& sp : splits) {
            const CVec a = g1(sp[0]);
            const CVec b = g2(sp[1], sp[2], qj);
            acc += kron_vec(a, b) + kron_vec(b, a);
        }
        return acc;
    }

    // Row vectors O2 = C Phi(s1+s2)/2 and O3 = C Phi(s1+s2+s3)/3.
    Eigen::RowVectorXcd o2(cd s1, cd s2) const { return observe(s1 + s2) / 2.0; }
    Eigen::RowVectorXcd o3(cd s1, cd s2, cd s3) const { return observe(s1 + s2 + s3) / 3.0; }

    const QuadAction& quad() const { return q_; }

private:
    Eigen::RowVectorXcd observe(cd s) const {
        return C_ * lu(s).inverse();
    }

    struct Less {
        bool operator()(const std::pair<double, double>& a, const std::pair<double, double>& b) const { return a < b; }
    };

    QuadraticSystem sys_;
    QuadAction q_;
    CMat E_, A_;
    CVec B_;
    Eigen::RowVectorXcd C_;
    mutable std::map<std::pair<double, double>, std::unique_ptr<Eigen::PartialPivLU<CMat>>, Less> cache_;
};

inline CMat resolvent(const QuadraticSystem& s, cd z) { return GfrfEvaluator(s).resolvent(z); }
inline cd h1(const QuadraticSystem& s, cd s1) { return GfrfEvaluator(s).h1(s1); }
inline cd h2(const QuadraticSystem& s, cd s1, cd s2) { return GfrfEvaluator(s).h2(s1, s2); }
inline cd h3(const QuadraticSystem& s, cd s1, cd s2, cd s3) { return GfrfEvaluator(s).h3(s1, s2, s3); }
inline CVec g1(const QuadraticSystem& s, cd s1) { return GfrfEvaluator(s).g1(s1); }
inline CVec g2(const QuadraticSystem& s, cd s1, cd s2) { return GfrfEvaluator(s).g2(s1, s2); }

inline cd h3_cross(const QuadraticSystem& lin, const Mat& Qi, const Mat& Qj, cd s1, cd s2, cd s3) {
    GfrfEvaluator ev(lin);
    return ev.h3_cross(QuadAction(Qi), QuadAction(Qj), s1, s2, s3);
}

}  // namespace quadid
