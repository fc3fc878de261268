#pragma once

#include <algorithm>
#include <array>
#include <set>
#include <vector>

#include "gfrf.hpp"

namespace quadid {

struct GfrfSample {
    int order = 1;
    std::vector<cd> s;
    cd value;
};

struct FrequencyGrids {
    std::vector<cd> h1;
    std::vector<std::array<cd, 2>> h2;
    std::vector<std::array<cd, 3>> h3;
};

namespace detail {

inline std::vector<std::pair<double, double>> sorted_key(const std::vector<cd>& s) {
    std::vector<std::pair<double, double>> k;
    for (cd z : s) k.emplace_back(z.real(), z.imag());
    std::sort(k.begin(), k.end());
    return k;
}

}  // namespace detail

class MeasurementSet {
public:
    double dc = 0.0;

    const std::vector<GfrfSample>& h1() const { return orders_[0]; }
    const std::vector<GfrfSample>& h2() const { return orders_[1]; }
    const std::vector<GfrfSample>& h3() const { return orders_[2]; }
    const std::vector<GfrfSample>& order(int k) const { return orders_.at(k - 1); }

    bool contains(const std::vector<cd>& s) const {
        if (s.empty() || s.size() > 3) return false;
        return keys_[s.size() - 1].count(detail::sorted_key(s)) > 0;
    }

    void add(GfrfSample g) {
        if (g.order < 1 || g.order > 3) throw Error("sample order must be 1, 2 or 3");
        if (static_cast<int>(g.s.size()) != g.order) throw DimensionError("frequency tuple length must equal the order");
        if (!std::isfinite(g.value.real()) || !std::isfinite(g.value.imag())) throw Error("sample value is not finite");
        if (!keys_[g.order - 1].insert(detail::sorted_key(g.s)).second) throw Error("duplicate frequency tuple in measurement set");
        orders_[g.order - 1].push_back(std::move(g));
    }

    // Adds unless an equivalent (permuted) tuple is already present.
    bool add_unique(GfrfSample g) {
        if (contains(g.s)) return false;
        add(std::move(g));
        return true;
    }

private:
    std::array<std::vector<GfrfSample>, 3> orders_;
    std::array<std::set<std::vector<std::pair<double, double>>>, 3> keys_;
};

// Closed-form sampling of the kernels over a grid. Permuted duplicates are skipped.
inline MeasurementSet sample_kernels(const GfrfEvaluator& ev, const FrequencyGrids& g, double dc = 0.0) {
    MeasurementSet m;
    m.dc = dc;
    for (cd s : g.h1)
        if (!m.contains({s})) m.add({1, {s}, ev.h1(s)});
    for (const auto& p : g.h2)
        if (!m.contains({p[0], p[1]})) m.add({2, {p[0], p[1]}, ev.h2(p[0], p[1])});
    for (const auto& p : g.h3)
        if (!m.contains({p[0], p[1], p[2]})) m.add({3, {p[0], p[1], p[2]}, ev.h3(p[0], p[1], p[2])});
    return m;
}

inline std::vector<cd> logspace_jw(double lo, double hi, int count) {
    std::vector<cd> out;
    for (int i = 0; i < count; ++i) {
        double e = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
        out.emplace_back(0.0, 2.0 * M_PI * std::pow(10.0, e));
    }
    return out;
}

inline FrequencyGrids tensor_grids(const std::vector<cd>& h1, const std::vector<cd>& axis2, const std::vector<cd>& axis3) {
    FrequencyGrids g;
    g.h1 = h1;
    for (cd a : axis2)
        for (cd b : axis2) g.h2.push_back({a, b});
    for (cd a : axis3)
        for (cd b : axis3)
            for (cd c : axis3) g.h3.push_back({a, b, c});
    return g;
}

}  // namespace quadid
