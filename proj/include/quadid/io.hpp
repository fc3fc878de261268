#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "measurements.hpp"
#include "probing.hpp"
#include "system.hpp"

namespace quadid {

using json = nlohmann::json;

inline json to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json to_json(cd z) { return json::array({z.real(), z.imag()}); }

inline Mat mat_from_json(const json& j) {
    if (!j.is_array()) throw Error("matrix must be an array of rows");
    const Eigen::Index r = static_cast<Eigen::Index>(j.size());
    if (r == 0) return Mat();
    const Eigen::Index c = static_cast<Eigen::Index>(j[0].size());
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != c) throw DimensionError("ragged matrix rows");
        for (Eigen::Index k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

inline Vec vec_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline cd cd_from_json(const json& j) {
    if (j.is_number()) return cd(j.get<double>(), 0.0);
    if (!j.is_array() || j.size() != 2) throw Error("complex value must be [re, im]");
    return cd(j[0].get<double>(), j[1].get<double>());
}

// {"A": rows, "Q": rows, "B": [..], "C": [..], "x0": [..], "E": rows (optional)}
inline json system_to_json(const QuadraticSystem& s) {
    json j;
    j["n"] = s.n();
    j["A"] = to_json(s.A);
    j["Q"] = to_json(s.Q);
    j["B"] = to_json(s.B);
    j["C"] = to_json(Vec(s.C.transpose()));
    j["x0"] = to_json(s.x0);
    if (s.has_E()) j["E"] = to_json(s.E);
    return j;
}

inline QuadraticSystem system_from_json(const json& j) {
    Mat A = mat_from_json(j.at("A"));
    const Eigen::Index n = A.rows();
    Mat Q = j.contains("Q") ? mat_from_json(j["Q"]) : Mat::Zero(n, n * n);
    Vec B = vec_from_json(j.at("B"));
    RowVec C = vec_from_json(j.at("C")).transpose();
    Vec x0 = j.contains("x0") ? vec_from_json(j["x0"]) : Vec::Zero(n);
    Mat E = j.contains("E") ? mat_from_json(j["E"]) : Mat();
    return make_system(A, Q, B, C, x0, E);
}

inline json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open " + path);
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw Error(path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    f << text;
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

// First line {"dc": value}, then one sample per line: {"order": k, "s": [[re, im], ...], "value": [re, im]}.
inline std::string measurements_to_jsonl(const MeasurementSet& ms) {
    std::ostringstream os;
    os << json{{"dc", ms.dc}}.dump() << "\n";
    for (int k = 1; k <= 3; ++k)
        for (const auto& g : ms.order(k)) {
            json s = json::array();
            for (cd z : g.s) s.push_back(to_json(z));
            os << json{{"order", g.order}, {"s", s}, {"value", to_json(g.value)}}.dump() << "\n";
        }
    return os.str();
}

inline MeasurementSet measurements_from_jsonl(std::istream& in) {
    MeasurementSet ms;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            if (j.contains("dc") && !j.contains("order")) {
                ms.dc = j["dc"].get<double>();
                continue;
            }
            GfrfSample g;
            g.order = j.at("order").get<int>();
            for (const auto& z : j.at("s")) g.s.push_back(cd_from_json(z));
            g.value = cd_from_json(j.at("value"));
            ms.add(std::move(g));
        } catch (const json::exception& e) {
            throw Error("measurements line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return ms;
}

inline MeasurementSet read_measurements(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open " + path);
    return measurements_from_jsonl(f);
}

// Plan JSON: {"tones": [{"amplitude", "freq", "kind"}], "settle_time", "window", "dt", "substeps", "tol", "max_order"}.
inline ProbePlan plan_from_json(const json& j) {
    ProbePlan p;
    if (j.contains("tones"))
        for (const auto& t : j["tones"]) {
            Tone tone{t.at("amplitude").get<double>(), t.at("freq").get<double>()};
            const std::string kind = t.value("kind", "complex");
            if (kind == "real")
                tone.kind = ToneKind::real;
            else if (kind != "complex")
                throw Error("unknown tone kind: " + kind);
            p.tones.push_back(tone);
        }
    p.settle_time = j.value("settle_time", p.settle_time);
    p.window = j.value("window", p.window);
    p.dt = j.value("dt", p.dt);
    p.substeps = j.value("substeps", p.substeps);
    p.tol = j.value("tol", p.tol);
    p.max_order = j.value("max_order", p.max_order);
    if (j.contains("x_init")) p.x_init = vec_from_json(j["x_init"]);
    return p;
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(15) << v;
    return os.str();
}

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) { row_strings(header); }

    void row(const std::vector<double>& values) {
        std::vector<std::string> s;
        for (double v : values) s.push_back(fmt(v));
        row_strings(s);
    }

    void row_strings(const std::vector<std::string>& values) {
        if (values.size() != cols_) throw DimensionError("csv row width mismatch");
        for (std::size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << values[i];
        os_ << "\n";
    }

    std::string str() const { return os_.str(); }
    void save(const std::string& path) const { write_text_file(path, str()); }

private:
    std::size_t cols_;
    std::ostringstream os_;
};

}  // namespace quadid
