#pragma once

#include <chrono>
#include <deque>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "io.hpp"

namespace quadid {

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

struct Verdict {
    std::string name;
    double measured = 0.0;
    std::string target;
    bool pass = false;
    bool timing = false;
};

struct ReportStage {
    std::string name;
    std::string digest;
    std::map<std::string, double> scalars;
    double seconds = 0.0;
    std::string error;
};

struct RunReport {
    std::string profile;
    std::uint64_t seed = 0;
    std::deque<ReportStage> stages;
    std::vector<Verdict> verdicts;

    bool ok() const {
        for (const auto& s : stages)
            if (!s.error.empty()) return false;
        for (const auto& v : verdicts)
            if (!v.pass) return false;
        return true;
    }

    ReportStage& stage(const std::string& name, const std::string& inputs = "") {
        stages.push_back({name, sha256_hex(inputs), {}, 0.0, {}});
        return stages.back();
    }

    bool check(const std::string& name, double measured, const std::string& target, bool pass) {
        verdicts.push_back({name, measured, target, pass});
        return pass;
    }

    bool check_le(const std::string& name, double measured, double bound) {
        return check(name, measured, "<= " + fmt(bound), measured <= bound);
    }

    bool check_runtime(const std::string& name, double seconds, double bound) {
        verdicts.push_back({name, seconds, "<= " + fmt(bound), seconds <= bound, true});
        return seconds <= bound;
    }

    bool check_near(const std::string& name, double measured, double target, double tol) {
        return check(name, measured, fmt(target) + " +- " + fmt(tol), std::abs(measured - target) <= tol);
    }

    // Timings are left out when `with_times` is false so reruns compare equal.
    json to_json(bool with_times = true) const {
        json j;
        j["profile"] = profile;
        j["seed"] = seed;
        j["ok"] = ok();
        json st = json::array();
        for (const auto& s : stages) {
            json e{{"name", s.name}, {"inputs_sha256", s.digest}};
            json sc = json::object();
            for (const auto& [k, v] : s.scalars) sc[k] = fmt(v);
            e["scalars"] = sc;
            if (with_times) e["seconds"] = s.seconds;
            if (!s.error.empty()) e["error"] = s.error;
            st.push_back(e);
        }
        j["stages"] = st;
        json vs = json::array();
        for (const auto& v : verdicts) {
            json e{{"name", v.name}, {"target", v.target}, {"pass", v.pass}};
            if (with_times || !v.timing) e["measured"] = fmt(v.measured);
            vs.push_back(e);
        }
        j["verdicts"] = vs;
        return j;
    }

    std::string verdict_table() const {
        std::ostringstream os;
        for (const auto& v : verdicts)
            os << v.name << " " << v.target << ": " << (v.pass ? "PASS" : "FAIL") << " (measured " << fmt(v.measured) << ")\n";
        for (const auto& s : stages)
            if (!s.error.empty()) os << "stage " << s.name << " failed: " << s.error << "\n";
        return os.str();
    }
};

class ScopedStage {
public:
    explicit ScopedStage(ReportStage& s) : s_(s), t0_(std::chrono::steady_clock::now()) {}
    ~ScopedStage() { s_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }
    ReportStage& operator*() { return s_; }
    ReportStage* operator->() { return &s_; }

private:
    ReportStage& s_;
    std::chrono::steady_clock::time_point t0_;
};

}  // namespace quadid
