#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "quadid/repro.hpp"

using namespace quadid;

namespace {

struct Globals {
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    std::optional<double> tol;
};

std::string out_path(const Globals& g, const std::string& p) {
    const std::filesystem::path path(p);
    if (path.is_absolute()) return p;
    std::filesystem::create_directories(g.out_dir);
    return (std::filesystem::path(g.out_dir) / path).string();
}

json grids_to_json(const FrequencyGrids& g) {
    json j;
    j["h1"] = json::array();
    for (cd s : g.h1) j["h1"].push_back(to_json(s));
    j["h2"] = json::array();
    for (const auto& t : g.h2) j["h2"].push_back({to_json(t[0]), to_json(t[1])});
    j["h3"] = json::array();
    for (const auto& t : g.h3) j["h3"].push_back({to_json(t[0]), to_json(t[1]), to_json(t[2])});
    return j;
}

FrequencyGrids grids_from_json(const json& j) {
    FrequencyGrids g;
    for (const auto& s : j.value("h1", json::array())) g.h1.push_back(cd_from_json(s));
    for (const auto& t : j.value("h2", json::array())) g.h2.push_back({cd_from_json(t.at(0)), cd_from_json(t.at(1))});
    for (const auto& t : j.value("h3", json::array())) g.h3.push_back({cd_from_json(t.at(0)), cd_from_json(t.at(1)), cd_from_json(t.at(2))});
    return g;
}

QuadraticSystem make_bench(const std::string& name, double sigma, double rho, double beta, double nu, double s0, double s1, int n) {
    if (name == "linear_intro") return make_linear_intro();
    if (name == "quad_toy") return make_quad_toy();
    if (name == "lorenz") return make_lorenz(sigma, rho, beta);
    if (name == "burgers") return make_burgers(nu, s0, s1, n);
    throw Error("unknown benchmark name: " + name);
}

MeasurementSet probe_by_plan(const QuadraticSystem& sys, const json& pj, const ProbePlan& plan) {
    MeasurementSet ms;
    if (plan.tones.empty()) throw Error("plan has no tones");
    if (pj.contains("amplitudes")) {
        if (plan.tones.size() != 1 || plan.tones[0].kind != ToneKind::real) throw Error("an amplitude sweep needs exactly one real tone");
        const double f = plan.tones[0].freq;
        const auto sw = probe_real_amplitude_sweep(sys, f, pj["amplitudes"].get<std::vector<double>>(), plan);
        const cd s(0.0, 2.0 * M_PI * f);
        ms.dc = sw.dc;
        ms.add({1, {s}, sw.h1});
        ms.add({2, {s, s}, sw.h2});
        return ms;
    }
    if (plan.tones.size() == 1 && plan.tones[0].kind == ToneKind::complex) {
        const auto k = probe_complex_single(sys, plan.tones[0].amplitude, plan.tones[0].freq, plan);
        const cd s(0.0, 2.0 * M_PI * plan.tones[0].freq);
        ms.dc = k.dc;
        ms.add({1, {s}, k.h1});
        if (plan.max_order >= 2) ms.add({2, {s, s}, k.h2});
        if (plan.max_order >= 3) ms.add({3, {s, s, s}, k.h3});
        return ms;
    }
    SpectrumEstimate est;
    for (auto& g : probe_complex_multi(sys, plan.tones, plan, &est)) ms.add_unique(std::move(g));
    ms.dc = est.dc;
    return ms;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quadid: identification of quadratic control systems from GFRF samples"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "seed for every random draw");
    app.add_option("--out-dir", g.out_dir, "directory for outputs and relative --out paths");
    app.add_option("--tol", g.tol, "Loewner order tolerance override");

    auto* bench = app.add_subcommand("bench", "built-in systems and frequency grids");
    bench->require_subcommand(1);
    auto* make = bench->add_subcommand("make", "write a benchmark system as JSON");
    std::string bname, bout;
    double sigma = 10.0, rho = 0.5, beta = 8.0 / 3.0, nu = 0.5, s0 = 0.0, s1 = 0.1;
    int bn = 129;
    make->add_option("--name", bname, "linear_intro | quad_toy | lorenz | burgers")->required();
    make->add_option("--out", bout, "output JSON")->required();
    make->add_option("--sigma", sigma);
    make->add_option("--rho", rho);
    make->add_option("--beta", beta);
    make->add_option("--nu", nu);
    make->add_option("--sigma0", s0);
    make->add_option("--sigma1", s1);
    make->add_option("--n", bn, "Burgers grid size");
    auto* grids = bench->add_subcommand("grids", "write the frequency grids of an experiment");
    std::string gname, gout;
    grids->add_option("--name", gname, "linear_intro | quad_toy | lorenz | burgers")->required();
    grids->add_option("--out", gout, "output JSON")->required();

    auto* probe = app.add_subcommand("probe", "measure GFRF samples");
    std::string psys, pplan, pgrids, pout;
    double pdc = 0.0;
    bool closed = false;
    probe->add_option("--system", psys, "system JSON")->required();
    probe->add_option("--plan", pplan, "probe plan JSON (time-domain probing)");
    probe->add_flag("--closed-form", closed, "sample the kernels in closed form instead of probing");
    probe->add_option("--grids", pgrids, "grid JSON or a benchmark name, for --closed-form");
    probe->add_option("--dc", pdc, "DC term recorded with closed-form samples");
    probe->add_option("--out", pout, "measurements JSONL")->required();

    auto* realize_cmd = app.add_subcommand("realize", "Loewner realization of the H1 samples");
    std::string rmeas, rout;
    std::optional<int> rorder;
    realize_cmd->add_option("--measurements", rmeas)->required();
    realize_cmd->add_option("--order", rorder, "fixed order instead of the revealed one");
    realize_cmd->add_option("--out", rout, "linear model JSON")->required();

    auto* identify = app.add_subcommand("identify", "identify a quadratic model from H1..H3 samples");
    std::string imeas, iout, iout0, ireport;
    std::optional<int> iorder;
    double ieta = 1e-8, igamma0 = 1e-10;
    int iseeds = 5;
    identify->add_option("--measurements", imeas)->required();
    identify->add_option("--order", iorder);
    identify->add_option("--eta", ieta, "null-space threshold of the H2 stage");
    identify->add_option("--gamma0", igamma0, "Newton residual target");
    identify->add_option("--seeds", iseeds, "Newton starting points");
    identify->add_option("--report", ireport, "stage report JSON");
    identify->add_option("--out", iout, "model JSON")->required();
    identify->add_option("--out-q0", iout0, "model with the H2-only quadratic term");

    auto* equil = app.add_subcommand("equilibrium", "recover the global model from a local one");
    std::string esys, eout;
    double edc = 0.0;
    equil->add_option("--system", esys, "local model JSON")->required();
    equil->add_option("--dc", edc, "measured DC term")->required();
    equil->add_option("--out", eout, "global model JSON")->required();

    auto* align = app.add_subcommand("align", "bring a model into the coordinates of a reference");
    std::string aref, asys, aout;
    bool qbc = false;
    align->add_option("--reference", aref)->required();
    align->add_option("--system", asys)->required();
    align->add_flag("--qbc", qbc, "refine with the constrained quadratic matrix equation");
    align->add_option("--out", aout, "aligned model JSON")->required();

    auto* repro = app.add_subcommand("repro", "run a reproduction profile");
    std::string profile;
    bool via_probing = false;
    int rn = 129;
    repro->add_option("--profile", profile, "linear_intro | quad_toy | lorenz_case1 | lorenz_case2 | burgers | all")->required();
    repro->add_flag("--via-probing", via_probing, "acquire data in the time domain where the profile supports it");
    repro->add_option("--n", rn, "Burgers grid size");

    CLI11_PARSE(app, argc, argv);

    try {
        if (make->parsed()) {
            write_json_file(out_path(g, bout), system_to_json(make_bench(bname, sigma, rho, beta, nu, s0, s1, bn)));
        } else if (grids->parsed()) {
            write_json_file(out_path(g, gout), grids_to_json(benchmark_grids(gname)));
        } else if (probe->parsed()) {
            const QuadraticSystem sys = system_from_json(read_json_file(psys));
            MeasurementSet ms;
            if (closed) {
                if (pgrids.empty()) throw Error("--closed-form needs --grids");
                const FrequencyGrids fg = std::filesystem::exists(pgrids) ? grids_from_json(read_json_file(pgrids)) : benchmark_grids(pgrids);
                ms = sample_kernels(GfrfEvaluator(sys), fg, pdc);
            } else {
                if (pplan.empty()) throw Error("probing needs --plan (or use --closed-form)");
                const json pj = read_json_file(pplan);
                ms = probe_by_plan(sys, pj, plan_from_json(pj));
            }
            write_text_file(out_path(g, pout), measurements_to_jsonl(ms));
        } else if (realize_cmd->parsed()) {
            InferOptions io;
            io.order = rorder;
            io.order_tol = g.tol.value_or(io.order_tol);
            const RealizedLinear lin = realize_from_h1(read_measurements(rmeas).h1(), io);
            json j = system_to_json(lin.system());
            j["singular_values"] = to_json(lin.singular_values);
            write_json_file(out_path(g, rout), j);
            std::cout << "order " << lin.r << "\n";
        } else if (identify->parsed()) {
            InferOptions io;
            io.order = iorder;
            io.order_tol = g.tol.value_or(io.order_tol);
            io.eta_h2 = ieta;
            io.seeds = iseeds;
            io.newton.gamma0 = igamma0;
            io.seed = g.seed;
            const MeasurementSet ms = read_measurements(imeas);
            const InferenceResult res = infer_quadratic(ms, io);
            json j = system_to_json(res.model);
            j["dc"] = ms.dc;
            j["rank"] = res.pq.rank;
            j["m"] = res.pq.m;
            if (res.newton) j["newton_residual"] = res.newton->best.residual;
            write_json_file(out_path(g, iout), j);
            if (!iout0.empty()) write_json_file(out_path(g, iout0), system_to_json(res.model_q0));
            if (!ireport.empty()) {
                json rep;
                rep["seed"] = g.seed;
                rep["stages"] = json::array();
                for (const auto& st : res.stages) rep["stages"].push_back({{"name", st.name}, {"seconds", st.seconds}, {"scalars", st.scalars}});
                if (res.newton) {
                    rep["newton_runs"] = json::array();
                    for (const auto& run : res.newton->runs)
                        rep["newton_runs"].push_back({{"stop", run.stop}, {"residual", run.residual}, {"history", run.history}});
                }
                write_json_file(out_path(g, ireport), rep);
            }
            std::cout << "order " << res.linear.r << ", rank " << res.pq.rank << ", m " << res.pq.m << "\n";
        } else if (equil->parsed()) {
            const QuadraticSystem local = system_from_json(read_json_file(esys));
            const EquilibriumSolution eq = solve_equilibrium(local, edc, 5, g.seed);
            json j = system_to_json(globalize(local, eq));
            j["x_e"] = to_json(eq.x_e);
            j["residual"] = eq.residual;
            write_json_file(out_path(g, eout), j);
        } else if (align->parsed()) {
            const QuadraticSystem ref = system_from_json(read_json_file(aref));
            const QuadraticSystem sys = system_from_json(read_json_file(asys));
            Mat T = observability_transform(ref, sys);
            json extra = json::object();
            if (qbc) {
                QbcOptions qo;
                qo.seed = g.seed;
                const AlignmentResult ar = align_qbc_newton(triplet(ref), triplet(sys), T, qo);
                T = ar.T;
                extra["qbc_residual"] = qbc_residual(T, triplet(ref), triplet(sys)).norm();
                extra["qbc_iterations"] = ar.iterations;
            }
            json j = system_to_json(apply_transform(sys, T.inverse()));
            j["transform"] = to_json(T);
            j["operator_error"] = operator_error(apply_transform(sys, T.inverse()), ref);
            j.update(extra);
            write_json_file(out_path(g, aout), j);
        } else if (repro->parsed()) {
            ReproOptions ro;
            ro.seed = g.seed;
            ro.via_probing = via_probing;
            ro.burgers_n = rn;
            ro.tol = g.tol;
            ro.out_dir = g.out_dir;
            std::vector<std::string> profiles;
            if (profile == "all")
                profiles = profile_names();
            else if (std::find(profile_names().begin(), profile_names().end(), profile) != profile_names().end())
                profiles = {profile};
            else
                throw Error("unknown profile: " + profile);
            bool ok = true;
            for (const auto& p : profiles) {
                const RunReport rep = run_reproduction(p, ro);
                std::cout << "[" << p << "]\n" << rep.verdict_table();
                ok = ok && rep.ok();
            }
            return ok ? 0 : 1;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
