// Command-line surface for the speed-function laboratory: class
// certification, pinching-inequality search, derivative-oracle validation,
// and the two flow experiments.  Every run is fully determined by
// (config, seed); reports are JSON, traces CSV.

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "curvflow/class_check.hpp"
#include "curvflow/flow.hpp"
#include "curvflow/json_io.hpp"
#include "curvflow/matfun.hpp"
#include "curvflow/pde.hpp"
#include "curvflow/pinch.hpp"

namespace {

using curvflow::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitViolation = 2;
constexpr int kExitStepLimit = 3;

struct SpeedArgs {
    std::string speed;
    std::string speed_json;
    std::string speed_file;
    int n = 0;

    curvflow::SpeedFunction build() const {
        int sources = 0;
        sources += !speed.empty();
        sources += !speed_json.empty();
        sources += !speed_file.empty();
        if (sources != 1)
            throw curvflow::InvalidSpec("give the speed exactly once (--speed, --speed-json or --speed-file)");
        if (!speed_file.empty()) {
            std::ifstream in(speed_file);
            if (!in) throw curvflow::InvalidSpec("cannot open speed file: " + speed_file);
            std::stringstream ss;
            ss << in.rdbuf();
            return curvflow::speed_from_string(ss.str(), n);
        }
        if (!speed_json.empty()) return curvflow::speed_from_string(speed_json, n);
        return curvflow::speed_from_string(speed, n);
    }
};

void add_speed_options(CLI::App* cmd, SpeedArgs& args) {
    cmd->add_option("--speed", args.speed, "speed shorthand (power-mean:r, elem-sym:k, sym-quotient:k,l, geo-mix:a1,..,an) or inline JSON");
    cmd->add_option("--speed-json", args.speed_json, "speed descriptor as a JSON string");
    cmd->add_option("--speed-file", args.speed_file, "path to a JSON speed descriptor");
    cmd->add_option("--n", args.n, "number of arguments of the speed");
}

// --config file keys override flags of the same name
json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw curvflow::InvalidSpec("cannot open config file: " + path);
    return json::parse(in);
}

template <class T>
void cfg_get(const json& cfg, const char* key, T& out) {
    if (cfg.contains(key)) out = cfg.at(key).get<T>();
}

void emit(const json& report, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << report.dump(2) << '\n';
    } else {
        std::ofstream os(out_path);
        os << report.dump(2) << '\n';
    }
}

curvflow::FlowShape parse_shape(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    std::vector<double> a;
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) a.push_back(std::stod(tok));
    }
    if (head == "sphere" && a.size() == 1) return curvflow::FlowShape::sphere(a[0]);
    if (head == "ellipsoid" && a.size() == 2) return curvflow::FlowShape::ellipsoid(a[0], a[1]);
    if (head == "perturbed" && a.size() == 3)
        return curvflow::FlowShape::perturbed(a[0], a[1], static_cast<int>(a[2]));
    throw curvflow::InvalidSpec("bad shape: want sphere:R | ellipsoid:a,b | perturbed:R,amplitude,mode");
}

int run_check_class(const SpeedArgs& sa, long samples, double tol, std::uint64_t seed,
                    const std::string& out) {
    const curvflow::SpeedFunction f = sa.build();
    if (samples < 1) throw curvflow::InvalidSpec("--samples must be >= 1");
    const curvflow::ClassReport rep = curvflow::check_class(f, samples, tol, seed);
    emit(curvflow::class_report_to_json(f, rep), out);
    return rep.in_class() ? kExitOk : kExitViolation;
}

int run_verify_pinch(const SpeedArgs& sa, long trials, double tol, double gap_min, std::uint64_t seed,
                     const std::string& out) {
    const curvflow::SpeedFunction f = sa.build();
    if (trials < 1) throw curvflow::InvalidSpec("--trials must be >= 1");
    const int n = sa.n > 0 ? sa.n : f.arity();
    const curvflow::VerifyReport rep = curvflow::verify(f, n, trials, seed, tol, gap_min);
    emit(curvflow::verify_report_to_json(f, rep), out);
    return rep.passed() ? kExitOk : kExitViolation;
}

struct FlowArgs {
    std::string shape = "sphere:1";
    int grid = 128;
    double cfl = 0.2;
    double stop_inradius = 0.0;
    long max_steps = 2000000;
    int record_every = 20;
    double record_dt = 0.0;
    double sphere_err_threshold = 0.01;
    double pinch_drop_tol = 1e-6;
    std::string csv, out, profile_csv;
    int profile_every = 0;
};

int run_flow_cmd(const SpeedArgs& sa, const FlowArgs& fa) {
    const curvflow::SpeedFunction f = sa.build();
    curvflow::FlowConfig cfg;
    cfg.shape = parse_shape(fa.shape);
    cfg.n = sa.n > 0 ? sa.n : f.arity();
    cfg.N = fa.grid;
    cfg.cfl = fa.cfl;
    cfg.stop_inradius = fa.stop_inradius;
    cfg.max_steps = fa.max_steps;
    cfg.record_every = fa.record_every;
    cfg.record_dt = fa.record_dt;

    std::ostringstream profile;
    long sample_count = 0;
    if (fa.profile_every > 0) {
        cfg.on_sample = [&](const curvflow::FlowState& st) {
            if (sample_count % fa.profile_every == 0)
                curvflow::profile_to_csv(st, profile, sample_count == 0);
            ++sample_count;
        };
    }

    curvflow::FlowTrace trace;
    try {
        trace = curvflow::run_flow(f, cfg);
    } catch (const curvflow::NonConvexShape& e) {
        std::cerr << "convexity rejected at t=0: " << e.what() << '\n';
        return kExitViolation;
    }

    double worst_drop = 0.0;
    for (std::size_t i = 1; i < trace.samples.size(); ++i)
        worst_drop = std::max(worst_drop,
                              trace.samples[i - 1].pinch_ratio - trace.samples[i].pinch_ratio);

    json rep = curvflow::flow_trace_to_json(trace);
    rep["config"] = {{"f", curvflow::speed_to_json(f)}, {"n", cfg.n},      {"shape", fa.shape},
                     {"grid", cfg.N},                   {"cfl", cfg.cfl},  {"stop_inradius", cfg.stop_inradius},
                     {"max_steps", cfg.max_steps},      {"record_every", cfg.record_every},
                     {"record_dt", cfg.record_dt}};
    rep["worst_pinch_drop"] = worst_drop;
    rep["final_roundness"] = trace.samples.back().roundness;
    rep["final_rescaled_err"] = trace.samples.back().rescaled_err;
    emit(rep, fa.out);
    if (!fa.csv.empty()) {
        std::ofstream os(fa.csv);
        curvflow::flow_trace_to_csv(trace, os);
    }
    if (fa.profile_every > 0 && !fa.profile_csv.empty()) {
        std::ofstream os(fa.profile_csv);
        os << profile.str();
    }

    if (trace.status == curvflow::FlowTrace::Status::ConvexityLost) return kExitViolation;
    if (trace.status == curvflow::FlowTrace::Status::StepLimit) return kExitStepLimit;
    if (worst_drop > fa.pinch_drop_tol) return kExitViolation;
    if (trace.samples.back().rescaled_err >= fa.sphere_err_threshold) return kExitViolation;
    return kExitOk;
}

struct PdeArgs {
    int grid = 65;
    double bump = 0.1;
    double epsilon0 = 0.0;
    double dt_factor = 0.8;
    double t_end = 0.1;
    int record_every = 5;
    double tol_drift = 1e-6;
    std::string csv, out;
};

int run_pde_cmd(const SpeedArgs& sa, const PdeArgs& pa) {
    const curvflow::SpeedFunction f = sa.build();
    curvflow::PdeConfig cfg;
    cfg.M = pa.grid;
    cfg.bump = pa.bump;
    cfg.epsilon0 = pa.epsilon0;
    cfg.dt_factor = pa.dt_factor;
    cfg.t_end = pa.t_end;
    cfg.record_every = pa.record_every;
    cfg.tol_drift = pa.tol_drift;
    const curvflow::PdeTrace trace = curvflow::run_pde(f, cfg);
    json rep = curvflow::pde_trace_to_json(trace);
    rep["config"] = {{"f", curvflow::speed_to_json(f)}, {"grid", cfg.M},
                     {"bump", cfg.bump},                {"epsilon0", cfg.epsilon0},
                     {"dt_factor", cfg.dt_factor},      {"t_end", cfg.t_end},
                     {"record_every", cfg.record_every}, {"tol_drift", cfg.tol_drift}};
    emit(rep, pa.out);
    if (!pa.csv.empty()) {
        std::ofstream os(pa.csv);
        curvflow::pde_trace_to_csv(trace, os);
    }
    return trace.status == curvflow::PdeTrace::Status::Completed ? kExitOk : kExitViolation;
}

struct CalculusArgs {
    long trials = 500;
    std::uint64_t seed = 0;
    double gap = 1e-3;
    double h1 = 1e-5;
    double h2 = 1e-4;
    double tol_d1 = 1e-6;
    double tol_d2 = 1e-4;
    std::string out;
};

// seeded random orthogonal matrix by Gram-Schmidt on a Gaussian matrix
std::vector<double> random_orthogonal(int n, curvflow::SplitMix64& rng) {
    std::vector<double> q(static_cast<std::size_t>(n) * n);
    for (int col = 0; col < n; ++col) {
        for (int i = 0; i < n; ++i) q[static_cast<std::size_t>(col) * n + i] = rng.normal();
        for (int prev = 0; prev < col; ++prev) {
            double dot = 0.0;
            for (int i = 0; i < n; ++i)
                dot += q[static_cast<std::size_t>(col) * n + i] * q[static_cast<std::size_t>(prev) * n + i];
            for (int i = 0; i < n; ++i)
                q[static_cast<std::size_t>(col) * n + i] -= dot * q[static_cast<std::size_t>(prev) * n + i];
        }
        double norm = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = q[static_cast<std::size_t>(col) * n + i];
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (int i = 0; i < n; ++i) q[static_cast<std::size_t>(col) * n + i] /= norm;
    }
    return q;
}

int run_calculus(const SpeedArgs& sa, const CalculusArgs& ca) {
    const curvflow::SpeedFunction f = sa.build();
    if (ca.trials < 1) throw curvflow::InvalidSpec("--trials must be >= 1");
    const int n = f.arity();

    double max_r1 = 0.0, max_r2 = 0.0;
    for (long t = 0; t < ca.trials; ++t) {
        curvflow::SplitMix64 rng = curvflow::rng_stream(ca.seed, static_cast<std::uint64_t>(t));
        // spectrum in [0.5, 5] with consecutive gaps at least `gap`
        std::vector<double> lam(n);
        for (int i = 0; i < n; ++i) lam[i] = rng.uniform(0.5, 5.0);
        std::sort(lam.begin(), lam.end());
        for (int i = 1; i < n; ++i)
            if (lam[i] - lam[i - 1] < ca.gap) lam[i] = lam[i - 1] + ca.gap;
        const auto q = random_orthogonal(n, rng);
        curvflow::SymMatrix A(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double s = 0.0;
                for (int k = 0; k < n; ++k)
                    s += q[static_cast<std::size_t>(k) * n + i] * lam[k] * q[static_cast<std::size_t>(k) * n + j];
                A.at(i, j) = s;
            }
        curvflow::SymMatrix B(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) B.at(i, j) = rng.normal();
        B.scale(1.0 / std::max(B.frobenius(), 1e-300));

        const curvflow::SymMatrix g = curvflow::dF(f, A);
        double directional = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) directional += g(i, j) * B(i, j);
        curvflow::SymMatrix Ap = A, Am = A;
        Ap.add_scaled(B, ca.h1);
        Am.add_scaled(B, -ca.h1);
        const double fd1 = (curvflow::evalF(f, Ap) - curvflow::evalF(f, Am)) / (2.0 * ca.h1);
        max_r1 = std::max(max_r1, std::abs(directional - fd1) / std::max(1.0, std::abs(fd1)));

        const double quad = curvflow::d2F_quadform(f, A, B);
        curvflow::SymMatrix Ap2 = A, Am2 = A;
        Ap2.add_scaled(B, ca.h2);
        Am2.add_scaled(B, -ca.h2);
        const double fd2 =
            (curvflow::evalF(f, Ap2) - 2.0 * curvflow::evalF(f, A) + curvflow::evalF(f, Am2)) /
            (ca.h2 * ca.h2);
        max_r2 = std::max(max_r2, std::abs(quad - fd2) / std::max(1.0, std::abs(fd2)));
    }

    json rep;
    rep["f"] = curvflow::speed_to_json(f);
    rep["trials"] = ca.trials;
    rep["seed"] = ca.seed;
    rep["gap"] = ca.gap;
    rep["max_dF_residual"] = max_r1;
    rep["max_d2F_residual"] = max_r2;
    rep["tol_dF"] = ca.tol_d1;
    rep["tol_d2F"] = ca.tol_d2;
    const bool ok = max_r1 <= ca.tol_d1 && max_r2 <= ca.tol_d2;
    rep["passed"] = ok;
    emit(rep, ca.out);
    return ok ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"curvature speed-function laboratory"};
    app.require_subcommand(1);

    SpeedArgs sa;
    std::string config_path;

    // check-class
    auto* cc = app.add_subcommand("check-class", "certify class membership by seeded sampling");
    SpeedArgs cc_sa;
    long cc_samples = 1000;
    double cc_tol = 1e-9;
    std::uint64_t cc_seed = 0;
    std::string cc_out, cc_config;
    add_speed_options(cc, cc_sa);
    cc->add_option("--samples", cc_samples, "sample count");
    cc->add_option("--tol", cc_tol, "eigenvalue sign tolerance");
    cc->add_option("--seed", cc_seed, "RNG seed");
    cc->add_option("--out", cc_out, "write the JSON report here instead of stdout");
    cc->add_option("--config", cc_config, "JSON config file overriding flags");

    // verify-pinch
    auto* vp = app.add_subcommand("verify-pinch", "Monte-Carlo search for pinching-inequality violations");
    SpeedArgs vp_sa;
    long vp_trials = 100000;
    double vp_tol = 1e-9, vp_gap = 1e-4;
    std::uint64_t vp_seed = 0;
    std::string vp_out, vp_config;
    add_speed_options(vp, vp_sa);
    vp->add_option("--trials", vp_trials, "instance count");
    vp->add_option("--tol", vp_tol, "violation tolerance on normalized Q");
    vp->add_option("--gap-min", vp_gap, "minimum relative eigenvalue gap");
    vp->add_option("--seed", vp_seed, "RNG seed");
    vp->add_option("--out", vp_out, "write the JSON report here instead of stdout");
    vp->add_option("--config", vp_config, "JSON config file overriding flags");

    // flow
    auto* fl = app.add_subcommand("flow", "contract an axisymmetric convex hypersurface");
    SpeedArgs fl_sa;
    FlowArgs fl_args;
    std::string fl_config;
    add_speed_options(fl, fl_sa);
    fl->add_option("--shape", fl_args.shape, "sphere:R | ellipsoid:a,b | perturbed:R,amplitude,mode");
    fl->add_option("--grid", fl_args.grid, "polar grid size N");
    fl->add_option("--cfl", fl_args.cfl, "parabolic step factor");
    fl->add_option("--stop-inradius", fl_args.stop_inradius, "absolute stop threshold (0 = 2% of initial)");
    fl->add_option("--max-steps", fl_args.max_steps, "step limit");
    fl->add_option("--record-every", fl_args.record_every, "sample cadence in steps");
    fl->add_option("--record-dt", fl_args.record_dt, "sample cadence in time (overrides --record-every)");
    fl->add_option("--sphere-err-threshold", fl_args.sphere_err_threshold, "acceptable final rescaled error");
    fl->add_option("--pinch-drop-tol", fl_args.pinch_drop_tol, "acceptable per-sample pinch-ratio drop");
    fl->add_option("--csv", fl_args.csv, "trace CSV path");
    fl->add_option("--out", fl_args.out, "summary JSON path (default stdout)");
    fl->add_option("--profile-csv", fl_args.profile_csv, "profile snapshot CSV path");
    fl->add_option("--profile-every", fl_args.profile_every, "emit a profile every k samples (0 = off)");
    fl->add_option("--config", fl_config, "JSON config file overriding flags");

    // pde
    auto* pd = app.add_subcommand("pde", "fully nonlinear parabolic run with convexity monitor");
    SpeedArgs pd_sa;
    PdeArgs pd_args;
    std::string pd_config;
    add_speed_options(pd, pd_sa);
    pd->add_option("--grid", pd_args.grid, "nodes per side M");
    pd->add_option("--bump", pd_args.bump, "interior perturbation amplitude");
    pd->add_option("--epsilon0", pd_args.epsilon0, "required initial Hessian lower bound (0 = measured)");
    pd->add_option("--dt-factor", pd_args.dt_factor, "multiple of the parabolic step bound");
    pd->add_option("--t-end", pd_args.t_end, "final time");
    pd->add_option("--record-every", pd_args.record_every, "sample cadence in steps");
    pd->add_option("--tol-drift", pd_args.tol_drift, "acceptable monitor drift");
    pd->add_option("--csv", pd_args.csv, "trace CSV path");
    pd->add_option("--out", pd_args.out, "summary JSON path (default stdout)");
    pd->add_option("--config", pd_config, "JSON config file overriding flags");

    // calculus
    auto* ca = app.add_subcommand("calculus", "finite-difference validation of dF and d2F");
    SpeedArgs ca_sa;
    CalculusArgs ca_args;
    std::string ca_config;
    add_speed_options(ca, ca_sa);
    ca->add_option("--trials", ca_args.trials, "matrix pair count");
    ca->add_option("--seed", ca_args.seed, "RNG seed");
    ca->add_option("--gap", ca_args.gap, "minimum eigenvalue gap of the sampled spectra");
    ca->add_option("--h1", ca_args.h1, "first-derivative step");
    ca->add_option("--h2", ca_args.h2, "second-derivative step");
    ca->add_option("--tol-d1", ca_args.tol_d1, "dF residual tolerance");
    ca->add_option("--tol-d2", ca_args.tol_d2, "d2F residual tolerance");
    ca->add_option("--out", ca_args.out, "report JSON path (default stdout)");
    ca->add_option("--config", ca_config, "JSON config file overriding flags");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (cc->parsed()) {
            if (!cc_config.empty()) {
                const json cfg = load_config(cc_config);
                cfg_get(cfg, "speed", cc_sa.speed);
                cfg_get(cfg, "n", cc_sa.n);
                cfg_get(cfg, "samples", cc_samples);
                cfg_get(cfg, "tol", cc_tol);
                cfg_get(cfg, "seed", cc_seed);
                cfg_get(cfg, "out", cc_out);
            }
            return run_check_class(cc_sa, cc_samples, cc_tol, cc_seed, cc_out);
        }
        if (vp->parsed()) {
            if (!vp_config.empty()) {
                const json cfg = load_config(vp_config);
                cfg_get(cfg, "speed", vp_sa.speed);
                cfg_get(cfg, "n", vp_sa.n);
                cfg_get(cfg, "trials", vp_trials);
                cfg_get(cfg, "tol", vp_tol);
                cfg_get(cfg, "gap_min", vp_gap);
                cfg_get(cfg, "seed", vp_seed);
                cfg_get(cfg, "out", vp_out);
            }
            return run_verify_pinch(vp_sa, vp_trials, vp_tol, vp_gap, vp_seed, vp_out);
        }
        if (fl->parsed()) {
            if (!fl_config.empty()) {
                const json cfg = load_config(fl_config);
                cfg_get(cfg, "speed", fl_sa.speed);
                cfg_get(cfg, "n", fl_sa.n);
                cfg_get(cfg, "shape", fl_args.shape);
                cfg_get(cfg, "grid", fl_args.grid);
                cfg_get(cfg, "cfl", fl_args.cfl);
                cfg_get(cfg, "stop_inradius", fl_args.stop_inradius);
                cfg_get(cfg, "max_steps", fl_args.max_steps);
                cfg_get(cfg, "record_every", fl_args.record_every);
                cfg_get(cfg, "record_dt", fl_args.record_dt);
                cfg_get(cfg, "csv", fl_args.csv);
                cfg_get(cfg, "out", fl_args.out);
            }
            return run_flow_cmd(fl_sa, fl_args);
        }
        if (pd->parsed()) {
            if (!pd_config.empty()) {
                const json cfg = load_config(pd_config);
                cfg_get(cfg, "speed", pd_sa.speed);
                cfg_get(cfg, "n", pd_sa.n);
                cfg_get(cfg, "grid", pd_args.grid);
                cfg_get(cfg, "bump", pd_args.bump);
                cfg_get(cfg, "epsilon0", pd_args.epsilon0);
                cfg_get(cfg, "dt_factor", pd_args.dt_factor);
                cfg_get(cfg, "t_end", pd_args.t_end);
                cfg_get(cfg, "csv", pd_args.csv);
                cfg_get(cfg, "out", pd_args.out);
            }
            return run_pde_cmd(pd_sa, pd_args);
        }
        if (ca->parsed()) {
            if (!ca_config.empty()) {
                const json cfg = load_config(ca_config);
                cfg_get(cfg, "speed", ca_sa.speed);
                cfg_get(cfg, "n", ca_sa.n);
                cfg_get(cfg, "trials", ca_args.trials);
                cfg_get(cfg, "seed", ca_args.seed);
                cfg_get(cfg, "gap", ca_args.gap);
                cfg_get(cfg, "out", ca_args.out);
            }
            return run_calculus(ca_sa, ca_args);
        }
    } catch (const curvflow::InvalidSpec& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const curvflow::ArityMismatch& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const curvflow::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitViolation;
    }
    return kExitUsage;
}
