// Command-line driver for the ladder decoherence experiments
//
//   spinecho forward|le|sweep|sp|onebody [model/evolution flags] [--out DIR]
//   spinecho fit --run runs/<id>
//   spinecho verify
//
// Exit status: 0 success, 1 numerical failure, 2 malformed flags or config.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spinecho/spinecho.hpp"

namespace fs = std::filesystem;
using namespace spinecho;

namespace {

struct Flags {
    std::string config;
    std::optional<int> m;
    bool ring{false};
    bool open{false};
    std::optional<double> alpha, jse, js, je, dt, tmax, tmin, disorder;
    std::optional<std::string> method, ensemble, schedule;
    std::optional<int> stride, realizations, length, points;
    std::optional<std::uint64_t> seed;
    std::optional<std::vector<double>> alphas, jses;
    std::optional<int> workers;
    std::string out{"."};
    // fit
    std::string run;
    std::optional<double> plateau, window_end;
    double onset{2.0};
    double guard{3.0};
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void add_model_flags(CLI::App* sub, Flags& f, bool sweep) {
    sub->add_option("--config", f.config, "JSON config file (flags override its values)");
    sub->add_option("--m", f.m, "rungs per leg (2..15)");
    auto* ring = sub->add_flag("--ring", f.ring, "periodic legs");
    auto* open = sub->add_flag("--open", f.open, "open legs");
    ring->excludes(open);
    sub->add_option("--alpha", f.alpha, "rung anisotropy alpha");
    if (!sweep) sub->add_option("--jse", f.jse, "system-environment coupling J_SE");
    sub->add_option("--js", f.js, "system leg coupling J_S");
    sub->add_option("--je", f.je, "environment leg coupling J_E");
    sub->add_option("--method", f.method, "exact | trotter2 | trotter4");
    sub->add_option("--dt", f.dt, "Trotter step and sampling unit");
    sub->add_option("--tmax", f.tmax, "final time (total echo time for le/sweep)");
    sub->add_option("--stride", f.stride, "samples every stride*dt on linear grids");
    sub->add_option("--schedule", f.schedule, "echo readout grid: log | linear");
    sub->add_option("--tmin", f.tmin, "first total time of the log grid");
    sub->add_option("--points", f.points, "points of the log grid");
    sub->add_option("--ensemble", f.ensemble, "exact | random");
    sub->add_option("--realizations", f.realizations, "random-phase realizations");
    sub->add_option("--seed", f.seed, "random-phase seed");
    sub->add_option("--alphas", f.alphas, "sweep alpha values")->delimiter(',');
    sub->add_option(sweep ? "--jse,--jses" : "--jses", f.jses, "sweep J_SE values")->delimiter(',');
    sub->add_option("--length", f.length, "chain length for sp");
    sub->add_option("--disorder", f.disorder, "binary-alloy site energy amplitude for onebody");
    sub->add_option("--workers", f.workers, "worker threads (default $SPINECHO_WORKERS or 1)");
    sub->add_option("--out", f.out, "output root; runs go to OUT/runs/<run_id>");
}

template <class T>
std::string show(const T& v) {
    return json(v).dump();
}

template <class T>
void apply(T& target, const std::optional<T>& flag, const std::string& path, const LoadedConfig& loaded,
           std::vector<std::string>& conflicts) {
    if (!flag) return;
    if (loaded.provided.contains(path) && !(target == *flag))
        conflicts.push_back(path + ": flag value " + show(*flag) + " overrides file value " + show(target));
    target = *flag;
}

struct Resolved {
    RunConfig config;
    std::vector<std::string> conflicts;
    int workers{1};
};

Resolved resolve(const Flags& f) {
    LoadedConfig loaded;
    if (!f.config.empty()) {
        try {
            loaded = load_config(f.config);
        } catch (const ConfigError& e) {
            throw UsageError(e.what());
        }
    }
    Resolved r;
    r.config = loaded.config;
    auto& c = r.config;
    auto& k = r.conflicts;
    apply(c.ladder.m, f.m, "model.m", loaded, k);
    if (f.ring || f.open) {
        std::optional<std::string> b = std::string(f.ring ? "ring" : "open");
        std::string current(to_string(c.ladder.boundary));
        apply(current, b, "model.boundary", loaded, k);
        c.ladder.boundary = f.ring ? Boundary::Ring : Boundary::Open;
    }
    apply(c.couplings.alpha, f.alpha, "model.alpha", loaded, k);
    apply(c.couplings.j_se, f.jse, "model.j_se", loaded, k);
    apply(c.couplings.j_s, f.js, "model.j_s", loaded, k);
    apply(c.couplings.j_e, f.je, "model.j_e", loaded, k);
    try {
        if (f.method) {
            std::string current(to_string(c.evolution.method));
            apply(current, f.method, "evolution.method", loaded, k);
            c.evolution.method = parse_method(*f.method);
        }
        if (f.ensemble) {
            std::string current(to_string(c.ensemble.mode));
            apply(current, f.ensemble, "ensemble.mode", loaded, k);
            c.ensemble.mode = parse_ensemble_mode(*f.ensemble);
        }
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    apply(c.evolution.dt, f.dt, "evolution.dt", loaded, k);
    apply(c.evolution.t_max, f.tmax, "evolution.t_max", loaded, k);
    apply(c.evolution.sample_stride, f.stride, "evolution.stride", loaded, k);
    apply(c.schedule.kind, f.schedule, "schedule.kind", loaded, k);
    apply(c.schedule.t_min, f.tmin, "schedule.t_min", loaded, k);
    apply(c.schedule.points, f.points, "schedule.points", loaded, k);
    apply(c.ensemble.n_realizations, f.realizations, "ensemble.realizations", loaded, k);
    apply(c.ensemble.seed, f.seed, "ensemble.seed", loaded, k);
    apply(c.alphas, f.alphas, "sweep.alphas", loaded, k);
    apply(c.j_ses, f.jses, "sweep.j_ses", loaded, k);
    apply(c.chain_length, f.length, "sp.length", loaded, k);
    apply(c.disorder, f.disorder, "onebody.disorder", loaded, k);

    auto problems = config_problems(c);
    if (!problems.empty()) throw UsageError(ConfigError(problems).what());
    r.workers = f.workers ? *f.workers : default_workers();
    if (r.workers < 1) throw UsageError("--workers: must be >= 1");
    return r;
}

// Collects library warnings for the manifest while still echoing them.
struct WarningLog {
    std::mutex mutex;
    std::vector<std::string> messages;

    void install() {
        set_warning_handler([this](std::string_view msg) {
            std::lock_guard lock(mutex);
            std::cerr << "warning: " << msg << '\n';
            messages.emplace_back(msg);
        });
    }
};

WarningLog g_warnings;

void print_series_summary(const std::string& name, const TimeSeries& s) {
    const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
    std::cout << std::left << std::setw(28) << name << std::right << std::setw(8) << s.size() << std::setw(14)
              << s.values.front() << std::setw(14) << s.values.back() << std::setw(14) << *lo << std::setw(14) << *hi
              << '\n';
}

void print_series_header() {
    std::cout << std::left << std::setw(28) << "series" << std::right << std::setw(8) << "points" << std::setw(14)
              << "first" << std::setw(14) << "last" << std::setw(14) << "min" << std::setw(14) << "max" << '\n';
}

class Run {
public:
    Run(std::string command, const Resolved& r, const std::string& out_root) {
        manifest_.command = std::move(command);
        manifest_.config = r.config;
        manifest_.conflicts = r.conflicts;
        manifest_.run_id = make_run_id(manifest_.command, r.config);
        manifest_.started = utc_timestamp();
        dir_ = run_directory(out_root, manifest_.run_id);
        for (const auto& c : r.conflicts) std::cerr << "note: " << c << '\n';
    }

    void add(const std::string& name, const TimeSeries& s, json labels = json::object()) {
        const std::string file = "series_" + name + ".csv";
        write_series_csv(dir_ / file, s, manifest_.run_id);
        manifest_.series.push_back({file, std::string(to_string(s.observable)), std::move(labels)});
        print_series_summary(name, s);
    }

    void finish(const json& report = nullptr) {
        manifest_.finished = utc_timestamp();
        json m = manifest_.to_json();
        m["warnings"] = g_warnings.messages;
        write_json(dir_ / "manifest.json", m);
        if (!report.is_null()) write_json(dir_ / "report.json", report);
        std::cout << "run: " << dir_.string() << '\n';
    }

    const fs::path& dir() const { return dir_; }

private:
    RunManifest manifest_;
    fs::path dir_;
};

int cmd_forward(const Flags& f) {
    const auto r = resolve(f);
    Run run("forward", r, f.out);
    const auto& c = r.config;
    const auto times = c.forward_times();
    print_series_header();
    run.add("p11", forward_p11(c.ladder, c.couplings, c.ensemble, c.evolution, times, r.workers));
    run.finish();
    return 0;
}

int cmd_le(const Flags& f) {
    const auto r = resolve(f);
    Run run("le", r, f.out);
    const auto& c = r.config;
    print_series_header();
    run.add("mle", loschmidt_echo(c.ladder, c.couplings, c.ensemble, c.echo_schedule(), c.evolution, r.workers),
            {{"alpha", c.couplings.alpha}, {"j_se", c.couplings.j_se}});
    run.finish();
    return 0;
}

int cmd_sweep(const Flags& f) {
    const auto r = resolve(f);
    Run run("sweep", r, f.out);
    const auto& c = r.config;
    const auto points =
        le_sweep(c.ladder, c.couplings, c.alphas, c.j_ses, c.echo_schedule(), c.ensemble, c.evolution, r.workers);
    json failures = json::array();
    print_series_header();
    for (const auto& p : points) {
        const std::string name = "a" + format_double(p.alpha) + "_j" + format_double(p.j_se);
        if (!p.error.empty()) {
            std::cerr << "error: " << name << ": " << p.error << '\n';
            failures.push_back({{"alpha", p.alpha}, {"j_se", p.j_se}, {"error", p.error}});
            continue;
        }
        run.add(name, p.series, {{"alpha", p.alpha}, {"j_se", p.j_se}});
    }
    run.finish(failures.empty() ? json(nullptr) : json{{"failures", failures}});
    return failures.size() == points.size() ? 1 : 0;
}

int cmd_sp(const Flags& f) {
    const auto r = resolve(f);
    Run run("sp", r, f.out);
    const auto& c = r.config;
    print_series_header();
    run.add("sp", sp_paradigm(c.couplings.j_se, c.couplings.j_e, c.chain_length, c.forward_times()),
            {{"j_se", c.couplings.j_se}, {"j_e", c.couplings.j_e}, {"length", c.chain_length}});
    run.finish();
    return 0;
}

int cmd_onebody(const Flags& f) {
    const auto r = resolve(f);
    Run run("onebody", r, f.out);
    const auto& c = r.config;
    const auto times = c.forward_times();
    print_series_header();
    if (c.disorder != 0.0) {
        DisorderSpec d;
        d.amplitude = c.disorder;
        d.exhaustive = c.ladder.m <= 16;
        d.seed = c.ensemble.seed;
        run.add("quenched_le", quenched_le(c.ladder.m, c.ladder.boundary, c.couplings.j_s, d, times));
        run.finish();
        return 0;
    }
    const auto s = onebody_return(HoppingMatrix::chain(c.ladder.m, c.couplings.j_e, c.ladder.boundary), times);
    run.add("p11", s);
    const auto echo = detect_meso_echo(s, c.ladder.m, c.couplings.j_e);
    json report{{"meso_echo",
                 {{"found", echo.found},
                  {"t_peak", echo.t_peak},
                  {"peak_value", echo.peak_value},
                  {"t_heisenberg_estimate", echo.t_heisenberg_estimate}}}};
    if (echo.found)
        std::cout << "mesoscopic echo: t = " << echo.t_peak << ", height " << echo.peak_value
                  << " (hbar/Delta = " << echo.t_heisenberg_estimate << ")\n";
    else
        std::cout << "mesoscopic echo: none above the prominence threshold\n";
    run.finish(report);
    return 0;
}

json rate_json(const RateFit& r) {
    return {{"sigma2", r.sigma2},       {"rate", r.rate},         {"rate_err", r.rate_err},
            {"window", {r.fit_window.first, r.fit_window.second}}, {"plateau", r.plateau},
            {"r2", r.r2},               {"n_samples", r.n_samples}};
}

int cmd_fit(const Flags& f) {
    const fs::path dir(f.run);
    const json manifest = read_json(dir / "manifest.json");
    const int m = manifest["config"]["model"]["m"].get<int>();
    const double j_e = manifest["config"]["model"]["j_e"].get<double>();
    const std::string command = manifest["command"].get<std::string>();

    json report{{"run_id", manifest["run_id"]}, {"fits", json::array()}};
    std::map<std::pair<double, double>, RateFit> rates;
    std::size_t failed = 0;
    std::cout << std::left << std::setw(32) << "series" << std::right << std::setw(14) << "sigma2" << std::setw(14)
              << "rate" << std::setw(12) << "rate_err" << std::setw(10) << "R2" << std::setw(18) << "window" << '\n';
    for (const auto& entry : manifest["series"]) {
        const auto file = entry["file"].get<std::string>();
        const auto csv = read_series_csv(dir / file);
        if (csv.run_id != manifest["run_id"].get<std::string>())
            std::cerr << "warning: " << file << " belongs to manifest " << csv.run_id << '\n';
        json item{{"file", file}, {"labels", entry["labels"]}};
        ExponentialFitOptions opt;
        opt.onset = f.onset;
        opt.plateau_guard = f.guard;
        opt.t_spread = 1.0 / std::abs(j_e);
        opt.window_end = f.window_end;
        if (f.plateau) opt.plateau = *f.plateau;
        else if (csv.series.observable != Observable::SP) opt.plateau = 1.0 / (2.0 * m);
        double sigma2 = std::numeric_limits<double>::quiet_NaN();
        try {
            sigma2 = fit_quadratic(csv.series);
        } catch (const FitError&) {
        }
        if (std::isfinite(sigma2)) item["sigma2"] = sigma2;
        try {
            auto rf = fit_exponential(csv.series, opt);
            rf.sigma2 = sigma2;
            item["fit"] = rate_json(rf);
            std::cout << std::left << std::setw(32) << file << std::right << std::setw(14) << sigma2 << std::setw(14)
                      << rf.rate << std::setw(12) << rf.rate_err << std::setw(10) << std::setprecision(5) << rf.r2
                      << std::setprecision(6) << std::setw(9) << rf.fit_window.first << std::setw(9)
                      << rf.fit_window.second << '\n';
            const auto& labels = entry["labels"];
            if (labels.contains("alpha") && labels.contains("j_se"))
                rates[{labels["alpha"].get<double>(), labels["j_se"].get<double>()}] = rf;
        } catch (const FitError& e) {
            ++failed;
            item["error"] = e.what();
            std::cout << std::left << std::setw(32) << file << std::right << std::setw(14) << sigma2
                      << "  exponential fit failed: " << e.what() << '\n';
        }
        report["fits"].push_back(item);
    }

    int status = failed == manifest["series"].size() ? 1 : 0;
    if (command == "sweep") {
        try {
            const auto d = fgr_decompose(rates, j_e);
            json per = json::array();
            std::cout << "\n" << std::setw(8) << "alpha" << std::setw(14) << "slope" << std::setw(12) << "slope_err"
                      << std::setw(14) << "1/tau_0" << std::setw(10) << "R2" << '\n';
            for (const auto& a : d.per_alpha) {
                per.push_back({{"alpha", a.alpha},
                               {"slope", a.slope},
                               {"slope_err", a.slope_err},
                               {"offset_rate", a.offset_rate},
                               {"offset_err", a.offset_err},
                               {"r2", a.r2},
                               {"n_points", a.n_points}});
                std::cout << std::setw(8) << a.alpha << std::setw(14) << a.slope << std::setw(12) << a.slope_err
                          << std::setw(14) << a.offset_rate << std::setw(10) << a.r2 << '\n';
            }
            report["decomposition"] = {{"per_alpha", per},
                                       {"xy", d.slope_xy},
                                       {"xy_err", d.slope_xy_err},
                                       {"zz", d.slope_zz},
                                       {"zz_err", d.slope_zz_err},
                                       {"alpha_r2", d.alpha_r2}};
            std::cout << "XY coefficient " << d.slope_xy << " +/- " << d.slope_xy_err << "\nZZ coefficient "
                      << d.slope_zz << " +/- " << d.slope_zz_err << "\nalpha^2 fit R2 " << d.alpha_r2 << '\n';
        } catch (const FitError& e) {
            std::cerr << "error: decomposition failed: " << e.what() << '\n';
            report["decomposition_error"] = e.what();
            status = 1;
        }
    }
    write_json(dir / "report.json", report);
    std::cout << "report: " << (dir / "report.json").string() << '\n';
    return status;
}

int cmd_verify() {
    struct Check {
        std::string name;
        double error;
        double tolerance;
    };
    std::vector<Check> checks;

    {
        const LadderSpec spec{3, Boundary::Ring};
        const auto h = total_hamiltonian(spec, Couplings{1.0, 1.0, 0.3, 0.7});
        const auto psi = random_phase_state(spec, 11, 0);
        const Eigen::VectorXcd dense = dense_matrix(h).cast<cplx>() * psi.amplitudes();
        checks.push_back({"dense vs matrix-free H|psi> (m=3 ring)",
                          (dense - apply_terms(psi, h).amplitudes()).cwiseAbs().maxCoeff(), 1e-12});
    }
    {
        const LadderSpec spec{3, Boundary::Open};
        const auto h = total_hamiltonian(spec, Couplings{1.0, 1.0, 0.3, 1.0});
        const auto psi = random_phase_state(spec, 5, 0);
        const SpectralPropagator exact(h, 14);
        const TrotterPropagator trotter(h, Method::Trotter4, 0.01);
        const auto a = exact.evolve(psi, 2.0), b = trotter.evolve(psi, 2.0);
        checks.push_back({"trotter4 (dt=0.01) vs exact, t=2 (m=3 open)",
                          (a.amplitudes() - b.amplitudes()).norm(), 1e-6});
    }
    {
        const LadderSpec spec{5, Boundary::Ring};
        Couplings c;
        c.j_se = 0.0;
        const auto times = linear_grid(0.5, 20.0);
        const auto mb = forward_p11(spec, c, {}, {}, times);
        const auto ob = onebody_return(HoppingMatrix::chain(5, c.j_s, Boundary::Ring), times);
        double err = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) err = std::max(err, std::abs(mb.values[i] - ob.values[i]));
        checks.push_back({"many-body P11 (J_SE=0) vs one-body return (m=5 ring)", err, 1e-10});
    }
    {
        const LadderSpec spec{3, Boundary::Open};
        const double alpha = 1.0, j_se = 0.5;
        HamiltonianTerms ising{spec.n_sites(), {}};
        for (const auto& t : build_rungs(spec, j_se, alpha).terms)
            if (t.kind == TermKind::ZZBond) ising.terms.push_back(t);
        auto fwd = build_leg(spec, 1.0, Leg::System) + ising;
        auto bwd = fwd.scaled_stage(Stage::SystemLeg, -1.0);
        const auto times = linear_grid(1.0, 10.0);
        const SpectralPropagator pf(fwd, 14), pb(bwd, 14);
        const auto mb = exact_trace_curve(pf, &pb, times, 1, 1, Observable::MLE);
        DisorderSpec d;
        d.amplitude = alpha * j_se;
        const auto ob = quenched_le(3, Boundary::Open, 1.0, d, times);
        double err = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) err = std::max(err, std::abs(mb.values[i] - ob.values[i]));
        checks.push_back({"many-body Ising-only echo vs quenched one-body echo (m=3 open)", err, 1e-8});
    }

    bool ok = true;
    for (const auto& c : checks) {
        const bool pass = c.error <= c.tolerance;
        ok = ok && pass;
        std::cout << (pass ? "PASS " : "FAIL ") << c.name << ": error " << c.error << " (tolerance " << c.tolerance
                  << ")\n";
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spin-ladder echo and decoherence simulator", "spinecho"};
    app.require_subcommand(1);
    Flags f;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, desc] : std::vector<std::pair<std::string, std::string>>{
             {"forward", "forward polarization autocorrelation P11(t)"},
             {"le", "Loschmidt echo M_LE(t) at total times t = 2 t_R"},
             {"sweep", "echo curves over the alpha x J_SE grid"},
             {"sp", "survival probability of a spin attached to a long XY chain"},
             {"onebody", "single-excitation return probability or quenched-disorder echo"}}) {
        subs[name] = app.add_subcommand(name, desc);
        add_model_flags(subs[name], f, name == "sweep");
    }
    auto* fit = app.add_subcommand("fit", "fit decay regimes of a run and decompose sweep rates");
    fit->add_option("--run", f.run, "run directory")->required()->check(CLI::ExistingDirectory);
    fit->add_option("--plateau", f.plateau, "plateau level (default 1/(2m) for ladder runs, tail mean otherwise)");
    fit->add_option("--onset", f.onset, "first time of the exponential window");
    fit->add_option("--guard", f.guard, "window ends where the curve falls below guard * plateau");
    fit->add_option("--tend", f.window_end, "hard cap on the window end");
    subs["fit"] = fit;
    subs["verify"] = app.add_subcommand("verify", "oracle cross-checks; nonzero exit on failure");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    g_warnings.install();
    std::cout << std::setprecision(6);
    try {
        if (subs["forward"]->parsed()) return cmd_forward(f);
        if (subs["le"]->parsed()) return cmd_le(f);
        if (subs["sweep"]->parsed()) return cmd_sweep(f);
        if (subs["sp"]->parsed()) return cmd_sp(f);
        if (subs["onebody"]->parsed()) return cmd_onebody(f);
        if (subs["fit"]->parsed()) return cmd_fit(f);
        if (subs["verify"]->parsed()) return cmd_verify();
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
