// Command-line driver: run presets or config files, sweep parameters,
// analyse comb spectra, check rates and rerun the transfer calibration.

#include <CLI11.hpp>

#include <comblambda/comblambda.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace comblambda;

namespace {

enum exit_code { ok = 0, failure = 1, config_error = 2, integration_error = 3, rate_violation = 4 };

int exit_for(error_kind k)
{
    switch (k) {
    case error_kind::invalid_argument:
    case error_kind::config: return config_error;
    case error_kind::rate_relation_violation: return rate_violation;
    default: return integration_error;
    }
}

struct Common {
    std::string scenario = "custom";
    std::string config_path;
    std::vector<std::string> sets;
    std::string convention = "angular";

    void add_to(CLI::App* app)
    {
        app->add_option("-s,--scenario", scenario, "preset name or config file");
        app->add_option("-c,--config", config_path, "config file (key = value)");
        app->add_option("--set", sets, "override, key=value (repeatable)");
        app->add_option("--convention", convention, "THz reading: angular or ordinary")
            ->check(CLI::IsMember({"angular", "ordinary"}));
    }

    RunConfig resolve() const
    {
        RunConfig rc;
        if (!config_path.empty()) rc = load_config(config_path);
        else if (find_preset(scenario))
            rc = base_config(scenario, *parse_convention(convention));
        else rc = resolve_scenario(scenario);
        for (const auto& s : sets) {
            auto [k, v] = split_assignment(s);
            apply_override(rc, k, v);
        }
        return rc;
    }
};

void warn(const std::vector<std::string>& warnings)
{
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

SpectrumResult run_spectrum(const PulseTrainConfig& full)
{
    PulseTrainConfig cfg = full;
    cfg.N = std::min(cfg.N, 32);
    const real rate = comb_sample_rate(cfg);
    if (cfg.N * cfg.T * rate > 5e7)
        throw simulation_error(error_kind::config, "train too long to sample for a spectrum");
    return compute_spectrum(sample_train(cfg, rate));
}

int cmd_run(const Common& common, const std::string& out_dir, const std::string& emit_list,
            bool dump)
{
    RunConfig rc = common.resolve();
    if (dump) {
        std::cout << dump_config(rc);
        return ok;
    }
    std::set<std::string> emit;
    {
        std::stringstream ss(emit_list);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!trim(item).empty()) emit.insert(trim(item));
    }
    for (const auto& e : emit)
        if (e != "timeseries" && e != "summary" && e != "spectrum" && e != "plotdata")
            throw simulation_error(error_kind::config, "unknown emit target '" + e + "'");

    const RateReport report = validate_rates(rc.preset.rates, rc.rates_mode);
    if (!report.valid) std::cerr << "warning: " << report.message << "\n";
    warn(rc.preset.cfg.validate());

    const ScenarioPreset& p = rc.preset;
    Trajectory traj = propagate(p.rho0, p.cfg, p.sys, p.rates, rc.effective_integrator());
    const RunSummary s = summarize(p.name, traj);

    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    if (emit.count("timeseries")) write_text(out / "timeseries.csv", timeseries_csv(traj));
    if (emit.count("summary")) write_text(out / "summary.txt", summary_text(rc, s));
    if (emit.count("spectrum")) write_text(out / "spectrum.csv", spectrum_csv(run_spectrum(p.cfg)));
    if (emit.count("plotdata")) write_plotdata(out / "plotdata", traj);

    std::printf("%s: yield=%.6f max_rho22=%.6f transfer_pulse=%d trace_max_drift=%.3g\n",
                p.name.c_str(), s.yield, s.max_rho22, s.transfer_pulse, s.trace_max_drift);
    return ok;
}

int cmd_sweep(const Common& common, const std::string& axis1, const std::string& axis2,
              const std::string& objective, std::size_t cap, const std::string& out_dir)
{
    RunConfig rc = common.resolve();
    SweepSpec spec;
    spec.axis1 = parse_axis(axis1);
    if (!axis2.empty()) spec.axis2 = parse_axis(axis2);
    auto obj = parse_objective(objective);
    if (!obj) throw simulation_error(error_kind::config, "unknown objective '" + objective + "'");
    spec.objective = *obj;
    spec.cap = cap;
    const auto rows = run_sweep(rc, spec);
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "sweep.csv", sweep_csv(spec, rows));
    std::size_t failed = 0;
    for (const auto& r : rows) failed += !r.error.empty();
    std::printf("%zu points, %zu failed\n", rows.size(), failed);
    return ok;
}

int cmd_spectrum(const Common& common, bool surrogate, const std::string& kind, int N,
                 real threshold, const std::string& out_dir)
{
    PulseTrainConfig cfg;
    if (surrogate) {
        auto k = parse_modulation(kind);
        if (!k) throw simulation_error(error_kind::config, "unknown modulation '" + kind + "'");
        cfg = surrogate_train(*k, N);
    } else {
        cfg = common.resolve().preset.cfg;
    }
    const CombAnalysis a = analyze_comb(cfg, comb_sample_rate(cfg), threshold);
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "spectrum.csv", spectrum_csv(a.spectrum));
    const std::string text = a.report.to_text() + "fwhm=" + format_real(a.fwhm) + "\n";
    write_text(fs::path(out_dir) / "structure.txt", text);
    std::cout << text;
    return a.report.pass ? ok : failure;
}

int cmd_validate_rates(const Common& common, const std::string& mode_text)
{
    RunConfig rc = common.resolve();
    auto mode = parse_rate_mode(mode_text);
    if (!mode) throw simulation_error(error_kind::config, "unknown mode '" + mode_text + "'");
    const RateReport r = validate_rates(rc.preset.rates, *mode);
    std::printf("valid=%s\ndeviation=%s\nmode=%s\n", r.valid ? "true" : "false",
                format_real(r.deviation).c_str(), to_string(r.mode));
    return ok;
}

int cmd_calibrate(const CalibrationOptions& opt)
{
    const CalibrationResult r = calibrate_transfer(opt);
    const auto& b = r.best;
    std::printf("tau_fs=%s\ntau=%s\nT=%s\nN=%d\ntransfer_pulse=%d\npeak_rho33=%s\n"
                "max_rho22_pulse_ends=%s\nfeasible=%zu\nscanned=%zu\n",
                format_real(b.tau_fs).c_str(), format_real(b.tau).c_str(),
                format_real(b.T).c_str(), b.peak_pulse, b.transfer_pulse,
                format_real(b.peak_rho33).c_str(), format_real(b.max_rho22).c_str(), r.feasible,
                r.scanned);
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Three-level Lambda system driven by optical frequency combs"};
    app.require_subcommand(1);

    Common common;
    std::string out_dir = "out";

    auto* run = app.add_subcommand("run", "propagate one scenario");
    common.add_to(run);
    std::string emit = "summary";
    bool dump = false;
    run->add_option("-o,--out", out_dir, "output directory");
    run->add_option("--emit", emit, "comma list of timeseries,summary,spectrum,plotdata");
    run->add_flag("--dump-config", dump, "print the resolved configuration and exit");

    auto* sweep = app.add_subcommand("sweep", "run a parameter grid");
    Common sweep_common;
    sweep_common.add_to(sweep);
    std::string axis1, axis2, objective = "final_yield", sweep_out = "out";
    std::size_t cap = default_grid_cap;
    sweep->add_option("--axis", axis1, "key=v1,v2,... or key=linspace(a,b,n)")->required();
    sweep->add_option("--axis2", axis2, "optional second axis");
    sweep->add_option("--objective", objective, "final_yield, steady_yield or max_rho22");
    sweep->add_option("--cap", cap, "maximum grid size");
    sweep->add_option("-o,--out", sweep_out, "output directory");

    auto* spectrum = app.add_subcommand("spectrum", "comb spectrum and structure report");
    Common spec_common;
    spec_common.add_to(spectrum);
    bool surrogate = false;
    std::string kind = "sine", spec_out = "out";
    int spec_n = 32;
    real threshold = 0.01;
    spectrum->add_flag("--surrogate", surrogate, "use the desk-scale surrogate train");
    spectrum->add_option("--modulation", kind, "surrogate modulation: none, sine, cosine");
    spectrum->add_option("--pulses", spec_n, "surrogate pulse count");
    spectrum->add_option("--threshold", threshold, "peak threshold, fraction of the maximum");
    spectrum->add_option("-o,--out", spec_out, "output directory");

    auto* rates = app.add_subcommand("validate-rates", "check Gamma23 = Gamma21 + Gamma31");
    Common rates_common;
    rates_common.add_to(rates);
    std::string mode = "enforce";
    rates->add_option("--mode", mode, "enforce, warn or off");

    auto* calib = app.add_subcommand("calibrate-fig4", "rescan (tau, T) for the fig4 preset");
    CalibrationOptions copt;
    calib->add_option("--T-step", copt.T_step, "period grid step");
    calib->add_option("--T-max", copt.T_max, "largest period");
    calib->add_option("--pulses", copt.pulses, "pulses per candidate");
    calib->add_option("--threads", copt.threads, "worker threads (0 = all cores)");

    auto* list = app.add_subcommand("list-scenarios", "print preset names");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(common, out_dir, emit, dump);
        if (*sweep) return cmd_sweep(sweep_common, axis1, axis2, objective, cap, sweep_out);
        if (*spectrum) return cmd_spectrum(spec_common, surrogate, kind, spec_n, threshold, spec_out);
        if (*rates) return cmd_validate_rates(rates_common, mode);
        if (*calib) return cmd_calibrate(copt);
        if (*list) {
            for (const auto& n : preset_names()) {
                const auto p = *find_preset(n);
                std::printf("%-8s N=%d tau=%s T=%s modulation=%s\n", n.c_str(), p.cfg.N,
                            format_real(p.cfg.tau).c_str(), format_real(p.cfg.T).c_str(),
                            to_string(p.cfg.modulation.kind));
            }
            return ok;
        }
    } catch (const simulation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failure;
    }
    return ok;
}
