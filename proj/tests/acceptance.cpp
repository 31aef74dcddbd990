// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <comblambda/comblambda.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <sys/wait.h>

#ifndef COMBLAMBDA_CLI
#define COMBLAMBDA_CLI "comblambda"
#endif

using namespace comblambda;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

real population_diff(const DensityMatrix& a, const DensityMatrix& b)
{
    real d = 0.0;
    for (int l = 1; l <= 3; ++l) d = std::max(d, std::abs(a.population(l) - b.population(l)));
    return d;
}

Outcome trace_conservation()
{
    real worst = 0.0;
    std::string where;
    auto note = [&](const std::string& name, const Trajectory& t) {
        if (t.max_trace_drift() > worst || where.empty()) {
            worst = std::max(worst, t.max_trace_drift());
            where = name;
        }
    };
    for (const auto& name : preset_names()) {
        const auto p = *find_preset(name);
        note(name, run_preset(p, {}));
    }
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<real> u01(0.0, 1.0);
    std::uniform_int_distribution<int> pulses(2, 8), kinds(0, 2);
    const modulation_kind kind_of[] = {modulation_kind::none, modulation_kind::sine, modulation_kind::cosine};
    for (int i = 0; i < 100; ++i) {
        ScenarioPreset p = preset_fig4();
        p.cfg.OmegaR = u01(rng);
        p.cfg.N = pulses(rng);
        p.cfg.modulation.kind = kind_of[kinds(rng)];
        p.cfg.modulation.Phi0 = 6.0 * u01(rng);
        p.cfg.phi = 2 * pi * u01(rng);
        p.rates.gamma21 = 0.01 * u01(rng);
        p.rates.gamma23 = 0.01 * u01(rng);
        p.rates.Gamma21 = 0.01 * u01(rng);
        p.rates.Gamma31 = 0.01 * u01(rng);
        p.rates.Gamma23 = p.rates.Gamma21 + p.rates.Gamma31;
        note("random#" + std::to_string(i), run_preset(p, {}));
    }
    return {worst <= 1e-6, fmt("max |trace-1| = %.3g over 7 presets + 100 random configs", worst)};
}

Outcome free_evolution_oracle()
{
    ScenarioPreset p = preset_fig6(modulation_kind::sine);
    p.cfg.OmegaR = 0.0;
    p.cfg.N = 4;
    p.rates = {0.01, 0.02, 0.005, 0.002, 0.007};
    auto rho0 = DensityMatrix::diagonal(0.5, 0.3, 0.2);
    rho0.set_coherence(1, 2, {0.1, -0.05});
    rho0.set_coherence(1, 3, {0.05, 0.12});
    rho0.set_coherence(2, 3, {-0.08, 0.02});
    const auto traj = propagate(rho0, p.cfg, p.sys, p.rates, {});
    const std::size_t n = traj.size();
    real worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const std::size_t i = (n - 1) * static_cast<std::size_t>(k + 1) / 20;
        const auto oracle = free_evolution(rho0, traj.times[i] - traj.times.front(), p.rates);
        worst = std::max(worst, (traj.states[i] - oracle).max_abs());
    }
    return {worst <= 1e-9, fmt("max element error %.3g at 20 times", worst)};
}

Outcome rabi_oracle()
{
    const LevelSystem sys(1.0, 20.0, 19.0);
    PulseTrainConfig cfg;
    cfg.omegaL = 1.0;
    cfg.OmegaR = 0.01;
    cfg.tau = 200.0;
    cfg.T = 2500.0;
    cfg.N = 1;
    IntegratorConfig ic;
    ic.step_in_pulse = 0.005;
    ic.sampler_stride = 2000;
    const auto traj = propagate(DensityMatrix::pure_state(1), cfg, sys, {}, ic);
    real worst = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const real s = traj.times[i];
        const real area = cfg.OmegaR * cfg.tau * std::sqrt(pi / 2) *
                          (1.0 + std::erf(s / (std::sqrt(2.0) * cfg.tau)));
        worst = std::max(worst, std::abs(traj.states[i].rho22() - std::pow(std::sin(area), 2)));
    }
    return {worst < 0.02, fmt("max |rho22 - sin^2(area)| = %.4f (OmegaR/omegaL = 0.01)", worst)};
}

Outcome fig5_yields()
{
    const auto c = compare_runs({preset_fig5(false), preset_fig5(true)}, {});
    const real a = c.rows[0].yield, b = c.rows[1].yield;
    const bool ok = std::abs(a - 0.38) <= 0.05 && std::abs(b - 0.45) <= 0.05 && a < b;
    return {ok, fmt("collisions %.4f (0.38+-0.05, %d pulses), +spontaneous %.4f (0.45+-0.05, %d pulses)",
                    a, c.rows[0].pulses_run, b, c.rows[1].pulses_run)};
}

Outcome fig4_transfer()
{
    const auto cal = calibrate_transfer();
    const auto& b = cal.best;
    const bool frozen = b.tau_fs == calibrated_tau_fs && std::abs(b.T - calibrated_T) < 1e-9 &&
                        b.peak_pulse == calibrated_N;
    const auto s = summarize("fig4", run_preset(preset_fig4(), {}));
    const bool ok = frozen && s.yield > 0.95 && s.transfer_pulse >= 98 && s.transfer_pulse <= 120 &&
                    s.max_rho22 < 0.15;
    return {ok, fmt("calibration tau=%gfs T=%.4f N=%d (%s, %zu feasible of %zu); "
                    "rho33=%.4f transfer=%d max rho22=%.4f",
                    b.tau_fs, b.T, b.peak_pulse, frozen ? "matches preset" : "DIFFERS from preset",
                    cal.feasible, cal.scanned, s.yield, s.transfer_pulse, s.max_rho22)};
}

Outcome fig6_parity()
{
    const auto c = compare_runs({preset_fig6(modulation_kind::sine), preset_fig6(modulation_kind::cosine),
                                 preset_fig6(modulation_kind::none)},
                                {});
    const auto &sin = c.rows[0], &cos = c.rows[1], &std_ = c.rows[2];
    const bool sin_ok = sin.yield >= 0.8;
    const bool cos_ok = std::abs(cos.final_rho11 - 0.5) <= 0.1 && std::abs(cos.yield - 0.5) <= 0.1;
    const bool order = sin.yield > cos.yield && sin.yield > std_.yield;
    return {sin_ok && cos_ok && order,
            fmt("sine rho33=%.4f [%s]; cosine rho11=%.4f rho33=%.4f [%s]; standard rho33=%.4f; ordering [%s]",
                sin.yield, sin_ok ? "ok" : "fail", cos.final_rho11, cos.yield, cos_ok ? "ok" : "fail",
                std_.yield, order ? "ok" : "fail")};
}

Outcome comb_structure()
{
    const auto plain = surrogate_train(modulation_kind::none, 32);
    const auto sine = surrogate_train(modulation_kind::sine, 32);
    const auto plain64 = surrogate_train(modulation_kind::none, 64);
    const auto a = analyze_comb(plain, comb_sample_rate(plain));
    const auto b = analyze_comb(sine, comb_sample_rate(sine));
    const auto d = analyze_comb(plain64, comb_sample_rate(plain64));
    const real half_bin = a.spectrum.native_resolution() / 2;
    const bool modes = a.report.mode_deviation < half_bin && b.report.mode_deviation < half_bin;
    const bool sets = b.report.modulated && b.report.set_deviation < half_bin;
    const real ratio = d.fwhm / a.fwhm;
    const bool width = std::abs(ratio - 0.5) <= 0.05;
    return {modes && sets && width,
            fmt("mode spacing error %.3g, set spacing error %.3g (half bin %.3g); FWHM ratio N64/N32 = %.4f",
                std::max(a.report.mode_deviation, b.report.mode_deviation), b.report.set_deviation,
                half_bin, ratio)};
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string("\"") + COMBLAMBDA_CLI + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome rate_validator()
{
    bool ok = validate_rates({0, 0, 0.001, 0.0, 0.001}, rate_mode::enforce).valid &&
              validate_rates({0, 0, 0.001, 0.001, 0.002}, rate_mode::enforce).valid;
    real deviation = 0.0;
    bool threw = false;
    try {
        validate_rates({0, 0, 0.001, 0.001, 0.001}, rate_mode::enforce);
    } catch (const simulation_error& e) {
        threw = e.kind() == error_kind::rate_relation_violation;
    }
    deviation = validate_rates({0, 0, 0.001, 0.001, 0.001}, rate_mode::warn).deviation;
    ok = ok && threw && std::abs(deviation + 0.001) < 1e-15;
    const int code = run_cli("run -s fig5 --set rates.Gamma23=0.002");
    ok = ok && code == 4;
    return {ok, fmt("examples valid/valid/violation (deviation %.3g); cli fig5 with Gamma23=0.002 exit %d",
                    deviation, code)};
}

Outcome convergence()
{
    ScenarioPreset p = preset_fig4();
    p.cfg.N = 20;
    IntegratorConfig base;
    const auto ref = run_preset(p, base).final_state();
    IntegratorConfig half = base;
    half.step_in_pulse = 0.5 * default_step(p.cfg, p.sys);
    const real d_step = population_diff(run_preset(p, half).final_state(), ref);
    IntegratorConfig wide = base;
    wide.window_sigmas = 8.0;
    const real d_window = population_diff(run_preset(p, wide).final_state(), ref);
    return {d_step < 1e-6 && d_window < 1e-6,
            fmt("step halving %.3g, window 6->8 %.3g", d_step, d_window)};
}

} // namespace

int main()
{
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"trace conservation", trace_conservation},
        {"free-evolution oracle", free_evolution_oracle},
        {"two-level Rabi oracle", rabi_oracle},
        {"standard comb yields with dephasing", fig5_yields},
        {"modulated comb transfer", fig4_transfer},
        {"modulation parity", fig6_parity},
        {"comb spectrum structure", comb_structure},
        {"rate-relation validator", rate_validator},
        {"convergence", convergence},
    };
    int failed = 0, index = 0;
    for (const auto& [name, check] : criteria) {
        ++index;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", index, name,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    std::printf("%d of %d criteria passed\n", index - failed, index);
    return failed ? 1 : 0;
}
