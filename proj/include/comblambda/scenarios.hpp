#pragma once

// Figure presets, the dephasing-rate relation check, side-by-side runs and
// the (tau, T) calibration scan for the modulated-comb transfer preset.

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "core.hpp"
#include "dynamics.hpp"
#include "field.hpp"

namespace comblambda {

/// How quoted THz values meet absolute times (tau in fs, 1/f_r in ps).
/// `angular` reads X THz as X * 10^12 rad/s; `ordinary` as X * 10^12 Hz,
/// which multiplies every converted time by 2 pi.
enum class unit_convention { angular, ordinary };

inline const char* to_string(unit_convention c)
{
    return c == unit_convention::ordinary ? "ordinary" : "angular";
}

inline std::optional<unit_convention> parse_convention(const std::string& s)
{
    if (s == "angular") return unit_convention::angular;
    if (s == "ordinary") return unit_convention::ordinary;
    return std::nullopt;
}

/// Target values of a preset. Unset fields are not checked.
struct Expectation {
    std::optional<real> yield;
    real yield_tol = 0.05;
    std::optional<real> yield_min;
    std::optional<real> rho11;
    real rho11_tol = 0.1;
    std::optional<int> transfer_pulse;
    int transfer_min = 0;
    int transfer_max = 0;
    std::optional<real> max_rho22_below;
    std::optional<real> max_rho22_above;

    bool operator==(const Expectation&) const = default;
};

struct ScenarioPreset {
    std::string name;
    real unit_thz = 1.0; // reference frequency in THz
    unit_convention convention = unit_convention::angular;
    LevelSystem sys{2.0, 3.0, 1.0};
    PulseTrainConfig cfg;
    DecoherenceRates rates;
    DensityMatrix rho0 = DensityMatrix::pure_state(1);
    int early_stop_pulses = 0;
    Expectation expected;
    std::string notes;

    real run_length(real window_sigmas = default_window_sigmas) const
    {
        return default_t_end(cfg, window_sigmas) - default_t_start(cfg, window_sigmas);
    }

    bool operator==(const ScenarioPreset&) const = default;
};

namespace detail {

/// KRb system with omega21 = 309.3, omega32 = 434.8 THz in units of 125.5 THz.
inline ScenarioPreset standard_comb_base(unit_convention conv)
{
    const FrequencyUnit unit = FrequencyUnit::from_thz(125.5);
    ScenarioPreset p;
    p.unit_thz = 125.5;
    p.convention = conv;
    const real w21 = unit.frequency_from_thz(309.3);
    const real w32 = unit.frequency_from_thz(434.8);
    p.sys = LevelSystem(w21, w32, w32 - w21);
    p.cfg.omegaL = w32;
    p.cfg.tau = unit.time_from_seconds(3e-15, conv == unit_convention::ordinary);
    p.cfg.T = unit.time_from_seconds(1.0 / 5e9, conv == unit_convention::ordinary);
    p.cfg.N = 3200;
    p.early_stop_pulses = 50;
    return p;
}

/// KRb system with omega21 = 340.7, omega32 = 410.7 THz in units of 70 THz,
/// sine-modulated at Omega = omega21 with Phi0 = 4 and OmegaR = 70 THz.
/// tau and T come from calibrate_transfer(); see calibrated_tau/T.
inline ScenarioPreset modulated_comb_base(unit_convention conv);

} // namespace detail

/// Result of the transfer calibration under the angular convention, frozen
/// here so presets need not rerun the scan.
inline constexpr real calibrated_tau_fs = 3.0;
inline constexpr real calibrated_T = 96.583;
inline constexpr int calibrated_N = 135;

inline ScenarioPreset detail::modulated_comb_base(unit_convention conv)
{
    const FrequencyUnit unit = FrequencyUnit::from_thz(70.0);
    ScenarioPreset p;
    p.unit_thz = 70.0;
    p.convention = conv;
    const real w21 = unit.frequency_from_thz(340.7);
    const real w32 = unit.frequency_from_thz(410.7);
    p.sys = LevelSystem(w21, w32, w32 - w21);
    p.cfg.omegaL = w32;
    p.cfg.OmegaR = unit.frequency_from_thz(70.0);
    p.cfg.tau = unit.time_from_seconds(calibrated_tau_fs * 1e-15, conv == unit_convention::ordinary);
    p.cfg.T = calibrated_T;
    p.cfg.N = calibrated_N;
    p.cfg.modulation = {modulation_kind::sine, 4.0, w21};
    p.cfg.envelope_prefactor = 0.5;
    p.cfg.frame = frame_phase::absolute;
    p.notes = "tau, T and N from calibrate_transfer (angular convention)";
    return p;
}

inline ScenarioPreset preset_fig3(unit_convention conv = unit_convention::angular)
{
    ScenarioPreset p = detail::standard_comb_base(conv);
    p.name = "fig3";
    p.cfg.OmegaR = 1.26 / 125.5;
    p.expected.max_rho22_above = 0.3;
    return p;
}

inline ScenarioPreset preset_fig4(unit_convention conv = unit_convention::angular)
{
    ScenarioPreset p = detail::modulated_comb_base(conv);
    p.name = "fig4";
    p.expected.yield_min = 0.95;
    p.expected.transfer_pulse = 109;
    p.expected.transfer_min = 98;
    p.expected.transfer_max = 120;
    p.expected.max_rho22_below = 0.15;
    return p;
}

inline ScenarioPreset preset_fig5(bool with_spontaneous,
                                  unit_convention conv = unit_convention::angular)
{
    ScenarioPreset p = detail::standard_comb_base(conv);
    p.name = with_spontaneous ? "fig5sp" : "fig5";
    p.cfg.OmegaR = 12.6 / 125.5;
    p.rates.Gamma21 = 0.001;
    p.rates.Gamma23 = 0.001;
    p.rates.Gamma31 = 0.0;
    if (with_spontaneous) {
        p.rates.gamma21 = 0.001;
        p.rates.gamma23 = 0.001;
    }
    p.expected.yield = with_spontaneous ? 0.45 : 0.38;
    p.expected.yield_tol = 0.05;
    return p;
}

inline ScenarioPreset preset_fig6(modulation_kind kind,
                                  unit_convention conv = unit_convention::angular)
{
    ScenarioPreset p = detail::modulated_comb_base(conv);
    p.rates = {0.001, 0.001, 0.001, 0.0, 0.001};
    switch (kind) {
    case modulation_kind::sine:
        p.name = "fig6sin";
        p.expected.yield_min = 0.8;
        break;
    case modulation_kind::cosine:
        p.name = "fig6cos";
        p.cfg.modulation.kind = modulation_kind::cosine;
        p.expected.yield = 0.5;
        p.expected.yield_tol = 0.1;
        p.expected.rho11 = 0.5;
        p.expected.rho11_tol = 0.1;
        break;
    case modulation_kind::none:
        p.name = "fig6std";
        p.cfg.modulation = {};
        p.cfg.envelope_prefactor = 1.0;
        break;
    }
    return p;
}

inline const std::vector<std::string>& preset_names()
{
    static const std::vector<std::string> names{"fig3",  "fig4",    "fig5",   "fig5sp",
                                                "fig6sin", "fig6cos", "fig6std"};
    return names;
}

inline std::optional<ScenarioPreset> find_preset(const std::string& name,
                                                 unit_convention conv = unit_convention::angular)
{
    if (name == "fig3") return preset_fig3(conv);
    if (name == "fig4") return preset_fig4(conv);
    if (name == "fig5") return preset_fig5(false, conv);
    if (name == "fig5sp") return preset_fig5(true, conv);
    if (name == "fig6sin") return preset_fig6(modulation_kind::sine, conv);
    if (name == "fig6cos") return preset_fig6(modulation_kind::cosine, conv);
    if (name == "fig6std") return preset_fig6(modulation_kind::none, conv);
    return std::nullopt;
}

// Rate relation ---------------------------------------------------------------

enum class rate_mode { enforce, warn, off };

inline const char* to_string(rate_mode m)
{
    switch (m) {
    case rate_mode::enforce: return "enforce";
    case rate_mode::warn: return "warn";
    case rate_mode::off: return "off";
    }
    return "enforce";
}

inline std::optional<rate_mode> parse_rate_mode(const std::string& s)
{
    if (s == "enforce") return rate_mode::enforce;
    if (s == "warn") return rate_mode::warn;
    if (s == "off") return rate_mode::off;
    return std::nullopt;
}

struct RateReport {
    bool valid = true;
    real deviation = 0.0; // Gamma23 - (Gamma21 + Gamma31)
    rate_mode mode = rate_mode::enforce;
    std::string message;
};

inline RateReport validate_rates(const DecoherenceRates& rates, rate_mode mode)
{
    rates.validate();
    RateReport r;
    r.mode = mode;
    r.deviation = rates.relation_deviation();
    r.valid = rates.satisfies_relation();
    r.message = r.valid ? "Gamma23 = Gamma21 + Gamma31 holds"
                        : "Gamma23 - (Gamma21 + Gamma31) = " + format_real(r.deviation);
    if (!r.valid && mode == rate_mode::enforce)
        throw simulation_error(error_kind::rate_relation_violation, r.message);
    return r;
}

// Runs ------------------------------------------------------------------------

struct RunSummary {
    std::string name;
    real yield = 0.0;
    real steady_yield = 0.0;
    real final_rho11 = 0.0;
    real max_rho22 = 0.0;
    int transfer_pulse = 0;
    int pulses_run = 0;
    real trace_max_drift = 0.0;
    real final_abs_rho13 = 0.0;

    bool operator==(const RunSummary&) const = default;
};

inline RunSummary summarize(const std::string& name, const Trajectory& traj)
{
    RunSummary s;
    s.name = name;
    s.yield = quantum_yield(traj);
    s.steady_yield = steady_yield(traj);
    s.final_rho11 = traj.final_state().rho11();
    s.max_rho22 = max_population(traj, 2);
    s.transfer_pulse = transfer_pulse(traj);
    s.pulses_run = static_cast<int>(traj.pulse_end_samples.size());
    s.trace_max_drift = traj.max_trace_drift();
    s.final_abs_rho13 = std::abs(traj.final_state().rho13());
    return s;
}

/// Integrator settings a preset implies on top of `base`.
inline IntegratorConfig integrator_for(const ScenarioPreset& p, IntegratorConfig base)
{
    if (base.early_stop_pulses == 0) base.early_stop_pulses = p.early_stop_pulses;
    return base;
}

inline Trajectory run_preset(const ScenarioPreset& p, const IntegratorConfig& icfg)
{
    return propagate(p.rho0, p.cfg, p.sys, p.rates, integrator_for(p, icfg));
}

struct Comparison {
    std::vector<RunSummary> rows;
    std::vector<Trajectory> trajectories;
};

/// Runs the presets concurrently; rows keep the input order.
inline Comparison compare_runs(const std::vector<ScenarioPreset>& presets,
                               const IntegratorConfig& icfg)
{
    if (presets.size() < 2)
        throw simulation_error(error_kind::invalid_argument, "compare_runs needs >= 2 presets");
    for (const auto& p : presets)
        if (!(p.sys == presets.front().sys))
            throw simulation_error(error_kind::invalid_argument,
                                   "compared presets must share a level system");
    std::vector<std::future<Trajectory>> jobs;
    for (const auto& p : presets)
        jobs.push_back(std::async(std::launch::async, [&p, &icfg] { return run_preset(p, icfg); }));
    Comparison c;
    for (std::size_t i = 0; i < presets.size(); ++i) {
        c.trajectories.push_back(jobs[i].get());
        c.rows.push_back(summarize(presets[i].name, c.trajectories.back()));
    }
    return c;
}

// Calibration -----------------------------------------------------------------

struct CalibrationOptions {
    std::vector<real> tau_fs{2.0, 3.0, 5.0, 10.0};
    real T_min = 0.0; // 0 = smallest period with non-overlapping windows
    real T_step = 0.0005;
    real T_max = 120.0;
    int pulses = 200;
    real min_peak = 0.95;
    int target_pulse = 109;
    int pulse_min = 98;
    int pulse_max = 120;
    real max_rho22 = 0.15;
    unsigned threads = 0; // 0 = hardware concurrency
};

struct CalibrationPoint {
    real tau = 0.0;
    real tau_fs = 0.0;
    real T = 0.0;
    int peak_pulse = 0;   // pulse count at the rho33 maximum, used as N
    int transfer_pulse = 0;
    real peak_rho33 = 0.0;
    real max_rho22 = 0.0; // at pulse ends, up to the peak
};

struct CalibrationResult {
    CalibrationPoint best;
    std::size_t feasible = 0;
    std::size_t scanned = 0;
};

/// Scans (tau, T) for the modulated-comb transfer preset with rates off,
/// using the single-pulse map and the per-pulse frame phases. A point is
/// feasible when the rho33 maximum over `pulses` exceeds min_peak, the
/// transfer pulse (first pulse reaching 95% of that maximum) lies in
/// [pulse_min, pulse_max] and rho22 after every pulse up to the maximum
/// stays below max_rho22. The best feasible point has the highest peak;
/// ties go to the transfer pulse closest to target_pulse.
inline CalibrationResult calibrate_transfer(const CalibrationOptions& opt = {},
                                            const IntegratorConfig& icfg = {})
{
    const ScenarioPreset base = detail::modulated_comb_base(unit_convention::angular);
    const FrequencyUnit unit = FrequencyUnit::from_thz(base.unit_thz);
    const real w21 = base.sys.omega21();
    const real w2 = w21, w3 = w21 + base.sys.omega32();

    CalibrationResult result;
    auto better = [&](const CalibrationPoint& a, const CalibrationPoint& b) {
        if (a.peak_rho33 != b.peak_rho33) return a.peak_rho33 > b.peak_rho33;
        const int da = std::abs(a.transfer_pulse - opt.target_pulse);
        const int db = std::abs(b.transfer_pulse - opt.target_pulse);
        if (da != db) return da < db;
        return a.T < b.T;
    };
    bool have = false;

    for (real tfs : opt.tau_fs) {
        PulseTrainConfig cfg = base.cfg;
        cfg.tau = unit.time_from_seconds(tfs * 1e-15);
        const SuperOperator S = pulse_superoperator(cfg, base.sys, {}, icfg);
        const real T0 = std::max(opt.T_min, std::max(min_period_in_tau, 2.0 * icfg.window_sigmas) * cfg.tau);
        const auto count = static_cast<long>(std::floor((opt.T_max - T0) / opt.T_step)) + 1;
        if (count <= 0) continue;

        unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
        struct Partial {
            CalibrationPoint best;
            bool have = false;
            std::size_t feasible = 0;
        };
        std::vector<std::future<Partial>> jobs;
        for (unsigned w = 0; w < threads; ++w) {
            jobs.push_back(std::async(std::launch::async, [&, w] {
                Partial part;
                for (long i = w; i < count; i += threads) {
                    const real T = T0 + opt.T_step * static_cast<real>(i);
                    // per-pulse coherence phases exp(i (theta_a - theta_b))
                    const complex z12 = std::polar(1.0, w2 * T);
                    const complex z13 = std::polar(1.0, w3 * T);
                    const complex z23 = std::polar(1.0, (w3 - w2) * T);
                    complex p12 = 1.0, p13 = 1.0, p23 = 1.0;
                    RealVector9 v = to_vector(DensityMatrix::pure_state(1));
                    std::vector<real> r33(static_cast<std::size_t>(opt.pulses));
                    std::vector<real> r22(r33.size());
                    for (int k = 0; k < opt.pulses; ++k) {
                        // rotate into the frame of pulse k, apply, rotate back
                        complex c12 = complex(v[3], v[4]) * std::conj(p12);
                        complex c13 = complex(v[5], v[6]) * std::conj(p13);
                        complex c23 = complex(v[7], v[8]) * std::conj(p23);
                        const RealVector9 in{v[0], v[1], v[2], c12.real(), c12.imag(),
                                             c13.real(), c13.imag(), c23.real(), c23.imag()};
                        RealVector9 out{};
                        for (std::size_t r = 0; r < 9; ++r) {
                            real acc = 0.0;
                            for (std::size_t c = 0; c < 9; ++c) acc += S[r][c] * in[c];
                            out[r] = acc;
                        }
                        c12 = complex(out[3], out[4]) * p12;
                        c13 = complex(out[5], out[6]) * p13;
                        c23 = complex(out[7], out[8]) * p23;
                        v = {out[0], out[1], out[2], c12.real(), c12.imag(),
                             c13.real(), c13.imag(), c23.real(), c23.imag()};
                        r33[static_cast<std::size_t>(k)] = v[2];
                        r22[static_cast<std::size_t>(k)] = v[1];
                        p12 *= z12;
                        p13 *= z13;
                        p23 *= z23;
                    }
                    const auto it = std::max_element(r33.begin(), r33.end());
                    const real peak = *it;
                    if (peak <= opt.min_peak) continue;
                    const auto kp = static_cast<std::size_t>(it - r33.begin());
                    std::size_t idx = 0;
                    while (r33[idx] < 0.95 * peak) ++idx;
                    const int transfer = static_cast<int>(idx) + 1;
                    if (transfer < opt.pulse_min || transfer > opt.pulse_max) continue;
                    const real m22 = *std::max_element(r22.begin(), r22.begin() + static_cast<std::ptrdiff_t>(kp) + 1);
                    if (m22 >= opt.max_rho22) continue;
                    ++part.feasible;
                    CalibrationPoint pt{cfg.tau, tfs, T, static_cast<int>(kp) + 1, transfer, peak, m22};
                    if (!part.have || better(pt, part.best)) {
                        part.best = pt;
                        part.have = true;
                    }
                }
                return part;
            }));
        }
        for (auto& j : jobs) {
            Partial part = j.get();
            result.feasible += part.feasible;
            if (part.have && (!have || better(part.best, result.best))) {
                result.best = part.best;
                have = true;
            }
        }
        result.scanned += static_cast<std::size_t>(count);
    }
    if (!have)
        throw simulation_error(error_kind::invalid_argument, "no feasible (tau, T) point found");
    return result;
}

} // namespace comblambda
