#pragma once

// Liouville-von Neumann dynamics with spontaneous decay and collisional
// dephasing, propagated piecewise: dense integration inside pulse windows and
// the closed-form field-free solution across the gaps.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "field.hpp"

namespace comblambda {

enum class integration_method { rk4_fixed, rk45_adaptive };

inline const char* to_string(integration_method m)
{
    return m == integration_method::rk45_adaptive ? "rk45" : "rk4";
}

inline std::optional<integration_method> parse_method(const std::string& s)
{
    if (s == "rk4" || s == "rk4_fixed") return integration_method::rk4_fixed;
    if (s == "rk45" || s == "rk45_adaptive") return integration_method::rk45_adaptive;
    return std::nullopt;
}

/// Fastest phase rotation in the interaction-picture couplings: the
/// counter-rotating term omegaL + omega_ji.
inline real fastest_frequency(const PulseTrainConfig& cfg, const LevelSystem& sys)
{
    return cfg.omegaL + std::max(sys.omega21(), sys.omega32());
}

/// Upper bound on the in-pulse step: 20 steps per fastest oscillation.
inline real max_step(const PulseTrainConfig& cfg, const LevelSystem& sys)
{
    return 2.0 * pi / fastest_frequency(cfg, sys) / 20.0;
}

/// Default in-pulse step, 0.02 / omega_max with the modulation sweep
/// Phi0 * Omega added to omega_max.
inline real default_step(const PulseTrainConfig& cfg, const LevelSystem& sys)
{
    real w = fastest_frequency(cfg, sys);
    if (cfg.modulation.kind != modulation_kind::none)
        w += cfg.modulation.Phi0 * cfg.modulation.Omega;
    return 0.02 / w;
}

struct IntegratorConfig {
    real step_in_pulse = 0.0; // 0 selects default_step()
    int sampler_stride = 20;
    real window_sigmas = default_window_sigmas;
    integration_method method = integration_method::rk4_fixed;
    real abs_tol = 1e-9;
    real rel_tol = 1e-9;
    real trace_tol = 1e-6;
    real pop_tol = 1e-6;
    int gap_samples = 2;             // interior analytic samples per gap
    bool allow_unconstrained_rates = false;
    int early_stop_pulses = 0;       // 0 disables
    real early_stop_tol = 1e-6;

    real resolved_step(const PulseTrainConfig& cfg, const LevelSystem& sys) const
    {
        return step_in_pulse > 0.0 ? step_in_pulse : default_step(cfg, sys);
    }

    void validate(const PulseTrainConfig& cfg, const LevelSystem& sys) const
    {
        if (step_in_pulse < 0.0)
            throw simulation_error(error_kind::invalid_argument, "step must be > 0");
        if (resolved_step(cfg, sys) > max_step(cfg, sys) * (1.0 + 1e-12))
            throw simulation_error(error_kind::invalid_argument,
                                   "step exceeds 1/20 of the fastest oscillation period");
        if (sampler_stride < 1)
            throw simulation_error(error_kind::invalid_argument, "sampler stride must be >= 1");
        if (!(window_sigmas > 0.0))
            throw simulation_error(error_kind::invalid_argument, "window must be > 0");
        if (method == integration_method::rk45_adaptive && !(abs_tol > 0.0 && rel_tol > 0.0))
            throw simulation_error(error_kind::invalid_argument, "tolerances must be > 0");
        if (gap_samples < 0 || early_stop_pulses < 0)
            throw simulation_error(error_kind::invalid_argument, "negative sample count");
    }

    bool operator==(const IntegratorConfig&) const = default;
};

/// Coherent part, written out element by element for general H (H13 kept).
inline DensityMatrix coherent_rhs(const DensityMatrix& rho, const Couplings& c)
{
    const complex I{0.0, 1.0};
    const complex H21 = c.h21, H32 = c.h32, H31 = c.h31;
    const complex H12 = std::conj(H21), H23 = std::conj(H32), H13 = std::conj(H31);
    const complex r11 = rho.rho11(), r22 = rho.rho22(), r33 = rho.rho33();
    const complex r12 = rho.rho12(), r13 = rho.rho13(), r23 = rho.rho23();
    const complex r21 = std::conj(r12), r31 = std::conj(r13), r32 = std::conj(r23);

    DensityMatrix d;
    d.set_population(1, 2.0 * std::imag(H12 * r21 + H13 * r31));
    d.set_population(2, 2.0 * std::imag(H21 * r12 + H23 * r32));
    d.set_population(3, 2.0 * std::imag(H31 * r13 + H32 * r23));
    d.set_coherence(1, 2, -I * H12 * (r22 - r11) - I * H13 * r32 + I * H32 * r13);
    d.set_coherence(1, 3, -I * H13 * (r33 - r11) - I * H12 * r23 + I * H23 * r12);
    d.set_coherence(2, 3, -I * H23 * (r33 - r22) - I * H21 * r13 + I * H13 * r21);
    return d;
}

inline DensityMatrix decoherence_rhs(const DensityMatrix& rho, const DecoherenceRates& g)
{
    const real decay2 = g.gamma21 + g.gamma23;
    DensityMatrix d;
    d.set_population(1, g.gamma21 * rho.rho22());
    d.set_population(2, -decay2 * rho.rho22());
    d.set_population(3, g.gamma23 * rho.rho22());
    d.set_coherence(1, 2, -(0.5 * decay2 + g.Gamma21) * rho.rho12());
    d.set_coherence(1, 3, -g.Gamma31 * rho.rho13());
    d.set_coherence(2, 3, -(0.5 * decay2 + g.Gamma23) * rho.rho23());
    return d;
}

inline DensityMatrix lvn_rhs(const DensityMatrix& rho, const Couplings& c,
                             const DecoherenceRates& rates)
{
    return coherent_rhs(rho, c) + decoherence_rhs(rho, rates);
}

/// d(rho)/dt under pulse k alone.
inline DensityMatrix lvn_rhs(const DensityMatrix& rho, real t, int k, const PulseTrainConfig& cfg,
                             const LevelSystem& sys, const DecoherenceRates& rates)
{
    return lvn_rhs(rho, pulse_couplings(t, k, cfg, sys), rates);
}

/// Trace of the coherent derivative; vanishes for Hermitian H and rho.
inline real coherent_trace_derivative(const DensityMatrix& rho, real t, int k,
                                      const PulseTrainConfig& cfg, const LevelSystem& sys)
{
    return trace(coherent_rhs(rho, pulse_couplings(t, k, cfg, sys)));
}

/// Exact field-free evolution over dt >= 0.
inline DensityMatrix free_evolution(const DensityMatrix& rho, real dt, const DecoherenceRates& g)
{
    if (dt < 0.0) throw simulation_error(error_kind::invalid_argument, "dt must be >= 0");
    const real decay2 = g.gamma21 + g.gamma23;
    DensityMatrix out = rho;
    if (decay2 > 0.0) {
        const real remain = std::exp(-decay2 * dt);
        const real moved = rho.rho22() * -std::expm1(-decay2 * dt);
        out.set_population(1, rho.rho11() + g.gamma21 / decay2 * moved);
        out.set_population(2, rho.rho22() * remain);
        out.set_population(3, rho.rho33() + g.gamma23 / decay2 * moved);
    }
    out.set_coherence(1, 2, rho.rho12() * std::exp(-(0.5 * decay2 + g.Gamma21) * dt));
    out.set_coherence(1, 3, rho.rho13() * std::exp(-g.Gamma31 * dt));
    out.set_coherence(2, 3, rho.rho23() * std::exp(-(0.5 * decay2 + g.Gamma23) * dt));
    return out;
}

/// One classical RK4 step of f(t, y).
template <typename State, typename Rhs>
State rk4_step(const State& y, real t, real h, Rhs&& f)
{
    const State k1 = f(t, y);
    const State k2 = f(t + 0.5 * h, y + (0.5 * h) * k1);
    const State k3 = f(t + 0.5 * h, y + (0.5 * h) * k2);
    const State k4 = f(t + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Dormand-Prince 5(4) step. Returns the 5th-order solution; `err` receives
/// the difference to the embedded 4th-order one.
template <typename State, typename Rhs>
State dopri5_step(const State& y, real t, real h, Rhs&& f, State& err)
{
    static constexpr real c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr real a21 = 1.0 / 5;
    static constexpr real a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr real a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr real a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
    static constexpr real a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr real b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr real e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const State k1 = f(t, y);
    const State k2 = f(t + c2 * h, y + h * (a21 * k1));
    const State k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const State k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const State k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const State k6 =
        f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const State y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const State k7 = f(t + h, y5);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    return y5;
}

/// Merged pulse windows, clipped to [t_start, t_end].
struct Segment {
    real begin = 0.0;
    real end = 0.0;
};

inline std::vector<Segment> pulse_segments(const PulseTrainConfig& cfg, real window_sigmas,
                                           real t_start, real t_end)
{
    std::vector<Segment> segs;
    const real half = window_sigmas * cfg.tau;
    for (int k = 0; k < cfg.N; ++k) {
        real a = std::max(t_start, k * cfg.T - half);
        real b = std::min(t_end, k * cfg.T + half);
        if (!(b > a)) continue;
        if (!segs.empty() && a <= segs.back().end)
            segs.back().end = std::max(segs.back().end, b);
        else
            segs.push_back({a, b});
    }
    return segs;
}

inline real default_t_start(const PulseTrainConfig& cfg, real window_sigmas)
{
    return -window_sigmas * cfg.tau;
}

inline real default_t_end(const PulseTrainConfig& cfg, real window_sigmas)
{
    return (cfg.N - 1) * cfg.T + window_sigmas * cfg.tau;
}

namespace detail {

class sample_guard {
public:
    sample_guard(const IntegratorConfig& icfg) : m_icfg(icfg) {}

    void check(real t, const DensityMatrix& rho) const
    {
        const real tr = trace(rho);
        if (!std::isfinite(tr) || std::abs(tr - 1.0) > m_icfg.trace_tol)
            throw simulation_error(error_kind::trace_drift,
                                   "trace " + std::to_string(tr) + " at t=" + std::to_string(t));
        for (int l = 1; l <= 3; ++l)
            if (rho.population(l) < -m_icfg.pop_tol)
                throw simulation_error(error_kind::negative_population,
                                       "rho" + std::to_string(l) + std::to_string(l) + " = " +
                                           std::to_string(rho.population(l)) +
                                           " at t=" + std::to_string(t));
    }

private:
    const IntegratorConfig& m_icfg;
};

} // namespace detail

/// Checks the Gamma23 = Gamma21 + Gamma31 precondition unless waived.
inline void require_rate_relation(const DecoherenceRates& rates, const IntegratorConfig& icfg)
{
    rates.validate();
    if (!icfg.allow_unconstrained_rates && !rates.satisfies_relation())
        throw simulation_error(error_kind::rate_relation_violation,
                               "Gamma23 != Gamma21 + Gamma31 (deviation " +
                                   std::to_string(rates.relation_deviation()) + ")");
}

/// Propagates rho0 over the whole train. Time runs from t_start (default
/// -window * tau, so the first pulse is complete) to the end of the last
/// window.
inline Trajectory propagate(const DensityMatrix& rho0, const PulseTrainConfig& cfg,
                            const LevelSystem& sys, const DecoherenceRates& rates,
                            const IntegratorConfig& icfg, std::optional<real> t_start_opt = {})
{
    cfg.validate();
    icfg.validate(cfg, sys);
    require_rate_relation(rates, icfg);
    if (std::abs(trace(rho0) - 1.0) > 1e-12)
        throw simulation_error(error_kind::invalid_argument, "initial trace must be 1");

    const real w = icfg.window_sigmas;
    const real t_start = t_start_opt.value_or(default_t_start(cfg, w));
    const real t_end = default_t_end(cfg, w);
    const real h_nominal = icfg.resolved_step(cfg, sys);
    const detail::sample_guard guard(icfg);
    const real half = w * cfg.tau;

    Trajectory traj;
    DensityMatrix rho = rho0;
    real t = t_start;
    guard.check(t, rho);
    traj.push(t, rho);

    auto rhs = [&](real tt, const DensityMatrix& y) {
        return lvn_rhs(y, train_couplings(tt, cfg, sys, w), rates);
    };

    // pulses whose window end has been passed get a marker sample
    int next_pulse = 0;
    std::vector<std::array<real, 3>> pulse_pops;
    bool stopped = false;
    auto mark_pulses = [&](real tt) {
        while (next_pulse < cfg.N && tt >= next_pulse * cfg.T + half - 1e-9 * cfg.tau) {
            if (traj.times.back() != tt) traj.push(tt, rho);
            traj.pulse_end_samples.push_back(traj.size() - 1);
            pulse_pops.push_back({rho.rho11(), rho.rho22(), rho.rho33()});
            ++next_pulse;
            const int win = icfg.early_stop_pulses;
            if (win > 0 && static_cast<int>(pulse_pops.size()) > win) {
                const auto& now = pulse_pops.back();
                const auto& then = pulse_pops[pulse_pops.size() - 1 - win];
                real change = 0.0;
                for (std::size_t l = 0; l < 3; ++l)
                    change = std::max(change, std::abs(now[l] - then[l]));
                if (change < icfg.early_stop_tol) stopped = true;
            }
        }
    };
    auto sample = [&](real tt) {
        guard.check(tt, rho);
        if (tt > traj.times.back()) traj.push(tt, rho);
    };

    for (const Segment& seg : pulse_segments(cfg, w, t_start, t_end)) {
        if (stopped) break;
        if (seg.begin > t) {
            const DensityMatrix gap_start = rho;
            const real t0 = t;
            const int n = icfg.gap_samples + 1;
            for (int i = 1; i <= n; ++i) {
                const real ti = (i == n) ? seg.begin : t0 + (seg.begin - t0) * i / n;
                rho = free_evolution(gap_start, ti - t0, rates);
                sample(ti);
            }
            t = seg.begin;
        }

        if (icfg.method == integration_method::rk4_fixed) {
            const long steps = std::max(1L, static_cast<long>(std::ceil((seg.end - t) / h_nominal)));
            const real h = (seg.end - t) / static_cast<real>(steps);
            const real t0 = t;
            for (long s = 1; s <= steps; ++s) {
                rho = rk4_step(rho, t, h, rhs);
                t = (s == steps) ? seg.end : t0 + h * static_cast<real>(s);
                if (s % icfg.sampler_stride == 0 || s == steps) sample(t);
                else guard.check(t, rho);
                mark_pulses(t);
            }
        } else {
            real h = h_nominal;
            long accepted = 0;
            while (t < seg.end) {
                h = std::min(h, seg.end - t);
                if (h < 1e-12 * std::max(1.0, std::abs(t)))
                    throw simulation_error(error_kind::step_size_underflow,
                                           "adaptive step underflow at t=" + std::to_string(t));
                DensityMatrix err;
                const DensityMatrix next = dopri5_step(rho, t, h, rhs, err);
                const real scale = icfg.abs_tol + icfg.rel_tol * std::max(rho.max_abs(), next.max_abs());
                const real e = err.max_abs() / scale;
                if (e <= 1.0) {
                    t = (seg.end - t - h <= 1e-14 * std::max(1.0, std::abs(t))) ? seg.end : t + h;
                    rho = next;
                    ++accepted;
                    if (accepted % icfg.sampler_stride == 0 || t == seg.end) sample(t);
                    else guard.check(t, rho);
                    mark_pulses(t);
                }
                const real factor = (e == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, 5.0);
                h *= factor;
            }
        }
        if (t < seg.end) t = seg.end;
        mark_pulses(t);
    }
    return traj;
}

/// Final rho33.
inline real quantum_yield(const Trajectory& traj) { return traj.final_state().rho33(); }

/// Mean rho33 over the trailing `fraction` of samples.
inline real steady_yield(const Trajectory& traj, real fraction = 0.05)
{
    if (traj.empty()) throw simulation_error(error_kind::invalid_argument, "empty trajectory");
    const std::size_t n = traj.size();
    const std::size_t count = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * n));
    real sum = 0.0;
    for (std::size_t i = n - count; i < n; ++i) sum += traj.states[i].rho33();
    return sum / static_cast<real>(count);
}

inline real max_population(const Trajectory& traj, int level)
{
    real m = 0.0;
    for (const auto& s : traj.states) m = std::max(m, s.population(level));
    return m;
}

/// Number of pulses after which rho33 first exceeds `fraction` of its final
/// value; 0 when no pulse ends are recorded.
inline int transfer_pulse(const Trajectory& traj, real fraction = 0.95)
{
    if (traj.pulse_end_samples.empty()) return 0;
    const real target = fraction * quantum_yield(traj);
    for (std::size_t k = 0; k < traj.pulse_end_samples.size(); ++k)
        if (traj.states[traj.pulse_end_samples[k]].rho33() > target)
            return static_cast<int>(k) + 1;
    return static_cast<int>(traj.pulse_end_samples.size());
}

// Stroboscopic evolution -----------------------------------------------------
//
// In the pulse-local frame every pulse maps rho through the same linear map,
// and in the absolute frame pulse k is that map conjugated by the
// accumulated transition phases. Calibration scans exploit this to evaluate
// long trains without re-integrating each pulse.

using RealVector9 = std::array<real, 9>;
using SuperOperator = std::array<RealVector9, 9>;

inline RealVector9 to_vector(const DensityMatrix& r)
{
    return {r.rho11(),       r.rho22(),       r.rho33(),       r.rho12().real(), r.rho12().imag(),
            r.rho13().real(), r.rho13().imag(), r.rho23().real(), r.rho23().imag()};
}

inline DensityMatrix from_vector(const RealVector9& v)
{
    DensityMatrix r = DensityMatrix::diagonal(v[0], v[1], v[2]);
    r.set_coherence(1, 2, {v[3], v[4]});
    r.set_coherence(1, 3, {v[5], v[6]});
    r.set_coherence(2, 3, {v[7], v[8]});
    return r;
}

/// Linear map of one complete pulse window (pulse 0, pulse-local phases),
/// integrated with the same fixed-step RK4 grid as propagate().
inline SuperOperator pulse_superoperator(const PulseTrainConfig& cfg, const LevelSystem& sys,
                                         const DecoherenceRates& rates,
                                         const IntegratorConfig& icfg)
{
    PulseTrainConfig one = cfg;
    one.N = 1;
    one.frame = frame_phase::pulse_local;
    const real w = icfg.window_sigmas;
    const real a = -w * cfg.tau, b = w * cfg.tau;
    const real h_nominal = icfg.resolved_step(cfg, sys);
    const long steps = std::max(1L, static_cast<long>(std::ceil((b - a) / h_nominal)));
    const real h = (b - a) / static_cast<real>(steps);
    auto rhs = [&](real tt, const DensityMatrix& y) {
        return lvn_rhs(y, pulse_couplings(tt, 0, one, sys), rates);
    };

    SuperOperator S{};
    for (std::size_t col = 0; col < 9; ++col) {
        RealVector9 e{};
        e[col] = 1.0;
        DensityMatrix y = from_vector(e);
        for (long s = 0; s < steps; ++s) y = rk4_step(y, a + h * static_cast<real>(s), h, rhs);
        const RealVector9 out = to_vector(y);
        for (std::size_t row = 0; row < 9; ++row) S[row][col] = out[row];
    }
    return S;
}

inline DensityMatrix apply_map(const SuperOperator& S, const DensityMatrix& rho)
{
    const RealVector9 v = to_vector(rho);
    RealVector9 out{};
    for (std::size_t r = 0; r < 9; ++r) {
        real acc = 0.0;
        for (std::size_t c = 0; c < 9; ++c) acc += S[r][c] * v[c];
        out[r] = acc;
    }
    return from_vector(out);
}

/// Multiplies rho_ij by exp(i (theta_i - theta_j)).
inline DensityMatrix rotate_phases(const DensityMatrix& rho, const std::array<real, 3>& theta)
{
    DensityMatrix r = rho;
    r.set_coherence(1, 2, rho.rho12() * std::polar(1.0, theta[0] - theta[1]));
    r.set_coherence(1, 3, rho.rho13() * std::polar(1.0, theta[0] - theta[2]));
    r.set_coherence(2, 3, rho.rho23() * std::polar(1.0, theta[1] - theta[2]));
    return r;
}

/// Per-pulse level phases of the absolute frame: pulse k is pulse 0
/// conjugated by diag(exp(i k theta)).
inline std::array<real, 3> frame_phases_per_pulse(const PulseTrainConfig& cfg,
                                                  const LevelSystem& sys)
{
    if (cfg.frame == frame_phase::pulse_local) return {0.0, 0.0, 0.0};
    return {0.0, -sys.omega21() * cfg.T, -(sys.omega21() + sys.omega32()) * cfg.T};
}

/// States at the end of each pulse window, from the single-pulse map.
/// Requires non-overlapping windows.
inline std::vector<DensityMatrix> stroboscopic_states(const SuperOperator& S,
                                                      const DensityMatrix& rho0,
                                                      const PulseTrainConfig& cfg,
                                                      const LevelSystem& sys,
                                                      const DecoherenceRates& rates,
                                                      real window_sigmas)
{
    const real gap = cfg.T - 2.0 * window_sigmas * cfg.tau;
    if (gap < 0.0)
        throw simulation_error(error_kind::invalid_argument,
                               "stroboscopic evolution needs non-overlapping windows");
    const auto theta = frame_phases_per_pulse(cfg, sys);
    std::vector<DensityMatrix> out;
    out.reserve(static_cast<std::size_t>(cfg.N));
    DensityMatrix rho = rho0;
    for (int k = 0; k < cfg.N; ++k) {
        if (k > 0) rho = free_evolution(rho, gap, rates);
        const std::array<real, 3> th{theta[0] * k, theta[1] * k, theta[2] * k};
        rho = rotate_phases(rho, {-th[0], -th[1], -th[2]});
        rho = apply_map(S, rho);
        rho = rotate_phases(rho, th);
        out.push_back(rho);
    }
    return out;
}

} // namespace comblambda
