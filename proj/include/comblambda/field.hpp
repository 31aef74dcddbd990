#pragma once

// Pulse-train field, phase modulation and interaction-picture couplings.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"

namespace comblambda {

enum class modulation_kind { none, sine, cosine };

inline const char* to_string(modulation_kind k)
{
    switch (k) {
    case modulation_kind::none: return "none";
    case modulation_kind::sine: return "sine";
    case modulation_kind::cosine: return "cosine";
    }
    return "none";
}

inline std::optional<modulation_kind> parse_modulation(const std::string& s)
{
    if (s == "none") return modulation_kind::none;
    if (s == "sine" || s == "sin") return modulation_kind::sine;
    if (s == "cosine" || s == "cos") return modulation_kind::cosine;
    return std::nullopt;
}

struct Modulation {
    modulation_kind kind = modulation_kind::none;
    real Phi0 = 0.0;  // amplitude, rad
    real Omega = 0.0; // modulation frequency

    void validate() const
    {
        if (!(Phi0 >= 0.0))
            throw simulation_error(error_kind::invalid_argument, "Phi0 must be >= 0");
        if (kind != modulation_kind::none && !(Omega > 0.0))
            throw simulation_error(error_kind::invalid_argument,
                                   "modulation frequency must be > 0");
    }

    bool operator==(const Modulation&) const = default;
};

/// Reference point of the transition phases exp(-i omega_ji t) in the
/// interaction picture. `pulse_local` measures them from the center of the
/// active pulse, so every pulse acts identically. `absolute` measures them
/// from t = 0, which adds exp(-i omega_ji k T) to pulse k; the two agree
/// whenever omega_ji T is a multiple of 2 pi.
enum class frame_phase { pulse_local, absolute };

inline const char* to_string(frame_phase f)
{
    return f == frame_phase::absolute ? "absolute" : "pulse_local";
}

inline std::optional<frame_phase> parse_frame_phase(const std::string& s)
{
    if (s == "pulse_local" || s == "local") return frame_phase::pulse_local;
    if (s == "absolute") return frame_phase::absolute;
    return std::nullopt;
}

inline constexpr real min_period_in_tau = 10.0;
inline constexpr real warn_period_in_tau = 50.0;

struct PulseTrainConfig {
    real E0 = 1.0;           // field amplitude, spectral analysis only
    real OmegaR = 0.0;       // peak Rabi frequency
    real omegaL = 0.0;       // carrier
    real tau = 0.0;          // pulse duration (Gaussian sigma)
    real T = 0.0;            // period
    int N = 1;               // pulse count
    real phi = 0.0;          // constant phase offset
    Modulation modulation{};
    real envelope_prefactor = 1.0; // 1 for the plain train, 1/2 for the modulated form
    frame_phase frame = frame_phase::pulse_local;

    /// Throws on hard violations; returns human-readable warnings.
    std::vector<std::string> validate() const
    {
        std::vector<std::string> warnings;
        if (!(tau > 0.0))
            throw simulation_error(error_kind::invalid_argument, "tau must be > 0");
        if (!(T >= min_period_in_tau * tau))
            throw simulation_error(error_kind::invalid_argument,
                                   "period must be at least 10 tau");
        if (!(omegaL > 0.0))
            throw simulation_error(error_kind::invalid_argument, "carrier must be > 0");
        if (N < 1) throw simulation_error(error_kind::invalid_argument, "N must be >= 1");
        if (!(OmegaR >= 0.0))
            throw simulation_error(error_kind::invalid_argument, "OmegaR must be >= 0");
        modulation.validate();
        if (T < warn_period_in_tau * tau)
            warnings.push_back("period is below 50 tau; pulse windows may overlap");
        return warnings;
    }

    /// Repetition rate 2 pi / T.
    real repetition_rate() const { return 2.0 * pi / T; }

    bool operator==(const PulseTrainConfig&) const = default;
};

inline real phase_modulation(real t_local, const Modulation& m)
{
    switch (m.kind) {
    case modulation_kind::none: return 0.0;
    case modulation_kind::sine: return m.Phi0 * std::sin(m.Omega * t_local);
    case modulation_kind::cosine: return m.Phi0 * std::cos(m.Omega * t_local);
    }
    return 0.0;
}

/// OmegaR exp(-(t - kT)^2 / (2 tau^2)).
inline real rabi_envelope(real t, int k, const PulseTrainConfig& cfg)
{
    if (k < 0 || k >= cfg.N)
        throw simulation_error(error_kind::invalid_argument, "pulse index out of range");
    const real s = t - k * cfg.T;
    return cfg.OmegaR * std::exp(-s * s / (2.0 * cfg.tau * cfg.tau));
}

/// Pulses whose window [kT - w tau, kT + w tau] contains t, as [first, last].
/// Empty when first > last.
struct PulseRange {
    int first = 0;
    int last = -1;
    bool empty() const { return first > last; }
};

inline PulseRange active_pulses(real t, const PulseTrainConfig& cfg, real window_sigmas)
{
    const real half = window_sigmas * cfg.tau;
    PulseRange r;
    r.first = std::max(0, static_cast<int>(std::ceil((t - half) / cfg.T)));
    r.last = std::min(cfg.N - 1, static_cast<int>(std::floor((t + half) / cfg.T)));
    return r;
}

inline constexpr real default_window_sigmas = 6.0;

/// Real field of the train at t. Pulses farther than window_sigmas * tau from
/// t are dropped.
inline real field_amplitude(real t, const PulseTrainConfig& cfg,
                            real window_sigmas = default_window_sigmas)
{
    const PulseRange r = active_pulses(t, cfg, window_sigmas);
    real e = 0.0;
    for (int k = r.first; k <= r.last; ++k) {
        const real s = t - k * cfg.T;
        const real env = std::exp(-s * s / (2.0 * cfg.tau * cfg.tau));
        e += env * std::cos(cfg.omegaL * s + phase_modulation(s, cfg.modulation) + cfg.phi);
    }
    return cfg.envelope_prefactor * cfg.E0 * e;
}

/// H_ji of pulse k beyond the rotating-wave approximation:
///   OmegaR(t-kT) [exp(-i((wL + w_ji) s + M(s) + phi)) + exp(i((wL - w_ji) s + M(s) + phi))]
/// with s = t - kT. The (3,1) leg is not driven and returns zero; H_ij for
/// i < j is the conjugate.
inline complex hamiltonian_element(int j, int i, real t, int k, const PulseTrainConfig& cfg,
                                   const LevelSystem& sys)
{
    if (j < 1 || j > 3 || i < 1 || i > 3)
        throw simulation_error(error_kind::invalid_argument, "level index out of range");
    if (i == j) return 0.0;
    if ((j == 3 && i == 1) || (j == 1 && i == 3)) return 0.0;
    if (j < i) return std::conj(hamiltonian_element(i, j, t, k, cfg, sys));

    const real w = sys.transition(j, i);
    const real s = t - k * cfg.T;
    const real env = rabi_envelope(t, k, cfg);
    const real m = phase_modulation(s, cfg.modulation) + cfg.phi;
    complex h = env * (std::polar(1.0, -((cfg.omegaL + w) * s + m)) +
                       std::polar(1.0, (cfg.omegaL - w) * s + m));
    if (cfg.frame == frame_phase::absolute) h *= std::polar(1.0, -w * k * cfg.T);
    return h;
}

/// Lower-triangle couplings H21, H32, H31 at one instant.
struct Couplings {
    complex h21{};
    complex h32{};
    complex h31{};
};

inline Couplings pulse_couplings(real t, int k, const PulseTrainConfig& cfg,
                                 const LevelSystem& sys)
{
    return {hamiltonian_element(2, 1, t, k, cfg, sys), hamiltonian_element(3, 2, t, k, cfg, sys),
            complex{}};
}

/// Sum over all pulses active at t.
inline Couplings train_couplings(real t, const PulseTrainConfig& cfg, const LevelSystem& sys,
                                 real window_sigmas)
{
    Couplings c;
    const PulseRange r = active_pulses(t, cfg, window_sigmas);
    for (int k = r.first; k <= r.last; ++k) {
        const Couplings p = pulse_couplings(t, k, cfg, sys);
        c.h21 += p.h21;
        c.h32 += p.h32;
    }
    return c;
}

} // namespace comblambda
