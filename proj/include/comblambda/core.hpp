#pragma once

// Shared domain types for the three-level Lambda system.
//
// Units: every frequency and rate is a dimensionless multiple of a reference
// angular frequency (FrequencyUnit), and every time is in units of its
// inverse. hbar = 1. Levels are |1> Feshbach, |2> excited, |3> ultracold.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace comblambda {

using real = double;
using complex = std::complex<double>;

inline constexpr real pi = 3.14159265358979323846;

/// 17 significant digits, enough to round-trip any double.
inline std::string format_real(real v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

enum class error_kind {
    invalid_argument,
    config,
    step_size_underflow,
    trace_drift,
    negative_population,
    rate_relation_violation,
    nyquist_violation,
    insufficient_peaks,
};

inline const char* to_string(error_kind k)
{
    switch (k) {
    case error_kind::invalid_argument: return "InvalidArgument";
    case error_kind::config: return "ConfigError";
    case error_kind::step_size_underflow: return "StepSizeUnderflow";
    case error_kind::trace_drift: return "TraceDrift";
    case error_kind::negative_population: return "NegativePopulation";
    case error_kind::rate_relation_violation: return "RateRelationViolation";
    case error_kind::nyquist_violation: return "NyquistViolation";
    case error_kind::insufficient_peaks: return "InsufficientPeaks";
    }
    return "Unknown";
}

class simulation_error : public std::runtime_error {
public:
    simulation_error(error_kind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), m_kind(kind)
    {
    }

    error_kind kind() const noexcept { return m_kind; }

private:
    error_kind m_kind;
};

/// Reference angular frequency (rad/s) that sets the dimensionless scale.
class FrequencyUnit {
public:
    explicit FrequencyUnit(real reference_angular_frequency)
        : m_omega(reference_angular_frequency)
    {
        if (!(m_omega > 0.0) || !std::isfinite(m_omega))
            throw simulation_error(error_kind::invalid_argument,
                                   "reference frequency must be positive");
    }

    /// From a value quoted in THz, read as an angular frequency (10^12 rad/s).
    static FrequencyUnit from_thz(real thz) { return FrequencyUnit(thz * 1e12); }

    real reference_angular_frequency() const { return m_omega; }

    /// Converts a frequency given in THz into units of the reference.
    real frequency_from_thz(real thz) const { return thz * 1e12 / m_omega; }

    /// Converts a duration in seconds into units of 1/reference. With
    /// `ordinary` set, the reference is read as an ordinary frequency, which
    /// scales the result by 2 pi.
    real time_from_seconds(real seconds, bool ordinary = false) const
    {
        return seconds * m_omega * (ordinary ? 2.0 * pi : 1.0);
    }

private:
    real m_omega;
};

inline constexpr real ladder_tolerance = 1e-9;

/// Transition frequencies of the Lambda system; omega31 = omega32 - omega21.
class LevelSystem {
public:
    LevelSystem(real omega21, real omega32, real omega31)
        : m_omega21(omega21), m_omega32(omega32), m_omega31(omega31)
    {
        if (!(omega21 > 0.0 && omega32 > 0.0 && omega31 > 0.0))
            throw simulation_error(error_kind::invalid_argument,
                                   "transition frequencies must be positive");
        // relative check so that THz-scaled inputs pass as well
        const real scale = std::max({1.0, omega32, omega21});
        if (std::abs(omega31 - (omega32 - omega21)) > ladder_tolerance * scale)
            throw simulation_error(error_kind::invalid_argument,
                                   "omega31 must equal omega32 - omega21");
    }

    real omega21() const { return m_omega21; }
    real omega32() const { return m_omega32; }
    real omega31() const { return m_omega31; }

    /// Frequency of the driven transition (j,i) in {(2,1),(3,2),(3,1)}.
    real transition(int j, int i) const
    {
        if (j < i) std::swap(i, j);
        if (j == 2 && i == 1) return m_omega21;
        if (j == 3 && i == 2) return m_omega32;
        if (j == 3 && i == 1) return m_omega31;
        throw simulation_error(error_kind::invalid_argument, "no such transition");
    }

    bool operator==(const LevelSystem&) const = default;

private:
    real m_omega21;
    real m_omega32;
    real m_omega31;
};

using FullMatrix = std::array<std::array<complex, 3>, 3>;

/// Hermitian 3x3 density matrix. Only the real diagonal and the upper
/// triangle are stored; lower elements are derived by conjugation.
///
/// The same type doubles as the tangent d(rho)/dt, which is Hermitian as
/// well, so it carries vector-space operations for the integrators.
class DensityMatrix {
public:
    DensityMatrix() = default;

    static DensityMatrix diagonal(real p1, real p2, real p3)
    {
        DensityMatrix r;
        r.m_pop = {p1, p2, p3};
        return r;
    }

    static DensityMatrix pure_state(int level)
    {
        DensityMatrix r;
        r.m_pop[check_level(level) - 1] = 1.0;
        return r;
    }

    /// Builds from the upper triangle of `m`; the lower triangle and the
    /// imaginary parts of the diagonal are ignored.
    static DensityMatrix from_upper(const FullMatrix& m)
    {
        DensityMatrix r;
        r.m_pop = {m[0][0].real(), m[1][1].real(), m[2][2].real()};
        r.m_coh = {m[0][1], m[0][2], m[1][2]};
        return r;
    }

    /// rho_ij with 1-based indices.
    complex operator()(int i, int j) const
    {
        check_level(i);
        check_level(j);
        if (i == j) return m_pop[i - 1];
        if (i < j) return m_coh[coherence_slot(i, j)];
        return std::conj(m_coh[coherence_slot(j, i)]);
    }

    real population(int level) const { return m_pop[check_level(level) - 1]; }

    void set_population(int level, real value) { m_pop[check_level(level) - 1] = value; }

    /// Sets rho_ij for i < j (rho_ji follows).
    void set_coherence(int i, int j, complex value)
    {
        if (!(i < j))
            throw simulation_error(error_kind::invalid_argument,
                                   "coherences are addressed with i < j");
        m_coh[coherence_slot(check_level(i), check_level(j))] = value;
    }

    complex rho12() const { return m_coh[0]; }
    complex rho13() const { return m_coh[1]; }
    complex rho23() const { return m_coh[2]; }
    real rho11() const { return m_pop[0]; }
    real rho22() const { return m_pop[1]; }
    real rho33() const { return m_pop[2]; }

    FullMatrix full() const
    {
        FullMatrix m{};
        for (int i = 1; i <= 3; ++i)
            for (int j = 1; j <= 3; ++j)
                m[i - 1][j - 1] = (*this)(i, j);
        return m;
    }

    DensityMatrix& operator+=(const DensityMatrix& o)
    {
        for (std::size_t n = 0; n < 3; ++n) {
            m_pop[n] += o.m_pop[n];
            m_coh[n] += o.m_coh[n];
        }
        return *this;
    }

    DensityMatrix& operator*=(real s)
    {
        for (std::size_t n = 0; n < 3; ++n) {
            m_pop[n] *= s;
            m_coh[n] *= s;
        }
        return *this;
    }

    friend DensityMatrix operator+(DensityMatrix a, const DensityMatrix& b) { return a += b; }
    friend DensityMatrix operator-(DensityMatrix a, const DensityMatrix& b) { return a += b * -1.0; }
    friend DensityMatrix operator*(DensityMatrix a, real s) { return a *= s; }
    friend DensityMatrix operator*(real s, DensityMatrix a) { return a *= s; }

    bool operator==(const DensityMatrix&) const = default;

    /// Largest element-wise magnitude, used as an error norm.
    real max_abs() const
    {
        real m = 0.0;
        for (std::size_t n = 0; n < 3; ++n) {
            m = std::max(m, std::abs(m_pop[n]));
            m = std::max(m, std::abs(m_coh[n]));
        }
        return m;
    }

private:
    static int check_level(int level)
    {
        if (level < 1 || level > 3)
            throw simulation_error(error_kind::invalid_argument, "level index out of range");
        return level;
    }

    // (1,2) -> 0, (1,3) -> 1, (2,3) -> 2
    static std::size_t coherence_slot(int i, int j)
    {
        return static_cast<std::size_t>(i + j - 3);
    }

    std::array<real, 3> m_pop{};
    std::array<complex, 3> m_coh{};
};

inline real trace(const DensityMatrix& rho)
{
    return rho.rho11() + rho.rho22() + rho.rho33();
}

/// max_ij |m_ij - conj(m_ji)|; zero for anything built from DensityMatrix.
inline real hermitian_defect(const FullMatrix& m)
{
    real d = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            d = std::max(d, std::abs(m[i][j] - std::conj(m[j][i])));
    return d;
}

inline real hermitian_defect(const DensityMatrix& rho) { return hermitian_defect(rho.full()); }

/// Spontaneous (gamma) and collisional dephasing (Gamma) rates. Label order
/// is irrelevant: Gamma12 and Gamma21 name the same rate, as do gamma23 and
/// gamma32.
struct DecoherenceRates {
    real gamma21 = 0.0;
    real gamma23 = 0.0;
    real Gamma21 = 0.0;
    real Gamma31 = 0.0;
    real Gamma23 = 0.0;

    void validate() const
    {
        for (real r : {gamma21, gamma23, Gamma21, Gamma31, Gamma23})
            if (!(r >= 0.0) || !std::isfinite(r))
                throw simulation_error(error_kind::invalid_argument,
                                       "decoherence rates must be nonnegative");
    }

    /// Gamma23 - (Gamma21 + Gamma31).
    real relation_deviation() const { return Gamma23 - (Gamma21 + Gamma31); }

    bool satisfies_relation(real tol = 1e-12) const
    {
        return std::abs(relation_deviation()) <= tol;
    }

    bool is_zero() const
    {
        return gamma21 == 0.0 && gamma23 == 0.0 && Gamma21 == 0.0 && Gamma31 == 0.0 &&
               Gamma23 == 0.0;
    }

    bool operator==(const DecoherenceRates&) const = default;
};

/// Sampled propagation result.
struct Trajectory {
    std::vector<real> times;
    std::vector<DensityMatrix> states;
    std::vector<real> trace_series;
    /// Index into `states` of the sample taken at the end of each pulse window.
    std::vector<std::size_t> pulse_end_samples;
    /// Resolved configuration that produced the trajectory (key = value).
    std::map<std::string, std::string> metadata;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }

    void push(real t, const DensityMatrix& rho)
    {
        if (!times.empty() && !(t > times.back()))
            throw simulation_error(error_kind::invalid_argument,
                                   "trajectory times must be strictly increasing");
        times.push_back(t);
        states.push_back(rho);
        trace_series.push_back(trace(rho));
    }

    const DensityMatrix& final_state() const
    {
        if (states.empty())
            throw simulation_error(error_kind::invalid_argument, "empty trajectory");
        return states.back();
    }

    real max_trace_drift() const
    {
        real d = 0.0;
        for (real tr : trace_series) d = std::max(d, std::abs(tr - 1.0));
        return d;
    }
};

} // namespace comblambda
