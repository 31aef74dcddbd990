#pragma once

// Comb spectrum of a synthesized pulse train and checks of its structure:
// mode spacing 2 pi / T, sideband-set spacing Omega, tooth width ~ 1/t_total.
// Requires linking against fftw3.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>
#include <vector>

#include "core.hpp"
#include "field.hpp"

namespace comblambda {

struct TimeSeries {
    real t_start = 0.0;
    real sample_rate = 1.0; // samples per unit time
    std::vector<real> values;

    real dt() const { return 1.0 / sample_rate; }
    real duration() const { return static_cast<real>(values.size()) * dt(); }
    real energy() const
    {
        real e = 0.0;
        for (real v : values) e += v * v;
        return e * dt();
    }
};

/// Minimum sampling rate for the train: twice the highest significant
/// angular frequency omegaL + Phi0 * Omega + 10 / tau, converted to a rate.
inline real nyquist_rate(const PulseTrainConfig& cfg)
{
    real w = cfg.omegaL + 10.0 / cfg.tau;
    if (cfg.modulation.kind != modulation_kind::none)
        w += cfg.modulation.Phi0 * cfg.modulation.Omega;
    return 2.0 * w / (2.0 * pi);
}

/// field_amplitude on t_start + n / sample_rate, n < round(t_total * sample_rate).
inline TimeSeries sample_field(const PulseTrainConfig& cfg, real sample_rate, real t_total,
                               real t_start = 0.0, real window_sigmas = default_window_sigmas)
{
    if (!(sample_rate > nyquist_rate(cfg)))
        throw simulation_error(error_kind::nyquist_violation,
                               "sample rate " + std::to_string(sample_rate) + " <= " +
                                   std::to_string(nyquist_rate(cfg)));
    if (t_total < cfg.N * cfg.T * (1.0 - 1e-12))
        throw simulation_error(error_kind::invalid_argument, "t_total must cover N * T");
    TimeSeries s;
    s.t_start = t_start;
    s.sample_rate = sample_rate;
    const auto n = static_cast<std::size_t>(std::llround(t_total * sample_rate));
    s.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        s.values[i] = field_amplitude(t_start + static_cast<real>(i) / sample_rate, cfg,
                                      window_sigmas);
    return s;
}

struct SpectrumResult {
    std::vector<real> frequencies; // angular
    std::vector<real> intensities;
    real resolution = 0.0;  // bin width after padding
    real t_total = 0.0;     // unpadded record length

    /// 2 pi / t_total, the width a tooth can be resolved to.
    real native_resolution() const { return 2.0 * pi / t_total; }
};

namespace detail {
// FFTW planning is not thread-safe; execution with distinct plans is.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}
} // namespace detail

/// One-sided power spectrum, scaled so that sum(intensity) * resolution
/// equals the time-domain energy sum(x^2) dt. `pad_factor` > 1 zero-pads
/// the record to interpolate the spectrum between native bins.
inline SpectrumResult compute_spectrum(const TimeSeries& series, int pad_factor = 1)
{
    const std::size_t n = series.values.size();
    if (n < 2) throw simulation_error(error_kind::invalid_argument, "series needs >= 2 samples");
    if (pad_factor < 1) throw simulation_error(error_kind::invalid_argument, "pad factor >= 1");
    const std::size_t npad = n * static_cast<std::size_t>(pad_factor);
    const std::size_t nout = npad / 2 + 1;

    std::unique_ptr<double, decltype(&fftw_free)> in(fftw_alloc_real(npad), &fftw_free);
    std::unique_ptr<fftw_complex, decltype(&fftw_free)> out(fftw_alloc_complex(nout), &fftw_free);
    fftw_plan plan;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(npad), in.get(), out.get(), FFTW_ESTIMATE);
    }
    std::copy(series.values.begin(), series.values.end(), in.get());
    std::fill(in.get() + n, in.get() + npad, 0.0);
    fftw_execute(plan);
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }

    const real dt = series.dt();
    SpectrumResult r;
    r.t_total = static_cast<real>(n) * dt;
    r.resolution = 2.0 * pi / (static_cast<real>(npad) * dt);
    r.frequencies.resize(nout);
    r.intensities.resize(nout);
    for (std::size_t q = 0; q < nout; ++q) {
        const bool unpaired = q == 0 || (npad % 2 == 0 && q == npad / 2);
        const real re = out.get()[q][0], im = out.get()[q][1];
        r.frequencies[q] = r.resolution * static_cast<real>(q);
        r.intensities[q] = (unpaired ? 1.0 : 2.0) * dt * dt * (re * re + im * im) / (2.0 * pi);
    }
    return r;
}

struct PeakList {
    std::vector<real> peak_frequencies;
    std::vector<real> peak_intensities;
    real threshold_used = 0.0;

    std::size_t size() const { return peak_frequencies.size(); }
};

/// Local maxima above threshold_fraction * max, refined by a parabola
/// through the log-intensities of the bin and its two neighbours.
inline PeakList extract_peaks(const SpectrumResult& spec, real threshold_fraction)
{
    if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0))
        throw simulation_error(error_kind::invalid_argument, "threshold must be in (0, 1)");
    PeakList p;
    p.threshold_used = threshold_fraction;
    const auto& I = spec.intensities;
    if (I.size() < 3) return p;
    const real imax = *std::max_element(I.begin(), I.end());
    const real cut = threshold_fraction * imax;
    const real floor = imax * 1e-300 + 1e-300;
    for (std::size_t q = 1; q + 1 < I.size(); ++q) {
        if (!(I[q] >= cut && I[q] > I[q - 1] && I[q] >= I[q + 1])) continue;
        // a line on an exact bin leaves only round-off in its neighbours;
        // a parabola through those would move the peak on noise alone
        if (std::min(I[q - 1], I[q + 1]) < 1e-12 * I[q]) {
            p.peak_frequencies.push_back(spec.frequencies[q]);
            p.peak_intensities.push_back(I[q]);
            continue;
        }
        const real a = std::log(I[q - 1] + floor), b = std::log(I[q] + floor),
                   c = std::log(I[q + 1] + floor);
        const real denom = a - 2.0 * b + c;
        real delta = denom < 0.0 ? 0.5 * (a - c) / denom : 0.0;
        delta = std::clamp(delta, -0.5, 0.5);
        p.peak_frequencies.push_back(spec.frequencies[q] + delta * spec.resolution);
        p.peak_intensities.push_back(std::exp(b - 0.25 * (a - c) * delta) - floor);
    }
    return p;
}

/// Slope of y against integer labels n, where labels are assigned by
/// rounding successive differences to multiples of `unit`.
inline real integer_lattice_spacing(const std::vector<real>& y, real unit)
{
    const std::size_t m = y.size();
    std::vector<real> n(m, 0.0);
    for (std::size_t i = 1; i < m; ++i)
        n[i] = n[i - 1] + std::max(1.0, std::round((y[i] - y[i - 1]) / unit));
    const real nm = std::accumulate(n.begin(), n.end(), 0.0) / static_cast<real>(m);
    const real ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<real>(m);
    real sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxy += (n[i] - nm) * (y[i] - ym);
        sxx += (n[i] - nm) * (n[i] - nm);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

inline real median(std::vector<real> v)
{
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

struct CombReport {
    std::size_t peak_count = 0;
    real expected_mode_spacing = 0.0;
    real mode_spacing = 0.0;
    real mode_deviation = 0.0;
    bool modulated = false;
    std::size_t set_count = 0;
    real expected_set_spacing = 0.0;
    real set_spacing = 0.0;
    real set_deviation = 0.0;
    real span = 0.0;
    real tolerance = 0.0;
    bool pass = false;

    std::string to_text() const;
};

inline std::string CombReport::to_text() const
{
    std::string s;
    auto kv = [&](const char* k, const std::string& v) { s += std::string(k) + "=" + v + "\n"; };
    kv("peak_count", std::to_string(peak_count));
    kv("expected_mode_spacing", format_real(expected_mode_spacing));
    kv("mode_spacing", format_real(mode_spacing));
    kv("mode_deviation", format_real(mode_deviation));
    kv("modulated", modulated ? "true" : "false");
    if (modulated) {
        kv("set_count", std::to_string(set_count));
        kv("expected_set_spacing", format_real(expected_set_spacing));
        kv("set_spacing", format_real(set_spacing));
        kv("set_deviation", format_real(set_deviation));
    }
    kv("span", format_real(span));
    kv("tolerance", format_real(tolerance));
    kv("pass", pass ? "true" : "false");
    return s;
}

/// Groups peaks separated by less than `max_gap` into sets and returns the
/// intensity-weighted centroid of each set.
inline std::vector<real> set_centroids(const PeakList& peaks, real max_gap)
{
    std::vector<real> centroids;
    real wsum = 0.0, fsum = 0.0;
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        if (i > 0 && peaks.peak_frequencies[i] - peaks.peak_frequencies[i - 1] > max_gap) {
            centroids.push_back(fsum / wsum);
            wsum = fsum = 0.0;
        }
        wsum += peaks.peak_intensities[i];
        fsum += peaks.peak_intensities[i] * peaks.peak_frequencies[i];
    }
    if (wsum > 0.0) centroids.push_back(fsum / wsum);
    return centroids;
}

/// Measures mode and set spacing and compares them with 2 pi / T and Omega
/// at tolerance resolution / 2 (`resolution` is normally 2 pi / t_total).
inline CombReport verify_comb_structure(const PeakList& peaks, const PulseTrainConfig& cfg,
                                        real resolution)
{
    if (peaks.size() < 3)
        throw simulation_error(error_kind::insufficient_peaks,
                               std::to_string(peaks.size()) + " peaks, need >= 3");
    CombReport r;
    r.peak_count = peaks.size();
    r.tolerance = 0.5 * resolution;
    r.expected_mode_spacing = cfg.repetition_rate();

    const auto& f = peaks.peak_frequencies;
    std::vector<real> diffs;
    for (std::size_t i = 1; i < f.size(); ++i) diffs.push_back(f[i] - f[i - 1]);
    const real base = median(diffs);
    r.mode_spacing = integer_lattice_spacing(f, base);
    r.mode_deviation = std::abs(r.mode_spacing - r.expected_mode_spacing);
    r.span = f.back() - f.front();
    r.pass = r.mode_deviation < r.tolerance;

    r.modulated = cfg.modulation.kind != modulation_kind::none && cfg.modulation.Phi0 > 0.0;
    if (r.modulated) {
        r.expected_set_spacing = cfg.modulation.Omega;
        const auto c = set_centroids(peaks, 3.0 * base);
        r.set_count = c.size();
        if (c.size() < 2) {
            r.pass = false;
        } else {
            std::vector<real> cd;
            for (std::size_t i = 1; i < c.size(); ++i) cd.push_back(c[i] - c[i - 1]);
            r.set_spacing = integer_lattice_spacing(c, median(cd));
            r.set_deviation = std::abs(r.set_spacing - r.expected_set_spacing);
            r.pass = r.pass && r.set_deviation < r.tolerance;
        }
    }
    return r;
}

/// Full width at half maximum of the tallest peak, by linear interpolation
/// of the half-maximum crossings. Use a zero-padded spectrum.
inline real tallest_peak_fwhm(const SpectrumResult& spec)
{
    const auto& I = spec.intensities;
    const auto it = std::max_element(I.begin(), I.end());
    const std::size_t q = static_cast<std::size_t>(it - I.begin());
    const real half = 0.5 * *it;
    std::size_t lo = q, hi = q;
    while (lo > 0 && I[lo] > half) --lo;
    while (hi + 1 < I.size() && I[hi] > half) ++hi;
    auto cross = [&](std::size_t a, std::size_t b) {
        const real fa = spec.frequencies[a], fb = spec.frequencies[b];
        return fa + (half - I[a]) * (fb - fa) / (I[b] - I[a]);
    };
    return cross(hi, hi - 1) - cross(lo, lo + 1);
}

/// Distance between the outermost peaks.
inline real peak_span(const PeakList& peaks)
{
    if (peaks.size() < 2) return 0.0;
    return peaks.peak_frequencies.back() - peaks.peak_frequencies.front();
}

/// Desk-scale stand-in for the laser comb: T = 50, tau = 2, carrier on mode
/// 480 and modulation on mode 32, so every feature sits on an exact bin.
inline PulseTrainConfig surrogate_train(modulation_kind kind, int N = 32, real Phi0 = 4.0,
                                        real omega_scale = 1.0)
{
    PulseTrainConfig cfg;
    cfg.T = 50.0;
    cfg.tau = 2.0;
    cfg.N = N;
    cfg.omegaL = 480.0 * cfg.repetition_rate();
    cfg.OmegaR = 1.0;
    if (kind != modulation_kind::none) {
        cfg.modulation = {kind, Phi0, 32.0 * omega_scale * cfg.repetition_rate()};
        cfg.envelope_prefactor = 0.5;
    }
    return cfg;
}

/// Sample rate that keeps an integer number of samples per period and
/// exceeds the Nyquist bound by `margin`.
inline real comb_sample_rate(const PulseTrainConfig& cfg, real margin = 1.25)
{
    return std::ceil(margin * nyquist_rate(cfg) * cfg.T) / cfg.T;
}

/// Samples exactly N periods with pulse 0 centred half a period in, so no
/// pulse is cut by the record edges and teeth fall on bins.
inline TimeSeries sample_train(const PulseTrainConfig& cfg, real sample_rate)
{
    return sample_field(cfg, sample_rate, cfg.N * cfg.T, -0.5 * cfg.T);
}

struct CombAnalysis {
    SpectrumResult spectrum;
    PeakList peaks;
    CombReport report;
    real fwhm = 0.0; // tallest tooth, from a 16x zero-padded transform
};

inline CombAnalysis analyze_comb(const PulseTrainConfig& cfg, real sample_rate,
                                 real threshold_fraction = 0.01)
{
    const TimeSeries series = sample_train(cfg, sample_rate);
    CombAnalysis a;
    a.spectrum = compute_spectrum(series);
    a.peaks = extract_peaks(a.spectrum, threshold_fraction);
    a.report = verify_comb_structure(a.peaks, cfg, a.spectrum.native_resolution());
    a.fwhm = tallest_peak_fwhm(compute_spectrum(series, 16));
    return a;
}

} // namespace comblambda
