#include <catch2/catch_amalgamated.hpp>

#include <comblambda/spectrum.hpp>

#include <cmath>
#include <future>
#include <vector>

using namespace comblambda;
using Catch::Approx;

namespace {

TimeSeries tone(real omega0, real rate, std::size_t n)
{
    TimeSeries s;
    s.sample_rate = rate;
    s.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.values[i] = std::cos(omega0 * static_cast<real>(i) / rate);
    return s;
}

// |A_q|^2 from one period of the pulse by trapezoidal integration:
// A_q = (1/T) int_{-T/2}^{T/2} E(t) exp(i w_q t) dt
real fourier_coefficient_sq(const PulseTrainConfig& cfg, real wq)
{
    PulseTrainConfig one = cfg;
    one.N = 1;
    const int n = 200000;
    const real h = cfg.T / n;
    complex acc{};
    for (int i = 0; i <= n; ++i) {
        const real t = -cfg.T / 2 + i * h;
        const real w = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += w * field_amplitude(t, one) * std::polar(1.0, wq * t);
    }
    return std::norm(acc * h / cfg.T);
}

} // namespace

TEST_CASE("sample_field grid", "[spectrum][sample]")
{
    auto cfg = surrogate_train(modulation_kind::none, 1);
    cfg.E0 = 1.7;
    const real rate = comb_sample_rate(cfg);
    const auto s = sample_field(cfg, rate, cfg.T);
    CHECK(s.values.front() == 1.7);
    CHECK(s.values.size() == static_cast<std::size_t>(std::llround(cfg.T * rate)));
    const auto longer = sample_field(cfg, rate, 3.3 * cfg.T);
    CHECK(longer.values.size() == static_cast<std::size_t>(std::llround(3.3 * cfg.T * rate)));
}

TEST_CASE("sample_field rejects undersampling", "[spectrum][sample]")
{
    const auto cfg = surrogate_train(modulation_kind::sine, 4);
    try {
        sample_field(cfg, 0.9 * nyquist_rate(cfg), cfg.N * cfg.T);
        FAIL("expected NyquistViolation");
    } catch (const simulation_error& e) {
        CHECK(e.kind() == error_kind::nyquist_violation);
    }
    CHECK_THROWS_AS(sample_field(cfg, comb_sample_rate(cfg), 0.5 * cfg.N * cfg.T), simulation_error);
}

TEST_CASE("train energy is N single-pulse energies", "[spectrum][sample]")
{
    for (auto kind : {modulation_kind::none, modulation_kind::sine}) {
        const auto cfg = surrogate_train(kind, 12);
        const auto s = sample_train(cfg, comb_sample_rate(cfg));
        const real a = cfg.envelope_prefactor * cfg.E0;
        // each pulse: a^2 tau sqrt(pi) / 2 from the Gaussian and <cos^2> = 1/2
        const real single = a * a * cfg.tau * std::sqrt(pi) / 2;
        CHECK(s.energy() == Approx(cfg.N * single).epsilon(1e-3));
    }
}

TEST_CASE("pure tone lands in one bin", "[spectrum][dft]")
{
    const real rate = 8.0;
    const std::size_t n = 4096;
    const real res = 2 * pi * rate / n;
    const real omega0 = 300 * res;
    const auto spec = compute_spectrum(tone(omega0, rate, n));
    CHECK(spec.resolution == Approx(res));
    std::size_t best = 0;
    for (std::size_t q = 0; q < spec.intensities.size(); ++q)
        if (spec.intensities[q] > spec.intensities[best]) best = q;
    CHECK(std::abs(spec.frequencies[best] - omega0) < res);

    const auto peaks = extract_peaks(spec, 0.1);
    REQUIRE(peaks.size() == 1);
    CHECK(std::abs(peaks.peak_frequencies[0] - omega0) < res / 2);

    const auto off = compute_spectrum(tone(300.3 * res, rate, n));
    const auto p2 = extract_peaks(off, 0.1);
    REQUIRE(p2.size() == 1);
    CHECK(std::abs(p2.peak_frequencies[0] - 300.3 * res) < res / 2);
}

TEST_CASE("parseval", "[spectrum][dft]")
{
    for (auto kind : {modulation_kind::none, modulation_kind::cosine}) {
        const auto cfg = surrogate_train(kind, 8);
        const auto s = sample_train(cfg, comb_sample_rate(cfg));
        for (int pad : {1, 3}) {
            const auto spec = compute_spectrum(s, pad);
            real sum = 0.0;
            for (real v : spec.intensities) sum += v;
            CHECK(sum * spec.resolution == Approx(s.energy()).epsilon(1e-9));
        }
    }
    // odd length, no Nyquist bin
    const auto odd = tone(1.0, 5.0, 1001);
    const auto spec = compute_spectrum(odd);
    real sum = 0.0;
    for (real v : spec.intensities) sum += v;
    CHECK(sum * spec.resolution == Approx(odd.energy()).epsilon(1e-9));
}

TEST_CASE("standard comb teeth sit on omegaL + q 2pi/T", "[spectrum][comb]")
{
    const auto cfg = surrogate_train(modulation_kind::none, 16);
    const auto spec = compute_spectrum(sample_train(cfg, comb_sample_rate(cfg)));
    const auto peaks = extract_peaks(spec, 0.01);
    REQUIRE(peaks.size() >= 5);
    const real wr = cfg.repetition_rate();
    real top = 0.0;
    for (real v : peaks.peak_intensities) top = std::max(top, v);
    real oracle_top = 0.0;
    std::vector<real> oracle;
    for (real f : peaks.peak_frequencies) {
        const real q = (f - cfg.omegaL) / wr;
        CHECK(std::abs(q - std::round(q)) * wr < spec.resolution / 2);
        oracle.push_back(fourier_coefficient_sq(cfg, cfg.omegaL + std::round(q) * wr));
        oracle_top = std::max(oracle_top, oracle.back());
    }
    // relative tooth heights follow |A_q|^2
    for (std::size_t i = 0; i < peaks.size(); ++i)
        CHECK(peaks.peak_intensities[i] / top == Approx(oracle[i] / oracle_top).epsilon(1e-3));
}

TEST_CASE("tooth width scales with 1 / t_total", "[spectrum][comb]")
{
    const auto a = surrogate_train(modulation_kind::none, 16);
    const auto b = surrogate_train(modulation_kind::none, 32);
    const real wa = tallest_peak_fwhm(compute_spectrum(sample_train(a, comb_sample_rate(a)), 16));
    const real wb = tallest_peak_fwhm(compute_spectrum(sample_train(b, comb_sample_rate(b)), 16));
    CHECK(wb / wa == Approx(0.5).epsilon(0.1));
    // rectangular record: sinc^2 main lobe, FWHM = 0.8859 * 2 pi / t_total
    CHECK(wa == Approx(0.8859 * 2 * pi / (a.N * a.T)).epsilon(0.01));
}

TEST_CASE("comb structure reports", "[spectrum][comb]")
{
    const auto plain = surrogate_train(modulation_kind::none, 32);
    const auto a = analyze_comb(plain, comb_sample_rate(plain));
    CHECK(a.report.pass);
    CHECK_FALSE(a.report.modulated);
    CHECK(a.report.mode_deviation < a.spectrum.native_resolution() / 2);

    const auto sine = surrogate_train(modulation_kind::sine, 32);
    const auto b = analyze_comb(sine, comb_sample_rate(sine));
    CHECK(b.report.pass);
    CHECK(b.report.modulated);
    CHECK(b.report.set_count >= 5);
    CHECK(b.report.set_deviation < b.spectrum.native_resolution() / 2);
    CHECK(b.report.mode_deviation < b.spectrum.native_resolution() / 2);
    CHECK(b.report.to_text().find("pass=true") != std::string::npos);
}

TEST_CASE("single pulse has no comb", "[spectrum][comb]")
{
    const auto cfg = surrogate_train(modulation_kind::none, 1);
    const auto spec = compute_spectrum(sample_train(cfg, comb_sample_rate(cfg)));
    const auto peaks = extract_peaks(spec, 0.01);
    bool no_comb = false;
    try {
        no_comb = !verify_comb_structure(peaks, cfg, spec.native_resolution()).pass;
    } catch (const simulation_error& e) {
        no_comb = e.kind() == error_kind::insufficient_peaks;
    }
    CHECK(no_comb);
}

TEST_CASE("mode spacing does not depend on Phi0", "[spectrum][comb]")
{
    for (real phi0 : {0.0, 1.0, 4.0}) {
        const auto cfg = surrogate_train(modulation_kind::sine, 32, phi0);
        const auto a = analyze_comb(cfg, comb_sample_rate(cfg));
        CHECK(std::abs(a.report.mode_spacing - cfg.repetition_rate()) < a.spectrum.native_resolution() / 2);
    }
}

TEST_CASE("larger Omega widens the comb", "[spectrum][comb]")
{
    real last = 0.0;
    for (real scale : {0.5, 1.0, 2.0}) {
        const auto cfg = surrogate_train(modulation_kind::sine, 32, 4.0, scale);
        const auto spec = compute_spectrum(sample_train(cfg, comb_sample_rate(cfg)));
        const real span = peak_span(extract_peaks(spec, 0.01));
        CHECK(span > last);
        last = span;
    }
}

TEST_CASE("spectra are reproducible across threads", "[spectrum][determinism]")
{
    const auto cfg = surrogate_train(modulation_kind::cosine, 16);
    const auto s = sample_train(cfg, comb_sample_rate(cfg));
    const auto ref = compute_spectrum(s);
    std::vector<std::future<SpectrumResult>> jobs;
    for (int i = 0; i < 4; ++i) jobs.push_back(std::async(std::launch::async, [&] { return compute_spectrum(s); }));
    for (auto& j : jobs) CHECK(j.get().intensities == ref.intensities);
}

TEST_CASE("spectrum argument checks", "[spectrum]")
{
    TimeSeries one;
    one.values = {1.0};
    CHECK_THROWS_AS(compute_spectrum(one), simulation_error);
    const auto spec = compute_spectrum(tone(1.0, 4.0, 64));
    CHECK_THROWS_AS(extract_peaks(spec, 0.0), simulation_error);
    CHECK_THROWS_AS(extract_peaks(spec, 1.0), simulation_error);
}
