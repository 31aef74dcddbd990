#include <catch2/catch_amalgamated.hpp>

#include <comblambda/scenarios.hpp>

#include <cmath>

using namespace comblambda;
using Catch::Approx;

TEST_CASE("standard comb preset conversions", "[scenarios][presets]")
{
    const auto p = preset_fig3();
    CHECK(p.cfg.omegaL == Approx(3.46454).epsilon(1e-5));
    CHECK(p.cfg.tau == Approx(0.3765).epsilon(1e-12));
    CHECK(p.cfg.T == Approx(25100.0).epsilon(1e-12));
    CHECK(p.cfg.OmegaR == Approx(0.010040).epsilon(1e-4));
    CHECK(p.cfg.N == 3200);
    CHECK(p.sys.omega31() == Approx(1.0).epsilon(1e-12));

    const auto ord = preset_fig3(unit_convention::ordinary);
    CHECK(ord.cfg.tau == Approx(0.3765 * 2 * pi).epsilon(1e-12));
    CHECK(ord.cfg.omegaL == p.cfg.omegaL);

    CHECK(preset_fig5(false).cfg.OmegaR == Approx(0.10040).epsilon(1e-4));
}

TEST_CASE("modulated comb preset conversions", "[scenarios][presets]")
{
    const auto p = preset_fig4();
    CHECK(p.cfg.OmegaR == 1.0);
    CHECK(p.sys.omega21() == Approx(4.8671).epsilon(1e-4));
    CHECK(p.sys.omega32() == Approx(5.8671).epsilon(1e-4));
    CHECK(p.cfg.modulation.kind == modulation_kind::sine);
    CHECK(p.cfg.modulation.Omega == p.sys.omega21());
    CHECK(p.cfg.modulation.Phi0 == 4.0);
    CHECK(p.cfg.T == calibrated_T);
    CHECK(p.cfg.N == calibrated_N);
    CHECK(p.rates == DecoherenceRates{});

    CHECK(preset_fig6(modulation_kind::cosine).cfg.modulation.kind == modulation_kind::cosine);
    CHECK(preset_fig6(modulation_kind::none).cfg.modulation.kind == modulation_kind::none);
}

TEST_CASE("preset lookup", "[scenarios][presets]")
{
    for (const auto& name : preset_names()) {
        const auto p = find_preset(name);
        REQUIRE(p.has_value());
        CHECK(p->name == name);
        CHECK_NOTHROW(p->cfg.validate());
    }
    CHECK_FALSE(find_preset("fig7").has_value());
}

TEST_CASE("rate relation examples", "[scenarios][rates]")
{
    DecoherenceRates a{0, 0, 0.001, 0.0, 0.001};
    DecoherenceRates b{0, 0, 0.001, 0.001, 0.002};
    DecoherenceRates c{0, 0, 0.001, 0.001, 0.001};
    CHECK(validate_rates(a, rate_mode::enforce).valid);
    CHECK(validate_rates(b, rate_mode::enforce).valid);
    try {
        validate_rates(c, rate_mode::enforce);
        FAIL("expected RateRelationViolation");
    } catch (const simulation_error& e) {
        CHECK(e.kind() == error_kind::rate_relation_violation);
    }
    const auto warn = validate_rates(c, rate_mode::warn);
    CHECK_FALSE(warn.valid);
    CHECK(warn.deviation == Approx(-0.001));
    const auto off = validate_rates(c, rate_mode::off);
    CHECK_FALSE(off.valid);
    CHECK(off.deviation == Approx(-0.001));
    CHECK(off.mode == rate_mode::off);
}

TEST_CASE("every preset satisfies the rate relation", "[scenarios][rates]")
{
    for (const auto& name : preset_names()) {
        const auto r = validate_rates(find_preset(name)->rates, rate_mode::warn);
        CHECK(r.valid);
        CHECK(r.deviation == 0.0);
    }
}

TEST_CASE("identical presets give identical rows", "[scenarios][compare]")
{
    auto p = preset_fig4();
    p.cfg.N = 20;
    const auto c = compare_runs({p, p}, {});
    REQUIRE(c.rows.size() == 2);
    CHECK(c.rows[0] == c.rows[1]);
    CHECK(c.trajectories[0].states == c.trajectories[1].states);
}

TEST_CASE("compare_runs preconditions", "[scenarios][compare]")
{
    CHECK_THROWS_AS(compare_runs({preset_fig4()}, {}), simulation_error);
    CHECK_THROWS_AS(compare_runs({preset_fig4(), preset_fig3()}, {}), simulation_error);
}

TEST_CASE("spontaneous decay raises the steady yield", "[scenarios][compare][slow]")
{
    const auto c = compare_runs({preset_fig5(false), preset_fig5(true)}, {});
    CHECK(c.rows[0].name == "fig5");
    CHECK(c.rows[1].name == "fig5sp");
    CHECK(c.rows[0].yield < c.rows[1].yield);
    CHECK(c.rows[0].trace_max_drift <= 1e-6);
    CHECK(c.rows[1].trace_max_drift <= 1e-6);
}

TEST_CASE("sine modulation beats cosine", "[scenarios][compare][slow]")
{
    const auto c = compare_runs({preset_fig6(modulation_kind::sine), preset_fig6(modulation_kind::cosine)}, {});
    CHECK(c.rows[0].yield > c.rows[1].yield);
    // cosine drives the 1-3 coherence toward its maximum sqrt(rho11 rho33)
    CHECK(c.rows[1].final_abs_rho13 > 0.25);
}

TEST_CASE("dephasing lowers the standard comb yield", "[scenarios][slow]")
{
    const auto with = preset_fig6(modulation_kind::none);
    auto without = with;
    without.rates = {};
    const auto c = compare_runs({with, without}, {});
    CHECK(c.rows[0].yield < c.rows[1].yield);
}

TEST_CASE("closed modulated comb keeps its trace", "[scenarios]")
{
    auto p = preset_fig4();
    p.cfg.N = 30;
    const auto s = summarize(p.name, run_preset(p, {}));
    CHECK(std::abs(s.trace_max_drift) <= 1e-6);
    CHECK(s.pulses_run == 30);
}

TEST_CASE("calibration reproduces the frozen transfer preset", "[scenarios][calibration]")
{
    CalibrationOptions opt;
    opt.tau_fs = {calibrated_tau_fs};
    opt.T_min = 96.3;
    opt.T_max = 96.8;
    const auto r = calibrate_transfer(opt);
    CHECK(r.scanned == 1001);
    CHECK(r.feasible > 0);
    CHECK(r.best.tau_fs == calibrated_tau_fs);
    CHECK(r.best.T == Approx(calibrated_T).margin(1e-9));
    CHECK(r.best.peak_pulse == calibrated_N);
    CHECK(r.best.peak_rho33 > 0.95);
    CHECK(r.best.transfer_pulse >= 98);
    CHECK(r.best.transfer_pulse <= 120);
    CHECK(r.best.max_rho22 < 0.15);
}

TEST_CASE("calibration without a feasible point", "[scenarios][calibration]")
{
    CalibrationOptions opt;
    opt.tau_fs = {calibrated_tau_fs};
    opt.T_min = 96.3;
    opt.T_max = 96.31;
    opt.min_peak = 0.9999999;
    CHECK_THROWS_AS(calibrate_transfer(opt), simulation_error);
}
