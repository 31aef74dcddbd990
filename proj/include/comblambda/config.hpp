#pragma once

// Flat `key = value` run configuration with dot paths, overrides, and the
// text/CSV writers used by the command-line driver.

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "dynamics.hpp"
#include "field.hpp"
#include "scenarios.hpp"
#include "spectrum.hpp"

namespace comblambda {

struct RunConfig {
    std::string scenario = "custom";
    ScenarioPreset preset;
    IntegratorConfig integrator;
    rate_mode rates_mode = rate_mode::enforce;

    static RunConfig from_preset(const ScenarioPreset& p)
    {
        RunConfig rc;
        rc.scenario = p.name;
        rc.preset = p;
        rc.integrator.early_stop_pulses = p.early_stop_pulses;
        return rc;
    }

    /// Integrator settings with the rate-relation waiver applied.
    IntegratorConfig effective_integrator() const
    {
        IntegratorConfig ic = integrator;
        ic.allow_unconstrained_rates = rates_mode != rate_mode::enforce;
        return ic;
    }

    bool operator==(const RunConfig&) const = default;
};

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline real parse_real(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        const real x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw simulation_error(error_kind::config, key + ": not a number: '" + v + "'");
    }
}

inline int parse_int(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        const long x = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(x);
    } catch (const std::exception&) {
        throw simulation_error(error_kind::config, key + ": not an integer: '" + v + "'");
    }
}

namespace detail {

struct Field {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

inline std::string opt_text(const std::optional<real>& v) { return v ? format_real(*v) : "none"; }
inline std::string opt_text(const std::optional<int>& v) { return v ? std::to_string(*v) : "none"; }

/// Rebuilds the level system after one frequency changed. When omega31 is
/// not the changed key it follows omega32 - omega21.
inline void set_frequency(RunConfig& rc, int which, real value)
{
    real w21 = rc.preset.sys.omega21(), w32 = rc.preset.sys.omega32(), w31 = rc.preset.sys.omega31();
    if (which == 21) w21 = value;
    if (which == 32) w32 = value;
    if (which == 31) w31 = value;
    else w31 = w32 - w21;
    try {
        rc.preset.sys = LevelSystem(w21, w32, w31);
    } catch (const simulation_error& e) {
        throw simulation_error(error_kind::config, e.what());
    }
}

inline const std::vector<Field>& fields()
{
    using R = RunConfig;
    using S = const std::string&;
    auto real_field = [](std::string key, std::function<real&(R&)> ref) {
        return Field{key, [ref](const R& rc) { return format_real(ref(const_cast<R&>(rc))); },
                     [ref, key](R& rc, S v) { ref(rc) = parse_real(key, v); }};
    };
    auto int_field = [](std::string key, std::function<int&(R&)> ref) {
        return Field{key, [ref](const R& rc) { return std::to_string(ref(const_cast<R&>(rc))); },
                     [ref, key](R& rc, S v) { ref(rc) = parse_int(key, v); }};
    };
    auto opt_real = [](std::string key, std::function<std::optional<real>&(R&)> ref) {
        return Field{key, [ref](const R& rc) { return opt_text(ref(const_cast<R&>(rc))); },
                     [ref, key](R& rc, S v) {
                         if (v == "none") ref(rc).reset();
                         else ref(rc) = parse_real(key, v);
                     }};
    };
    auto opt_int = [](std::string key, std::function<std::optional<int>&(R&)> ref) {
        return Field{key, [ref](const R& rc) { return opt_text(ref(const_cast<R&>(rc))); },
                     [ref, key](R& rc, S v) {
                         if (v == "none") ref(rc).reset();
                         else ref(rc) = parse_int(key, v);
                     }};
    };
    auto bad = [](const std::string& key, S v) {
        return simulation_error(error_kind::config, key + ": unrecognized value '" + v + "'");
    };

    static const std::vector<Field> table = [&] {
        std::vector<Field> f;
        f.push_back({"run.name", [](const R& rc) { return rc.preset.name; },
                     [](R& rc, S v) { rc.preset.name = v; }});
        f.push_back({"run.rate_mode", [](const R& rc) { return std::string(to_string(rc.rates_mode)); },
                     [bad](R& rc, S v) {
                         auto m = parse_rate_mode(v);
                         if (!m) throw bad("run.rate_mode", v);
                         rc.rates_mode = *m;
                     }});
        f.push_back({"run.convention",
                     [](const R& rc) { return std::string(to_string(rc.preset.convention)); },
                     [bad](R& rc, S v) {
                         auto c = parse_convention(v);
                         if (!c) throw bad("run.convention", v);
                         rc.preset.convention = *c;
                     }});
        f.push_back(real_field("system.unit_thz", [](R& rc) -> real& { return rc.preset.unit_thz; }));
        f.push_back({"system.omega21", [](const R& rc) { return format_real(rc.preset.sys.omega21()); },
                     [](R& rc, S v) { set_frequency(rc, 21, parse_real("system.omega21", v)); }});
        f.push_back({"system.omega32", [](const R& rc) { return format_real(rc.preset.sys.omega32()); },
                     [](R& rc, S v) { set_frequency(rc, 32, parse_real("system.omega32", v)); }});
        f.push_back({"system.omega31", [](const R& rc) { return format_real(rc.preset.sys.omega31()); },
                     [](R& rc, S v) { set_frequency(rc, 31, parse_real("system.omega31", v)); }});
        f.push_back(real_field("train.E0", [](R& rc) -> real& { return rc.preset.cfg.E0; }));
        f.push_back(real_field("train.OmegaR", [](R& rc) -> real& { return rc.preset.cfg.OmegaR; }));
        f.push_back(real_field("train.omegaL", [](R& rc) -> real& { return rc.preset.cfg.omegaL; }));
        f.push_back(real_field("train.tau", [](R& rc) -> real& { return rc.preset.cfg.tau; }));
        f.push_back(real_field("train.T", [](R& rc) -> real& { return rc.preset.cfg.T; }));
        f.push_back(int_field("train.N", [](R& rc) -> int& { return rc.preset.cfg.N; }));
        f.push_back(real_field("train.phi", [](R& rc) -> real& { return rc.preset.cfg.phi; }));
        f.push_back({"train.modulation",
                     [](const R& rc) { return std::string(to_string(rc.preset.cfg.modulation.kind)); },
                     [bad](R& rc, S v) {
                         auto k = parse_modulation(v);
                         if (!k) throw bad("train.modulation", v);
                         rc.preset.cfg.modulation.kind = *k;
                     }});
        f.push_back(real_field("train.Phi0", [](R& rc) -> real& { return rc.preset.cfg.modulation.Phi0; }));
        f.push_back(real_field("train.Omega", [](R& rc) -> real& { return rc.preset.cfg.modulation.Omega; }));
        f.push_back(real_field("train.envelope_prefactor",
                               [](R& rc) -> real& { return rc.preset.cfg.envelope_prefactor; }));
        f.push_back({"train.frame", [](const R& rc) { return std::string(to_string(rc.preset.cfg.frame)); },
                     [bad](R& rc, S v) {
                         auto fr = parse_frame_phase(v);
                         if (!fr) throw bad("train.frame", v);
                         rc.preset.cfg.frame = *fr;
                     }});
        f.push_back(real_field("rates.gamma21", [](R& rc) -> real& { return rc.preset.rates.gamma21; }));
        f.push_back(real_field("rates.gamma23", [](R& rc) -> real& { return rc.preset.rates.gamma23; }));
        f.push_back(real_field("rates.Gamma21", [](R& rc) -> real& { return rc.preset.rates.Gamma21; }));
        f.push_back(real_field("rates.Gamma31", [](R& rc) -> real& { return rc.preset.rates.Gamma31; }));
        f.push_back(real_field("rates.Gamma23", [](R& rc) -> real& { return rc.preset.rates.Gamma23; }));
        f.push_back(real_field("integrator.step", [](R& rc) -> real& { return rc.integrator.step_in_pulse; }));
        f.push_back(int_field("integrator.stride", [](R& rc) -> int& { return rc.integrator.sampler_stride; }));
        f.push_back(real_field("integrator.window_sigmas",
                               [](R& rc) -> real& { return rc.integrator.window_sigmas; }));
        f.push_back({"integrator.method",
                     [](const R& rc) { return std::string(to_string(rc.integrator.method)); },
                     [bad](R& rc, S v) {
                         auto m = parse_method(v);
                         if (!m) throw bad("integrator.method", v);
                         rc.integrator.method = *m;
                     }});
        f.push_back(real_field("integrator.abs_tol", [](R& rc) -> real& { return rc.integrator.abs_tol; }));
        f.push_back(real_field("integrator.rel_tol", [](R& rc) -> real& { return rc.integrator.rel_tol; }));
        f.push_back(real_field("integrator.trace_tol", [](R& rc) -> real& { return rc.integrator.trace_tol; }));
        f.push_back(real_field("integrator.pop_tol", [](R& rc) -> real& { return rc.integrator.pop_tol; }));
        f.push_back(int_field("integrator.gap_samples", [](R& rc) -> int& { return rc.integrator.gap_samples; }));
        f.push_back({"integrator.early_stop_pulses",
                     [](const R& rc) { return std::to_string(rc.integrator.early_stop_pulses); },
                     [](R& rc, S v) {
                         rc.integrator.early_stop_pulses = parse_int("integrator.early_stop_pulses", v);
                         rc.preset.early_stop_pulses = rc.integrator.early_stop_pulses;
                     }});
        f.push_back(real_field("integrator.early_stop_tol",
                               [](R& rc) -> real& { return rc.integrator.early_stop_tol; }));
        for (int l = 1; l <= 3; ++l) {
            const std::string key = "initial.rho" + std::to_string(l) + std::to_string(l);
            f.push_back({key, [l](const R& rc) { return format_real(rc.preset.rho0.population(l)); },
                         [l, key](R& rc, S v) { rc.preset.rho0.set_population(l, parse_real(key, v)); }});
        }
        f.push_back(opt_real("expected.yield", [](R& rc) -> std::optional<real>& { return rc.preset.expected.yield; }));
        f.push_back(real_field("expected.yield_tol", [](R& rc) -> real& { return rc.preset.expected.yield_tol; }));
        f.push_back(opt_real("expected.yield_min", [](R& rc) -> std::optional<real>& { return rc.preset.expected.yield_min; }));
        f.push_back(opt_real("expected.rho11", [](R& rc) -> std::optional<real>& { return rc.preset.expected.rho11; }));
        f.push_back(real_field("expected.rho11_tol", [](R& rc) -> real& { return rc.preset.expected.rho11_tol; }));
        f.push_back(opt_int("expected.transfer_pulse",
                            [](R& rc) -> std::optional<int>& { return rc.preset.expected.transfer_pulse; }));
        f.push_back(int_field("expected.transfer_min", [](R& rc) -> int& { return rc.preset.expected.transfer_min; }));
        f.push_back(int_field("expected.transfer_max", [](R& rc) -> int& { return rc.preset.expected.transfer_max; }));
        f.push_back(opt_real("expected.max_rho22_below",
                             [](R& rc) -> std::optional<real>& { return rc.preset.expected.max_rho22_below; }));
        f.push_back(opt_real("expected.max_rho22_above",
                             [](R& rc) -> std::optional<real>& { return rc.preset.expected.max_rho22_above; }));
        return f;
    }();
    return table;
}

// Equivalent spellings of the symmetric rate labels.
inline std::string canonical_key(const std::string& key)
{
    static const std::map<std::string, std::string> aliases{
        {"rates.gamma32", "rates.gamma23"}, {"rates.gamma12", "rates.gamma21"},
        {"rates.Gamma12", "rates.Gamma21"}, {"rates.Gamma13", "rates.Gamma31"},
        {"rates.Gamma32", "rates.Gamma23"}, {"integrator.step_in_pulse", "integrator.step"},
        {"integrator.sampler_stride", "integrator.stride"}};
    const auto it = aliases.find(key);
    return it == aliases.end() ? key : it->second;
}

} // namespace detail

inline std::vector<std::string> config_keys()
{
    std::vector<std::string> keys{"run.scenario"};
    for (const auto& f : detail::fields()) keys.push_back(f.key);
    return keys;
}

/// Sets one dot-path key. Unknown keys are errors.
inline void apply_override(RunConfig& rc, const std::string& key_in, const std::string& value)
{
    const std::string key = detail::canonical_key(trim(key_in));
    const std::string v = trim(value);
    if (key == "run.scenario") {
        rc.scenario = v;
        return;
    }
    for (const auto& f : detail::fields())
        if (f.key == key) {
            f.set(rc, v);
            return;
        }
    throw simulation_error(error_kind::config, "unknown key '" + key_in + "'");
}

/// Splits "key=value".
inline std::pair<std::string, std::string> split_assignment(const std::string& s)
{
    const auto eq = s.find('=');
    if (eq == std::string::npos)
        throw simulation_error(error_kind::config, "expected key=value, got '" + s + "'");
    return {trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
}

/// Base configuration for a preset name, honouring the unit convention.
inline RunConfig base_config(const std::string& scenario,
                             unit_convention conv = unit_convention::angular)
{
    if (scenario == "custom") {
        RunConfig rc;
        rc.preset.name = "custom";
        rc.preset.convention = conv;
        return rc;
    }
    auto p = find_preset(scenario, conv);
    if (!p) throw simulation_error(error_kind::config, "unknown scenario '" + scenario + "'");
    return RunConfig::from_preset(*p);
}

/// Parses config text. `run.scenario` and `run.convention` pick the base
/// preset; every other assignment is applied on top, in file order.
inline RunConfig parse_config(const std::string& text)
{
    std::vector<std::pair<std::string, std::string>> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::string scenario = "custom";
    unit_convention conv = unit_convention::angular;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.find('=') == std::string::npos)
            throw simulation_error(error_kind::config,
                                   "line " + std::to_string(lineno) + ": expected key = value");
        auto [k, v] = split_assignment(line);
        if (k == "run.scenario") scenario = v;
        else if (k == "run.convention") {
            auto c = parse_convention(v);
            if (!c) throw simulation_error(error_kind::config, "run.convention: '" + v + "'");
            conv = *c;
        }
        kv.emplace_back(k, v);
    }
    RunConfig rc = base_config(scenario, conv);
    for (const auto& [k, v] : kv) apply_override(rc, k, v);
    return rc;
}

inline RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw simulation_error(error_kind::config, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline std::string dump_config(const RunConfig& rc)
{
    std::string s = "run.scenario = " + rc.scenario + "\n";
    for (const auto& f : detail::fields()) s += f.key + " = " + f.get(rc) + "\n";
    return s;
}

/// Preset name or a path to a config file.
inline RunConfig resolve_scenario(const std::string& scenario_or_path)
{
    if (find_preset(scenario_or_path) || scenario_or_path == "custom")
        return base_config(scenario_or_path);
    if (std::filesystem::exists(scenario_or_path)) return load_config(scenario_or_path);
    throw simulation_error(error_kind::config,
                           "'" + scenario_or_path + "' is neither a preset nor a config file");
}

// Outputs ---------------------------------------------------------------------

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw simulation_error(error_kind::config, "cannot write " + path.string());
    out << text;
}

inline std::string timeseries_csv(const Trajectory& traj)
{
    std::string s = "t,rho11,rho22,rho33,re12,im12,re13,im13,re23,im23,trace\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& r = traj.states[i];
        const real row[] = {traj.times[i],    r.rho11(),        r.rho22(),        r.rho33(),
                            r.rho12().real(), r.rho12().imag(), r.rho13().real(), r.rho13().imag(),
                            r.rho23().real(), r.rho23().imag(), traj.trace_series[i]};
        for (std::size_t c = 0; c < std::size(row); ++c) {
            if (c) s += ',';
            s += format_real(row[c]);
        }
        s += '\n';
    }
    return s;
}

inline std::string spectrum_csv(const SpectrumResult& spec)
{
    std::string s = "omega,intensity\n";
    for (std::size_t q = 0; q < spec.frequencies.size(); ++q)
        s += format_real(spec.frequencies[q]) + "," + format_real(spec.intensities[q]) + "\n";
    return s;
}

/// key=value lines with the expectation band checks that apply.
inline std::string summary_text(const RunConfig& rc, const RunSummary& s)
{
    const Expectation& e = rc.preset.expected;
    std::string out;
    auto kv = [&](const std::string& k, const std::string& v) { out += k + "=" + v + "\n"; };
    auto verdict = [](bool ok) { return std::string(ok ? "pass" : "fail"); };
    kv("scenario", rc.scenario);
    kv("yield", format_real(s.yield));
    kv("steady_yield", format_real(s.steady_yield));
    kv("final_rho11", format_real(s.final_rho11));
    kv("max_rho22", format_real(s.max_rho22));
    kv("transfer_pulse", std::to_string(s.transfer_pulse));
    kv("pulses_run", std::to_string(s.pulses_run));
    kv("trace_max_drift", format_real(s.trace_max_drift));
    kv("final_abs_rho13", format_real(s.final_abs_rho13));
    kv("rate_deviation", format_real(rc.preset.rates.relation_deviation()));
    if (e.yield) {
        kv("yield_band", format_real(*e.yield - e.yield_tol) + ".." + format_real(*e.yield + e.yield_tol));
        kv("yield_check", verdict(std::abs(s.yield - *e.yield) <= e.yield_tol));
    }
    if (e.yield_min) kv("yield_min_check", verdict(s.yield > *e.yield_min));
    if (e.rho11) kv("rho11_check", verdict(std::abs(s.final_rho11 - *e.rho11) <= e.rho11_tol));
    if (e.transfer_pulse)
        kv("transfer_check",
           verdict(s.transfer_pulse >= e.transfer_min && s.transfer_pulse <= e.transfer_max));
    if (e.max_rho22_below) kv("max_rho22_below_check", verdict(s.max_rho22 < *e.max_rho22_below));
    if (e.max_rho22_above) kv("max_rho22_above_check", verdict(s.max_rho22 > *e.max_rho22_above));
    out += "# resolved configuration\n";
    out += dump_config(rc);
    return out;
}

/// One two-column file per population plus a gnuplot script.
inline void write_plotdata(const std::filesystem::path& dir, const Trajectory& traj)
{
    std::filesystem::create_directories(dir);
    for (int l = 1; l <= 3; ++l) {
        std::string s = "# t rho" + std::to_string(l) + std::to_string(l) + "\n";
        for (std::size_t i = 0; i < traj.size(); ++i)
            s += format_real(traj.times[i]) + " " + format_real(traj.states[i].population(l)) + "\n";
        write_text(dir / ("rho" + std::to_string(l) + std::to_string(l) + ".dat"), s);
    }
    write_text(dir / "plot.gp",
               "set xlabel 't'\n"
               "set ylabel 'population'\n"
               "plot 'rho11.dat' with lines title 'rho11', \\\n"
               "     'rho22.dat' with lines title 'rho22', \\\n"
               "     'rho33.dat' with lines title 'rho33'\n");
}

} // namespace comblambda
