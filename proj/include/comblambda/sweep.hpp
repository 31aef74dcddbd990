#pragma once

// Parameter sweeps over one or two config keys on a worker pool. Rows are
// written in grid order whatever order the points finish in.

#include <atomic>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "config.hpp"

namespace comblambda {

enum class sweep_objective { final_yield, steady_yield, max_rho22 };

inline const char* to_string(sweep_objective o)
{
    switch (o) {
    case sweep_objective::final_yield: return "final_yield";
    case sweep_objective::steady_yield: return "steady_yield";
    case sweep_objective::max_rho22: return "max_rho22";
    }
    return "final_yield";
}

inline std::optional<sweep_objective> parse_objective(const std::string& s)
{
    if (s == "final_yield") return sweep_objective::final_yield;
    if (s == "steady_yield") return sweep_objective::steady_yield;
    if (s == "max_rho22") return sweep_objective::max_rho22;
    return std::nullopt;
}

/// `key` may join several keys with '+'; each gets the same value.
struct SweepAxis {
    std::string key;
    std::vector<std::string> values; // kept as text so overrides see the exact input
};

inline constexpr std::size_t default_grid_cap = 10000;

struct SweepSpec {
    SweepAxis axis1;
    std::optional<SweepAxis> axis2;
    sweep_objective objective = sweep_objective::final_yield;
    std::size_t cap = default_grid_cap;

    std::size_t grid_size() const
    {
        return axis1.values.size() * (axis2 ? axis2->values.size() : 1);
    }
};

/// "key=v1,v2,..." or "key=linspace(start,stop,count)".
inline SweepAxis parse_axis(const std::string& text)
{
    auto [key, rhs] = split_assignment(text);
    SweepAxis a;
    a.key = key;
    if (rhs.rfind("linspace(", 0) == 0 && rhs.back() == ')') {
        std::vector<std::string> parts;
        std::stringstream ss(rhs.substr(9, rhs.size() - 10));
        std::string item;
        while (std::getline(ss, item, ',')) parts.push_back(trim(item));
        if (parts.size() != 3) throw simulation_error(error_kind::config, "linspace needs 3 arguments");
        const real lo = parse_real(key, parts[0]), hi = parse_real(key, parts[1]);
        const int n = parse_int(key, parts[2]);
        if (n < 1) throw simulation_error(error_kind::config, "linspace count must be >= 1");
        for (int i = 0; i < n; ++i)
            a.values.push_back(format_real(n == 1 ? lo : lo + (hi - lo) * i / (n - 1)));
    } else {
        std::stringstream ss(rhs);
        std::string item;
        while (std::getline(ss, item, ',')) a.values.push_back(trim(item));
    }
    if (a.values.empty()) throw simulation_error(error_kind::config, "axis '" + key + "' is empty");
    return a;
}

/// Worker count: COMB_LAMBDA_THREADS if set, else the hardware concurrency.
inline unsigned worker_count()
{
    if (const char* env = std::getenv("COMB_LAMBDA_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

struct SweepRow {
    std::size_t index = 0;
    std::string value1;
    std::string value2;
    real objective = 0.0;
    real trace_max_drift = 0.0;
    std::string error; // empty on success
};

inline void apply_axis(RunConfig& rc, const std::string& key, const std::string& value)
{
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '+')) apply_override(rc, part, value);
}

inline real objective_value(sweep_objective o, const RunSummary& s)
{
    switch (o) {
    case sweep_objective::final_yield: return s.yield;
    case sweep_objective::steady_yield: return s.steady_yield;
    case sweep_objective::max_rho22: return s.max_rho22;
    }
    return s.yield;
}

inline RunSummary run_config(const RunConfig& rc)
{
    validate_rates(rc.preset.rates, rc.rates_mode);
    ScenarioPreset p = rc.preset;
    const Trajectory traj = propagate(p.rho0, p.cfg, p.sys, p.rates, rc.effective_integrator());
    return summarize(p.name, traj);
}

inline std::vector<SweepRow> run_sweep(const RunConfig& base, const SweepSpec& spec,
                                       unsigned threads = worker_count())
{
    const std::size_t n = spec.grid_size();
    if (n < 1 || n > spec.cap)
        throw simulation_error(error_kind::config,
                               "grid size " + std::to_string(n) + " outside [1, " +
                                   std::to_string(spec.cap) + "]");
    // validate keys up front so a typo is a config error, not n row errors
    {
        RunConfig probe = base;
        apply_axis(probe, spec.axis1.key, spec.axis1.values.front());
        if (spec.axis2) apply_axis(probe, spec.axis2->key, spec.axis2->values.front());
    }
    const std::size_t n2 = spec.axis2 ? spec.axis2->values.size() : 1;
    std::vector<SweepRow> rows(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            SweepRow& row = rows[i];
            row.index = i;
            row.value1 = spec.axis1.values[i / n2];
            if (spec.axis2) row.value2 = spec.axis2->values[i % n2];
            try {
                RunConfig rc = base;
                apply_axis(rc, spec.axis1.key, row.value1);
                if (spec.axis2) apply_axis(rc, spec.axis2->key, row.value2);
                const RunSummary s = run_config(rc);
                row.objective = objective_value(spec.objective, s);
                row.trace_max_drift = s.trace_max_drift;
            } catch (const simulation_error& e) {
                row.error = to_string(e.kind());
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    for (unsigned w = 0; w < t; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    return rows;
}

inline std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows)
{
    std::string s = "index," + spec.axis1.key + ",";
    if (spec.axis2) s += spec.axis2->key + ",";
    s += std::string(to_string(spec.objective)) + ",trace_max_drift,error\n";
    for (const auto& r : rows) {
        s += std::to_string(r.index) + "," + r.value1 + ",";
        if (spec.axis2) s += r.value2 + ",";
        s += (r.error.empty() ? format_real(r.objective) : std::string("nan")) + ",";
        s += (r.error.empty() ? format_real(r.trace_max_drift) : std::string("nan")) + ",";
        s += r.error + "\n";
    }
    return s;
}

} // namespace comblambda
