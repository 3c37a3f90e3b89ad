#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <sstream>
#include <string>

#include "config_io.hpp"
#include "scenario.hpp"

namespace tpsim::fixtures {

namespace detail {

inline double bump(double hour, double center, double width) {
    const double z = (hour - center) / width;
    return std::exp(-0.5 * z * z);
}

inline double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

} // namespace detail

// Synthetic weekday: morning peak around 8:15, heavier evening peak around
// 16:45, low night-time floor. Values are rounded to 1e-3 vehicles so the
// CSV rendering reloads bit-identically.
inline DemandProfile synthetic_two_peak_demand(const TimeGrid& grid = {}) {
    DemandProfile d;
    d.inflow.resize(grid.n_intervals);
    d.starting.resize(grid.n_intervals);
    const double scale = grid.interval_minutes / 5.0;
    for (int t = 0; t < grid.n_intervals; ++t) {
        const double hour = (t + 0.5) * grid.interval_minutes / 60.0;
        const double day = detail::bump(hour, 13.0, 4.5);
        d.inflow[t] = detail::round3(
            scale * (15.0 + 90.0 * day + 420.0 * detail::bump(hour, 8.25, 1.0) + 560.0 * detail::bump(hour, 16.75, 1.25)));
        d.starting[t] = detail::round3(
            scale * (10.0 + 70.0 * day + 260.0 * detail::bump(hour, 8.0, 1.1) + 330.0 * detail::bump(hour, 17.25, 1.4)));
    }
    return d;
}

inline std::string demand_csv(const DemandProfile& d) {
    std::ostringstream out;
    out << "t,inflow,starting\n";
    for (std::size_t t = 0; t < d.size(); ++t) {
        std::array<char, 64> a{}, b{};
        auto ra = std::to_chars(a.data(), a.data() + a.size(), d.inflow[t]);
        auto rb = std::to_chars(b.data(), b.data() + b.size(), d.starting[t]);
        out << t << ',' << std::string(a.data(), ra.ptr) << ',' << std::string(b.data(), rb.ptr) << '\n';
    }
    return out.str();
}

// Four illustrative origin zones with transit covariates spanning good to
// poor service. Not derived from any real city.
inline ZoneTable synthetic_zones() {
    ZoneTable z;
    z.rows = {
        {"north", 0.30, 0.20, 0.60, 0.80, 1.50, 10.0},
        {"east", 0.25, 0.30, 0.45, 0.65, 1.50, 15.0},
        {"south", 0.25, 0.35, 0.35, 0.50, 2.00, 20.0},
        {"west", 0.20, 0.15, 0.25, 0.40, 2.50, 30.0},
    };
    return z;
}

// Builtin defaults with the A1 policy on a 5-minute grid.
inline ScenarioConfig default_scenario() {
    const auto d = builtin_bologna_defaults();
    ScenarioConfig c;
    c.name = "default";
    c.grid = TimeGrid::from_minutes(5);
    c.fleet = d.fleet;
    c.behavior = d.behavior;
    c.solver = d.solver;
    c.zones = synthetic_zones();
    c.policy.window = {96, 216};
    c.policy.exempt_fraction = 0.0;
    c.policy.fee_by_class.assign(c.fleet.class_count(), 5.0);
    return c;
}

} // namespace tpsim::fixtures
