/// @file scenario.hpp
/// @brief Domain types describing one what-if run and their invariants.
///
/// All times are integer interval indices on a daily TimeGrid; all durations
/// are counts of intervals. Conversion from clock times and minutes/hours
/// happens once, at ingestion (see config_io.hpp).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace tpsim {

inline constexpr int minutes_per_day = 1440;
inline constexpr double share_tolerance = 1e-9;

struct TimeGrid {
    int interval_minutes = 5;
    int n_intervals = minutes_per_day / 5;

    static TimeGrid from_minutes(int interval_minutes) {
        if (interval_minutes <= 0 || minutes_per_day % interval_minutes != 0)
            throw ValidationError(ValidationError::Kind::invariant, "time_grid.interval_minutes",
                                  "must be a positive divisor of 1440, got " +
                                      std::to_string(interval_minutes));
        return {interval_minutes, minutes_per_day / interval_minutes};
    }

    bool operator==(const TimeGrid&) const = default;
};

// Closed interval [start, end] of interval indices.
struct Window {
    int start = 0;
    int end = 0;

    bool contains(int t) const noexcept { return t >= start && t <= end; }
    int length() const noexcept { return end - start + 1; }

    bool operator==(const Window&) const = default;
};

struct PolicyParams {
    Window window;
    double exempt_fraction = 0.0;
    std::vector<double> fee_by_class;

    bool operator==(const PolicyParams&) const = default;
};

// A scalar model input that is either fixed or drawn once per ensemble member.
class Parameter {
public:
    enum class Kind { point, uniform, normal };

    Parameter() = default;

    static Parameter point(double value) { return Parameter(Kind::point, value, value, value, 0.0); }
    static Parameter uniform(double lower, double upper) {
        return Parameter(Kind::uniform, 0.5 * (lower + upper), lower, upper, 0.0);
    }
    static Parameter normal(double mean, double sd) {
        return Parameter(Kind::normal, mean, mean, mean, sd);
    }

    Kind kind() const noexcept { return kind_; }
    double lower() const noexcept { return lower_; }
    double upper() const noexcept { return upper_; }
    double mean() const noexcept { return center_; }
    double sd() const noexcept { return sd_; }

    // Value used by deterministic runs: the point value, the range midpoint,
    // or the normal mean.
    double nominal() const noexcept { return center_; }

    bool is_point() const noexcept { return kind_ == Kind::point; }

    // Draws are clamped to [floor, inf); every parameter in this model is
    // non-negative.
    template <class Rng>
    double sample(Rng& rng, double floor = 0.0) const {
        double v = center_;
        switch (kind_) {
        case Kind::point: break;
        case Kind::uniform:
            if (upper_ > lower_) v = std::uniform_real_distribution<double>(lower_, upper_)(rng);
            break;
        case Kind::normal:
            if (sd_ > 0.0) v = std::normal_distribution<double>(center_, sd_)(rng);
            break;
        }
        return std::max(v, floor);
    }

    // Multiplies every location/scale quantity (used for unit conversion).
    Parameter scaled(double factor) const {
        Parameter p = *this;
        p.center_ *= factor;
        p.lower_ *= factor;
        p.upper_ *= factor;
        p.sd_ *= factor;
        return p;
    }

    bool operator==(const Parameter&) const = default;

private:
    Parameter(Kind kind, double center, double lower, double upper, double sd)
        : kind_(kind), center_(center), lower_(lower), upper_(upper), sd_(sd) {}

    Kind kind_ = Kind::point;
    double center_ = 0.0;
    double lower_ = 0.0;
    double upper_ = 0.0;
    double sd_ = 0.0;
};

inline constexpr std::size_t logit_size = 5;
using LogitCoefficients = std::array<double, logit_size>;

struct BehavioralParams {
    Parameter cost_median;              // euro
    Parameter anticipate_median;        // intervals
    Parameter postpone_median;          // intervals
    Parameter anticipate_redist_median; // intervals
    Parameter postpone_redist_median;   // intervals
    bool mode_shift_enabled = true;
    LogitCoefficients logit_coefficients{};

    bool operator==(const BehavioralParams&) const = default;
};

// Point values for every distribution-valued behavioral parameter.
struct BehaviorDraw {
    double cost_median = 0.0;
    double anticipate_median = 0.0;
    double postpone_median = 0.0;
    double anticipate_redist_median = 0.0;
    double postpone_redist_median = 0.0;

    bool operator==(const BehaviorDraw&) const = default;
};

inline BehaviorDraw nominal_draw(const BehavioralParams& b) {
    return {b.cost_median.nominal(), b.anticipate_median.nominal(), b.postpone_median.nominal(),
            b.anticipate_redist_median.nominal(), b.postpone_redist_median.nominal()};
}

template <class Rng>
BehaviorDraw sample_draw(const BehavioralParams& b, Rng& rng) {
    BehaviorDraw d;
    d.cost_median = b.cost_median.sample(rng);
    d.anticipate_median = b.anticipate_median.sample(rng);
    d.postpone_median = b.postpone_median.sample(rng);
    d.anticipate_redist_median = b.anticipate_redist_median.sample(rng);
    d.postpone_redist_median = b.postpone_redist_median.sample(rng);
    return d;
}

// How the circulating fleet mix under the policy is formed. `normalized`
// divides each row by its sum; `literal` keeps the printed formula, which
// over-counts exempt vehicles when the exempt fraction is positive.
enum class FleetShareRule { normalized, literal };

struct FleetMix {
    std::vector<double> class_shares;
    std::vector<double> emission_per_km; // grams per km
    double km_per_interval = 0.0;
    std::string pollutant = "NOx g";
    FleetShareRule share_rule = FleetShareRule::normalized;

    std::size_t class_count() const noexcept { return class_shares.size(); }

    bool operator==(const FleetMix&) const = default;
};

struct ZoneRow {
    std::string zone_id;
    double weight_inflow = 0.0;
    std::optional<double> weight_starting;
    double frequency = 0.0;   // passages per hour
    double capillarity = 0.0; // fraction of network served
    double fare = 0.0;        // euro
    double time_diff = 0.0;   // minutes, transit minus car

    bool operator==(const ZoneRow&) const = default;
};

struct ZoneTable {
    std::vector<ZoneRow> rows;

    bool has_starting_weights() const {
        return !rows.empty() &&
               std::all_of(rows.begin(), rows.end(), [](const ZoneRow& r) { return r.weight_starting.has_value(); });
    }

    bool operator==(const ZoneTable&) const = default;
};

struct DemandProfile {
    std::vector<double> inflow;
    std::vector<double> starting;

    std::size_t size() const noexcept { return inflow.size(); }

    bool operator==(const DemandProfile&) const = default;
};

enum class SolverMethod { iterative, direct };

struct SolverSettings {
    int mean_dwell = 4;       // intervals
    double tolerance = 1e-6;  // vehicles
    int max_iterations = 10'000;
    SolverMethod method = SolverMethod::iterative;

    bool operator==(const SolverSettings&) const = default;
};

struct ScenarioConfig {
    std::string name;
    TimeGrid grid;
    PolicyParams policy;
    BehavioralParams behavior;
    FleetMix fleet;
    ZoneTable zones;
    SolverSettings solver;

    bool operator==(const ScenarioConfig&) const = default;
};

namespace detail {

[[noreturn]] inline void invariant_violation(const std::string& field, const std::string& what) {
    throw ValidationError(ValidationError::Kind::invariant, field, what);
}

inline bool is_fraction(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

inline void check_sums_to_one(std::span<const double> values, const std::string& field) {
    for (double v : values)
        if (!std::isfinite(v) || v < 0.0) invariant_violation(field, "entries must be finite and non-negative");
    const double total = std::accumulate(values.begin(), values.end(), 0.0);
    if (std::abs(total - 1.0) > share_tolerance)
        invariant_violation(field, "must sum to 1 within 1e-9, got " + std::to_string(total));
}

inline void check_parameter(const Parameter& p, const std::string& field) {
    auto finite = [](double x) { return std::isfinite(x); };
    switch (p.kind()) {
    case Parameter::Kind::point:
        if (!finite(p.nominal()) || p.nominal() < 0.0) invariant_violation(field, "must be finite and >= 0");
        break;
    case Parameter::Kind::uniform:
        if (!finite(p.lower()) || !finite(p.upper()) || p.lower() < 0.0)
            invariant_violation(field, "uniform bounds must be finite and >= 0");
        if (p.lower() > p.upper()) invariant_violation(field, "uniform range requires lower <= upper");
        break;
    case Parameter::Kind::normal:
        if (!finite(p.mean()) || !finite(p.sd()) || p.mean() < 0.0)
            invariant_violation(field, "normal mean must be finite and >= 0");
        if (p.sd() < 0.0) invariant_violation(field, "normal requires sd >= 0");
        break;
    }
}

} // namespace detail

inline void validate(const TimeGrid& grid) {
    if (grid.interval_minutes <= 0 || minutes_per_day % grid.interval_minutes != 0)
        detail::invariant_violation("time_grid.interval_minutes", "must divide 1440 exactly");
    if (grid.n_intervals != minutes_per_day / grid.interval_minutes)
        detail::invariant_violation("time_grid.n_intervals", "must equal 1440 / interval_minutes");
}

inline void validate(const FleetMix& fleet) {
    if (fleet.class_shares.empty()) detail::invariant_violation("fleet.class_shares", "needs at least one class");
    if (fleet.emission_per_km.size() != fleet.class_shares.size())
        detail::invariant_violation("fleet.emission_per_km", "length must equal class_shares length");
    detail::check_sums_to_one(fleet.class_shares, "fleet.class_shares");
    for (double e : fleet.emission_per_km)
        if (!std::isfinite(e) || e < 0.0)
            detail::invariant_violation("fleet.emission_per_km", "rates must be finite and >= 0");
    if (!(fleet.km_per_interval > 0.0) || !std::isfinite(fleet.km_per_interval))
        detail::invariant_violation("fleet.km_per_interval", "must be positive");
}

inline void validate(const ZoneTable& zones) {
    if (zones.rows.empty()) detail::invariant_violation("zones", "needs at least one zone");
    std::vector<double> w_in, w_st;
    std::size_t with_starting = 0;
    for (const auto& z : zones.rows) {
        w_in.push_back(z.weight_inflow);
        if (z.weight_starting) {
            w_st.push_back(*z.weight_starting);
            ++with_starting;
        }
        for (double x : {z.frequency, z.capillarity, z.fare, z.time_diff})
            if (!std::isfinite(x)) detail::invariant_violation("zones." + z.zone_id, "covariates must be finite");
    }
    detail::check_sums_to_one(w_in, "zones.weight_inflow");
    if (with_starting != 0 && with_starting != zones.rows.size())
        detail::invariant_violation("zones.weight_starting", "must be given for all zones or for none");
    if (with_starting != 0) detail::check_sums_to_one(w_st, "zones.weight_starting");
}

inline void validate(const SolverSettings& s) {
    if (s.mean_dwell < 1) detail::invariant_violation("solver.mean_dwell", "must be >= 1 interval");
    if (!(s.tolerance > 0.0)) detail::invariant_violation("solver.tolerance", "must be > 0");
    if (s.max_iterations < 1) detail::invariant_violation("solver.max_iterations", "must be >= 1");
}

inline void validate(const BehavioralParams& b) {
    detail::check_parameter(b.cost_median, "behavior.cost_median");
    detail::check_parameter(b.anticipate_median, "behavior.anticipate_median");
    detail::check_parameter(b.postpone_median, "behavior.postpone_median");
    detail::check_parameter(b.anticipate_redist_median, "behavior.anticipate_redist_median");
    detail::check_parameter(b.postpone_redist_median, "behavior.postpone_redist_median");
    for (double c : b.logit_coefficients)
        if (!std::isfinite(c)) detail::invariant_violation("behavior.logit_coefficients", "must be finite");
}

inline void validate(const PolicyParams& p, const TimeGrid& grid, const FleetMix& fleet) {
    if (p.window.start < 0) detail::invariant_violation("policy.t_start", "must be >= 0");
    if (p.window.start > p.window.end) detail::invariant_violation("policy.t_start", "t_start must be <= t_end");
    if (p.window.end >= grid.n_intervals)
        detail::invariant_violation("policy.t_end", "must be < n_intervals (" + std::to_string(grid.n_intervals) + ")");
    if (!detail::is_fraction(p.exempt_fraction)) detail::invariant_violation("policy.exempt_fraction", "must be in [0,1]");
    if (p.fee_by_class.size() != fleet.class_count())
        detail::invariant_violation("policy.fee_by_class", "length must equal the fleet class count");
    for (double fee : p.fee_by_class)
        if (!std::isfinite(fee) || fee < 0.0) detail::invariant_violation("policy.fee_by_class", "fees must be >= 0");
}

inline void validate(const ScenarioConfig& c) {
    validate(c.grid);
    validate(c.fleet);
    validate(c.policy, c.grid, c.fleet);
    validate(c.behavior);
    validate(c.zones);
    validate(c.solver);
}

inline void validate(const DemandProfile& d, const TimeGrid& grid) {
    const auto n = static_cast<std::size_t>(grid.n_intervals);
    if (d.inflow.size() != n || d.starting.size() != n)
        detail::invariant_violation("demand", "vectors must have exactly " + std::to_string(n) + " entries");
    for (std::size_t t = 0; t < n; ++t) {
        if (!std::isfinite(d.inflow[t]) || d.inflow[t] < 0.0)
            detail::invariant_violation("demand.inflow", "negative value at t=" + std::to_string(t));
        if (!std::isfinite(d.starting[t]) || d.starting[t] < 0.0)
            detail::invariant_violation("demand.starting", "negative value at t=" + std::to_string(t));
    }
}

} // namespace tpsim
