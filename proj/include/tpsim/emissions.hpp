/// @file emissions.hpp
/// @brief Fleet composition by emission class under the policy, and the
/// resulting per-vehicle and total pollutant series.

#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "behavior.hpp"
#include "errors.hpp"
#include "scenario.hpp"

namespace tpsim::emissions {

// Row-major [n_intervals x n_classes] class shares of the circulating fleet.
struct FleetShareSeries {
    std::size_t n_classes = 0;
    std::vector<double> shares;
    // Intervals where nobody eligible circulates during the policy; their
    // row falls back to the baseline mix.
    std::vector<int> degenerate_intervals;

    std::size_t n_intervals() const noexcept { return n_classes == 0 ? 0 : shares.size() / n_classes; }
    std::span<const double> row(std::size_t t) const { return {shares.data() + t * n_classes, n_classes}; }
};

struct EmissionSeries {
    std::vector<double> per_vehicle; // grams per vehicle per interval
    std::vector<double> total;       // grams per interval
};

// Allocates the total rigid fraction across classes in proportion to each
// class's rigidity probability. Weighted by class share the result sums
// back to `rigid_total`.
inline std::vector<double> class_rigidity_split(double rigid_total, std::span<const double> p_rigid_by_class,
                                                const FleetMix& fleet) {
    std::vector<double> split(fleet.class_count(), 0.0);
    if (rigid_total == 0.0) return split;
    double denom = 0.0;
    for (std::size_t l = 0; l < fleet.class_count(); ++l) denom += fleet.class_shares[l] * p_rigid_by_class[l];
    if (denom <= 0.0)
        throw ModelError("class_rigidity_split", "every class is fully deterred yet the rigid fraction is positive");
    for (std::size_t l = 0; l < fleet.class_count(); ++l) split[l] = rigid_total * p_rigid_by_class[l] / denom;
    return split;
}

struct FleetRow {
    std::vector<double> shares;
    bool degenerate = false;
};

inline FleetRow modified_fleet_row(int t, const PolicyParams& policy, const FleetMix& fleet,
                                   const behavior::StrategyShares& shares, std::span<const double> class_split) {
    FleetRow out{fleet.class_shares, false};
    if (!policy.window.contains(t)) return out;
    const double exempt = policy.exempt_fraction;
    const double eligible = exempt + shares.rows[t].rigid;
    if (eligible <= 0.0) {
        out.degenerate = true;
        return out;
    }
    double sum = 0.0;
    for (std::size_t l = 0; l < fleet.class_count(); ++l) {
        const double p = fleet.class_shares[l];
        out.shares[l] = fleet.share_rule == FleetShareRule::literal ? p * (exempt + class_split[l] / eligible)
                                                                    : p * (exempt + class_split[l]) / eligible;
        sum += out.shares[l];
    }
    if (fleet.share_rule == FleetShareRule::normalized)
        for (double& s : out.shares) s /= sum;
    return out;
}

inline FleetShareSeries baseline_fleet_shares(const FleetMix& fleet, const TimeGrid& grid) {
    FleetShareSeries s;
    s.n_classes = fleet.class_count();
    s.shares.reserve(s.n_classes * grid.n_intervals);
    for (int t = 0; t < grid.n_intervals; ++t)
        s.shares.insert(s.shares.end(), fleet.class_shares.begin(), fleet.class_shares.end());
    return s;
}

inline FleetShareSeries modified_fleet_shares(const PolicyParams& policy, const FleetMix& fleet,
                                              const behavior::StrategyShares& shares,
                                              std::span<const double> p_rigid_by_class) {
    FleetShareSeries s;
    s.n_classes = fleet.class_count();
    s.shares.reserve(s.n_classes * shares.rows.size());
    for (std::size_t t = 0; t < shares.rows.size(); ++t) {
        const int ti = static_cast<int>(t);
        std::vector<double> split;
        if (policy.window.contains(ti)) split = class_rigidity_split(shares.rows[t].rigid, p_rigid_by_class, fleet);
        else split.assign(s.n_classes, 0.0);
        const FleetRow row = modified_fleet_row(ti, policy, fleet, shares, split);
        if (row.degenerate) s.degenerate_intervals.push_back(ti);
        s.shares.insert(s.shares.end(), row.shares.begin(), row.shares.end());
    }
    return s;
}

inline EmissionSeries emission_series(const FleetShareSeries& fleet_shares, const FleetMix& fleet,
                                      std::span<const double> traffic) {
    if (fleet_shares.n_intervals() != traffic.size()) throw std::invalid_argument("emission_series: length mismatch");
    EmissionSeries e;
    e.per_vehicle.resize(traffic.size());
    e.total.resize(traffic.size());
    for (std::size_t t = 0; t < traffic.size(); ++t) {
        const auto row = fleet_shares.row(t);
        double rate = 0.0;
        for (std::size_t l = 0; l < row.size(); ++l) rate += row[l] * fleet.km_per_interval * fleet.emission_per_km[l];
        e.per_vehicle[t] = rate;
        e.total[t] = rate * traffic[t];
    }
    return e;
}

} // namespace tpsim::emissions
