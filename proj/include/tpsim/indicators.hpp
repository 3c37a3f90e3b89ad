/// @file indicators.hpp
/// @brief Daily KPI block (baseline vs modified) and multi-scenario comparison.

#pragma once

#include <algorithm>
#include <array>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "behavior.hpp"
#include "emissions.hpp"
#include "errors.hpp"
#include "scenario.hpp"
#include "traffic.hpp"

namespace tpsim {

// Inputs and outputs of one side (as-is or what-if) of a run.
struct ScenarioSeries {
    std::vector<double> inflow;
    std::vector<double> starting;
    traffic::TrafficSeries traffic;
    emissions::FleetShareSeries fleet;
    emissions::EmissionSeries emissions;
};

struct KpiRow {
    double baseline = 0.0;
    double value = 0.0;

    double delta() const noexcept { return value - baseline; }
    // delta / baseline; undefined for a zero baseline.
    std::optional<double> relative() const {
        if (baseline == 0.0) return std::nullopt;
        return delta() / baseline;
    }

    bool operator==(const KpiRow&) const = default;
};

struct KpiBlock {
    KpiRow daily_inflow;             // veh
    KpiRow max_traffic_day;          // veh
    KpiRow max_traffic_policy_hours; // veh
    KpiRow daily_emissions;          // grams of pollutant
    KpiRow time_shifted;             // veh
    KpiRow mode_shifted;             // veh
    KpiRow lost;                     // veh
    KpiRow daily_revenue;            // euro

    static constexpr std::array<std::string_view, 8> names{
        "daily_inflow", "max_traffic_day", "max_traffic_policy_hours", "daily_emissions",
        "time_shifted", "mode_shifted",    "lost",                     "daily_revenue"};

    std::array<const KpiRow*, 8> rows() const {
        return {&daily_inflow, &max_traffic_day, &max_traffic_policy_hours, &daily_emissions,
                &time_shifted, &mode_shifted,    &lost,                     &daily_revenue};
    }

    const KpiRow& at(std::string_view name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return *rows()[i];
        throw std::out_of_range("unknown KPI " + std::string(name));
    }

    bool operator==(const KpiBlock&) const = default;
};

inline double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

inline double max_over(std::span<const double> v, int first, int last) {
    double m = 0.0;
    for (int t = std::max(first, 0); t <= last && t < static_cast<int>(v.size()); ++t) m = std::max(m, v[t]);
    return m;
}

// Fees collected from rigid (paying) vehicles of both streams, per class.
inline double daily_revenue(const PolicyParams& policy, const FleetMix& fleet, std::span<const double> inflow,
                            std::span<const double> starting, const behavior::StreamResponse& inflow_response,
                            const behavior::StreamResponse& starting_response) {
    double revenue = 0.0;
    for (int t = policy.window.start; t <= policy.window.end; ++t) {
        const auto split_in = emissions::class_rigidity_split(inflow_response.shares.rows[t].rigid,
                                                              inflow_response.curves.p_rigid_by_class, fleet);
        const auto split_st = emissions::class_rigidity_split(starting_response.shares.rows[t].rigid,
                                                              starting_response.curves.p_rigid_by_class, fleet);
        for (std::size_t l = 0; l < fleet.class_count(); ++l)
            revenue += policy.fee_by_class[l] * fleet.class_shares[l] *
                       (inflow[t] * split_in[l] + starting[t] * split_st[l]);
    }
    return revenue;
}

inline KpiBlock compute_kpis(const ScenarioSeries& baseline, const ScenarioSeries& modified,
                             const behavior::BehaviorKpis& behavior, double revenue, const Window& window) {
    KpiBlock k;
    k.daily_inflow = {sum(baseline.inflow), sum(modified.inflow)};
    const auto last = static_cast<int>(baseline.traffic.values.size()) - 1;
    k.max_traffic_day = {max_over(baseline.traffic.values, 0, last), max_over(modified.traffic.values, 0, last)};
    k.max_traffic_policy_hours = {max_over(baseline.traffic.values, window.start, window.end),
                                  max_over(modified.traffic.values, window.start, window.end)};
    k.daily_emissions = {sum(baseline.emissions.total), sum(modified.emissions.total)};
    k.time_shifted = {0.0, behavior.time_shifted()};
    k.mode_shifted = {0.0, behavior.mode_shifted()};
    k.lost = {0.0, behavior.lost()};
    k.daily_revenue = {0.0, revenue};
    return k;
}

struct ComparisonTable {
    std::vector<std::string> names;
    std::vector<KpiBlock> blocks;

    // value of scenario j minus value of scenario i for the named KPI.
    double difference(std::string_view kpi, std::size_t i, std::size_t j) const {
        return blocks.at(j).at(kpi).value - blocks.at(i).at(kpi).value;
    }
};

inline ComparisonTable compare_scenarios(std::vector<std::pair<std::string, KpiBlock>> results) {
    if (results.size() < 2) throw ValidationError(ValidationError::Kind::invariant, "compare", "needs at least 2 scenarios");
    std::set<std::string> seen;
    ComparisonTable table;
    for (auto& [name, block] : results) {
        if (!seen.insert(name).second)
            throw ValidationError(ValidationError::Kind::invariant, "compare", "duplicate scenario name '" + name + "'");
        table.names.push_back(std::move(name));
        table.blocks.push_back(std::move(block));
    }
    return table;
}

} // namespace tpsim
