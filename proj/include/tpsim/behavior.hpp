/// @file behavior.hpp
/// @brief Traveler response to the policy: marginal acceptance of each
/// strategy, simultaneous choice among accepted strategies, redistribution of
/// time-shifted trips and the resulting modified inflow/starting vectors.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "scenario.hpp"

namespace tpsim::behavior {

inline constexpr double ln2 = std::numbers::ln2;

// P[X >= required] for X exponential with the given median. A zero median
// accepts only zero effort.
inline double acceptance_probability(double required, double median) {
    if (required <= 0.0) return 1.0;
    if (median <= 0.0) return 0.0;
    return std::exp(-ln2 * required / median);
}

struct RigidityProbabilities {
    std::vector<double> by_class;
    double overall = 0.0;
};

inline RigidityProbabilities rigidity_probabilities(const PolicyParams& policy, const FleetMix& fleet,
                                                    double cost_median) {
    if (policy.fee_by_class.size() != fleet.class_count())
        throw std::invalid_argument("fee_by_class is not aligned with the fleet classes");
    RigidityProbabilities r;
    r.by_class.reserve(fleet.class_count());
    for (std::size_t l = 0; l < fleet.class_count(); ++l) {
        r.by_class.push_back(acceptance_probability(policy.fee_by_class[l], cost_median));
        r.overall += fleet.class_shares[l] * r.by_class.back();
    }
    return r;
}

inline double postponement_probability(int t, const Window& window, double postpone_median) {
    if (!window.contains(t)) throw std::out_of_range("postponement_probability: t outside the policy window");
    return acceptance_probability(window.end - t, postpone_median);
}

// Geometric-dwell correction: the anticipated trip must also finish before
// the window opens, i.e. sum over dwell T >= 1 of
// P[shift >= offset + T] * P[tau = T] = epsilon * P[shift >= offset].
inline double dwell_correction(double anticipate_median, int mean_dwell) {
    if (mean_dwell < 1) throw std::invalid_argument("dwell_correction: mean_dwell must be >= 1");
    if (anticipate_median <= 0.0) return 0.0;
    const double p = 1.0 / mean_dwell;
    const double decay = std::exp(-ln2 / anticipate_median);
    return p * decay / (1.0 - (1.0 - p) * decay);
}

inline double anticipation_probability(int t, const Window& window, double anticipate_median, int mean_dwell) {
    if (!window.contains(t)) throw std::out_of_range("anticipation_probability: t outside the policy window");
    if (anticipate_median <= 0.0) return 0.0;
    return dwell_correction(anticipate_median, mean_dwell) * std::exp(-ln2 * (t - window.start) / anticipate_median);
}

inline double logistic(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

struct ModeShiftProbabilities {
    std::vector<double> by_zone;
    double overall_inflow = 0.0;
    double overall_starting = 0.0;
    // Starting weights were absent and inflow weights were used instead.
    bool starting_fallback = false;
};

inline ModeShiftProbabilities mode_shift_probabilities(const ZoneTable& zones, const LogitCoefficients& beta,
                                                       bool enabled) {
    ModeShiftProbabilities m;
    m.starting_fallback = !zones.has_starting_weights();
    m.by_zone.reserve(zones.rows.size());
    for (const auto& z : zones.rows) {
        const double utility = beta[0] + beta[1] * z.frequency + beta[2] * z.capillarity + beta[3] * z.fare +
                               beta[4] * z.time_diff;
        const double p = enabled ? logistic(utility) : 0.0;
        m.by_zone.push_back(p);
        m.overall_inflow += z.weight_inflow * p;
        m.overall_starting += z.weight_starting.value_or(z.weight_inflow) * p;
    }
    if (m.starting_fallback) m.overall_starting = m.overall_inflow;
    return m;
}

enum class Stream { inflow, starting };

inline const char* to_string(Stream s) { return s == Stream::inflow ? "inflow" : "starting"; }

// Marginal acceptance probabilities for one demand stream. The time-varying
// curves are indexed by absolute interval and are zero outside the window.
struct AcceptanceCurves {
    Window window;
    std::vector<double> p_rigid_by_class;
    double p_rigid_overall = 0.0;
    std::vector<double> p_anticipate;
    std::vector<double> p_postpone;
    std::vector<double> p_modeshift_by_zone;
    double p_modeshift_overall = 0.0;
    double epsilon = 0.0;
};

inline AcceptanceCurves acceptance_curves(const ScenarioConfig& config, const BehaviorDraw& draw, Stream stream) {
    AcceptanceCurves c;
    c.window = config.policy.window;
    auto rigid = rigidity_probabilities(config.policy, config.fleet, draw.cost_median);
    c.p_rigid_by_class = std::move(rigid.by_class);
    c.p_rigid_overall = rigid.overall;
    auto mode = mode_shift_probabilities(config.zones, config.behavior.logit_coefficients,
                                         config.behavior.mode_shift_enabled);
    c.p_modeshift_by_zone = std::move(mode.by_zone);
    c.p_modeshift_overall = stream == Stream::inflow ? mode.overall_inflow : mode.overall_starting;
    c.epsilon = dwell_correction(draw.anticipate_median, config.solver.mean_dwell);

    const auto n = static_cast<std::size_t>(config.grid.n_intervals);
    c.p_anticipate.assign(n, 0.0);
    c.p_postpone.assign(n, 0.0);
    for (int t = c.window.start; t <= c.window.end; ++t) {
        c.p_anticipate[t] = anticipation_probability(t, c.window, draw.anticipate_median, config.solver.mean_dwell);
        c.p_postpone[t] = postponement_probability(t, c.window, draw.postpone_median);
    }
    return c;
}

enum class Strategy : std::size_t { rigidity = 0, anticipation = 1, postponement = 2, mode_shift = 3 };

inline constexpr std::size_t strategy_count = 4;
using Marginals = std::array<double, strategy_count>;

struct StrategyRow {
    double exempt = 1.0;
    double rigid = 0.0;
    double anticipate = 0.0;
    double postpone = 0.0;
    double mode_shift = 0.0;
    double lost = 0.0;

    double total() const noexcept { return exempt + rigid + anticipate + postpone + mode_shift + lost; }
    // Fraction of travelers that leave the stream at their original time.
    double removed() const noexcept { return mode_shift + lost; }

    bool operator==(const StrategyRow&) const = default;
};

// Simultaneous choice: each non-exempt traveler accepts every strategy
// independently with its marginal probability and picks uniformly among the
// accepted ones. Enumerates all 16 acceptance subsets.
inline StrategyRow strategy_shares(const Marginals& p, double exempt_fraction) {
    std::array<double, strategy_count> chosen{};
    double none = 0.0;
    for (unsigned subset = 0; subset < (1u << strategy_count); ++subset) {
        double prob = 1.0;
        unsigned size = 0;
        for (std::size_t x = 0; x < strategy_count; ++x) {
            if (subset & (1u << x)) {
                prob *= p[x];
                ++size;
            } else {
                prob *= 1.0 - p[x];
            }
        }
        if (size == 0) {
            none = prob;
            continue;
        }
        for (std::size_t x = 0; x < strategy_count; ++x)
            if (subset & (1u << x)) chosen[x] += prob / size;
    }
    const double affected = 1.0 - exempt_fraction;
    StrategyRow row;
    row.exempt = exempt_fraction;
    row.rigid = affected * chosen[0];
    row.anticipate = affected * chosen[1];
    row.postpone = affected * chosen[2];
    row.mode_shift = affected * chosen[3];
    row.lost = affected * none;
    return row;
}

inline StrategyRow strategy_shares(int t, const AcceptanceCurves& curves, const PolicyParams& policy) {
    if (!curves.window.contains(t)) throw std::out_of_range("strategy_shares: t outside the policy window");
    return strategy_shares(Marginals{curves.p_rigid_overall, curves.p_anticipate[t], curves.p_postpone[t],
                                     curves.p_modeshift_overall},
                           policy.exempt_fraction);
}

// Per-interval shares over the whole day; rows outside the window are the
// default (everyone unaffected).
struct StrategyShares {
    Window window;
    std::vector<StrategyRow> rows;
};

inline StrategyShares strategy_share_series(const AcceptanceCurves& curves, const PolicyParams& policy,
                                            const TimeGrid& grid) {
    StrategyShares s;
    s.window = curves.window;
    s.rows.assign(static_cast<std::size_t>(grid.n_intervals), StrategyRow{});
    for (int t = s.window.start; t <= s.window.end; ++t) s.rows[t] = strategy_shares(t, curves, policy);
    return s;
}

// Mass of the exponential shift tolerance between offset-1 and offset
// intervals from the window boundary (offset >= 1).
inline double redistribution_bin_mass(int offset, double median) {
    if (median <= 0.0) return offset == 1 ? 1.0 : 0.0;
    const double rate = ln2 / median;
    return std::exp(-rate * (offset - 1)) - std::exp(-rate * offset);
}

struct TimeShiftPlan {
    double total_anticipating = 0.0;
    double total_postponing = 0.0;
    // Bin masses before same-day renormalization, for diagnostics.
    double anticipate_mass = 0.0;
    double postpone_mass = 0.0;
    std::vector<double> redistributed_anticipated;
    std::vector<double> redistributed_postponed;
};

inline TimeShiftPlan time_shift_plan(std::span<const double> demand, const StrategyShares& shares,
                                     double anticipate_redist_median, double postpone_redist_median) {
    const auto n = static_cast<int>(demand.size());
    const Window w = shares.window;
    if (shares.rows.size() != demand.size()) throw std::invalid_argument("time_shift_plan: length mismatch");

    TimeShiftPlan plan;
    plan.redistributed_anticipated.assign(demand.size(), 0.0);
    plan.redistributed_postponed.assign(demand.size(), 0.0);
    for (int t = w.start; t <= w.end; ++t) {
        plan.total_anticipating += shares.rows[t].anticipate * demand[t];
        plan.total_postponing += shares.rows[t].postpone * demand[t];
    }

    // Anticipated trips land in [0, t_s-1] at offset t_s - t; postponed in
    // [t_e+1, n-1] at offset t - t_e. Each family is renormalized over its
    // same-day window so shifted vehicles are conserved.
    for (int t = 0; t < w.start; ++t) {
        const double m = redistribution_bin_mass(w.start - t, anticipate_redist_median);
        plan.redistributed_anticipated[t] = m;
        plan.anticipate_mass += m;
    }
    for (int t = w.end + 1; t < n; ++t) {
        const double m = redistribution_bin_mass(t - w.end, postpone_redist_median);
        plan.redistributed_postponed[t] = m;
        plan.postpone_mass += m;
    }

    auto distribute = [](std::vector<double>& bins, double mass, double total, const char* which) {
        if (total == 0.0) {
            std::fill(bins.begin(), bins.end(), 0.0);
            return;
        }
        if (mass <= 0.0)
            throw ModelError(std::string("time_shift_plan.") + which,
                             "no same-day interval is available to receive shifted trips");
        for (double& b : bins) b = b / mass * total;
    };
    distribute(plan.redistributed_anticipated, plan.anticipate_mass, plan.total_anticipating, "anticipation window");
    distribute(plan.redistributed_postponed, plan.postpone_mass, plan.total_postponing, "postponement window");
    return plan;
}

inline std::vector<double> modified_stream(std::span<const double> base, const StrategyShares& shares,
                                           const TimeShiftPlan& plan) {
    std::vector<double> out(base.size());
    for (std::size_t t = 0; t < base.size(); ++t) {
        const int ti = static_cast<int>(t);
        if (shares.window.contains(ti))
            out[t] = (shares.rows[t].exempt + shares.rows[t].rigid) * base[t];
        else
            out[t] = base[t] + plan.redistributed_anticipated[t] + plan.redistributed_postponed[t];
    }
    return out;
}

// Everything the behavior step produces for one of the two demand streams.
struct StreamResponse {
    Stream stream = Stream::inflow;
    AcceptanceCurves curves;
    StrategyShares shares;
    TimeShiftPlan plan;
    std::vector<double> modified;
    double time_shifted = 0.0;
    double mode_shifted = 0.0;
    double lost = 0.0;
};

inline StreamResponse respond(std::span<const double> base, const ScenarioConfig& config, const BehaviorDraw& draw,
                              Stream stream) {
    StreamResponse r;
    r.stream = stream;
    r.curves = acceptance_curves(config, draw, stream);
    r.shares = strategy_share_series(r.curves, config.policy, config.grid);
    r.plan = time_shift_plan(base, r.shares, draw.anticipate_redist_median, draw.postpone_redist_median);
    r.modified = modified_stream(base, r.shares, r.plan);
    r.time_shifted = r.plan.total_anticipating + r.plan.total_postponing;
    for (int t = r.shares.window.start; t <= r.shares.window.end; ++t) {
        r.mode_shifted += r.shares.rows[t].mode_shift * base[t];
        r.lost += r.shares.rows[t].lost * base[t];
    }
    return r;
}

struct ModifiedDemand {
    std::vector<double> inflow;
    std::vector<double> starting;
};

inline ModifiedDemand modified_demand(const StreamResponse& inflow, const StreamResponse& starting) {
    return {inflow.modified, starting.modified};
}

struct BehaviorKpis {
    double time_shifted_inflow = 0.0;
    double time_shifted_starting = 0.0;
    double mode_shifted_inflow = 0.0;
    double mode_shifted_starting = 0.0;
    double lost_inflow = 0.0;
    double lost_starting = 0.0;

    double time_shifted() const noexcept { return time_shifted_inflow + time_shifted_starting; }
    double mode_shifted() const noexcept { return mode_shifted_inflow + mode_shifted_starting; }
    double lost() const noexcept { return lost_inflow + lost_starting; }
};

inline BehaviorKpis behavior_kpis(const StreamResponse& inflow, const StreamResponse& starting) {
    return {inflow.time_shifted, starting.time_shifted, inflow.mode_shifted,
            starting.mode_shifted, inflow.lost,         starting.lost};
}

} // namespace tpsim::behavior
