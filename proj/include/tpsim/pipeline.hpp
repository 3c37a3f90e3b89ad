/// @file pipeline.hpp
/// @brief One deterministic what-if evaluation: behavior response, modified
/// demand, traffic and emissions for baseline and policy, and the KPI block.
///
/// run_single() evaluates the model as an EvaluationGraph whose independent
/// nodes are the config fields (with distribution-valued parameters replaced
/// by the draw) and the demand vectors. run_pipeline() is the same chain
/// written as straight-line code; both must agree exactly.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "behavior.hpp"
#include "emissions.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "indicators.hpp"
#include "scenario.hpp"
#include "traffic.hpp"

namespace tpsim {

struct SimulationResult {
    std::string name;
    ScenarioConfig config;
    BehaviorDraw draw;
    ScenarioSeries baseline;
    ScenarioSeries modified;
    behavior::StreamResponse inflow_response;
    behavior::StreamResponse starting_response;
    behavior::BehaviorKpis behavior;
    double revenue = 0.0;
    KpiBlock kpis;
    std::vector<std::string> warnings;

    bool converged() const noexcept { return baseline.traffic.converged && modified.traffic.converged; }
};

inline ScenarioSeries baseline_series(const ScenarioConfig& config, const DemandProfile& demand) {
    ScenarioSeries s;
    s.inflow = demand.inflow;
    s.starting = demand.starting;
    s.traffic = traffic::solve(s.inflow, s.starting, config.solver);
    s.fleet = emissions::baseline_fleet_shares(config.fleet, config.grid);
    s.emissions = emissions::emission_series(s.fleet, config.fleet, s.traffic.values);
    return s;
}

namespace detail {

inline std::vector<std::string> collect_warnings(const ScenarioConfig& config, const SimulationResult& r) {
    std::vector<std::string> w;
    if (config.behavior.mode_shift_enabled && !config.zones.has_starting_weights())
        w.emplace_back("zone table has no weight_starting values; starting-stream mode shift uses weight_inflow");
    if (!r.modified.fleet.degenerate_intervals.empty())
        w.emplace_back("no vehicles circulate under the policy in " +
                       std::to_string(r.modified.fleet.degenerate_intervals.size()) +
                       " interval(s); baseline fleet mix used there");
    if (!r.baseline.traffic.converged) w.emplace_back("baseline traffic solve did not converge");
    if (!r.modified.traffic.converged) w.emplace_back("modified traffic solve did not converge");
    return w;
}

} // namespace detail

// Straight-line evaluation of the model chain.
inline SimulationResult run_pipeline(const ScenarioConfig& config, const DemandProfile& demand,
                                     const BehaviorDraw& draw) {
    validate(demand, config.grid);
    SimulationResult r;
    r.name = config.name;
    r.config = config;
    r.draw = draw;
    r.inflow_response = behavior::respond(demand.inflow, config, draw, behavior::Stream::inflow);
    r.starting_response = behavior::respond(demand.starting, config, draw, behavior::Stream::starting);

    r.baseline = baseline_series(config, demand);

    r.modified.inflow = r.inflow_response.modified;
    r.modified.starting = r.starting_response.modified;
    r.modified.traffic = traffic::solve(r.modified.inflow, r.modified.starting, config.solver);
    r.modified.fleet = emissions::modified_fleet_shares(config.policy, config.fleet, r.inflow_response.shares,
                                                        r.inflow_response.curves.p_rigid_by_class);
    r.modified.emissions = emissions::emission_series(r.modified.fleet, config.fleet, r.modified.traffic.values);

    r.behavior = behavior::behavior_kpis(r.inflow_response, r.starting_response);
    r.revenue = daily_revenue(config.policy, config.fleet, demand.inflow, demand.starting, r.inflow_response,
                              r.starting_response);
    r.kpis = compute_kpis(r.baseline, r.modified, r.behavior, r.revenue, config.policy.window);
    r.warnings = detail::collect_warnings(config, r);
    return r;
}

// Names of the independent nodes, one per ScenarioConfig field plus the two
// demand vectors.
inline const std::vector<std::string>& config_field_nodes() {
    static const std::vector<std::string> names{
        "scenario.name",
        "time_grid.interval_minutes",
        "time_grid.n_intervals",
        "policy.t_start",
        "policy.t_end",
        "policy.exempt_fraction",
        "policy.fee_by_class",
        "behavior.cost_median",
        "behavior.anticipate_median",
        "behavior.postpone_median",
        "behavior.anticipate_redist_median",
        "behavior.postpone_redist_median",
        "behavior.mode_shift_enabled",
        "behavior.logit_coefficients",
        "fleet.class_shares",
        "fleet.emission_per_km",
        "fleet.km_per_interval",
        "fleet.pollutant",
        "fleet.share_rule",
        "zones",
        "solver.mean_dwell",
        "solver.tolerance",
        "solver.max_iterations",
        "solver.method",
    };
    return names;
}

inline EvaluationGraph build_evaluation_graph(const ScenarioConfig& config, const DemandProfile& demand,
                                              const BehaviorDraw& draw) {
    EvaluationGraph g;
    g.add_input("scenario.name", config.name);
    g.add_input("time_grid.interval_minutes", config.grid.interval_minutes);
    g.add_input("time_grid.n_intervals", config.grid.n_intervals);
    g.add_input("policy.t_start", config.policy.window.start);
    g.add_input("policy.t_end", config.policy.window.end);
    g.add_input("policy.exempt_fraction", config.policy.exempt_fraction);
    g.add_input("policy.fee_by_class", config.policy.fee_by_class);
    g.add_input("behavior.cost_median", draw.cost_median);
    g.add_input("behavior.anticipate_median", draw.anticipate_median);
    g.add_input("behavior.postpone_median", draw.postpone_median);
    g.add_input("behavior.anticipate_redist_median", draw.anticipate_redist_median);
    g.add_input("behavior.postpone_redist_median", draw.postpone_redist_median);
    g.add_input("behavior.mode_shift_enabled", config.behavior.mode_shift_enabled);
    g.add_input("behavior.logit_coefficients", config.behavior.logit_coefficients);
    g.add_input("fleet.class_shares", config.fleet.class_shares);
    g.add_input("fleet.emission_per_km", config.fleet.emission_per_km);
    g.add_input("fleet.km_per_interval", config.fleet.km_per_interval);
    g.add_input("fleet.pollutant", config.fleet.pollutant);
    g.add_input("fleet.share_rule", config.fleet.share_rule);
    g.add_input("zones", config.zones);
    g.add_input("solver.mean_dwell", config.solver.mean_dwell);
    g.add_input("solver.tolerance", config.solver.tolerance);
    g.add_input("solver.max_iterations", config.solver.max_iterations);
    g.add_input("solver.method", config.solver.method);
    g.add_input("demand.inflow", demand.inflow);
    g.add_input("demand.starting", demand.starting);

    using V = const NodeValues&;
    g.add_node("grid", {"time_grid.interval_minutes", "time_grid.n_intervals"}, [](V v) {
        return std::any(TimeGrid{v.get<int>("time_grid.interval_minutes"), v.get<int>("time_grid.n_intervals")});
    });
    g.add_node("policy", {"policy.t_start", "policy.t_end", "policy.exempt_fraction", "policy.fee_by_class"},
               [](V v) {
                   return std::any(PolicyParams{{v.get<int>("policy.t_start"), v.get<int>("policy.t_end")},
                                                v.get<double>("policy.exempt_fraction"),
                                                v.get<std::vector<double>>("policy.fee_by_class")});
               });
    g.add_node("fleet",
               {"fleet.class_shares", "fleet.emission_per_km", "fleet.km_per_interval", "fleet.pollutant",
                "fleet.share_rule"},
               [](V v) {
                   return std::any(FleetMix{v.get<std::vector<double>>("fleet.class_shares"),
                                            v.get<std::vector<double>>("fleet.emission_per_km"),
                                            v.get<double>("fleet.km_per_interval"), v.get<std::string>("fleet.pollutant"),
                                            v.get<FleetShareRule>("fleet.share_rule")});
               });
    g.add_node("solver", {"solver.mean_dwell", "solver.tolerance", "solver.max_iterations", "solver.method"},
               [](V v) {
                   return std::any(SolverSettings{v.get<int>("solver.mean_dwell"), v.get<double>("solver.tolerance"),
                                                  v.get<int>("solver.max_iterations"),
                                                  v.get<SolverMethod>("solver.method")});
               });
    g.add_node("behavior.draw",
               {"behavior.cost_median", "behavior.anticipate_median", "behavior.postpone_median",
                "behavior.anticipate_redist_median", "behavior.postpone_redist_median"},
               [](V v) {
                   return std::any(BehaviorDraw{v.get<double>("behavior.cost_median"),
                                                v.get<double>("behavior.anticipate_median"),
                                                v.get<double>("behavior.postpone_median"),
                                                v.get<double>("behavior.anticipate_redist_median"),
                                                v.get<double>("behavior.postpone_redist_median")});
               });
    g.add_node("config",
               {"scenario.name", "grid", "policy", "fleet", "solver", "zones", "behavior.draw",
                "behavior.mode_shift_enabled", "behavior.logit_coefficients"},
               [](V v) {
                   ScenarioConfig c;
                   c.name = v.get<std::string>("scenario.name");
                   c.grid = v.get<TimeGrid>("grid");
                   c.policy = v.get<PolicyParams>("policy");
                   c.fleet = v.get<FleetMix>("fleet");
                   c.solver = v.get<SolverSettings>("solver");
                   c.zones = v.get<ZoneTable>("zones");
                   const auto& d = v.get<BehaviorDraw>("behavior.draw");
                   c.behavior.cost_median = Parameter::point(d.cost_median);
                   c.behavior.anticipate_median = Parameter::point(d.anticipate_median);
                   c.behavior.postpone_median = Parameter::point(d.postpone_median);
                   c.behavior.anticipate_redist_median = Parameter::point(d.anticipate_redist_median);
                   c.behavior.postpone_redist_median = Parameter::point(d.postpone_redist_median);
                   c.behavior.mode_shift_enabled = v.get<bool>("behavior.mode_shift_enabled");
                   c.behavior.logit_coefficients = v.get<LogitCoefficients>("behavior.logit_coefficients");
                   validate(c);
                   return std::any(std::move(c));
               });
    g.add_node("demand", {"grid", "demand.inflow", "demand.starting"}, [](V v) {
        DemandProfile d{v.get<std::vector<double>>("demand.inflow"), v.get<std::vector<double>>("demand.starting")};
        validate(d, v.get<TimeGrid>("grid"));
        return std::any(std::move(d));
    });
    for (auto stream : {behavior::Stream::inflow, behavior::Stream::starting}) {
        const std::string name = std::string("behavior.") + behavior::to_string(stream);
        const std::string input = std::string("demand.") + behavior::to_string(stream);
        g.add_node(name, {"config", "behavior.draw", "demand"}, [stream](V v) {
            const auto& d = v.get<DemandProfile>("demand");
            const auto& base = stream == behavior::Stream::inflow ? d.inflow : d.starting;
            return std::any(behavior::respond(base, v.get<ScenarioConfig>("config"), v.get<BehaviorDraw>("behavior.draw"), stream));
        });
    }
    g.add_node("demand.modified", {"behavior.inflow", "behavior.starting"}, [](V v) {
        return std::any(behavior::modified_demand(v.get<behavior::StreamResponse>("behavior.inflow"),
                                                  v.get<behavior::StreamResponse>("behavior.starting")));
    });
    g.add_node("traffic.baseline", {"demand", "solver"}, [](V v) {
        const auto& d = v.get<DemandProfile>("demand");
        return std::any(traffic::solve(d.inflow, d.starting, v.get<SolverSettings>("solver")));
    });
    g.add_node("traffic.modified", {"demand.modified", "solver"}, [](V v) {
        const auto& d = v.get<behavior::ModifiedDemand>("demand.modified");
        return std::any(traffic::solve(d.inflow, d.starting, v.get<SolverSettings>("solver")));
    });
    g.add_node("fleet.baseline_shares", {"fleet", "grid"}, [](V v) {
        return std::any(emissions::baseline_fleet_shares(v.get<FleetMix>("fleet"), v.get<TimeGrid>("grid")));
    });
    g.add_node("fleet.modified_shares", {"policy", "fleet", "behavior.inflow"}, [](V v) {
        const auto& in = v.get<behavior::StreamResponse>("behavior.inflow");
        return std::any(emissions::modified_fleet_shares(v.get<PolicyParams>("policy"), v.get<FleetMix>("fleet"),
                                                         in.shares, in.curves.p_rigid_by_class));
    });
    g.add_node("emissions.baseline", {"fleet.baseline_shares", "fleet", "traffic.baseline"}, [](V v) {
        return std::any(emissions::emission_series(v.get<emissions::FleetShareSeries>("fleet.baseline_shares"),
                                                   v.get<FleetMix>("fleet"),
                                                   v.get<traffic::TrafficSeries>("traffic.baseline").values));
    });
    g.add_node("emissions.modified", {"fleet.modified_shares", "fleet", "traffic.modified"}, [](V v) {
        return std::any(emissions::emission_series(v.get<emissions::FleetShareSeries>("fleet.modified_shares"),
                                                   v.get<FleetMix>("fleet"),
                                                   v.get<traffic::TrafficSeries>("traffic.modified").values));
    });
    g.add_node("series.baseline", {"demand", "traffic.baseline", "fleet.baseline_shares", "emissions.baseline"},
               [](V v) {
                   const auto& d = v.get<DemandProfile>("demand");
                   return std::any(ScenarioSeries{d.inflow, d.starting, v.get<traffic::TrafficSeries>("traffic.baseline"),
                                                  v.get<emissions::FleetShareSeries>("fleet.baseline_shares"),
                                                  v.get<emissions::EmissionSeries>("emissions.baseline")});
               });
    g.add_node("series.modified",
               {"demand.modified", "traffic.modified", "fleet.modified_shares", "emissions.modified"}, [](V v) {
                   const auto& d = v.get<behavior::ModifiedDemand>("demand.modified");
                   return std::any(ScenarioSeries{d.inflow, d.starting, v.get<traffic::TrafficSeries>("traffic.modified"),
                                                  v.get<emissions::FleetShareSeries>("fleet.modified_shares"),
                                                  v.get<emissions::EmissionSeries>("emissions.modified")});
               });
    g.add_node("indicators.behavior", {"behavior.inflow", "behavior.starting"}, [](V v) {
        return std::any(behavior::behavior_kpis(v.get<behavior::StreamResponse>("behavior.inflow"),
                                                v.get<behavior::StreamResponse>("behavior.starting")));
    });
    g.add_node("indicators.revenue", {"policy", "fleet", "demand", "behavior.inflow", "behavior.starting"}, [](V v) {
        const auto& d = v.get<DemandProfile>("demand");
        return std::any(daily_revenue(v.get<PolicyParams>("policy"), v.get<FleetMix>("fleet"), d.inflow, d.starting,
                                      v.get<behavior::StreamResponse>("behavior.inflow"),
                                      v.get<behavior::StreamResponse>("behavior.starting")));
    });
    g.add_node("indicators.kpis",
               {"series.baseline", "series.modified", "indicators.behavior", "indicators.revenue", "policy"}, [](V v) {
                   return std::any(compute_kpis(v.get<ScenarioSeries>("series.baseline"),
                                                v.get<ScenarioSeries>("series.modified"),
                                                v.get<behavior::BehaviorKpis>("indicators.behavior"),
                                                v.get<double>("indicators.revenue"),
                                                v.get<PolicyParams>("policy").window));
               });
    return g;
}

// Graph evaluation of one draw. Deterministic in (config, demand, draw).
inline SimulationResult run_single(const ScenarioConfig& config, const DemandProfile& demand,
                                   const BehaviorDraw& draw) {
    const NodeValues v = build_evaluation_graph(config, demand, draw).evaluate();
    SimulationResult r;
    r.name = config.name;
    r.config = config;
    r.draw = draw;
    r.baseline = v.get<ScenarioSeries>("series.baseline");
    r.modified = v.get<ScenarioSeries>("series.modified");
    r.inflow_response = v.get<behavior::StreamResponse>("behavior.inflow");
    r.starting_response = v.get<behavior::StreamResponse>("behavior.starting");
    r.behavior = v.get<behavior::BehaviorKpis>("indicators.behavior");
    r.revenue = v.get<double>("indicators.revenue");
    r.kpis = v.get<KpiBlock>("indicators.kpis");
    r.warnings = detail::collect_warnings(config, r);
    return r;
}

inline SimulationResult run_single(const ScenarioConfig& config, const DemandProfile& demand) {
    return run_single(config, demand, nominal_draw(config.behavior));
}

} // namespace tpsim
