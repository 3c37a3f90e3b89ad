// tpsim: batch front end for the pricing-policy simulator.
//
//   tpsim run     --config a1.json --demand demand.csv --out out/ [--draws N --seed S]
//   tpsim suite   --demand demand.csv --out out/
//   tpsim sweep   --config a1.json --param policy.fee_by_class --from 0 --to 10 --steps 11 --demand d.csv --out out/
//   tpsim compare --config a1.json --config a2.json --demand d.csv --out out/
//   tpsim serve   --port 8080 [--demand d.csv --config defaults.json --max-draws 1000]
//
// Exit codes: 0 ok, 1 validation, 2 I/O, 3 numerical, 4 suite had failures.

#include <algorithm>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <tpsim/fixtures.hpp>
#include <tpsim/service.hpp>
#include <tpsim/tpsim.hpp>

#ifndef TPSIM_DATA_DIR
#define TPSIM_DATA_DIR "data"
#endif
#ifndef TPSIM_SCENARIO_DIR
#define TPSIM_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using tpsim::json;

namespace {

enum Exit { ok = 0, validation = 1, io_failure = 2, numerical = 3, suite_failures = 4 };

struct NonConvergence : tpsim::Error {
    using tpsim::Error::Error;
};

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const tpsim::ValidationError*>(&e)) return validation;
    if (dynamic_cast<const tpsim::IoError*>(&e)) return io_failure;
    // Model, graph-node, ensemble and convergence failures.
    return numerical;
}

tpsim::DemandProfile load_demand_for(const fs::path& path, const tpsim::ScenarioConfig& config) {
    return tpsim::load_demand_file(path, config.grid);
}

void require_converged(const tpsim::SimulationResult& r) {
    if (r.converged()) return;
    const auto& t = r.baseline.traffic.converged ? r.modified.traffic : r.baseline.traffic;
    throw NonConvergence("traffic solver did not converge for '" + r.name + "' after " +
                         std::to_string(t.iterations_used) + " iterations (residual " +
                         tpsim::io::format_number(t.residual) + ")");
}

tpsim::io::Format parse_format(const std::string& s) {
    return s == "json" ? tpsim::io::Format::json : tpsim::io::Format::csv;
}

// ---- sweep paths ----

bool is_number_array(const json& v) {
    if (!v.is_array() || v.empty()) return false;
    for (const auto& x : v)
        if (!x.is_number()) return false;
    return true;
}

bool is_parameter(const json& v) { return v.is_object() && v.contains("kind"); }

void collect_paths(const json& v, const std::string& prefix, std::vector<std::string>& out) {
    if (v.is_number() || is_number_array(v) || is_parameter(v)) {
        out.push_back(prefix);
        return;
    }
    if (!v.is_object()) return;
    for (const auto& [key, child] : v.items()) collect_paths(child, prefix.empty() ? key : prefix + "." + key, out);
}

std::vector<std::string> sweepable_paths(const json& canonical) {
    std::vector<std::string> out;
    collect_paths(canonical, "", out);
    std::erase(out, std::string("time_grid.interval_minutes"));
    std::erase(out, std::string("time_grid.n_intervals"));
    return out;
}

json with_value(json doc, const std::string& path, double x) {
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        node = &(*node)[path.substr(start, dot - start)];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (node->is_array()) {
        for (auto& e : *node) e = x;
    } else if (is_parameter(*node)) {
        json p = {{"kind", "point"}, {"value", x}};
        if (node->contains("unit")) p["unit"] = (*node)["unit"];
        *node = std::move(p);
    } else if (path == "solver.max_iterations" || path == "policy.t_start" || path == "policy.t_end") {
        *node = static_cast<long long>(std::llround(x));
    } else {
        *node = x;
    }
    return doc;
}

// ---- subcommands ----

struct RunArgs {
    std::string config, demand, out, format = "csv";
    std::size_t draws = 0;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

int cmd_run(const RunArgs& a) {
    const auto config = tpsim::load_scenario_file(a.config);
    const auto demand = load_demand_for(a.demand, config);
    if (a.draws > 1) {
        tpsim::EnsembleOptions opt;
        opt.n_draws = a.draws;
        opt.seed = a.seed;
        opt.workers = a.workers;
        const auto summary = tpsim::run_ensemble(config, demand, opt);
        tpsim::io::export_result(summary, parse_format(a.format), a.out);
        if (summary.non_converged_draws > 0)
            throw NonConvergence(std::to_string(summary.non_converged_draws) + " draws did not converge");
    } else {
        const auto result = tpsim::run_single(config, demand);
        require_converged(result);
        tpsim::io::export_result(result, parse_format(a.format), a.out);
    }
    std::cout << "wrote " << a.out << "\n";
    return ok;
}

struct SuiteArgs {
    std::string demand, out, scenarios = TPSIM_SCENARIO_DIR;
};

int cmd_suite(const SuiteArgs& a) {
    static const char* ids[] = {"a1", "a2", "a3", "a4", "a5", "a6", "b1", "b2", "b3"};
    const fs::path dir = a.scenarios;
    const auto reference = tpsim::load_scenario_file(dir / "a1.json");
    const auto demand = load_demand_for(a.demand, reference);

    auto baseline = reference;
    baseline.name = "baseline";
    baseline.policy.exempt_fraction = 1.0;

    std::vector<std::pair<std::string, tpsim::KpiBlock>> rows;
    json failures = json::array();
    auto run_one = [&](const std::string& id, const tpsim::ScenarioConfig& config) {
        try {
            const auto result = tpsim::run_single(config, demand);
            require_converged(result);
            tpsim::io::export_result(result, tpsim::io::Format::csv, fs::path(a.out) / id);
            rows.emplace_back(config.name.empty() ? id : config.name, result.kpis);
            std::cout << "ok    " << id << "\n";
        } catch (const std::exception& e) {
            failures.push_back({{"scenario", id}, {"error", e.what()}});
            std::cout << "FAIL  " << id << ": " << e.what() << "\n";
        }
    };
    run_one("baseline", baseline);
    for (const char* id : ids) {
        try {
            run_one(id, tpsim::load_scenario_file(dir / (std::string(id) + ".json")));
        } catch (const std::exception& e) {
            failures.push_back({{"scenario", id}, {"error", e.what()}});
            std::cout << "FAIL  " << id << ": " << e.what() << "\n";
        }
    }
    if (!rows.empty()) tpsim::io::export_comparison(rows, a.out);
    if (!failures.empty()) {
        tpsim::io::write_text(fs::path(a.out) / "failures.json", failures.dump(2) + "\n");
        return suite_failures;
    }
    return ok;
}

struct SweepArgs {
    std::string config, param, demand, out;
    double from = 0.0, to = 0.0;
    int steps = 2;
};

int cmd_sweep(const SweepArgs& a) {
    const auto config = tpsim::load_scenario_file(a.config);
    const json canonical = tpsim::to_json(config);
    const auto paths = sweepable_paths(canonical);
    if (std::find(paths.begin(), paths.end(), a.param) == paths.end()) {
        std::string list;
        for (const auto& p : paths) list += "\n  " + p;
        throw tpsim::ValidationError(tpsim::ValidationError::Kind::schema, "--param",
                                     "unknown or non-numeric path '" + a.param + "'; valid paths:" + list);
    }
    if (a.steps < 1) throw tpsim::ValidationError(tpsim::ValidationError::Kind::invariant, "--steps", "must be >= 1");
    const auto demand = load_demand_for(a.demand, config);

    std::ostringstream csv;
    csv << "param_value,kpi,value\n";
    for (int i = 0; i < a.steps; ++i) {
        const double x = a.steps == 1 ? a.from : a.from + (a.to - a.from) * i / (a.steps - 1);
        const auto cfg = tpsim::load_scenario(with_value(canonical, a.param, x));
        const auto result = tpsim::run_single(cfg, demand);
        require_converged(result);
        const auto rows = result.kpis.rows();
        for (std::size_t k = 0; k < rows.size(); ++k)
            csv << tpsim::io::format_number(x) << ',' << tpsim::KpiBlock::names[k] << ','
                << tpsim::io::format_number(rows[k]->value) << '\n';
    }
    tpsim::io::write_text(fs::path(a.out) / "sweep.csv", csv.str());
    std::cout << "wrote " << (fs::path(a.out) / "sweep.csv").string() << "\n";
    return ok;
}

struct CompareArgs {
    std::vector<std::string> configs;
    std::string demand, out;
};

int cmd_compare(const CompareArgs& a) {
    std::vector<std::pair<std::string, tpsim::KpiBlock>> rows;
    for (const auto& path : a.configs) {
        auto config = tpsim::load_scenario_file(path);
        if (config.name.empty()) config.name = fs::path(path).stem().string();
        const auto result = tpsim::run_single(config, load_demand_for(a.demand, config));
        require_converged(result);
        rows.emplace_back(config.name, result.kpis);
    }
    tpsim::io::export_comparison(rows, a.out);
    std::cout << "wrote " << a.out << "\n";
    return ok;
}

struct ServeArgs {
    std::string host = "127.0.0.1", demand, config, cors_origin;
    int port = 8080;
    std::size_t max_draws = 1000;
    unsigned workers = 1;
};

tpsim::service::ScenarioService* active_service = nullptr;

int cmd_serve(const ServeArgs& a) {
    tpsim::service::ServiceOptions opt;
    opt.host = a.host;
    opt.port = a.port;
    opt.max_draws = a.max_draws;
    opt.workers = a.workers;
    opt.cors_origin = a.cors_origin;
    tpsim::service::ScenarioService svc(opt);

    auto defaults = tpsim::fixtures::default_scenario();
    if (!a.config.empty()) {
        tpsim::LoadOptions lo;
        lo.defaults = &defaults;
        defaults = tpsim::load_scenario_file(a.config, lo);
    }
    const std::string demand_path = a.demand.empty() ? std::string(TPSIM_DATA_DIR "/synthetic_demand.csv") : a.demand;
    svc.initialize(tpsim::service::make_state(defaults, load_demand_for(demand_path, defaults)));

    active_service = &svc;
    std::signal(SIGINT, [](int) { if (active_service) active_service->stop(); });
    std::signal(SIGTERM, [](int) { if (active_service) active_service->stop(); });
    std::cout << "serving on http://" << a.host << ":" << a.port << "/api/v1\n" << std::flush;
    svc.listen();
    active_service = nullptr;
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Traffic pricing-policy simulator"};
    app.set_version_flag("--version", std::string(tpsim::version));
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Evaluate one scenario");
    run_cmd->add_option("--config", run.config, "Scenario JSON")->required();
    run_cmd->add_option("--demand", run.demand, "Demand CSV (t,inflow,starting)")->required();
    run_cmd->add_option("--out", run.out, "Output directory")->required();
    run_cmd->add_option("--draws", run.draws, "Ensemble size; 0 or 1 evaluates nominal parameters");
    run_cmd->add_option("--seed", run.seed, "Ensemble seed");
    run_cmd->add_option("--workers", run.workers, "Ensemble worker threads")->check(CLI::PositiveNumber);
    run_cmd->add_option("--format", run.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    SuiteArgs suite;
    auto* suite_cmd = app.add_subcommand("suite", "Run the bundled A1-A6/B1-B3 scenarios plus baseline");
    suite_cmd->add_option("--demand", suite.demand, "Demand CSV")->required();
    suite_cmd->add_option("--out", suite.out, "Output directory")->required();
    suite_cmd->add_option("--scenarios", suite.scenarios, "Directory holding a1.json ... b3.json");

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one numeric config path");
    sweep_cmd->add_option("--config", sweep.config, "Scenario JSON")->required();
    sweep_cmd->add_option("--param", sweep.param, "Dotted config path, e.g. policy.exempt_fraction")->required();
    sweep_cmd->add_option("--from", sweep.from)->required();
    sweep_cmd->add_option("--to", sweep.to)->required();
    sweep_cmd->add_option("--steps", sweep.steps)->required();
    sweep_cmd->add_option("--demand", sweep.demand, "Demand CSV")->required();
    sweep_cmd->add_option("--out", sweep.out, "Output directory")->required();

    CompareArgs compare;
    auto* compare_cmd = app.add_subcommand("compare", "Evaluate several scenarios and tabulate KPI differences");
    compare_cmd->add_option("--config", compare.configs, "Scenario JSON (repeat)")->required();
    compare_cmd->add_option("--demand", compare.demand, "Demand CSV")->required();
    compare_cmd->add_option("--out", compare.out, "Output directory")->required();

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP scenario service");
    serve_cmd->add_option("--host", serve.host);
    serve_cmd->add_option("--port", serve.port);
    serve_cmd->add_option("--demand", serve.demand, "Baseline demand CSV (default: bundled synthetic fixture)");
    serve_cmd->add_option("--config", serve.config, "Default scenario JSON merged over builtin defaults");
    serve_cmd->add_option("--max-draws", serve.max_draws);
    serve_cmd->add_option("--workers", serve.workers)->check(CLI::PositiveNumber);
    serve_cmd->add_option("--cors-origin", serve.cors_origin, "Allowed browser origin");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : validation;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*suite_cmd) return cmd_suite(suite);
        if (*sweep_cmd) return cmd_sweep(sweep);
        if (*compare_cmd) return cmd_compare(compare);
        if (*serve_cmd) return cmd_serve(serve);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return ok;
}
