/// @file service.hpp
/// @brief HTTP/JSON scenario service.
///
/// Routes:
///   POST /api/v1/evaluate  config (+ optional n_draws, seed) -> result or ensemble summary
///   POST /api/v1/compare   1..10 named configs -> KPI blocks + pairwise differences
///   GET  /api/v1/baseline  cached as-is series and KPIs
///   GET  /api/v1/health    {"status", "version"}
///
/// The baseline state is installed once by initialize(); until then every
/// route except health answers 503 and health itself reports "starting".
/// Handlers never mutate the installed state.

#pragma once

#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "config_io.hpp"
#include "ensemble.hpp"
#include "errors.hpp"
#include "export.hpp"
#include "pipeline.hpp"
#include "version.hpp"

namespace tpsim::service {

using json = nlohmann::json;

struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t max_draws = 1000;
    std::size_t max_compare = 10;
    unsigned workers = 1;
    // Allowed browser origin; empty disables CORS headers.
    std::string cors_origin;
};

struct ServiceState {
    ScenarioConfig defaults;
    DemandProfile demand;
    std::string baseline_payload;
    std::string version = tpsim::version;
};

struct Reply {
    int status = 200;
    json body;
};

inline ServiceState make_state(ScenarioConfig defaults, DemandProfile demand) {
    validate(defaults);
    validate(demand, defaults.grid);
    ServiceState s;
    const ScenarioSeries base = baseline_series(defaults, demand);
    const double traffic_peak = max_over(base.traffic.values, 0, static_cast<int>(base.traffic.values.size()) - 1);
    json payload = {
        {"n_intervals", defaults.grid.n_intervals},
        {"interval_minutes", defaults.grid.interval_minutes},
        {"pollutant", defaults.fleet.pollutant},
        {"series",
         {{"inflow", base.inflow},
          {"starting", base.starting},
          {"traffic", base.traffic.values},
          {"emissions", base.emissions.total}}},
        {"kpis",
         {{"daily_inflow", sum(base.inflow)},
          {"daily_starting", sum(base.starting)},
          {"max_traffic_day", traffic_peak},
          {"daily_emissions", sum(base.emissions.total)}}},
        {"solver", io::to_json(base.traffic)},
    };
    s.defaults = std::move(defaults);
    s.demand = std::move(demand);
    s.baseline_payload = payload.dump();
    return s;
}

namespace detail {

inline Reply error_reply(int status, const std::string& kind, const std::string& message, const std::string& field = {}) {
    json e = {{"kind", kind}, {"message", message}};
    if (!field.empty()) e["field"] = field;
    return {status, {{"error", std::move(e)}}};
}

// Maps library exceptions to HTTP status codes.
template <class F>
Reply guarded(F&& f) {
    try {
        return f();
    } catch (const ValidationError& e) {
        const int status = e.kind() == ValidationError::Kind::schema ? 400 : 422;
        return error_reply(status, to_string(e.kind()), e.what(), e.field());
    } catch (const json::exception& e) {
        return error_reply(400, "schema", e.what());
    } catch (const NodeError& e) {
        return error_reply(422, "model", e.what(), e.node());
    } catch (const ModelError& e) {
        return error_reply(422, "model", e.what(), e.where());
    } catch (const EnsembleError& e) {
        return error_reply(422, "model", e.what(), e.node());
    } catch (const std::exception& e) {
        return error_reply(500, "internal", e.what());
    }
}

} // namespace detail

class ScenarioService {
public:
    explicit ScenarioService(ServiceOptions options = {}) : options_(std::move(options)) {}
    ~ScenarioService() { stop(); }

    ScenarioService(const ScenarioService&) = delete;
    ScenarioService& operator=(const ScenarioService&) = delete;

    const ServiceOptions& options() const noexcept { return options_; }

    void initialize(ServiceState state) {
        auto shared = std::make_shared<const ServiceState>(std::move(state));
        std::lock_guard lock(mutex_);
        state_ = std::move(shared);
    }

    bool ready() const { return snapshot() != nullptr; }

    Reply health() const {
        if (!ready()) return {503, {{"status", "starting"}, {"version", tpsim::version}}};
        return {200, {{"status", "ok"}, {"version", snapshot()->version}}};
    }

    Reply baseline() const {
        const auto s = snapshot();
        if (!s) return detail::error_reply(503, "unavailable", "service is initializing");
        return {200, json::parse(s->baseline_payload)};
    }

    Reply evaluate(const std::string& body) const {
        const auto s = snapshot();
        if (!s) return detail::error_reply(503, "unavailable", "service is initializing");
        return detail::guarded([&]() -> Reply {
            json doc = parse_body(body);
            if (!doc.is_object()) return detail::error_reply(400, "schema", "request body must be a JSON object");
            std::optional<std::size_t> n_draws;
            std::uint64_t seed = 0;
            if (doc.contains("n_draws")) {
                if (!doc["n_draws"].is_number_integer() || doc["n_draws"].get<long long>() < 1)
                    return detail::error_reply(400, "schema", "n_draws must be a positive integer", "n_draws");
                n_draws = doc["n_draws"].get<std::size_t>();
                if (*n_draws > options_.max_draws)
                    return detail::error_reply(413, "too_large",
                                               "n_draws exceeds the cap of " + std::to_string(options_.max_draws),
                                               "n_draws");
            }
            if (doc.contains("seed")) {
                if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer())
                    return detail::error_reply(400, "schema", "seed must be an integer", "seed");
                seed = doc["seed"].get<std::uint64_t>();
            }
            const ScenarioConfig config = resolve_config(*s, doc);
            if (!n_draws) {
                const SimulationResult r = run_single(config, s->demand);
                return {200, io::result_document(r)};
            }
            EnsembleOptions opt;
            opt.n_draws = *n_draws;
            opt.seed = seed;
            opt.workers = options_.workers;
            json out = io::summary_document(run_ensemble(config, s->demand, opt));
            out["config"] = tpsim::to_json(config);
            return {200, std::move(out)};
        });
    }

    Reply compare(const std::string& body) const {
        const auto s = snapshot();
        if (!s) return detail::error_reply(503, "unavailable", "service is initializing");
        return detail::guarded([&]() -> Reply {
            json doc = parse_body(body);
            const json entries = doc.is_object() && doc.contains("scenarios") ? doc["scenarios"] : doc;
            if (!entries.is_array()) return detail::error_reply(400, "schema", "expected a list of named configs");
            if (entries.empty()) return detail::error_reply(400, "schema", "scenario list is empty");
            if (entries.size() > options_.max_compare)
                return detail::error_reply(400, "schema", "at most " + std::to_string(options_.max_compare) +
                                                              " scenarios per comparison");
            std::set<std::string> names;
            for (std::size_t i = 0; i < entries.size(); ++i) {
                const json& e = entries[i];
                if (!e.is_object() || !e.contains("name") || !e["name"].is_string())
                    return detail::error_reply(400, "schema", "every entry needs a string name",
                                               "scenarios[" + std::to_string(i) + "].name");
                if (!names.insert(e["name"].get<std::string>()).second)
                    return detail::error_reply(400, "schema", "duplicate scenario name '" + e["name"].get<std::string>() + "'");
            }

            json results = json::array();
            std::vector<std::pair<std::string, KpiBlock>> ok;
            for (const json& e : entries) {
                const std::string name = e["name"].get<std::string>();
                std::optional<KpiBlock> block;
                const Reply r = detail::guarded([&]() -> Reply {
                    json cfg = e.contains("config") ? e["config"] : e;
                    if (cfg.is_object()) cfg["name"] = name;
                    const SimulationResult res = run_single(resolve_config(*s, cfg), s->demand);
                    block = res.kpis;
                    return {200, {{"name", name}, {"kpis", io::to_json(res.kpis)}, {"behavior", io::to_json(res.behavior)}}};
                });
                if (r.status == 200) {
                    ok.emplace_back(name, *block);
                    results.push_back(r.body);
                } else {
                    json failed = r.body;
                    failed["name"] = name;
                    failed["status"] = r.status;
                    results.push_back(std::move(failed));
                }
            }
            json out = {{"scenarios", std::move(results)}, {"pairwise", json::array()}};
            if (ok.size() >= 2) out["pairwise"] = io::comparison_document(compare_scenarios(ok))["pairwise"];
            return {200, std::move(out)};
        });
    }

    // Binds (port 0 picks a free port) and serves on a background thread.
    // Returns the bound port.
    int start() {
        install_routes();
        const int port = options_.port == 0 ? server_.bind_to_any_port(options_.host)
                                            : (server_.bind_to_port(options_.host, options_.port) ? options_.port : -1);
        if (port < 0) throw IoError(options_.host + ":" + std::to_string(options_.port), "cannot bind");
        bound_port_ = port;
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port;
    }

    // Binds and serves on the calling thread until stop().
    void listen() {
        install_routes();
        if (!server_.listen(options_.host, options_.port))
            throw IoError(options_.host + ":" + std::to_string(options_.port), "cannot listen");
    }

    void stop() {
        if (server_.is_running()) server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    int port() const noexcept { return bound_port_; }

private:
    std::shared_ptr<const ServiceState> snapshot() const {
        std::lock_guard lock(mutex_);
        return state_;
    }

    static json parse_body(const std::string& body) {
        try {
            return json::parse(body);
        } catch (const json::parse_error& e) {
            throw ValidationError(ValidationError::Kind::schema, "body", std::string("malformed JSON: ") + e.what());
        }
    }

    static ScenarioConfig resolve_config(const ServiceState& s, json doc) {
        if (doc.is_object() && doc.contains("config")) {
            json inner = doc["config"];
            if (doc.contains("name") && inner.is_object() && !inner.contains("name")) inner["name"] = doc["name"];
            doc = std::move(inner);
        } else if (doc.is_object()) {
            doc.erase("n_draws");
            doc.erase("seed");
        }
        LoadOptions opt;
        opt.defaults = &s.defaults;
        return load_scenario(std::move(doc), opt);
    }

    void install_routes() {
        if (routes_installed_) return;
        routes_installed_ = true;
        auto send = [this](httplib::Response& res, const Reply& r) {
            res.status = r.status;
            res.set_content(r.body.dump(), "application/json");
            if (!options_.cors_origin.empty()) res.set_header("Access-Control-Allow-Origin", options_.cors_origin);
        };
        server_.Get("/api/v1/health", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
        server_.Get("/api/v1/baseline", [this, send](const httplib::Request&, httplib::Response& res) { send(res, baseline()); });
        server_.Post("/api/v1/evaluate", [this, send](const httplib::Request& req, httplib::Response& res) {
            send(res, evaluate(req.body));
        });
        server_.Post("/api/v1/compare", [this, send](const httplib::Request& req, httplib::Response& res) {
            send(res, compare(req.body));
        });
        if (!options_.cors_origin.empty()) {
            server_.Options(R"(/api/v1/.*)", [this](const httplib::Request&, httplib::Response& res) {
                res.status = 204;
                res.set_header("Access-Control-Allow-Origin", options_.cors_origin);
                res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
                res.set_header("Access-Control-Allow-Headers", "Content-Type");
            });
        }
    }

    ServiceOptions options_;
    mutable std::mutex mutex_;
    std::shared_ptr<const ServiceState> state_;
    httplib::Server server_;
    std::thread thread_;
    bool routes_installed_ = false;
    int bound_port_ = -1;
};

} // namespace tpsim::service
