/// @file config_io.hpp
/// @brief Validated ingestion of scenario configs (JSON), demand and zone
/// tables (CSV), plus the builtin Bologna parameterization.
///
/// Config layout, top-level keys: time_grid, policy, behavior, fleet, zones,
/// solver (and an optional name). Clock times ("8:00 AM", "18:00") and
/// durations ({"value": 1, "unit": "hours"}) are converted to interval
/// indices here; every other module works in intervals only.

#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "scenario.hpp"

namespace tpsim {

using json = nlohmann::json;

namespace detail {

[[noreturn]] inline void schema_error(const std::string& field, const std::string& what) {
    throw ValidationError(ValidationError::Kind::schema, field, what);
}

[[noreturn]] inline void unit_error(const std::string& field, const std::string& what) {
    throw ValidationError(ValidationError::Kind::unit, field, what);
}

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) schema_error(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(path.empty() ? key : path + "." + key, "missing field");
    return *it;
}

inline double number_at(const json& v, const std::string& field) {
    if (!v.is_number()) schema_error(field, "expected a number");
    return v.get<double>();
}

inline int integer_at(const json& v, const std::string& field) {
    if (!v.is_number_integer()) schema_error(field, "expected an integer");
    return v.get<int>();
}

inline std::vector<double> numbers_at(const json& v, const std::string& field) {
    if (!v.is_array()) schema_error(field, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number_at(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

// Minutes since midnight from "8:00", "08:00", "8:00 AM", "6:00 PM".
inline int parse_clock_minutes(const std::string& text, const std::string& field) {
    static const std::regex pattern(R"(^\s*(\d{1,2}):(\d{2})\s*([AaPp][Mm])?\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, pattern)) schema_error(field, "expected a clock time like \"8:00 AM\", got \"" + text + "\"");
    int hours = std::stoi(m[1].str());
    const int minutes = std::stoi(m[2].str());
    if (minutes >= 60) schema_error(field, "minutes must be < 60");
    if (m[3].matched) {
        const bool pm = m[3].str()[0] == 'P' || m[3].str()[0] == 'p';
        if (hours < 1 || hours > 12) schema_error(field, "12-hour clock needs hours in 1..12");
        hours = (hours % 12) + (pm ? 12 : 0);
    } else if (hours > 24) {
        schema_error(field, "hours must be <= 24");
    }
    return hours * 60 + minutes;
}

inline int minutes_to_intervals(double minutes, const TimeGrid& grid, const std::string& field) {
    const double intervals = minutes / grid.interval_minutes;
    const double rounded = std::round(intervals);
    if (std::abs(intervals - rounded) > 1e-9)
        unit_error(field, "duration of " + std::to_string(minutes) + " min is not a multiple of the " +
                              std::to_string(grid.interval_minutes) + "-minute interval");
    return static_cast<int>(rounded);
}

// Interval index from either an integer index or a clock-time string.
inline int parse_time_index(const json& v, const TimeGrid& grid, const std::string& field) {
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_string()) return minutes_to_intervals(parse_clock_minutes(v.get<std::string>(), field), grid, field);
    schema_error(field, "expected an interval index or a clock-time string");
}

inline double unit_factor_minutes(const std::string& unit, const TimeGrid& grid, const std::string& field) {
    if (unit == "intervals") return grid.interval_minutes;
    if (unit == "minutes") return 1.0;
    if (unit == "hours") return 60.0;
    schema_error(field + ".unit", "unknown unit \"" + unit + "\" (expected intervals, minutes or hours)");
}

inline Parameter parse_parameter_body(const json& v, const std::string& field) {
    if (v.is_number()) return Parameter::point(v.get<double>());
    if (!v.is_object()) schema_error(field, "expected a number or a parameter object");
    const std::string kind = v.contains("kind") ? v.at("kind").get<std::string>() : "point";
    if (kind == "point") return Parameter::point(number_at(require(v, "value", field), field + ".value"));
    if (kind == "uniform")
        return Parameter::uniform(number_at(require(v, "lower", field), field + ".lower"),
                                  number_at(require(v, "upper", field), field + ".upper"));
    if (kind == "normal")
        return Parameter::normal(number_at(require(v, "mean", field), field + ".mean"),
                                 number_at(require(v, "sd", field), field + ".sd"));
    schema_error(field + ".kind", "unknown parameter kind \"" + kind + "\"");
}

// Duration-valued parameter; every location value must land on the grid.
inline Parameter parse_duration_parameter(const json& v, const TimeGrid& grid, const std::string& field) {
    if (!v.is_object() || !v.contains("unit"))
        schema_error(field, "duration needs an object with an explicit \"unit\"");
    const double to_minutes = unit_factor_minutes(v.at("unit").get<std::string>(), grid, field);
    const Parameter raw = parse_parameter_body(v, field);
    auto check = [&](double value) { minutes_to_intervals(value * to_minutes, grid, field); };
    switch (raw.kind()) {
    case Parameter::Kind::point: check(raw.nominal()); break;
    case Parameter::Kind::uniform: check(raw.lower()); check(raw.upper()); break;
    case Parameter::Kind::normal: check(raw.mean()); break;
    }
    return raw.scaled(to_minutes / grid.interval_minutes);
}

inline json parameter_to_json(const Parameter& p) {
    switch (p.kind()) {
    case Parameter::Kind::point: return {{"kind", "point"}, {"value", p.nominal()}};
    case Parameter::Kind::uniform: return {{"kind", "uniform"}, {"lower", p.lower()}, {"upper", p.upper()}};
    case Parameter::Kind::normal: return {{"kind", "normal"}, {"mean", p.mean()}, {"sd", p.sd()}};
    }
    return {};
}

inline json duration_to_json(const Parameter& p) {
    json j = parameter_to_json(p);
    j["unit"] = "intervals";
    return j;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> cells;
    std::size_t begin = 0;
    while (true) {
        const auto comma = line.find(',', begin);
        cells.emplace_back(line.substr(begin, comma == std::string_view::npos ? std::string_view::npos : comma - begin));
        if (comma == std::string_view::npos) break;
        begin = comma + 1;
    }
    return cells;
}

inline std::optional<double> parse_double(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

} // namespace detail

struct LoadOptions {
    // Fills keys missing from the document, section by section.
    const ScenarioConfig* defaults = nullptr;
    // Resolves relative zone CSV paths.
    std::filesystem::path base_dir;
};

ZoneTable load_zones(std::istream& in);
ZoneTable load_zones_file(const std::filesystem::path& path);
json to_json(const ScenarioConfig& config);

namespace detail {

inline ScenarioConfig load_scenario_unchecked(json doc, const LoadOptions& options) {
    if (!doc.is_object()) schema_error("config", "expected a JSON object");

    if (options.defaults != nullptr) {
        const json base = to_json(*options.defaults);
        for (const auto& [section, value] : base.items()) {
            if (!doc.contains(section)) {
                doc[section] = value;
            } else if (doc[section].is_object() && value.is_object()) {
                for (const auto& [key, field] : value.items())
                    if (!doc[section].contains(key)) doc[section][key] = field;
            }
        }
        // A grid change invalidates default times and durations in intervals.
        if (doc.contains("time_grid") && base.contains("time_grid") && doc["time_grid"] != base["time_grid"])
            doc["time_grid"].erase("n_intervals");
    }

    ScenarioConfig c;
    if (doc.contains("name")) {
        if (!doc["name"].is_string()) schema_error("name", "expected a string");
        c.name = doc["name"].get<std::string>();
    }

    const json& tg = require(doc, "time_grid", "");
    c.grid = TimeGrid::from_minutes(integer_at(require(tg, "interval_minutes", "time_grid"), "time_grid.interval_minutes"));
    if (tg.contains("n_intervals")) {
        c.grid.n_intervals = integer_at(tg["n_intervals"], "time_grid.n_intervals");
        validate(c.grid);
    }

    const json& fl = require(doc, "fleet", "");
    c.fleet.class_shares = numbers_at(require(fl, "class_shares", "fleet"), "fleet.class_shares");
    c.fleet.emission_per_km = numbers_at(require(fl, "emission_per_km", "fleet"), "fleet.emission_per_km");
    c.fleet.km_per_interval = number_at(require(fl, "km_per_interval", "fleet"), "fleet.km_per_interval");
    if (fl.contains("pollutant")) c.fleet.pollutant = fl["pollutant"].get<std::string>();
    if (fl.contains("share_rule")) {
        const auto rule = fl["share_rule"].get<std::string>();
        if (rule == "normalized") c.fleet.share_rule = FleetShareRule::normalized;
        else if (rule == "literal") c.fleet.share_rule = FleetShareRule::literal;
        else schema_error("fleet.share_rule", "expected \"normalized\" or \"literal\"");
    }

    const json& po = require(doc, "policy", "");
    c.policy.window.start = parse_time_index(require(po, "t_start", "policy"), c.grid, "policy.t_start");
    c.policy.window.end = parse_time_index(require(po, "t_end", "policy"), c.grid, "policy.t_end");
    c.policy.exempt_fraction = number_at(require(po, "exempt_fraction", "policy"), "policy.exempt_fraction");
    const json& fees = require(po, "fee_by_class", "policy");
    if (fees.is_number()) c.policy.fee_by_class.assign(c.fleet.class_count(), fees.get<double>());
    else c.policy.fee_by_class = numbers_at(fees, "policy.fee_by_class");

    const json& be = require(doc, "behavior", "");
    c.behavior.cost_median = parse_parameter_body(require(be, "cost_median", "behavior"), "behavior.cost_median");
    c.behavior.anticipate_median =
        parse_duration_parameter(require(be, "anticipate_median", "behavior"), c.grid, "behavior.anticipate_median");
    c.behavior.postpone_median =
        parse_duration_parameter(require(be, "postpone_median", "behavior"), c.grid, "behavior.postpone_median");
    c.behavior.anticipate_redist_median = parse_duration_parameter(require(be, "anticipate_redist_median", "behavior"),
                                                                   c.grid, "behavior.anticipate_redist_median");
    c.behavior.postpone_redist_median = parse_duration_parameter(require(be, "postpone_redist_median", "behavior"),
                                                                 c.grid, "behavior.postpone_redist_median");
    const json& enabled = require(be, "mode_shift_enabled", "behavior");
    if (!enabled.is_boolean()) schema_error("behavior.mode_shift_enabled", "expected a boolean");
    c.behavior.mode_shift_enabled = enabled.get<bool>();
    const auto beta = numbers_at(require(be, "logit_coefficients", "behavior"), "behavior.logit_coefficients");
    if (beta.size() != logit_size) schema_error("behavior.logit_coefficients", "expected exactly 5 coefficients");
    std::copy(beta.begin(), beta.end(), c.behavior.logit_coefficients.begin());

    const json& zo = require(doc, "zones", "");
    if (zo.is_string()) {
        std::filesystem::path p = zo.get<std::string>();
        if (p.is_relative()) p = options.base_dir / p;
        c.zones = load_zones_file(p);
    } else if (zo.is_array()) {
        for (std::size_t i = 0; i < zo.size(); ++i) {
            const json& z = zo[i];
            const std::string f = "zones[" + std::to_string(i) + "]";
            ZoneRow row;
            const json& id = require(z, "zone_id", f);
            row.zone_id = id.is_string() ? id.get<std::string>() : id.dump();
            row.weight_inflow = number_at(require(z, "weight_inflow", f), f + ".weight_inflow");
            if (z.contains("weight_starting") && !z["weight_starting"].is_null())
                row.weight_starting = number_at(z["weight_starting"], f + ".weight_starting");
            row.frequency = number_at(require(z, "freq", f), f + ".freq");
            row.capillarity = number_at(require(z, "capillarity", f), f + ".capillarity");
            row.fare = number_at(require(z, "fare", f), f + ".fare");
            row.time_diff = number_at(require(z, "time_diff", f), f + ".time_diff");
            c.zones.rows.push_back(std::move(row));
        }
    } else {
        schema_error("zones", "expected an array of zone rows or a CSV path");
    }

    const json& so = require(doc, "solver", "");
    const json& dwell = require(so, "mean_dwell", "solver");
    if (!dwell.is_object() || !dwell.contains("unit"))
        schema_error("solver.mean_dwell", "duration needs an object with an explicit \"unit\"");
    const double dwell_minutes = number_at(require(dwell, "value", "solver.mean_dwell"), "solver.mean_dwell.value") *
                                 unit_factor_minutes(dwell["unit"].get<std::string>(), c.grid, "solver.mean_dwell");
    c.solver.mean_dwell = minutes_to_intervals(dwell_minutes, c.grid, "solver.mean_dwell");
    if (so.contains("tolerance")) c.solver.tolerance = number_at(so["tolerance"], "solver.tolerance");
    if (so.contains("max_iterations")) c.solver.max_iterations = integer_at(so["max_iterations"], "solver.max_iterations");
    if (so.contains("method")) {
        const auto m = so["method"].get<std::string>();
        if (m == "iterative") c.solver.method = SolverMethod::iterative;
        else if (m == "direct") c.solver.method = SolverMethod::direct;
        else schema_error("solver.method", "expected \"iterative\" or \"direct\"");
    }

    validate(c);
    return c;
}

} // namespace detail

inline ScenarioConfig load_scenario(json doc, const LoadOptions& options = {}) {
    try {
        return detail::load_scenario_unchecked(std::move(doc), options);
    } catch (const json::exception& e) {
        detail::schema_error("config", std::string("wrong type: ") + e.what());
    }
}

inline ScenarioConfig load_scenario_text(std::string_view text, const LoadOptions& options = {}) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        detail::schema_error("config", std::string("malformed JSON: ") + e.what());
    }
    return load_scenario(std::move(doc), options);
}

inline ScenarioConfig load_scenario_file(const std::filesystem::path& path, LoadOptions options = {}) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "cannot open scenario config");
    std::stringstream buf;
    buf << in.rdbuf();
    if (options.base_dir.empty()) options.base_dir = path.parent_path();
    return load_scenario_text(buf.str(), options);
}

// Canonical form: times as interval indices, durations in intervals.
inline json to_json(const ScenarioConfig& c) {
    using detail::duration_to_json;
    json zones = json::array();
    for (const auto& z : c.zones.rows) {
        json row = {{"zone_id", z.zone_id},     {"weight_inflow", z.weight_inflow}, {"freq", z.frequency},
                    {"capillarity", z.capillarity}, {"fare", z.fare},                   {"time_diff", z.time_diff}};
        row["weight_starting"] = z.weight_starting ? json(*z.weight_starting) : json(nullptr);
        zones.push_back(std::move(row));
    }
    json doc = {
        {"time_grid", {{"interval_minutes", c.grid.interval_minutes}, {"n_intervals", c.grid.n_intervals}}},
        {"policy",
         {{"t_start", c.policy.window.start},
          {"t_end", c.policy.window.end},
          {"exempt_fraction", c.policy.exempt_fraction},
          {"fee_by_class", c.policy.fee_by_class}}},
        {"behavior",
         {{"cost_median", detail::parameter_to_json(c.behavior.cost_median)},
          {"anticipate_median", duration_to_json(c.behavior.anticipate_median)},
          {"postpone_median", duration_to_json(c.behavior.postpone_median)},
          {"anticipate_redist_median", duration_to_json(c.behavior.anticipate_redist_median)},
          {"postpone_redist_median", duration_to_json(c.behavior.postpone_redist_median)},
          {"mode_shift_enabled", c.behavior.mode_shift_enabled},
          {"logit_coefficients", c.behavior.logit_coefficients}}},
        {"fleet",
         {{"class_shares", c.fleet.class_shares},
          {"emission_per_km", c.fleet.emission_per_km},
          {"km_per_interval", c.fleet.km_per_interval},
          {"pollutant", c.fleet.pollutant},
          {"share_rule", c.fleet.share_rule == FleetShareRule::normalized ? "normalized" : "literal"}}},
        {"zones", std::move(zones)},
        {"solver",
         {{"mean_dwell", {{"value", c.solver.mean_dwell}, {"unit", "intervals"}}},
          {"tolerance", c.solver.tolerance},
          {"max_iterations", c.solver.max_iterations},
          {"method", c.solver.method == SolverMethod::iterative ? "iterative" : "direct"}}},
    };
    if (!c.name.empty()) doc["name"] = c.name;
    return doc;
}

// CSV `t,inflow,starting`, one row per interval 0..n-1 in order.
inline DemandProfile load_demand(std::istream& in, const TimeGrid& grid) {
    using detail::invariant_violation;
    std::string line;
    if (!std::getline(in, line)) detail::schema_error("demand", "empty CSV");
    const auto header = detail::split_csv_line(line);
    if (header != std::vector<std::string>{"t", "inflow", "starting"})
        detail::schema_error("demand", "header must be exactly t,inflow,starting");

    DemandProfile d;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++row;
        const auto cells = detail::split_csv_line(line);
        const std::string where = "demand row " + std::to_string(row);
        if (cells.size() != 3) detail::schema_error(where, "expected 3 columns");
        const auto t = detail::parse_double(cells[0]);
        const auto inflow = detail::parse_double(cells[1]);
        const auto starting = detail::parse_double(cells[2]);
        if (!t || !inflow || !starting) detail::schema_error(where, "non-numeric cell");
        const auto expected = d.inflow.size();
        if (*t != static_cast<double>(expected)) {
            if (*t > static_cast<double>(expected)) invariant_violation("demand.t", "missing interval " + std::to_string(expected));
            invariant_violation("demand.t", "interval indices must be contiguous and increasing (row " + std::to_string(row) + ")");
        }
        if (*inflow < 0.0) invariant_violation("demand.inflow", "negative value at t=" + std::to_string(expected));
        if (*starting < 0.0) invariant_violation("demand.starting", "negative value at t=" + std::to_string(expected));
        d.inflow.push_back(*inflow);
        d.starting.push_back(*starting);
    }
    const auto n = static_cast<std::size_t>(grid.n_intervals);
    if (d.inflow.size() < n) invariant_violation("demand.t", "missing interval " + std::to_string(d.inflow.size()) +
                                                                 " (expected " + std::to_string(n) + " rows)");
    if (d.inflow.size() > n)
        invariant_violation("demand.t", "length mismatch: " + std::to_string(d.inflow.size()) + " rows for " +
                                            std::to_string(n) + " intervals");
    return d;
}

inline DemandProfile load_demand_file(const std::filesystem::path& path, const TimeGrid& grid) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "cannot open demand CSV");
    return load_demand(in, grid);
}

inline ZoneTable load_zones(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) detail::schema_error("zones", "empty CSV");
    const std::vector<std::string> expected{"zone_id", "weight_inflow", "weight_starting", "freq",
                                            "capillarity", "fare", "time_diff"};
    if (detail::split_csv_line(line) != expected)
        detail::schema_error("zones", "header must be zone_id,weight_inflow,weight_starting,freq,capillarity,fare,time_diff");
    ZoneTable table;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++row;
        const auto cells = detail::split_csv_line(line);
        const std::string where = "zones row " + std::to_string(row);
        if (cells.size() != expected.size()) detail::schema_error(where, "expected 7 columns");
        auto number = [&](std::size_t col) {
            const auto v = detail::parse_double(cells[col]);
            if (!v) detail::schema_error(where + "." + expected[col], "non-numeric cell");
            return *v;
        };
        ZoneRow z;
        z.zone_id = cells[0];
        z.weight_inflow = number(1);
        if (!cells[2].empty()) z.weight_starting = number(2);
        z.frequency = number(3);
        z.capillarity = number(4);
        z.fare = number(5);
        z.time_diff = number(6);
        table.rows.push_back(std::move(z));
    }
    validate(table);
    return table;
}

inline ZoneTable load_zones_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "cannot open zone CSV");
    return load_zones(in);
}

struct BuiltinDefaults {
    FleetMix fleet;
    BehavioralParams behavior;
    SolverSettings solver;
};

// Bologna case-study values (Euro 0..6 fleet, NOx rates, shared behavioral
// parameters of the A/B scenario suites) on a 5-minute grid.
inline BuiltinDefaults builtin_bologna_defaults() {
    BuiltinDefaults d;
    d.fleet.class_shares = {0.059, 0.012, 0.034, 0.054, 0.198, 0.176, 0.467};
    d.fleet.emission_per_km = {0.2105847, 0.217457, 0.2401457, 0.247239, 0.135555, 0.099559, 0.068246};
    d.fleet.km_per_interval = 2.5;
    d.behavior.cost_median = Parameter::uniform(4.0, 7.0);
    d.behavior.anticipate_median = Parameter::point(12);
    d.behavior.postpone_median = Parameter::point(12);
    d.behavior.anticipate_redist_median = Parameter::point(18);
    d.behavior.postpone_redist_median = Parameter::point(18);
    d.behavior.mode_shift_enabled = true;
    d.behavior.logit_coefficients = {-1.24, 4.5, -1.45, -0.30, -0.034};
    d.solver.mean_dwell = 4;
    return d;
}

} // namespace tpsim
