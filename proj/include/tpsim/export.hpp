/// @file export.hpp
/// @brief CSV/JSON rendering of results, ensemble summaries and comparisons.
///
/// Numbers are written with 6 significant digits through std::to_chars, so
/// output does not depend on the process locale.

#pragma once

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "config_io.hpp"
#include "ensemble.hpp"
#include "errors.hpp"
#include "indicators.hpp"
#include "pipeline.hpp"

namespace tpsim::io {

using json = nlohmann::json;

inline std::string format_number(double x) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 6);
    if (ec != std::errc{}) return "nan";
    return std::string(buf.data(), ptr);
}

inline const std::vector<std::string>& timeseries_columns() {
    static const std::vector<std::string> cols{"inflow_base",  "inflow_mod",     "traffic_base",
                                               "traffic_mod",  "emissions_base", "emissions_mod"};
    return cols;
}

inline std::map<std::string, const std::vector<double>*> timeseries_of(const SimulationResult& r) {
    return {{"inflow_base", &r.baseline.inflow},           {"inflow_mod", &r.modified.inflow},
            {"traffic_base", &r.baseline.traffic.values},  {"traffic_mod", &r.modified.traffic.values},
            {"emissions_base", &r.baseline.emissions.total}, {"emissions_mod", &r.modified.emissions.total}};
}

inline std::string timeseries_csv(const SimulationResult& r) {
    std::ostringstream out;
    out << "t";
    for (const auto& c : timeseries_columns()) out << ',' << c;
    out << '\n';
    const auto series = timeseries_of(r);
    const std::size_t n = r.baseline.inflow.size();
    for (std::size_t t = 0; t < n; ++t) {
        out << t;
        for (const auto& c : timeseries_columns()) out << ',' << format_number((*series.at(c))[t]);
        out << '\n';
    }
    return out.str();
}

inline std::string timeseries_csv(const EnsembleSummary& s) {
    std::ostringstream out;
    out << "t";
    for (const auto& c : timeseries_columns()) out << ',' << c << "_mean," << c << "_lo," << c << "_hi";
    out << '\n';
    const std::size_t n = s.series.at("inflow_base").mean.size();
    for (std::size_t t = 0; t < n; ++t) {
        out << t;
        for (const auto& c : timeseries_columns()) {
            const auto& v = s.series.at(c);
            out << ',' << format_number(v.mean[t]) << ',' << format_number(v.lower[t]) << ','
                << format_number(v.upper[t]);
        }
        out << '\n';
    }
    return out.str();
}

// Columns of a time-series CSV written by this module, keyed by header name.
inline std::map<std::string, std::vector<double>> read_timeseries_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(ValidationError::Kind::schema, "timeseries", "empty CSV");
    const auto header = detail::split_csv_line(line);
    std::map<std::string, std::vector<double>> cols;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw ValidationError(ValidationError::Kind::schema, "timeseries", "ragged row");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto v = detail::parse_double(cells[i]);
            if (!v) throw ValidationError(ValidationError::Kind::schema, "timeseries." + header[i], "non-numeric cell");
            cols[header[i]].push_back(*v);
        }
    }
    return cols;
}

inline json to_json(const KpiRow& row) {
    json j = {{"baseline", row.baseline}, {"value", row.value}, {"delta", row.delta()}};
    const auto rel = row.relative();
    j["percent_delta"] = rel ? json(100.0 * *rel) : json(nullptr);
    return j;
}

inline json to_json(const KpiBlock& k) {
    json j = json::object();
    const auto rows = k.rows();
    for (std::size_t i = 0; i < rows.size(); ++i) j[std::string(KpiBlock::names[i])] = to_json(*rows[i]);
    return j;
}

inline json to_json(const behavior::BehaviorKpis& b) {
    return {{"time_shifted", {{"inflow", b.time_shifted_inflow}, {"starting", b.time_shifted_starting}, {"total", b.time_shifted()}}},
            {"mode_shifted", {{"inflow", b.mode_shifted_inflow}, {"starting", b.mode_shifted_starting}, {"total", b.mode_shifted()}}},
            {"lost", {{"inflow", b.lost_inflow}, {"starting", b.lost_starting}, {"total", b.lost()}}}};
}

inline json to_json(const traffic::TrafficSeries& t) {
    return {{"iterations_used", t.iterations_used}, {"converged", t.converged}, {"residual", t.residual}};
}

inline json to_json(const BehaviorDraw& d) {
    return {{"cost_median", d.cost_median},
            {"anticipate_median", d.anticipate_median},
            {"postpone_median", d.postpone_median},
            {"anticipate_redist_median", d.anticipate_redist_median},
            {"postpone_redist_median", d.postpone_redist_median}};
}

// KPI document written next to the time-series CSV.
inline json kpi_document(const SimulationResult& r) {
    return {{"name", r.name},
            {"pollutant", r.config.fleet.pollutant},
            {"kpis", to_json(r.kpis)},
            {"behavior", to_json(r.behavior)},
            {"draw", to_json(r.draw)},
            {"p_rigid_overall", r.inflow_response.curves.p_rigid_overall},
            {"p_modeshift_inflow", r.inflow_response.curves.p_modeshift_overall},
            {"p_modeshift_starting", r.starting_response.curves.p_modeshift_overall},
            {"epsilon", r.inflow_response.curves.epsilon},
            {"solver", {{"baseline", to_json(r.baseline.traffic)}, {"modified", to_json(r.modified.traffic)}}},
            {"warnings", r.warnings}};
}

// Full payload: KPIs, every series and the resolved config.
inline json result_document(const SimulationResult& r) {
    json j = kpi_document(r);
    j["config"] = tpsim::to_json(r.config);
    json series = json::object();
    for (const auto& [name, values] : timeseries_of(r)) series[name] = *values;
    series["starting_base"] = r.baseline.starting;
    series["starting_mod"] = r.modified.starting;
    j["series"] = std::move(series);
    return j;
}

inline json to_json(const ScalarSummary& s) {
    return {{"mean", s.mean}, {"sd", s.sd}, {"lo", s.lower}, {"hi", s.upper}};
}

inline json summary_document(const EnsembleSummary& s, bool with_series = true) {
    json scalars = json::object();
    for (const auto& [name, v] : s.scalars) scalars[name] = to_json(v);
    json j = {{"name", s.name},
              {"n_draws", s.n_draws},
              {"rng_seed", s.seed},
              {"quantiles", {s.lower_quantile, s.upper_quantile}},
              {"non_converged_draws", s.non_converged_draws},
              {"scalars", std::move(scalars)}};
    if (with_series) {
        json series = json::object();
        for (const auto& [name, v] : s.series)
            series[name] = {{"mean", v.mean}, {"sd", v.sd}, {"lo", v.lower}, {"hi", v.upper}};
        j["series"] = std::move(series);
    }
    return j;
}

inline json comparison_document(const ComparisonTable& table) {
    json scenarios = json::array();
    for (std::size_t i = 0; i < table.names.size(); ++i)
        scenarios.push_back({{"name", table.names[i]}, {"kpis", to_json(table.blocks[i])}});
    json pairwise = json::array();
    for (std::size_t i = 0; i < table.names.size(); ++i)
        for (std::size_t j = i + 1; j < table.names.size(); ++j) {
            json d = json::object();
            for (auto kpi : KpiBlock::names) d[std::string(kpi)] = table.difference(kpi, i, j);
            pairwise.push_back({{"from", table.names[i]}, {"to", table.names[j]}, {"difference", std::move(d)}});
        }
    return {{"scenarios", std::move(scenarios)}, {"pairwise", std::move(pairwise)}};
}

// Long form: scenario,kpi,baseline,value,delta,percent_delta.
inline std::string comparison_csv(const ComparisonTable& table) {
    std::ostringstream out;
    out << "scenario,kpi,baseline,value,delta,percent_delta\n";
    for (std::size_t i = 0; i < table.names.size(); ++i) {
        const auto rows = table.blocks[i].rows();
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto rel = rows[k]->relative();
            out << table.names[i] << ',' << KpiBlock::names[k] << ',' << format_number(rows[k]->baseline) << ','
                << format_number(rows[k]->value) << ',' << format_number(rows[k]->delta()) << ','
                << (rel ? format_number(100.0 * *rel) : std::string()) << '\n';
        }
    }
    return out.str();
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out << text;
    out.flush();
    if (!out) throw IoError(path.string(), "write failed");
}

enum class Format { csv, json };

// Writes <dir>/timeseries.csv and <dir>/kpis.json (or result.json for json).
inline void export_result(const SimulationResult& r, Format format, const std::filesystem::path& dir) {
    if (format == Format::csv) {
        write_text(dir / "timeseries.csv", timeseries_csv(r));
        write_text(dir / "kpis.json", kpi_document(r).dump(2) + "\n");
    } else {
        write_text(dir / "result.json", result_document(r).dump(2) + "\n");
    }
}

inline void export_result(const EnsembleSummary& s, Format format, const std::filesystem::path& dir) {
    if (format == Format::csv) {
        write_text(dir / "timeseries.csv", timeseries_csv(s));
        write_text(dir / "kpis.json", summary_document(s, false).dump(2) + "\n");
    } else {
        write_text(dir / "result.json", summary_document(s).dump(2) + "\n");
    }
}

inline void export_comparison(const std::vector<std::pair<std::string, KpiBlock>>& results,
                              const std::filesystem::path& dir) {
    if (results.empty()) throw ValidationError(ValidationError::Kind::invariant, "compare", "no results to export");
    const auto table = compare_scenarios(results);
    write_text(dir / "comparison.csv", comparison_csv(table));
    write_text(dir / "comparison.json", comparison_document(table).dump(2) + "\n");
}

} // namespace tpsim::io
