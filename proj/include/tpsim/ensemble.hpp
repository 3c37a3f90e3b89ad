/// @file ensemble.hpp
/// @brief Monte Carlo ensemble over distribution-valued behavioral
/// parameters, with pointwise aggregation of every series and KPI.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "pipeline.hpp"

namespace tpsim {

struct EnsembleOptions {
    std::size_t n_draws = 100;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    double lower_quantile = 0.025;
    double upper_quantile = 0.975;
};

struct ScalarSummary {
    double mean = 0.0;
    double sd = 0.0;
    double lower = 0.0;
    double upper = 0.0;

    bool operator==(const ScalarSummary&) const = default;
};

struct SeriesSummary {
    std::vector<double> mean;
    std::vector<double> sd;
    std::vector<double> lower;
    std::vector<double> upper;

    bool operator==(const SeriesSummary&) const = default;
};

struct EnsembleSummary {
    std::string name;
    std::size_t n_draws = 0;
    std::uint64_t seed = 0;
    double lower_quantile = 0.025;
    double upper_quantile = 0.975;
    std::map<std::string, SeriesSummary> series;
    std::map<std::string, ScalarSummary> scalars;
    std::size_t non_converged_draws = 0;

    bool operator==(const EnsembleSummary&) const = default;
};

// Independent generator for draw `index`, whatever thread evaluates it.
inline std::mt19937_64 draw_generator(std::uint64_t seed, std::size_t index) {
    const auto i = static_cast<std::uint64_t>(index);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
    return std::mt19937_64(seq);
}

inline BehaviorDraw ensemble_draw(const BehavioralParams& behavior, std::uint64_t seed, std::size_t index) {
    auto rng = draw_generator(seed, index);
    return sample_draw(behavior, rng);
}

// Nearest-rank empirical quantile of a sorted sample.
inline double nearest_rank(const std::vector<double>& sorted, double q) {
    const auto n = sorted.size();
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return sorted[rank - 1];
}

inline ScalarSummary summarize(std::vector<double> sample, double lower_q, double upper_q) {
    ScalarSummary s;
    const double n = static_cast<double>(sample.size());
    for (double x : sample) s.mean += x;
    s.mean /= n;
    if (sample.size() > 1) {
        double ss = 0.0;
        for (double x : sample) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / (n - 1.0));
    }
    std::sort(sample.begin(), sample.end());
    s.lower = std::min(nearest_rank(sample, lower_q), s.mean);
    s.upper = std::max(nearest_rank(sample, upper_q), s.mean);
    // A constant sample reports its value exactly and no spread.
    if (sample.front() == sample.back()) {
        s.mean = s.lower = s.upper = sample.front();
        s.sd = 0.0;
    }
    return s;
}

// Outputs retained from one draw.
struct DrawOutputs {
    std::map<std::string, std::vector<double>> series;
    std::map<std::string, double> scalars;
    bool converged = true;
};

inline DrawOutputs draw_outputs(const SimulationResult& r) {
    DrawOutputs o;
    o.converged = r.converged();
    o.series = {{"inflow_base", r.baseline.inflow},          {"inflow_mod", r.modified.inflow},
                {"starting_base", r.baseline.starting},      {"starting_mod", r.modified.starting},
                {"traffic_base", r.baseline.traffic.values}, {"traffic_mod", r.modified.traffic.values},
                {"emissions_base", r.baseline.emissions.total}, {"emissions_mod", r.modified.emissions.total}};
    const auto rows = r.kpis.rows();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string name(KpiBlock::names[i]);
        o.scalars[name] = rows[i]->value;
        o.scalars[name + ".baseline"] = rows[i]->baseline;
        o.scalars[name + ".delta"] = rows[i]->delta();
    }
    o.scalars["p_rigid_overall"] = r.inflow_response.curves.p_rigid_overall;
    o.scalars["p_modeshift_inflow"] = r.inflow_response.curves.p_modeshift_overall;
    o.scalars["epsilon"] = r.inflow_response.curves.epsilon;
    return o;
}

inline EnsembleSummary aggregate(const std::vector<DrawOutputs>& draws, const EnsembleOptions& options,
                                 std::string name = {}) {
    EnsembleSummary s;
    s.name = std::move(name);
    s.n_draws = draws.size();
    s.seed = options.seed;
    s.lower_quantile = options.lower_quantile;
    s.upper_quantile = options.upper_quantile;
    if (draws.empty()) return s;
    for (const auto& d : draws)
        if (!d.converged) ++s.non_converged_draws;

    std::vector<double> sample(draws.size());
    for (const auto& [key, first] : draws.front().series) {
        SeriesSummary out;
        const std::size_t n = first.size();
        out.mean.resize(n);
        out.sd.resize(n);
        out.lower.resize(n);
        out.upper.resize(n);
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t d = 0; d < draws.size(); ++d) sample[d] = draws[d].series.at(key)[t];
            const auto sum = summarize(sample, options.lower_quantile, options.upper_quantile);
            out.mean[t] = sum.mean;
            out.sd[t] = sum.sd;
            out.lower[t] = sum.lower;
            out.upper[t] = sum.upper;
        }
        s.series.emplace(key, std::move(out));
    }
    for (const auto& [key, unused] : draws.front().scalars) {
        for (std::size_t d = 0; d < draws.size(); ++d) sample[d] = draws[d].scalars.at(key);
        s.scalars.emplace(key, summarize(sample, options.lower_quantile, options.upper_quantile));
    }
    return s;
}

// Draw i always uses substream i, so the summary does not depend on the
// worker count or scheduling.
inline EnsembleSummary run_ensemble(const ScenarioConfig& config, const DemandProfile& demand,
                                    const EnsembleOptions& options) {
    if (options.n_draws < 1) throw ValidationError(ValidationError::Kind::invariant, "n_draws", "must be >= 1");
    std::vector<DrawOutputs> results(options.n_draws);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::optional<std::size_t> failed_draw;
    std::string failed_node;
    std::string failed_message;

    auto worker = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= options.n_draws) return;
            try {
                results[i] = draw_outputs(run_single(config, demand, ensemble_draw(config.behavior, options.seed, i)));
            } catch (const std::exception& e) {
                std::lock_guard lock(error_mutex);
                // Report the lowest failing index for a deterministic message.
                if (!failed_draw || i < *failed_draw) {
                    failed_draw = i;
                    const auto* node = dynamic_cast<const NodeError*>(&e);
                    failed_node = node != nullptr ? node->node() : "pipeline";
                    failed_message = e.what();
                }
                failed.store(true);
            }
        }
    };

    const unsigned n_workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(options.n_draws)));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed_draw) throw EnsembleError(*failed_draw, failed_node, failed_message);

    return aggregate(results, options, config.name);
}

} // namespace tpsim
