#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "scenario.hpp"

namespace tpsim::traffic {

// Circulating vehicles per interval.
struct TrafficSeries {
    std::vector<double> values;
    int iterations_used = 0;
    bool converged = false;
    // Max abs difference between the last two iterates (0 for the direct solve).
    double residual = 0.0;
};

// Probability that a circulating vehicle is still in the area one interval
// later, for a geometric dwell time with the given mean.
inline double retention_probability(int mean_dwell) {
    if (mean_dwell < 1) throw std::invalid_argument("retention_probability: mean_dwell must be >= 1");
    return static_cast<double>(mean_dwell - 1) / mean_dwell;
}

namespace detail {

inline std::vector<double> entering(std::span<const double> inflow, std::span<const double> starting) {
    if (inflow.size() != starting.size()) throw std::invalid_argument("traffic: inflow/starting length mismatch");
    if (inflow.empty()) throw std::invalid_argument("traffic: empty input");
    std::vector<double> e(inflow.size());
    std::transform(inflow.begin(), inflow.end(), starting.begin(), e.begin(), std::plus<>{});
    return e;
}

} // namespace detail

// Fixed-point sweeps T <- I + S + alpha * shift(T) from T = I + S, with the
// first interval pinned, until the distance to the fixed point is at most the
// tolerance or the iteration budget is spent. The sweep contracts by alpha in
// the max norm, so that distance is bounded by alpha / (1 - alpha) times the
// last change; both the change and the bound must be within tolerance.
inline TrafficSeries solve_traffic(std::span<const double> inflow, std::span<const double> starting,
                                   const SolverSettings& settings) {
    const double alpha = retention_probability(settings.mean_dwell);
    const std::vector<double> base = detail::entering(inflow, starting);

    const double error_factor = std::max(1.0, alpha / (1.0 - alpha));

    TrafficSeries out;
    std::vector<double> current = base;
    std::vector<double> next(base.size());
    for (int k = 1; k <= settings.max_iterations; ++k) {
        next[0] = base[0];
        double residual = 0.0;
        for (std::size_t t = 1; t < base.size(); ++t) {
            next[t] = base[t] + alpha * current[t - 1];
            residual = std::max(residual, std::abs(next[t] - current[t]));
        }
        current.swap(next);
        out.iterations_used = k;
        out.residual = residual;
        if (residual * error_factor <= settings.tolerance) {
            out.converged = true;
            break;
        }
    }
    out.values = std::move(current);
    return out;
}

// One forward pass of the same recursion; exact.
inline TrafficSeries solve_traffic_direct(std::span<const double> inflow, std::span<const double> starting,
                                          const SolverSettings& settings) {
    const double alpha = retention_probability(settings.mean_dwell);
    TrafficSeries out;
    out.values = detail::entering(inflow, starting);
    for (std::size_t t = 1; t < out.values.size(); ++t) out.values[t] += alpha * out.values[t - 1];
    out.iterations_used = 1;
    out.converged = true;
    return out;
}

inline TrafficSeries solve(std::span<const double> inflow, std::span<const double> starting,
                           const SolverSettings& settings) {
    return settings.method == SolverMethod::direct ? solve_traffic_direct(inflow, starting, settings)
                                                   : solve_traffic(inflow, starting, settings);
}

} // namespace tpsim::traffic
