#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <tpsim/fixtures.hpp>
#include <tpsim/tpsim.hpp>

namespace support {

inline std::filesystem::path data_dir() { return TPSIM_DATA_DIR; }
inline std::filesystem::path scenario_dir() { return TPSIM_SCENARIO_DIR; }

inline tpsim::ScenarioConfig bundled(const std::string& id) {
    return tpsim::load_scenario_file(scenario_dir() / (id + ".json"));
}

inline tpsim::DemandProfile bundled_demand(const tpsim::TimeGrid& grid = {}) {
    return tpsim::load_demand_file(data_dir() / "synthetic_demand.csv", grid);
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("tpsim_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<double> random_profile(std::mt19937_64& rng, std::size_t n, double hi = 500.0) {
    std::uniform_real_distribution<double> u(0.0, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

} // namespace support
