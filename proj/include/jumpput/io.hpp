#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "jumpput/grid.hpp"
#include "jumpput/mc.hpp"
#include "jumpput/model.hpp"
#include "jumpput/solver.hpp"

namespace jumpput {

/// Malformed or incomplete configuration; the message names the offending key.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct GridSpec {
    double x_min = 0.0;
    double x_max = 0.0;
    std::size_t n = 2000;
};

struct RunConfig {
    MarketModel model;
    GridSpec grid;
    SolverOptions solver;
    std::optional<McSettings> mc;
    /// Validation points (mc.points).
    std::vector<double> mc_points;
    std::string output = ".";
    std::vector<double> spots;
};

MarketModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const MarketModel& m);

/// Parses a config document. Grid bounds default to [1e-3 K, 1e2 K], alpha to r.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

Grid make_grid(const RunConfig& cfg);

nlohmann::json diagnostics_to_json(const Diagnostics& d);

/// Solution document; `values_file` is the CSV file name stored under "v".
nlohmann::json solution_to_json(const Solution& sol, const std::string& values_file = "value.csv");
Solution solution_from_json(const nlohmann::json& j, const std::string& csv_path);

/// Writes <dir>/value.csv and <dir>/solution.json.
void save_solution(const Solution& sol, const std::string& dir);
/// Reads a solution written by save_solution.
Solution load_solution(const std::string& dir);

/// Serialised text of a solution document as written to disk.
std::string dump_json(const nlohmann::json& j);

nlohmann::json validation_to_json(const ValidationReport& rep, double boundary);

}  // namespace jumpput
