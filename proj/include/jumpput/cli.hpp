#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "jumpput/io.hpp"

namespace jumpput {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int config = 2;
inline constexpr int solve = 3;
inline constexpr int trace = 4;
inline constexpr int validation = 5;
}  // namespace exit_code

/// Solves and writes value.csv and solution.json; prints the boundary and v at each spot.
int cmd_price(const RunConfig& cfg, std::ostream& out, std::ostream& err);
/// Writes trace.csv (n, l_n, sup_delta, rate_bound) and checks sup_delta <= rate_bound per row.
int cmd_trace(const RunConfig& cfg, std::ostream& out, std::ostream& err);
/// Solves, then compares with Monte Carlo at the configured points; writes validate.json.
int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
/// One solve per value of `param` (lambda, sigma, strike, alpha); writes sweep.csv.
int cmd_sweep(const RunConfig& cfg, const std::string& param, const std::vector<double>& values, std::ostream& out,
              std::ostream& err);

/// Entry point of the jumpput executable.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace jumpput
