#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "jumpput/model.hpp"

namespace jumpput {

struct Solution;

enum class Scheme {
    Auto,   // exact log-normal steps for constant sigma, Euler otherwise
    Exact,  // constant sigma only
    Euler,
};

struct PathResult {
    double payoff = 0.0;
    /// Exercise time; T_max when the path was truncated.
    double tau = 0.0;
    bool exercised = false;
    std::size_t jumps = 0;
};

/// Per-path seed from (seed, path index); any evaluation order reproduces the same streams.
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path);

/**
 * One path of the jump diffusion under the threshold policy "stop at the first
 * monitoring time with X <= l". Monitoring times are every dt after the last
 * jump, plus each jump instant (before and after the jump). A path that has not
 * stopped by t_max pays 0.
 */
PathResult simulate_path(const MarketModel& model, double x0, double l, std::mt19937_64& rng, double dt, double t_max,
                         Scheme scheme = Scheme::Auto);

/// Discounted payoff of the path with index 0 for this seed.
double simulate_payoff(const MarketModel& model, double x0, double l, std::uint64_t seed, double dt, double t_max,
                       Scheme scheme = Scheme::Auto);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::pair<double, double> ci95{0.0, 0.0};
    /// e^{-alpha t_max} K: bound on the value lost by truncating at t_max.
    double truncation_bound = 0.0;
    std::size_t jumps = 0;
    std::size_t truncated = 0;
};

McEstimate estimate_value(const MarketModel& model, double x0, double l, std::size_t n_paths, std::uint64_t seed,
                          double dt, double t_max, Scheme scheme = Scheme::Auto);

/// Sum in a fixed binary-tree order.
double pairwise_sum(const double* data, std::size_t n);

struct McSettings {
    std::size_t n_paths = 1000000;
    double dt = 1e-3;
    /// Horizon; 0 means 200 / alpha.
    double t_max = 0.0;
    std::uint64_t seed = 20240601;
    double n_sigma = 3.0;
    /// Absolute discretisation allowance, in units of K.
    double allowance = 2e-3;
    Scheme scheme = Scheme::Auto;

    double horizon(const MarketModel& model) const { return t_max > 0.0 ? t_max : 200.0 / model.alpha; }
};

struct PointCheck {
    double x = 0.0;
    double solver_value = 0.0;
    McEstimate estimate;
    double tolerance = 0.0;
    bool pass = false;
};

struct ValidationReport {
    std::vector<PointCheck> points;
    bool all_pass = true;
};

/// |v(x) - mean| <= n_sigma std_error + truncation_bound + allowance K at every point.
ValidationReport validate_solution(const Solution& sol, const MarketModel& model, const std::vector<double>& points,
                                   const McSettings& settings);

/// Estimates from x0 under each threshold in `ls`, sharing one seed.
std::vector<McEstimate> policy_sweep(const MarketModel& model, double x0, const std::vector<double>& ls,
                                     const McSettings& settings);

}  // namespace jumpput
