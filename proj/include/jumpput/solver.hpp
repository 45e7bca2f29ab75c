#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "jumpput/fundsol.hpp"
#include "jumpput/grid.hpp"
#include "jumpput/gridfn.hpp"
#include "jumpput/model.hpp"
#include "jumpput/operator.hpp"

namespace jumpput {

struct Diagnostics {
    /// |D+ v(l) + 1| from the closed representation of the final application.
    double smooth_fit_gap = 0.0;
    double max_pde_residual_continuation = 0.0;
    double pde_residual_location = 0.0;
    /// max of F + lambda S v over the stopping region (<= 0 means no violation).
    double max_vi_violation_stopping = 0.0;
    /// min (v - h) over nodes more than one cell above l.
    double min_continuation_premium = 0.0;
    ShapeReport shape;
    /// ||R v - v||.
    double fixed_point_residual = 0.0;
};

struct Solution {
    MarketModel model;
    GridFunction v;
    std::vector<double> boundaries;
    std::size_t n_iter = 0;
    std::vector<double> sup_norm_deltas;
    Diagnostics diagnostics;

    double boundary() const { return boundaries.back(); }
};

/// Called after each iterate v_{n+1} is built from v_n with boundary l_n.
using IterateObserver = std::function<void(std::size_t n, const GridFunction& next, double l)>;

struct SolverOptions {
    double epsilon = 1e-6;
    Tolerances tol;
    /// Upper end of the PDE residual scan; defaults to 50 K (clamped to x_max).
    std::optional<double> residual_upper;
    /// Use the shooting pair even when sigma is constant.
    bool force_numeric_pair = false;
    IterateObserver observer;
};

/// Smallest n >= 1 with (lambda / (lambda + alpha))^n K <= eps.
std::size_t a_priori_iterations(double lambda, double alpha, double eps, double strike);

/// Closed-form pair for constant sigma, shooting pair otherwise.
std::shared_ptr<const FundamentalPair> make_pair(const MarketModel& model, const Grid& grid, bool force_numeric = false);

/// Context for a model on a grid; the grid must contain the strike.
OperatorContext make_context(const MarketModel& model, const Grid& grid, bool force_numeric = false);

Solution solve(const OperatorContext& ctx, const SolverOptions& opts = {});
Solution solve(const MarketModel& model, const Grid& grid, const SolverOptions& opts = {});

struct QviReport {
    double smooth_fit_gap = 0.0;
    double max_continuation_residual = 0.0;
    double continuation_location = 0.0;
    std::size_t continuation_nodes = 0;
    double max_vi = 0.0;
    double vi_location = 0.0;
    /// max |v - h| at nodes in the stopping region.
    double stopping_mismatch = 0.0;
    double min_premium = 0.0;
    double premium_location = 0.0;
};

/// Recomputes the QVI residuals from node values with x-space finite differences.
QviReport qvi_report(const Solution& sol, const OperatorContext& ctx, std::optional<double> upper = std::nullopt);

}  // namespace jumpput
