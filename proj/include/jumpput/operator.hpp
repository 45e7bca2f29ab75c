#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "jumpput/fundsol.hpp"
#include "jumpput/grid.hpp"
#include "jumpput/gridfn.hpp"
#include "jumpput/model.hpp"

namespace jumpput {

/// Numerical tolerances; root, trunc and shape are in units of the strike.
struct Tolerances {
    double root = 1e-10;
    double fit = 1e-3;
    double pde = 1e-4;
    double trunc = 1e-6;
    double shape = 1e-7;
};

/**
 * Everything the free-boundary operator needs that does not depend on the
 * test function: the model, the fundamental pair, the grid, and node values
 * of psi, phi and the Green weight w(y) = 2 / (y^2 sigma^2(y) W(y)).
 */
class OperatorContext {
public:
    OperatorContext(MarketModel model, std::shared_ptr<const FundamentalPair> pair, std::shared_ptr<const Grid> grid);

    const MarketModel& model() const noexcept { return model_; }
    const FundamentalPair& pair() const noexcept { return *pair_; }
    const std::shared_ptr<const FundamentalPair>& pair_ptr() const noexcept { return pair_; }
    const Grid& grid() const noexcept { return *grid_; }
    const std::shared_ptr<const Grid>& grid_ptr() const noexcept { return grid_; }

    double strike() const noexcept { return model_.strike; }
    double mu() const noexcept { return mu_; }
    double kill_rate() const noexcept { return rho_; }
    double lambda() const noexcept { return model_.lambda; }
    /// Lowest admissible boundary, 10 x_min.
    double search_floor() const noexcept { return 10.0 * grid_->x_min(); }

    std::span<const double> psi() const noexcept { return psi_; }
    std::span<const double> phi() const noexcept { return phi_; }
    std::span<const double> green_weight() const noexcept { return weight_; }
    double green_weight_at(double x) const;

    /// phi(K) / W(K): contribution of the payoff kink to the boundary objective.
    double kink_mass() const noexcept { return kink_mass_; }
    /// int_{x_j}^{K} w phi F dy for nodes below K, 0 above.
    double payoff_integral_from(std::size_t j) const noexcept { return payoff_suffix_[j]; }

    /// Payoff h on the grid with the context's tails.
    GridFunction payoff() const;
    /// Attaches the context tails (payoff below, phi decay above) to node values.
    GridFunction make_function(std::vector<double> values) const;

private:
    MarketModel model_;
    std::shared_ptr<const FundamentalPair> pair_;
    std::shared_ptr<const Grid> grid_;
    double mu_;
    double rho_;
    std::vector<double> psi_;
    std::vector<double> phi_;
    std::vector<double> weight_;
    std::vector<double> payoff_suffix_;
    double kink_mass_;
};

/// (A - (alpha + lambda)) h away from the kink: -mu x - (alpha+lambda)(K - x) below K, 0 above, left limit at K.
double F_payoff(const OperatorContext& ctx, double x);

/**
 * A test function f prepared for the operator: S f at the nodes and the
 * cumulative integrals of w phi lambda S f (from the right) and
 * w psi lambda S f (from the left), trapezoid in log x.
 */
class SourceTerm {
public:
    SourceTerm(const OperatorContext& ctx, GridFunction f);

    const GridFunction& f() const noexcept { return f_; }
    const GridFunction& Sf() const noexcept { return sf_; }
    /// S f at an arbitrary price, evaluating f directly.
    double Sf_at(double x) const;
    /// int_{x_j}^{x_max} w phi lambda S f dy
    double phi_integral_from(std::size_t j) const noexcept { return phi_suffix_[j]; }
    /// int_{x_0}^{x_j} w psi lambda S f dy
    double psi_integral_to(std::size_t j) const noexcept { return psi_prefix_[j]; }

private:
    friend class OperatorContext;
    const OperatorContext* ctx_;
    GridFunction f_;
    GridFunction sf_;
    std::vector<double> phi_suffix_;
    std::vector<double> psi_prefix_;
};

/// G(l) = int_l^inf w phi (lambda S f + F) dy, with the kink mass when l < K.
double boundary_objective(const OperatorContext& ctx, const SourceTerm& src, double l);
double boundary_objective(const OperatorContext& ctx, const GridFunction& f, double l);

/**
 * l[f]: the unique root of G in (10 x_min, K). Brackets by scanning nodes,
 * refines by bisection. Throws PreconditionError when f is not convex,
 * decreasing, within [0, K] with right slopes >= -1, and NoBoundary when G has
 * no sign change (existence condition violated) or more than one.
 */
double find_boundary(const OperatorContext& ctx, const SourceTerm& src, const Tolerances& tol = {});
double find_boundary(const OperatorContext& ctx, const GridFunction& f, const Tolerances& tol = {});

/// R_l f on the grid: h at and below l, the Green representation above.
GridFunction apply_R_l(const OperatorContext& ctx, const SourceTerm& src, double l);
GridFunction apply_R_l(const OperatorContext& ctx, const GridFunction& f, double l);

/// (R_l f)'(l+) from the closed representation.
double boundary_right_derivative(const OperatorContext& ctx, const SourceTerm& src, double l);

/// (R_{l[f]} f, l[f]).
std::pair<GridFunction, double> apply_R(const OperatorContext& ctx, const SourceTerm& src, const Tolerances& tol = {});
std::pair<GridFunction, double> apply_R(const OperatorContext& ctx, const GridFunction& f, const Tolerances& tol = {});

/// Two-barrier operator R_{l, rho}: killed at l and at the upper barrier rho; h outside (l, rho).
GridFunction two_barrier_R(const OperatorContext& ctx, const SourceTerm& src, double l, double upper);
GridFunction two_barrier_R(const OperatorContext& ctx, const GridFunction& f, double l, double upper);

struct ResidualScan {
    double max_value = 0.0;   // max |residual| (PDE) or max residual (VI)
    double location = 0.0;
    std::size_t nodes = 0;
};

/// |1/2 sigma^2 x^2 g'' + mu x g' - rho g + lambda S f| at nodes whose stencil lies in (l, upper].
ResidualScan continuation_residual(const OperatorContext& ctx, const GridFunction& g, const GridFunction& sf, double l,
                                   double upper);

/// max of F + lambda S f over nodes in (10 x_min, l).
ResidualScan stopping_inequality(const OperatorContext& ctx, const GridFunction& sf, double l);

/// G(l) over a list of candidate boundaries, for plotting.
std::vector<std::pair<double, double>> objective_sweep(const OperatorContext& ctx, const GridFunction& f,
                                                       std::span<const double> ls);

}  // namespace jumpput
