#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jumpput/grid.hpp"
#include "jumpput/model.hpp"

namespace jumpput {

class FundamentalPair;

/// Off-grid behaviour of a grid function.
struct Tails {
    /// Below x_min: evaluate (K - x)^+ with this strike; otherwise hold f(x_min).
    std::optional<double> payoff_strike;
    /// Above x_max: f(x_max) * phi(x) / phi(x_max); otherwise hold f(x_max).
    std::shared_ptr<const FundamentalPair> decay;
};

/**
 * Piecewise-linear function on a log-spaced grid. Carrier for the payoff h,
 * jump averages S f and the value iterates v_n.
 */
class GridFunction {
public:
    GridFunction(std::shared_ptr<const Grid> grid, std::vector<double> values, Tails tails = {});

    const Grid& grid() const noexcept { return *grid_; }
    const std::shared_ptr<const Grid>& grid_ptr() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t j) const noexcept { return values_[j]; }
    std::size_t size() const noexcept { return values_.size(); }
    const Tails& tails() const noexcept { return tails_; }

    /// Linear interpolation in x inside the grid, tails outside. Throws DomainError for x <= 0.
    double operator()(double x) const;

    /// Same grid and tails, new node values.
    GridFunction with_values(std::vector<double> values) const;

private:
    std::shared_ptr<const Grid> grid_;
    std::vector<double> values_;
    Tails tails_;
};

/// h(x_j) = (K - x_j)^+, payoff tail below x_min.
GridFunction payoff(std::shared_ptr<const Grid> grid, double strike);

inline double eval(const GridFunction& f, double x) { return f(x); }

/// (S f)(x) = sum_i p_i f(x z_i) at a single point.
double apply_S_at(const GridFunction& f, const JumpMeasure& jumps, double x);

/// S f at every node; result keeps the tails of f.
GridFunction apply_S(const GridFunction& f, const JumpMeasure& jumps);

/// Forward difference (f_{j+1} - f_j) / (x_{j+1} - x_j). Throws DomainError for j >= N-1.
double right_derivative(const GridFunction& f, std::size_t j);

struct ShapeReport {
    bool convex = true;
    bool decreasing = true;
    bool bounds_ok = true;
    double min_right_slope = 0.0;
    /// Most negative chord-extrapolation deviation (value units).
    double min_second_difference = 0.0;
    std::size_t worst_convexity_index = 0;
    /// Largest forward difference f_{j+1} - f_j.
    double max_forward_difference = 0.0;
    /// Largest violation of h - tol <= f <= K + tol (0 when none).
    double max_bound_violation = 0.0;
};

ShapeReport shape_report(const GridFunction& f, double strike, double tol_shape);

/// max_j |a_j - b_j|; the functions must share a grid size.
double sup_norm_difference(const GridFunction& a, const GridFunction& b);

/// CSV with header "x,value", 18 significant digits, LF line endings.
void write_csv(const GridFunction& f, std::ostream& out);
void write_csv(const GridFunction& f, const std::string& path);

/// Reads "x,value" CSV written by write_csv. Returns the node coordinates and values.
std::pair<std::vector<double>, std::vector<double>> read_csv(std::istream& in);
std::pair<std::vector<double>, std::vector<double>> read_csv(const std::string& path);

/// Formats a double with 18 significant digits.
std::string format_real(double v);

}  // namespace jumpput
