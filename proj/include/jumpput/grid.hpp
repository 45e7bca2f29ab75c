#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace jumpput {

/**
 * Log-spaced price grid x_0 < ... < x_{N-1}.
 *
 * When built with a strike, K is an exact node and the spacing is chosen so
 * that the log step stays uniform; x_min is honoured exactly and x_max is the
 * nearest reachable value (within one log step of the request).
 */
class Grid {
public:
    static Grid log_spaced(double x_min, double x_max, std::size_t n, double strike);
    /// Default working grid: N = 2000 on [1e-3 K, 1e2 K].
    static Grid default_for(double strike, std::size_t n = 2000);
    /// Rebuild from stored nodes; validates positivity, ordering and log spacing.
    /// A node equal to `strike` (when given) becomes the strike node.
    static Grid from_nodes(std::vector<double> nodes, std::optional<double> strike = std::nullopt);

    std::size_t size() const noexcept { return x_.size(); }
    std::span<const double> nodes() const noexcept { return x_; }
    std::span<const double> log_nodes() const noexcept { return t_; }
    double operator[](std::size_t j) const noexcept { return x_[j]; }
    double x_min() const noexcept { return x_.front(); }
    double x_max() const noexcept { return x_.back(); }
    double log_step() const noexcept { return h_; }
    /// Index of the node equal to the strike, when one was inserted.
    std::optional<std::size_t> strike_index() const noexcept { return strike_index_; }

    /// Cell index j with x_j <= x < x_{j+1}, clamped to [0, N-2].
    std::size_t locate(double x) const;

private:
    Grid() = default;

    std::vector<double> x_;
    std::vector<double> t_;
    double h_ = 0.0;
    std::optional<std::size_t> strike_index_;
};

}  // namespace jumpput
