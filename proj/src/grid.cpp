#include "jumpput/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jumpput/errors.hpp"

namespace jumpput {

Grid Grid::log_spaced(double x_min, double x_max, std::size_t n, double strike) {
    if (n < 100) throw DomainError("grid needs at least 100 nodes");
    if (!(x_min > 0.0)) throw DomainError("grid x_min must be positive");
    if (!(strike > x_min) || !(x_max > strike)) throw DomainError("grid must satisfy x_min < K < x_max");

    const double span = std::log(x_max / x_min);
    const double below = std::log(strike / x_min);
    auto m = static_cast<std::size_t>(std::llround(static_cast<double>(n - 1) * below / span));
    m = std::clamp<std::size_t>(m, 1, n - 2);

    Grid g;
    g.h_ = below / static_cast<double>(m);
    g.x_.resize(n);
    g.t_.resize(n);
    const double log_k = std::log(strike);
    for (std::size_t j = 0; j < n; ++j) {
        const double offset = (static_cast<double>(j) - static_cast<double>(m)) * g.h_;
        g.x_[j] = strike * std::exp(offset);
        g.t_[j] = log_k + offset;
    }
    g.x_[m] = strike;
    g.t_[m] = log_k;
    g.strike_index_ = m;
    return g;
}

Grid Grid::default_for(double strike, std::size_t n) { return log_spaced(1e-3 * strike, 1e2 * strike, n, strike); }

Grid Grid::from_nodes(std::vector<double> nodes, std::optional<double> strike) {
    if (nodes.size() < 100) throw DomainError("grid needs at least 100 nodes");
    Grid g;
    g.t_.resize(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        if (!(nodes[j] > 0.0) || !std::isfinite(nodes[j])) throw DomainError("grid nodes must be positive");
        if (j > 0 && !(nodes[j] > nodes[j - 1])) throw DomainError("grid nodes must be strictly increasing");
        g.t_[j] = std::log(nodes[j]);
    }
    g.h_ = (g.t_.back() - g.t_.front()) / static_cast<double>(nodes.size() - 1);
    for (std::size_t j = 1; j < nodes.size(); ++j) {
        if (std::abs((g.t_[j] - g.t_[j - 1]) - g.h_) > 1e-12) {
            throw DomainError("grid nodes are not log-spaced at index " + std::to_string(j));
        }
    }
    if (strike) {
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            if (nodes[j] == *strike) g.strike_index_ = j;
        }
    }
    g.x_ = std::move(nodes);
    return g;
}

std::size_t Grid::locate(double x) const {
    const std::size_t last = x_.size() - 2;
    if (x <= x_.front()) return 0;
    if (x >= x_.back()) return last;
    const double pos = (std::log(x) - t_.front()) / h_;
    auto j = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(last)));
    while (j > 0 && x < x_[j]) --j;
    while (j < last && x >= x_[j + 1]) ++j;
    return j;
}

}  // namespace jumpput
