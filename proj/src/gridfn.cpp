#include "jumpput/gridfn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "jumpput/errors.hpp"
#include "jumpput/fundsol.hpp"
#include "jumpput/parallel.hpp"

namespace jumpput {

GridFunction::GridFunction(std::shared_ptr<const Grid> grid, std::vector<double> values, Tails tails)
    : grid_(std::move(grid)), values_(std::move(values)), tails_(std::move(tails)) {
    if (!grid_) throw DomainError("grid function needs a grid");
    if (values_.size() != grid_->size()) throw DomainError("grid function size does not match its grid");
    for (double v : values_) {
        if (!std::isfinite(v)) throw DomainError("grid function values must be finite");
    }
}

double GridFunction::operator()(double x) const {
    if (!(x > 0.0)) throw DomainError("grid function evaluated at non-positive price");
    const Grid& g = *grid_;
    if (x < g.x_min()) {
        if (tails_.payoff_strike) return std::max(*tails_.payoff_strike - x, 0.0);
        return values_.front();
    }
    if (x > g.x_max()) {
        if (tails_.decay) {
            return values_.back() * std::exp(tails_.decay->log_phi(x) - tails_.decay->log_phi(g.x_max()));
        }
        return values_.back();
    }
    const std::size_t j = g.locate(x);
    const double x0 = g[j];
    const double x1 = g[j + 1];
    return values_[j] + (values_[j + 1] - values_[j]) * ((x - x0) / (x1 - x0));
}

GridFunction GridFunction::with_values(std::vector<double> values) const {
    return GridFunction(grid_, std::move(values), tails_);
}

GridFunction payoff(std::shared_ptr<const Grid> grid, double strike) {
    if (!(strike > 0.0)) throw DomainError("strike must be positive");
    std::vector<double> v(grid->size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::max(strike - (*grid)[j], 0.0);
    return GridFunction(std::move(grid), std::move(v), Tails{strike, nullptr});
}

double apply_S_at(const GridFunction& f, const JumpMeasure& jumps, double x) {
    double s = 0.0;
    for (const auto& a : jumps.atoms()) s += a.p * f(x * a.z);
    return s;
}

GridFunction apply_S(const GridFunction& f, const JumpMeasure& jumps) {
    const auto xs = f.grid().nodes();
    std::vector<double> out(xs.size());
    parallel_for(xs.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) out[j] = apply_S_at(f, jumps, xs[j]);
    });
    return f.with_values(std::move(out));
}

double right_derivative(const GridFunction& f, std::size_t j) {
    if (j + 1 >= f.size()) throw DomainError("no forward node for the right derivative at the last node");
    const Grid& g = f.grid();
    return (f[j + 1] - f[j]) / (g[j + 1] - g[j]);
}

ShapeReport shape_report(const GridFunction& f, double strike, double tol_shape) {
    ShapeReport r;
    const Grid& g = f.grid();
    const std::size_t n = f.size();
    r.min_right_slope = right_derivative(f, 0);
    r.max_forward_difference = f[1] - f[0];
    for (std::size_t j = 0; j < n; ++j) {
        const double h = std::max(strike - g[j], 0.0);
        const double violation = std::max(h - f[j], f[j] - strike);
        r.max_bound_violation = std::max(r.max_bound_violation, violation);
        if (j + 1 < n) {
            r.min_right_slope = std::min(r.min_right_slope, right_derivative(f, j));
            r.max_forward_difference = std::max(r.max_forward_difference, f[j + 1] - f[j]);
        }
        if (j > 0 && j + 1 < n) {
            const double ratio = (g[j + 1] - g[j]) / (g[j] - g[j - 1]);
            const double d = (f[j + 1] - f[j]) - ratio * (f[j] - f[j - 1]);
            if (j == 1 || d < r.min_second_difference) {
                r.min_second_difference = d;
                r.worst_convexity_index = j;
            }
        }
    }
    r.convex = r.min_second_difference >= -tol_shape;
    r.decreasing = r.max_forward_difference <= tol_shape;
    r.bounds_ok = r.max_bound_violation <= tol_shape;
    return r;
}

double sup_norm_difference(const GridFunction& a, const GridFunction& b) {
    if (a.size() != b.size()) throw DomainError("sup norm of functions on different grids");
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.18g", v);
    return buf;
}

void write_csv(const GridFunction& f, std::ostream& out) {
    out << "x,value\n";
    const Grid& g = f.grid();
    for (std::size_t j = 0; j < f.size(); ++j) out << format_real(g[j]) << ',' << format_real(f[j]) << '\n';
}

void write_csv(const GridFunction& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    write_csv(f, out);
}

std::pair<std::vector<double>, std::vector<double>> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "x,value") throw std::runtime_error("expected CSV header x,value");
    std::vector<double> xs, vs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("malformed CSV row: " + line);
        char* end = nullptr;
        const double x = std::strtod(line.c_str(), &end);
        const double v = std::strtod(line.c_str() + comma + 1, &end);
        xs.push_back(x);
        vs.push_back(v);
    }
    return {std::move(xs), std::move(vs)};
}

std::pair<std::vector<double>, std::vector<double>> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_csv(in);
}

}  // namespace jumpput
