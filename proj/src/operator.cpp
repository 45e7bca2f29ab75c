#include "jumpput/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "jumpput/errors.hpp"

namespace jumpput {

namespace {

// Neumaier-compensated running sum; fixed order, so results are reproducible.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double trapezoid(double t0, double t1, double q0, double q1) { return 0.5 * (t1 - t0) * (q0 + q1); }

struct PointData {
    double x;
    double t;
    double psi;
    double phi;
    double weight;
};

PointData point_data(const OperatorContext& ctx, double x) {
    return {x, std::log(x), ctx.pair().psi(x), ctx.pair().phi(x), ctx.green_weight_at(x)};
}

void require_in_grid(const OperatorContext& ctx, double x, const char* what) {
    if (!(x >= ctx.grid().x_min()) || !(x <= ctx.grid().x_max())) {
        std::ostringstream msg;
        msg << what << " " << x << " outside grid [" << ctx.grid().x_min() << ", " << ctx.grid().x_max() << "]";
        throw DomainError(msg.str());
    }
}

// Integrals anchored at an off-grid lower limit l in cell j (x_j <= l < x_{j+1}).
struct LowerLimit {
    std::size_t cell;
    PointData at;
    double sf;
    double phi_tail;     // int_l^{x_max} w phi lambda S f
    double psi_partial;  // int_l^{x_{j+1}} w psi lambda S f
};

LowerLimit lower_limit(const OperatorContext& ctx, const SourceTerm& src, double l) {
    const Grid& g = ctx.grid();
    const auto ts = g.log_nodes();
    const std::size_t j = g.locate(l);
    const PointData p = point_data(ctx, l);
    const double lam = ctx.lambda();
    const double sf = lam > 0.0 ? src.Sf_at(l) : 0.0;
    const double q_phi = p.weight * p.phi * lam * sf * l;
    const double q_psi = p.weight * p.psi * lam * sf * l;
    const std::size_t k = j + 1;
    const double xk = g[k];
    const double q_phi_k = ctx.green_weight()[k] * ctx.phi()[k] * lam * src.Sf()[k] * xk;
    const double q_psi_k = ctx.green_weight()[k] * ctx.psi()[k] * lam * src.Sf()[k] * xk;
    LowerLimit out{j, p, sf, 0.0, 0.0};
    out.phi_tail = src.phi_integral_from(k) + trapezoid(p.t, ts[k], q_phi, q_phi_k);
    out.psi_partial = trapezoid(p.t, ts[k], q_psi, q_psi_k);
    return out;
}

void check_boundary_range(const OperatorContext& ctx, double l) {
    if (!(l > 0.0) || !(l < ctx.strike())) throw DomainError("boundary must lie in (0, K)");
    require_in_grid(ctx, l, "boundary");
}

}  // namespace

OperatorContext::OperatorContext(MarketModel model, std::shared_ptr<const FundamentalPair> pair,
                                 std::shared_ptr<const Grid> grid)
    : model_(std::move(model)), pair_(std::move(pair)), grid_(std::move(grid)) {
    if (!pair_ || !grid_) throw DomainError("operator context needs a fundamental pair and a grid");
    model_.validate();
    mu_ = model_.mu();
    rho_ = model_.kill_rate();
    if (std::abs(pair_->kill_rate() - rho_) > 1e-12 * rho_) {
        throw InvalidModel("fundamental pair kill rate differs from alpha + lambda");
    }
    if (std::abs(pair_->mu() - mu_) > 1e-12 * std::max(1.0, std::abs(mu_))) {
        throw InvalidModel("fundamental pair drift differs from r + lambda - lambda xi");
    }
    const auto k_index = grid_->strike_index();
    if (!k_index || (*grid_)[*k_index] != model_.strike) throw DomainError("grid must contain the strike as a node");

    const std::size_t n = grid_->size();
    psi_.resize(n);
    phi_.resize(n);
    weight_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = (*grid_)[j];
        psi_[j] = pair_->psi(x);
        phi_[j] = pair_->phi(x);
        weight_[j] = green_weight_at(x);
        if (!(psi_[j] > 0.0) || !(phi_[j] > 0.0) || !std::isfinite(psi_[j]) || !std::isfinite(phi_[j])) {
            throw ConstructionFailure("fundamental solutions not positive and finite at node " + std::to_string(j));
        }
        if (!(weight_[j] > 0.0) || !std::isfinite(weight_[j])) {
            throw ConstructionFailure("Green weight not positive and finite at node " + std::to_string(j));
        }
    }

    const auto ts = grid_->log_nodes();
    payoff_suffix_.assign(n, 0.0);
    CompensatedSum acc;
    for (std::size_t j = *k_index; j-- > 0;) {
        const double x0 = (*grid_)[j];
        const double x1 = (*grid_)[j + 1];
        const double q0 = weight_[j] * phi_[j] * F_payoff(*this, x0) * x0;
        const double q1 = weight_[j + 1] * phi_[j + 1] * F_payoff(*this, x1) * x1;
        acc.add(trapezoid(ts[j], ts[j + 1], q0, q1));
        payoff_suffix_[j] = acc.value();
    }
    kink_mass_ = pair_->phi(model_.strike) / pair_->wronskian(model_.strike);
}

double OperatorContext::green_weight_at(double x) const {
    const double s = model_.vol(x);
    return 2.0 / (x * x * s * s * pair_->wronskian(x));
}

GridFunction OperatorContext::payoff() const {
    auto h = jumpput::payoff(grid_, model_.strike);
    return make_function(std::vector<double>(h.values().begin(), h.values().end()));
}

GridFunction OperatorContext::make_function(std::vector<double> values) const {
    return GridFunction(grid_, std::move(values), Tails{model_.strike, pair_});
}

double F_payoff(const OperatorContext& ctx, double x) {
    if (!(x > 0.0)) throw DomainError("F evaluated at non-positive price");
    const double k = ctx.strike();
    if (x > k) return 0.0;
    return -ctx.mu() * x - ctx.kill_rate() * (k - x);
}

SourceTerm::SourceTerm(const OperatorContext& ctx, GridFunction f)
    : ctx_(&ctx), f_(std::move(f)), sf_(apply_S(f_, ctx.model().jumps)) {
    if (f_.size() != ctx.grid().size()) throw DomainError("test function lives on a different grid");
    const std::size_t n = f_.size();
    const auto ts = ctx.grid().log_nodes();
    const auto xs = ctx.grid().nodes();
    const double lam = ctx.lambda();
    std::vector<double> q_phi(n), q_psi(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double s = lam * sf_[j] * ctx.green_weight()[j] * xs[j];
        q_phi[j] = s * ctx.phi()[j];
        q_psi[j] = s * ctx.psi()[j];
    }
    phi_suffix_.assign(n, 0.0);
    psi_prefix_.assign(n, 0.0);
    CompensatedSum right;
    for (std::size_t j = n - 1; j-- > 0;) {
        right.add(trapezoid(ts[j], ts[j + 1], q_phi[j], q_phi[j + 1]));
        phi_suffix_[j] = right.value();
    }
    CompensatedSum left;
    for (std::size_t j = 1; j < n; ++j) {
        left.add(trapezoid(ts[j - 1], ts[j], q_psi[j - 1], q_psi[j]));
        psi_prefix_[j] = left.value();
    }
}

double SourceTerm::Sf_at(double x) const { return apply_S_at(f_, ctx_->model().jumps, x); }

double boundary_objective(const OperatorContext& ctx, const SourceTerm& src, double l) {
    if (l < ctx.search_floor() || l > ctx.grid().x_max()) {
        std::ostringstream msg;
        msg << "boundary objective evaluated at " << l << " outside [" << ctx.search_floor() << ", "
            << ctx.grid().x_max() << "]";
        throw DomainError(msg.str());
    }
    const Grid& g = ctx.grid();
    if (l >= g.x_max()) return 0.0;
    const double k = ctx.strike();
    const auto low = lower_limit(ctx, src, l);
    double value = low.phi_tail;
    if (l < k) {
        const std::size_t next = low.cell + 1;
        const double q_l = low.at.weight * low.at.phi * F_payoff(ctx, l) * l;
        const double xn = g[next];
        const double q_n = ctx.green_weight()[next] * ctx.phi()[next] * F_payoff(ctx, xn) * xn;
        value += ctx.payoff_integral_from(next) + trapezoid(low.at.t, g.log_nodes()[next], q_l, q_n);
        value += ctx.kink_mass();
    }
    return value;
}

double boundary_objective(const OperatorContext& ctx, const GridFunction& f, double l) {
    return boundary_objective(ctx, SourceTerm(ctx, f), l);
}

namespace {

void check_preconditions(const OperatorContext& ctx, const GridFunction& f, const Tolerances& tol) {
    const double k = ctx.strike();
    const double eps = tol.shape * k;
    const auto shape = shape_report(f, k, eps);
    std::ostringstream why;
    if (!shape.convex) why << "not convex (second difference " << shape.min_second_difference << "); ";
    if (!shape.decreasing) why << "not decreasing (forward difference " << shape.max_forward_difference << "); ";
    if (shape.min_right_slope < -1.0 - eps) why << "right derivative " << shape.min_right_slope << " < -1; ";
    const auto [lo, hi] = std::minmax_element(f.values().begin(), f.values().end());
    if (*lo < -eps || *hi > k + eps) why << "values outside [0, K]; ";
    if (!why.str().empty()) throw PreconditionError("boundary search precondition failed: " + why.str());
}

}  // namespace

double find_boundary(const OperatorContext& ctx, const SourceTerm& src, const Tolerances& tol) {
    check_preconditions(ctx, src.f(), tol);
    const Grid& g = ctx.grid();
    const double k = ctx.strike();
    const double floor = ctx.search_floor();
    const std::size_t m = *g.strike_index();

    // Scan points: the floor, every node strictly inside (floor, K), and K from the left.
    std::vector<double> pts{floor};
    std::vector<double> vals{boundary_objective(ctx, src, floor)};
    for (std::size_t j = g.locate(floor) + 1; j < m; ++j) {
        if (g[j] <= floor) continue;
        pts.push_back(g[j]);
        vals.push_back(src.phi_integral_from(j) + ctx.payoff_integral_from(j) + ctx.kink_mass());
    }
    pts.push_back(k);
    vals.push_back(src.phi_integral_from(m) + ctx.kink_mass());

    std::vector<std::size_t> brackets;
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        if ((vals[i] < 0.0) != (vals[i + 1] < 0.0)) brackets.push_back(i);
    }
    if (brackets.empty()) {
        std::ostringstream msg;
        msg << "no sign change of the boundary objective in (" << floor << ", " << k << "): G(floor) = " << vals.front()
            << ", G(K-) = " << vals.back() << "; the existence condition int w phi (lambda S f + F) dy < 0 fails";
        throw NoBoundary(msg.str());
    }
    if (brackets.size() > 1 || vals.front() >= 0.0) {
        std::ostringstream msg;
        msg << "boundary objective is not unimodal; sign changes in";
        for (auto i : brackets) msg << " [" << pts[i] << ", " << pts[i + 1] << "]";
        throw NoBoundary(msg.str());
    }

    double lo = pts[brackets.front()];
    double hi = pts[brackets.front() + 1];
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (boundary_objective(ctx, src, mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (hi - lo > tol.root * k) throw NoBoundary("bisection did not reach the root tolerance");
    return 0.5 * (lo + hi);
}

double find_boundary(const OperatorContext& ctx, const GridFunction& f, const Tolerances& tol) {
    return find_boundary(ctx, SourceTerm(ctx, f), tol);
}

GridFunction apply_R_l(const OperatorContext& ctx, const SourceTerm& src, double l) {
    check_boundary_range(ctx, l);
    const Grid& g = ctx.grid();
    const double k = ctx.strike();
    const auto low = lower_limit(ctx, src, l);
    const double h_l = k - l;
    const double c = (h_l - low.at.psi * low.phi_tail) / low.at.phi;
    const double base = src.psi_integral_to(low.cell + 1) - low.psi_partial;

    std::vector<double> out(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (g[j] <= l) {
            out[j] = std::max(k - g[j], 0.0);
            continue;
        }
        const double psi_part = src.psi_integral_to(j) - base;
        out[j] = ctx.psi()[j] * src.phi_integral_from(j) + ctx.phi()[j] * (psi_part + c);
    }
    return ctx.make_function(std::move(out));
}

GridFunction apply_R_l(const OperatorContext& ctx, const GridFunction& f, double l) {
    return apply_R_l(ctx, SourceTerm(ctx, f), l);
}

double boundary_right_derivative(const OperatorContext& ctx, const SourceTerm& src, double l) {
    check_boundary_range(ctx, l);
    const auto low = lower_limit(ctx, src, l);
    const double w = ctx.pair().wronskian(l);
    return (w * low.phi_tail + ctx.pair().dphi(l) * (ctx.strike() - l)) / low.at.phi;
}

std::pair<GridFunction, double> apply_R(const OperatorContext& ctx, const SourceTerm& src, const Tolerances& tol) {
    const double l = find_boundary(ctx, src, tol);
    return {apply_R_l(ctx, src, l), l};
}

std::pair<GridFunction, double> apply_R(const OperatorContext& ctx, const GridFunction& f, const Tolerances& tol) {
    return apply_R(ctx, SourceTerm(ctx, f), tol);
}

GridFunction two_barrier_R(const OperatorContext& ctx, const SourceTerm& src, double l, double upper) {
    check_boundary_range(ctx, l);
    if (!(upper > l) || upper > ctx.grid().x_max()) throw DomainError("two-barrier operator needs l < rho <= x_max");
    const Grid& g = ctx.grid();
    const auto ts = g.log_nodes();
    const double k = ctx.strike();
    const double lam = ctx.lambda();
    const auto low = lower_limit(ctx, src, l);

    // Integrals up to the upper barrier, with the barrier inserted as an exact node.
    const PointData up = point_data(ctx, upper);
    double phi_beyond = 0.0;  // int_rho^{x_max} w phi lambda S f
    double psi_to_upper = src.psi_integral_to(g.size() - 1);
    if (upper < g.x_max()) {
        const std::size_t i = g.locate(upper);
        const double sf = lam > 0.0 ? src.Sf_at(upper) : 0.0;
        const double q_phi = up.weight * up.phi * lam * sf * upper;
        const double q_psi = up.weight * up.psi * lam * sf * upper;
        const double xi = g[i];
        const double xi1 = g[i + 1];
        const double s_i = lam * src.Sf()[i] * ctx.green_weight()[i] * xi;
        const double s_i1 = lam * src.Sf()[i + 1] * ctx.green_weight()[i + 1] * xi1;
        phi_beyond = src.phi_integral_from(i + 1) + trapezoid(up.t, ts[i + 1], q_phi, s_i1 * ctx.phi()[i + 1]);
        psi_to_upper = src.psi_integral_to(i) + trapezoid(ts[i], up.t, s_i * ctx.psi()[i], q_psi);
    }

    const double a = low.at.psi / low.at.phi;
    const double b = up.phi / up.psi;
    const double denom = 1.0 - a * b;
    const double h_l = k - l;
    const double h_up = std::max(k - upper, 0.0);
    const double phibar_l = low.at.phi - b * low.at.psi;
    const double psibar_up = up.psi - a * up.phi;
    const double base = src.psi_integral_to(low.cell + 1) - low.psi_partial;

    std::vector<double> out(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double x = g[j];
        if (x <= l || x >= upper) {
            out[j] = std::max(k - x, 0.0);
            continue;
        }
        const double psi_j = ctx.psi()[j];
        const double phi_j = ctx.phi()[j];
        const double phi_up = src.phi_integral_from(j) - phi_beyond;   // int_x^rho w phi
        const double psi_upper = psi_to_upper - src.psi_integral_to(j);  // int_x^rho w psi
        const double psi_low = src.psi_integral_to(j) - base;            // int_l^x w psi
        const double phi_low = low.phi_tail - src.phi_integral_from(j);  // int_l^x w phi
        const double psibar = psi_j - a * phi_j;
        const double phibar = phi_j - b * psi_j;
        out[j] = (psibar * (phi_up - b * psi_upper) + phibar * (psi_low - a * phi_low)) / denom +
                 h_l * phibar / phibar_l + h_up * psibar / psibar_up;
    }
    return ctx.make_function(std::move(out));
}

GridFunction two_barrier_R(const OperatorContext& ctx, const GridFunction& f, double l, double upper) {
    return two_barrier_R(ctx, SourceTerm(ctx, f), l, upper);
}

ResidualScan continuation_residual(const OperatorContext& ctx, const GridFunction& g, const GridFunction& sf, double l,
                                   double upper) {
    const Grid& grid = ctx.grid();
    const auto xs = grid.nodes();
    const auto ts = grid.log_nodes();
    const double mu = ctx.mu();
    const double rho = ctx.kill_rate();
    const double lam = ctx.lambda();
    ResidualScan scan;
    for (std::size_t j = 1; j + 1 < xs.size(); ++j) {
        if (!(xs[j - 1] > l) || xs[j + 1] > upper) continue;
        const double h1 = ts[j] - ts[j - 1];
        const double h2 = ts[j + 1] - ts[j];
        const double d1 = -h2 / (h1 * (h1 + h2)) * g[j - 1] + (h2 - h1) / (h1 * h2) * g[j] +
                          h1 / (h2 * (h1 + h2)) * g[j + 1];
        const double d2 = 2.0 * (g[j - 1] / (h1 * (h1 + h2)) - g[j] / (h1 * h2) + g[j + 1] / (h2 * (h1 + h2)));
        const double s = ctx.model().vol(xs[j]);
        const double res = 0.5 * s * s * (d2 - d1) + mu * d1 - rho * g[j] + lam * sf[j];
        ++scan.nodes;
        if (std::abs(res) > scan.max_value) {
            scan.max_value = std::abs(res);
            scan.location = xs[j];
        }
    }
    return scan;
}

ResidualScan stopping_inequality(const OperatorContext& ctx, const GridFunction& sf, double l) {
    const auto xs = ctx.grid().nodes();
    const double floor = ctx.search_floor();
    ResidualScan scan;
    scan.max_value = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < xs.size(); ++j) {
        if (!(xs[j] > floor) || !(xs[j] < l)) continue;
        const double v = F_payoff(ctx, xs[j]) + ctx.lambda() * sf[j];
        ++scan.nodes;
        if (v > scan.max_value) {
            scan.max_value = v;
            scan.location = xs[j];
        }
    }
    if (scan.nodes == 0) scan.max_value = 0.0;
    return scan;
}

std::vector<std::pair<double, double>> objective_sweep(const OperatorContext& ctx, const GridFunction& f,
                                                       std::span<const double> ls) {
    const SourceTerm src(ctx, f);
    std::vector<std::pair<double, double>> out;
    out.reserve(ls.size());
    for (double l : ls) out.emplace_back(l, boundary_objective(ctx, src, l));
    return out;
}

}  // namespace jumpput
