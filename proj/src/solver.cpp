#include "jumpput/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "jumpput/errors.hpp"

namespace jumpput {

std::size_t a_priori_iterations(double lambda, double alpha, double eps, double strike) {
    if (!(alpha > 0.0) || !(lambda >= 0.0) || !(eps > 0.0) || !(strike > 0.0)) {
        throw DomainError("a_priori_iterations needs alpha > 0, lambda >= 0, eps > 0, K > 0");
    }
    if (lambda == 0.0) return 1;
    const double q = lambda / (lambda + alpha);
    std::size_t n = 1;
    while (std::pow(q, static_cast<double>(n)) * strike > eps) ++n;
    return n;
}

std::shared_ptr<const FundamentalPair> make_pair(const MarketModel& model, const Grid& grid, bool force_numeric) {
    model.validate();
    const double mu = model.mu();
    const double rho = model.kill_rate();
    if (model.vol.kind() == VolatilityModel::Kind::Constant && !force_numeric) {
        return std::make_shared<const FundamentalPair>(gbm_pair(model.vol.sigma(), mu, rho));
    }
    NumericPairOptions opts;
    opts.normalize_at = model.strike;
    return std::make_shared<const FundamentalPair>(numeric_pair(model.vol, mu, rho, grid, opts));
}

OperatorContext make_context(const MarketModel& model, const Grid& grid, bool force_numeric) {
    auto g = std::make_shared<const Grid>(grid);
    return OperatorContext(model, make_pair(model, grid, force_numeric), g);
}

namespace {

void check_iterate_shape(const OperatorContext& ctx, const GridFunction& v, std::size_t index, const Tolerances& tol) {
    const double k = ctx.strike();
    const double eps = tol.shape * k;
    const auto r = shape_report(v, k, eps);
    std::ostringstream why;
    if (!r.convex) why << "convexity lost (second difference " << r.min_second_difference << " at node "
                       << r.worst_convexity_index << ")";
    else if (!r.decreasing) why << "monotonicity lost (forward difference " << r.max_forward_difference << ")";
    else if (!r.bounds_ok) why << "bounds h <= v <= K violated by " << r.max_bound_violation;
    else if (r.min_right_slope < -1.0 - eps) why << "right derivative " << r.min_right_slope << " below -1";
    if (!why.str().empty()) throw SolverError(index, why.str() + "; the grid is likely too coarse");
}

double min_premium_beyond(const OperatorContext& ctx, const GridFunction& v, double l, double* where) {
    const Grid& g = ctx.grid();
    const double k = ctx.strike();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = g.locate(l) + 2; j < g.size(); ++j) {
        const double p = v[j] - std::max(k - g[j], 0.0);
        if (p < best) {
            best = p;
            if (where) *where = g[j];
        }
    }
    return best;
}

}  // namespace

Solution solve(const OperatorContext& ctx, const SolverOptions& opts) {
    const MarketModel& model = ctx.model();
    const double k = ctx.strike();
    const std::size_t cap = a_priori_iterations(model.lambda, model.alpha, opts.epsilon, k);
    const double upper = std::min(opts.residual_upper.value_or(50.0 * k), ctx.grid().x_max());

    GridFunction v = ctx.payoff();
    std::vector<double> boundaries;
    std::vector<double> deltas;
    std::optional<SourceTerm> last_src;
    bool previous_small = false;

    for (std::size_t n = 0;; ++n) {
        SourceTerm src(ctx, v);
        double l = 0.0;
        try {
            l = find_boundary(ctx, src, opts.tol);
        } catch (const std::runtime_error& e) {
            throw SolverError(n, e.what());
        }
        GridFunction next = apply_R_l(ctx, src, l);
        check_iterate_shape(ctx, next, n + 1, opts.tol);
        const double delta = sup_norm_difference(next, v);
        boundaries.push_back(l);
        deltas.push_back(delta);
        if (opts.observer) opts.observer(n, next, l);
        v = std::move(next);
        last_src.emplace(std::move(src));

        if (model.lambda == 0.0) break;
        if (n + 1 >= cap) break;
        const bool small = delta <= opts.epsilon;
        if (small && previous_small) break;
        previous_small = small;
    }

    const double l = boundaries.back();
    Diagnostics d;
    d.smooth_fit_gap = std::abs(boundary_right_derivative(ctx, *last_src, l) + 1.0);
    const SourceTerm final_src(ctx, v);
    const auto pde = continuation_residual(ctx, v, final_src.Sf(), l, upper);
    d.max_pde_residual_continuation = pde.max_value;
    d.pde_residual_location = pde.location;
    d.max_vi_violation_stopping = stopping_inequality(ctx, final_src.Sf(), l).max_value;
    d.min_continuation_premium = min_premium_beyond(ctx, v, l, nullptr);
    d.shape = shape_report(v, k, opts.tol.shape * k);
    if (model.lambda == 0.0) {
        d.fixed_point_residual = 0.0;
    } else {
        try {
            const auto [rv, rl] = apply_R(ctx, final_src, opts.tol);
            (void)rl;
            d.fixed_point_residual = sup_norm_difference(rv, v);
        } catch (const std::runtime_error& e) {
            throw SolverError(boundaries.size(), e.what());
        }
    }

    return Solution{model, std::move(v), std::move(boundaries), deltas.size(), std::move(deltas), d};
}

Solution solve(const MarketModel& model, const Grid& grid, const SolverOptions& opts) {
    const auto ctx = make_context(model, grid, opts.force_numeric_pair);
    return solve(ctx, opts);
}

QviReport qvi_report(const Solution& sol, const OperatorContext& ctx, std::optional<double> upper) {
    const Grid& g = ctx.grid();
    const auto xs = g.nodes();
    const GridFunction& v = sol.v;
    const double k = ctx.strike();
    const double l = sol.boundary();
    const double top = std::min(upper.value_or(50.0 * k), g.x_max());
    const double mu = ctx.mu();
    const double rho = ctx.kill_rate();
    const double lam = ctx.lambda();
    const auto sv = apply_S(v, ctx.model().jumps);
    QviReport rep;

    // One-sided quadratic through (l, K - l), (x_a, v_a), (x_b, v_b).
    {
        const std::size_t a = g.locate(l) + 1;
        const double x0 = l, x1 = xs[a], x2 = xs[a + 1];
        const double f0 = k - l, f1 = v[a], f2 = v[a + 1];
        const double h1 = x1 - x0, h2 = x2 - x0;
        const double slope = (f1 - f0) * h2 / (h1 * (h2 - h1)) - (f2 - f0) * h1 / (h2 * (h2 - h1));
        rep.smooth_fit_gap = std::abs(slope + 1.0);
    }

    for (std::size_t j = 1; j + 1 < xs.size(); ++j) {
        const double x = xs[j];
        if (xs[j - 1] > l && xs[j + 1] <= top) {
            const double hm = x - xs[j - 1];
            const double hp = xs[j + 1] - x;
            const double dp = (v[j + 1] - v[j]) / hp;
            const double dm = (v[j] - v[j - 1]) / hm;
            const double first = (hm * dp + hp * dm) / (hm + hp);
            const double second = 2.0 * (dp - dm) / (hm + hp);
            const double s = ctx.model().vol(x);
            const double res = 0.5 * s * s * x * x * second + mu * x * first - rho * v[j] + lam * sv[j];
            ++rep.continuation_nodes;
            if (std::abs(res) > rep.max_continuation_residual) {
                rep.max_continuation_residual = std::abs(res);
                rep.continuation_location = x;
            }
        }
    }

    rep.max_vi = -std::numeric_limits<double>::infinity();
    bool any_vi = false;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        const double x = xs[j];
        if (x <= l) rep.stopping_mismatch = std::max(rep.stopping_mismatch, std::abs(v[j] - (k - x)));
        if (x > ctx.search_floor() && x < l) {
            const double val = -mu * x - rho * (k - x) + lam * sv[j];
            any_vi = true;
            if (val > rep.max_vi) {
                rep.max_vi = val;
                rep.vi_location = x;
            }
        }
    }
    if (!any_vi) rep.max_vi = 0.0;
    rep.min_premium = min_premium_beyond(ctx, v, l, &rep.premium_location);
    return rep;
}

}  // namespace jumpput
