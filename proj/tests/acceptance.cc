#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "jumpput/fundsol.hpp"
#include "jumpput/gridfn.hpp"
#include "jumpput/mc.hpp"
#include "jumpput/model.hpp"
#include "jumpput/operator.hpp"
#include "jumpput/solver.hpp"

using namespace jumpput;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

MarketModel gbm_model() {
    return MarketModel{VolatilityModel::constant(0.2), 0.05, 0.05, 0.0, JumpMeasure::identity(), 1.0};
}

MarketModel jump_model() {
    return MarketModel{VolatilityModel::constant(0.2), 0.05, 0.05, 0.1, JumpMeasure::lognormal(-0.08, 0.4), 1.0};
}

// Shared state for the criteria built on the jump-model run.
struct JumpRun {
    Grid grid = Grid::default_for(1.0, 2000);
    OperatorContext ctx = make_context(jump_model(), grid);
    std::vector<double> boundaries;
    std::vector<ShapeReport> shapes;
    Solution sol;

    JumpRun() : sol(run()) {}

    Solution run() {
        SolverOptions opts;
        opts.observer = [this](std::size_t, const GridFunction& next, double l) {
            boundaries.push_back(l);
            shapes.push_back(shape_report(next, 1.0, 1e-7));
        };
        return solve(ctx, opts);
    }
};

JumpRun& jump_run() {
    static JumpRun run;
    return run;
}

Outcome criterion1() {
    const auto t0 = Clock::now();
    const Grid grid = Grid::default_for(1.0, 2000);
    const Solution sol = solve(gbm_model(), grid);
    const double elapsed = seconds_since(t0);
    const double ls = 5.0 / 7.0;
    const double beta = gbm_pair(0.2, 0.05, 0.05).beta_minus();
    double rel = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double x = grid[j];
        if (x < 0.5 || x > 2.0) continue;
        const double exact = x <= ls ? 1.0 - x : (1.0 - ls) * std::pow(x / ls, beta);
        rel = std::max(rel, std::abs(sol.v[j] - exact) / exact);
    }
    const double dl = std::abs(sol.boundary() - ls);
    return {dl <= 1e-3 && rel <= 2e-3 && elapsed <= 10.0,
            fmt("|l - 5/7| = %.2e, rel err on [0.5,2] = %.2e, %.2f s", dl, rel, elapsed)};
}

Outcome criterion2() {
    const auto t0 = Clock::now();
    double pair_err = 0.0;
    double wr_err = 0.0;
    for (const double rho : {0.05, 0.15}) {
        const Grid grid = Grid::default_for(1.0, 2000);
        const auto vol = VolatilityModel::constant(0.2);
        const FundamentalPair num = numeric_pair(vol, 0.05, rho, grid);
        const FundamentalPair ref = gbm_pair(0.2, 0.05, rho);
        const double cpsi = 1.0 / ref.psi(1.0);
        const double cphi = 1.0 / ref.phi(1.0);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double x = grid[j];
            if (x < 0.1 - 1e-12 || x > 10.0 + 1e-12) continue;
            pair_err = std::max(pair_err, std::abs(num.psi(x) / (cpsi * ref.psi(x)) - 1.0));
            pair_err = std::max(pair_err, std::abs(num.phi(x) / (cphi * ref.phi(x)) - 1.0));
        }
        const auto sw = scaled_wronskian(num, vol, grid);
        const auto [lo, hi] = std::minmax_element(sw.begin(), sw.end());
        wr_err = std::max(wr_err, (*hi - *lo) / std::abs(*lo));
    }
    const double elapsed = seconds_since(t0) / 2.0;
    return {pair_err <= 1e-6 && wr_err <= 1e-6 && elapsed <= 5.0,
            fmt("max rel pair err = %.2e, scaled Wronskian spread = %.2e, %.2f s per pair", pair_err, wr_err, elapsed)};
}

Outcome criterion3() {
    const auto& run = jump_run();
    const auto& d = run.sol.sup_norm_deltas;
    const double q = 0.1 / 0.15;
    double worst = 0.0;
    bool rate_ok = true;
    for (std::size_t n = 0; n < d.size(); ++n) {
        const double bound = std::pow(q, static_cast<double>(n));
        worst = std::max(worst, d[n] / bound);
        if (d[n] > bound) rate_ok = false;
    }
    const std::size_t cap = a_priori_iterations(0.1, 0.05, 1e-6, 1.0);
    const bool count_ok = run.sol.n_iter <= cap && run.sol.n_iter <= 34;
    return {rate_ok && count_ok,
            fmt("n_iter = %zu (a priori %zu, literal 34), max delta_n / (2/3)^n = %.3f", run.sol.n_iter, cap, worst)};
}

Outcome criterion4() {
    const auto& run = jump_run();
    bool ok = !run.shapes.empty();
    double min_second = 0.0;
    double min_slope = 0.0;
    double max_fwd = -1.0;
    for (const auto& s : run.shapes) {
        ok = ok && s.convex && s.decreasing && s.bounds_ok && s.min_right_slope >= -1.0 - 1e-7;
        min_second = std::min(min_second, s.min_second_difference);
        min_slope = std::min(min_slope, s.min_right_slope);
        max_fwd = std::max(max_fwd, s.max_forward_difference);
    }
    // Required: l_{n+1} >= l_n. Record the largest drop so a failure shows its size and direction.
    double largest_drop = 0.0;
    std::size_t drops = 0;
    for (std::size_t i = 1; i < run.boundaries.size(); ++i) {
        const double step = run.boundaries[i] - run.boundaries[i - 1];
        if (step < 0.0) {
            ++drops;
            largest_drop = std::max(largest_drop, -step);
        }
    }
    const double l = run.sol.boundary();
    const bool shapes_ok = ok;
    ok = ok && drops == 0 && l > 0.0 && l < 1.0;
    return {ok, fmt("%zu iterates, shapes %s (min second diff = %.2e, min slope = %.7f, max forward diff = %.2e); "
                    "l_n nondecreasing: %s (%zu of %zu steps decrease, largest drop %.2e, l_0 = %.6f -> l = %.8f)",
                    run.shapes.size(), shapes_ok ? "ok" : "violated", min_second, min_slope, max_fwd,
                    drops == 0 ? "yes" : "no", drops, run.boundaries.size() - 1, largest_drop, run.boundaries.front(), l)};
}

Outcome criterion5() {
    const auto& run = jump_run();
    const auto& diag = run.sol.diagnostics;
    const QviReport q = qvi_report(run.sol, run.ctx, 50.0);
    const double pde_tol = 1e-4 * 0.15 * 1.0;
    const double fit = std::max(diag.smooth_fit_gap, q.smooth_fit_gap);
    const double pde = std::max(diag.max_pde_residual_continuation, q.max_continuation_residual);
    const double vi = std::max(diag.max_vi_violation_stopping, q.max_vi);
    const double premium = std::min(diag.min_continuation_premium, q.min_premium);
    return {fit <= 1e-3 && pde <= pde_tol && vi <= 1e-4 && premium > 0.0,
            fmt("fit gap = %.2e, PDE residual = %.2e (tol %.1e), VI = %.3e, min premium = %.2e", fit, pde, pde_tol, vi,
                premium)};
}

Outcome criterion6() {
    const auto& run = jump_run();
    const auto t0 = Clock::now();
    McSettings s;
    s.n_paths = 1000000;
    s.dt = 1e-3;
    s.t_max = 200.0 / 0.05;
    s.n_sigma = 3.0;
    s.allowance = 2e-3;
    const auto rep = validate_solution(run.sol, run.sol.model, {0.5, 0.8, 1.0, 1.5, 3.0}, s);
    const double elapsed = seconds_since(t0);
    std::string detail;
    bool ok = elapsed <= 300.0;
    for (const auto& p : rep.points) {
        const double gap = std::abs(p.solver_value - p.estimate.mean);
        const double tol = 3.0 * p.estimate.std_error + 2e-3;
        ok = ok && gap <= tol;
        detail += fmt("x=%.1f |dv|=%.1e/%.1e ", p.x, gap, tol);
    }
    return {ok, detail + fmt("%.0f s", elapsed)};
}

Outcome criterion7() {
    const auto& run = jump_run();
    const double l = run.sol.boundary();
    const std::vector<double> factors{0.9, 0.95, 1.0, 1.05, 1.1};
    std::vector<double> ls;
    for (const double f : factors) ls.push_back(f * l);
    McSettings s;
    s.n_paths = 1000000;
    s.t_max = 200.0 / 0.05;
    const auto est = policy_sweep(run.sol.model, 1.0, ls, s);
    std::size_t best = 0;
    for (std::size_t i = 1; i < est.size(); ++i)
        if (est[i].mean > est[best].mean) best = i;
    const auto& at = est[2];
    const double half = [](const McEstimate& e) { return 0.5 * (e.ci95.second - e.ci95.first); }(at);
    const double half_best = 0.5 * (est[best].ci95.second - est[best].ci95.first);
    const double combined = std::hypot(half, half_best);
    const double gap = est[best].mean - at.mean;
    std::string detail;
    for (std::size_t i = 0; i < est.size(); ++i) detail += fmt("%.2f:%.5f ", factors[i], est[i].mean);
    return {gap <= combined, detail + fmt("gap to max = %.2e, combined CI = %.2e", gap, combined)};
}

Outcome criterion8() {
    const Grid grid = Grid::log_spaced(1e-2, 1e2, 600, 1.0);
    const std::vector<Atom> atoms{{0.55, 0.1}, {0.8, 0.25}, {1.0, 0.3}, {1.3, 0.2}, {2.4, 0.15}};
    const JumpMeasure nu = JumpMeasure::discrete(atoms);
    const auto shared = std::make_shared<const Grid>(grid);
    const auto nodes = grid.nodes();

    // Piecewise-linear interpolation held constant outside the grid.
    auto brute = [&](const std::vector<double>& f, double x) {
        double total = 0.0;
        for (const auto& a : atoms) {
            const double y = x * a.z;
            double fy;
            if (y <= nodes.front()) {
                fy = f.front();
            } else if (y >= nodes.back()) {
                fy = f.back();
            } else {
                const auto it = std::upper_bound(nodes.begin(), nodes.end(), y);
                const std::size_t k = static_cast<std::size_t>(it - nodes.begin());
                const double w = (y - nodes[k - 1]) / (nodes[k] - nodes[k - 1]);
                fy = f[k - 1] + w * (f[k] - f[k - 1]);
            }
            total += a.p * fy;
        }
        return total;
    };

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto random_convex = [&] {
        std::vector<double> f(grid.size(), unif(rng));
        for (int k = 0; k < 6; ++k) {
            const double c = unif(rng);
            const double knot = std::exp(std::log(0.05) + unif(rng) * std::log(40.0 / 0.05));
            for (std::size_t j = 0; j < grid.size(); ++j) f[j] += c * std::max(knot - grid[j], 0.0);
        }
        return f;
    };

    double oracle_err = 0.0;
    double linear_err = 0.0;
    double monotone_violation = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto f = random_convex();
        auto g = random_convex();
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += f[j];
        const GridFunction F(shared, f);
        const GridFunction G(shared, g);
        const auto sf = apply_S(F, nu);
        const auto sg = apply_S(G, nu);
        const double a = unif(rng) * 4.0 - 2.0;
        const double b = unif(rng) * 4.0 - 2.0;
        std::vector<double> comb(f.size());
        for (std::size_t j = 0; j < f.size(); ++j) comb[j] = a * f[j] + b * g[j];
        const auto sc = apply_S(GridFunction(shared, comb), nu);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            oracle_err = std::max(oracle_err, std::abs(sf[j] - brute(f, grid[j])));
            linear_err = std::max(linear_err, std::abs(sc[j] - (a * sf[j] + b * sg[j])));
            monotone_violation = std::max(monotone_violation, sf[j] - sg[j]);
        }
    }
    return {oracle_err <= 1e-12 && linear_err <= 1e-12 && monotone_violation <= 0.0,
            fmt("100 functions, brute-force err = %.1e, linearity err = %.1e, monotonicity violation = %.1e", oracle_err,
                linear_err, monotone_violation)};
}

Outcome criterion9() {
    auto check = [](const MarketModel& model, const OperatorContext& ctx, const Solution& sol) {
        const auto sv = apply_S(sol.v, model.jumps);
        double worst = -INFINITY;
        const Grid& g = ctx.grid();
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (g[j] >= model.strike) break;
            worst = std::max(worst, model.lambda * sv[j] + F_payoff(ctx, g[j]));
        }
        return worst;
    };
    const auto& run = jump_run();
    const double w1 = check(run.sol.model, run.ctx, run.sol);

    MarketModel down = jump_model();
    down.jumps = JumpMeasure::lognormal(-0.2, 0.3);
    const OperatorContext ctx2 = make_context(down, run.grid);
    const Solution sol2 = solve(ctx2);
    const double w2 = check(down, ctx2, sol2);
    return {w1 <= 0.0 && w2 <= 0.0,
            fmt("max lambda Sv + F on (0,K): xi=%.4f -> %.3e, xi=%.4f -> %.3e", run.sol.model.xi(), w1, down.xi(), w2)};
}

Outcome criterion10() {
    const auto& run = jump_run();
    const Grid fine = Grid::default_for(1.0, 4000);
    const Solution s4 = solve(jump_model(), fine);
    const double dl = std::abs(s4.boundary() - run.sol.boundary());
    double dv = 0.0;
    for (std::size_t j = 0; j < run.grid.size(); ++j) dv = std::max(dv, std::abs(s4.v(run.grid[j]) - run.sol.v[j]));
    for (std::size_t j = 0; j < fine.size(); ++j) dv = std::max(dv, std::abs(s4.v[j] - run.sol.v(fine[j])));
    return {dl <= 5e-4 && dv <= 5e-4, fmt("|dl| = %.2e, sup |dv| = %.2e", dl, dv)};
}

}  // namespace

int main() {
    const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                         criterion6, criterion7, criterion8, criterion9, criterion10};
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("criterion %2zu: %s  %s\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
