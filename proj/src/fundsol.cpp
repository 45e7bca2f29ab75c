#include "jumpput/fundsol.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

#include "jumpput/errors.hpp"
#include "jumpput/gridfn.hpp"

namespace jumpput {

namespace odeint = boost::numeric::odeint;

std::pair<double, double> characteristic_roots(double sigma, double mu, double rho) {
    const double a = 0.5 * sigma * sigma;
    const double b = mu - a;
    const double disc = std::sqrt(b * b + 4.0 * a * rho);
    // Cancellation-free pairing: one root from the quadratic formula, the other from the product.
    const double q = -0.5 * (b + std::copysign(disc, b));
    double r1 = q / a;
    double r2 = -rho / q;
    if (b == 0.0) {
        r1 = disc / (2.0 * a);
        r2 = -r1;
    }
    return {std::min(r1, r2), std::max(r1, r2)};
}

FundamentalPair FundamentalPair::power_law(double sigma, double mu, double rho) {
    if (!(sigma > 0.0)) throw InvalidModel("volatility must be positive");
    if (!(rho > 0.0)) throw InvalidModel("kill rate alpha + lambda must be positive");
    FundamentalPair p;
    const auto [bm, bp] = characteristic_roots(sigma, mu, rho);
    p.beta_minus_ = bm;
    p.beta_plus_ = bp;
    p.mu_ = mu;
    p.rho_ = rho;
    return p;
}

FundamentalPair FundamentalPair::tabulated(std::vector<double> log_x, std::vector<double> log_psi,
                                           std::vector<double> psi_elasticity, std::vector<double> log_phi,
                                           std::vector<double> phi_elasticity, double mu, double rho) {
    const auto n = log_x.size();
    if (n < 2 || log_psi.size() != n || psi_elasticity.size() != n || log_phi.size() != n || phi_elasticity.size() != n) {
        throw ConstructionFailure("fundamental pair table has inconsistent sizes");
    }
    auto table = std::make_shared<Table>();
    table->t = std::move(log_x);
    table->lpsi = std::move(log_psi);
    table->qpsi = std::move(psi_elasticity);
    table->lphi = std::move(log_phi);
    table->qphi = std::move(phi_elasticity);
    FundamentalPair p;
    p.table_ = std::move(table);
    p.mu_ = mu;
    p.rho_ = rho;
    return p;
}

FundamentalPair::LogEval FundamentalPair::hermite(const std::vector<double>& l, const std::vector<double>& q,
                                                  double t) const {
    const auto& ts = table_->t;
    if (t <= ts.front()) return {l.front() + q.front() * (t - ts.front()), q.front()};
    if (t >= ts.back()) return {l.back() + q.back() * (t - ts.back()), q.back()};
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const auto j = static_cast<std::size_t>(it - ts.begin()) - 1;
    const double d = ts[j + 1] - ts[j];
    const double s = (t - ts[j]) / d;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double value = (2 * s3 - 3 * s2 + 1) * l[j] + (s3 - 2 * s2 + s) * d * q[j] + (-2 * s3 + 3 * s2) * l[j + 1] +
                         (s3 - s2) * d * q[j + 1];
    const double slope = ((6 * s2 - 6 * s) * (l[j] - l[j + 1])) / d + (3 * s2 - 4 * s + 1) * q[j] +
                         (3 * s2 - 2 * s) * q[j + 1];
    return {value, slope};
}

FundamentalPair::LogEval FundamentalPair::eval_psi(double x) const {
    if (!(x > 0.0)) throw DomainError("fundamental solution evaluated at non-positive price");
    const double t = std::log(x);
    if (!table_) return {log_c_psi_ + beta_plus_ * t, beta_plus_};
    auto e = hermite(table_->lpsi, table_->qpsi, t);
    e.value += log_c_psi_;
    return e;
}

FundamentalPair::LogEval FundamentalPair::eval_phi(double x) const {
    if (!(x > 0.0)) throw DomainError("fundamental solution evaluated at non-positive price");
    const double t = std::log(x);
    if (!table_) return {log_c_phi_ + beta_minus_ * t, beta_minus_};
    auto e = hermite(table_->lphi, table_->qphi, t);
    e.value += log_c_phi_;
    return e;
}

double FundamentalPair::log_psi(double x) const { return eval_psi(x).value; }
double FundamentalPair::log_phi(double x) const { return eval_phi(x).value; }
double FundamentalPair::psi(double x) const { return std::exp(eval_psi(x).value); }
double FundamentalPair::phi(double x) const { return std::exp(eval_phi(x).value); }
double FundamentalPair::psi_elasticity(double x) const { return eval_psi(x).slope; }
double FundamentalPair::phi_elasticity(double x) const { return eval_phi(x).slope; }

double FundamentalPair::dpsi(double x) const {
    const auto e = eval_psi(x);
    return std::exp(e.value) * e.slope / x;
}

double FundamentalPair::dphi(double x) const {
    const auto e = eval_phi(x);
    return std::exp(e.value) * e.slope / x;
}

double FundamentalPair::wronskian(double x) const {
    const auto a = eval_psi(x);
    const auto b = eval_phi(x);
    return std::exp(a.value + b.value) * (a.slope - b.slope) / x;
}

FundamentalPair FundamentalPair::rescaled(double c_psi, double c_phi) const {
    if (!(c_psi > 0.0) || !(c_phi > 0.0)) throw DomainError("fundamental solutions rescale by positive constants only");
    FundamentalPair p = *this;
    p.log_c_psi_ += std::log(c_psi);
    p.log_c_phi_ += std::log(c_phi);
    return p;
}

FundamentalPair gbm_pair(double sigma, double mu, double rho) { return FundamentalPair::power_law(sigma, mu, rho); }

namespace {

using State = std::array<double, 2>;

// u'' = (1 - 2 mu / sigma^2) u' + (2 rho / sigma^2) u in t = log x.
struct LogPriceOde {
    const VolatilityModel& vol;
    double mu;
    double rho;

    void operator()(const State& u, State& du, double t) const {
        const double s = vol(std::exp(t));
        const double s2 = s * s;
        du[0] = u[1];
        du[1] = (1.0 - 2.0 * mu / s2) * u[1] + (2.0 * rho / s2) * u[0];
    }
};

struct Shot {
    std::vector<double> log_value;
    std::vector<double> elasticity;
};

Shot shoot(const LogPriceOde& ode, std::span<const double> ts, double seed_elasticity, bool forward,
           const NumericPairOptions& opts) {
    const std::size_t n = ts.size();
    Shot out;
    out.log_value.assign(n, 0.0);
    out.elasticity.assign(n, 0.0);

    auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(opts.abs_tol, opts.rel_tol);
    State u{1.0, seed_elasticity};
    double log_scale = 0.0;

    auto record = [&](std::size_t j) {
        if (!(u[0] > 0.0) || !std::isfinite(u[0]) || !std::isfinite(u[1])) {
            throw ConstructionFailure("fundamental solution lost positivity at node " + std::to_string(j));
        }
        out.log_value[j] = log_scale + std::log(u[0]);
        out.elasticity[j] = u[1] / u[0];
        if (u[0] > 10.0 || u[0] < 0.1) {
            log_scale += std::log(u[0]);
            u[1] /= u[0];
            u[0] = 1.0;
        }
    };

    const std::size_t start = forward ? 0 : n - 1;
    record(start);
    for (std::size_t k = 1; k < n; ++k) {
        const std::size_t from = forward ? k - 1 : n - k;
        const std::size_t to = forward ? k : n - 1 - k;
        const double dt = ts[to] - ts[from];
        odeint::integrate_adaptive(stepper, ode, u, ts[from], ts[to], 0.25 * dt);
        record(to);
    }
    return out;
}

}  // namespace

FundamentalPair numeric_pair(const VolatilityModel& vol, double mu, double rho, const Grid& grid,
                             const NumericPairOptions& opts) {
    if (!(rho > 0.0)) throw InvalidModel("kill rate alpha + lambda must be positive");
    const auto ts = grid.log_nodes();
    for (double x : grid.nodes()) {
        const double s = vol(x);
        if (!(s > 0.0) || !std::isfinite(s)) throw InvalidModel("volatility not positive and finite on the grid");
    }
    const LogPriceOde ode{vol, mu, rho};
    const auto seed_lo = characteristic_roots(vol(grid.x_min()), mu, rho);
    const auto seed_hi = characteristic_roots(vol(grid.x_max()), mu, rho);
    Shot up = shoot(ode, ts, seed_lo.second, true, opts);
    Shot down = shoot(ode, ts, seed_hi.first, false, opts);

    for (std::size_t j = 0; j < ts.size(); ++j) {
        if (!(up.elasticity[j] > 0.0)) throw ConstructionFailure("psi is not increasing on the grid");
        if (!(down.elasticity[j] < 0.0)) throw ConstructionFailure("phi is not decreasing on the grid");
    }

    auto pair = FundamentalPair::tabulated(std::vector<double>(ts.begin(), ts.end()), up.log_value, up.elasticity,
                                           down.log_value, down.elasticity, mu, rho);
    return pair.rescaled(std::exp(-pair.log_psi(opts.normalize_at)), std::exp(-pair.log_phi(opts.normalize_at)));
}

std::string to_string(ZeroMode mode) {
    switch (mode) {
        case ZeroMode::ExitLike:
            return "exit-like";
        case ZeroMode::NaturalLike:
            return "natural-like";
        case ZeroMode::Unclassified:
            break;
    }
    return "unclassified";
}

BoundaryBehavior boundary_behavior_check(const FundamentalPair& pair, const Grid& grid, double strike) {
    constexpr double kFlatElasticity = 0.1;
    BoundaryBehavior b;
    const double lo = grid.x_min();
    const double hi = grid.x_max();

    b.phi_ratio_at_max = std::exp(pair.log_phi(hi) - pair.log_phi(strike));
    const bool psi_grows = pair.log_psi(hi) > pair.log_psi(strike);
    b.infinity_natural = psi_grows && b.phi_ratio_at_max < 1e-6;

    b.psi_ratio_at_min = std::exp(pair.log_psi(lo) - pair.log_psi(strike));
    b.phi_elasticity_at_min = pair.phi_elasticity(lo);
    const double probe = std::min(10.0 * lo, strike);
    b.psi_over_w_ratio = (pair.dpsi(lo) / pair.wronskian(lo)) / (pair.dpsi(probe) / pair.wronskian(probe));

    const bool psi_vanishes = b.psi_ratio_at_min < 1.0 && pair.psi_elasticity(lo) > 0.0;
    if (psi_vanishes && b.phi_elasticity_at_min < -kFlatElasticity && b.psi_over_w_ratio < 0.5) {
        b.zero_mode = ZeroMode::NaturalLike;
    } else if (psi_vanishes && b.phi_elasticity_at_min >= -kFlatElasticity && b.psi_over_w_ratio >= 0.5 &&
               b.psi_over_w_ratio <= 2.0) {
        b.zero_mode = ZeroMode::ExitLike;
    }
    return b;
}

double max_ode_residual(const FundamentalPair& pair, const VolatilityModel& vol, const Grid& grid) {
    const auto xs = grid.nodes();
    const auto ts = grid.log_nodes();
    const std::size_t n = xs.size();
    std::vector<double> qpsi(n), qphi(n);
    for (std::size_t j = 0; j < n; ++j) {
        qpsi[j] = pair.psi_elasticity(xs[j]);
        qphi[j] = pair.phi_elasticity(xs[j]);
    }
    const double mu = pair.mu();
    const double rho = pair.kill_rate();
    double worst = 0.0;
    for (std::size_t j = 3; j + 3 < n; ++j) {
        const double h = (ts[j + 3] - ts[j - 3]) / 6.0;
        const double s = vol(xs[j]);
        const double a = 0.5 * s * s;
        for (const auto* q : {&qpsi, &qphi}) {
            const auto& v = *q;
            // Sixth-order central difference of the log-derivative.
            const double dq = (-v[j - 3] + 9 * v[j - 2] - 45 * v[j - 1] + 45 * v[j + 1] - 9 * v[j + 2] + v[j + 3]) / (60 * h);
            // (1/u) (1/2 s^2 x^2 u'' + mu x u' - rho u) with x u' = q u, x^2 u'' = (dq + q^2 - q) u.
            const double res = a * (dq + v[j] * v[j] - v[j]) + mu * v[j] - rho;
            worst = std::max(worst, std::abs(res) / (1.0 + std::abs(v[j])));
        }
    }
    return worst;
}

std::vector<double> scaled_wronskian(const FundamentalPair& pair, const VolatilityModel& vol, const Grid& grid) {
    const auto xs = grid.nodes();
    const auto ts = grid.log_nodes();
    const double mu = pair.mu();
    auto integrand = [&](double t) {
        const double s = vol(std::exp(t));
        return 2.0 * mu / (s * s);
    };
    std::vector<double> out(xs.size());
    double integral = 0.0;
    const double log_w0 = std::log(pair.wronskian(xs[0]));
    for (std::size_t j = 0; j < xs.size(); ++j) {
        if (j > 0) {
            const double a = ts[j - 1];
            const double b = ts[j];
            integral += (b - a) / 6.0 * (integrand(a) + 4.0 * integrand(0.5 * (a + b)) + integrand(b));
        }
        out[j] = std::exp(std::log(pair.wronskian(xs[j])) - log_w0 + integral);
    }
    return out;
}

void write_pair_csv(const FundamentalPair& pair, const Grid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "x,psi,psi_prime,phi,phi_prime,W\n";
    for (double x : grid.nodes()) {
        out << format_real(x) << ',' << format_real(pair.psi(x)) << ',' << format_real(pair.dpsi(x)) << ','
            << format_real(pair.phi(x)) << ',' << format_real(pair.dphi(x)) << ',' << format_real(pair.wronskian(x))
            << '\n';
    }
}

}  // namespace jumpput
