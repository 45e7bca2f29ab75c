#include "jumpput/mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "jumpput/errors.hpp"
#include "jumpput/parallel.hpp"
#include "jumpput/solver.hpp"

namespace jumpput {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Bridge sub-intervals whose continuous crossing probability is below this are not refined.
constexpr double kLogPrune = -27.631021115928547;  // log(1e-12)

class JumpSampler {
public:
    explicit JumpSampler(const JumpMeasure& nu) : nu_(nu) {
        if (nu.kind() == JumpMeasure::Kind::Discrete) {
            double acc = 0.0;
            for (const auto& a : nu.atoms()) {
                acc += a.p;
                cdf_.push_back(acc);
            }
        }
    }

    template <class Rng>
    double log_draw(Rng& rng, boost::random::normal_distribution<double>& normal) const {
        if (nu_.kind() == JumpMeasure::Kind::Lognormal) return nu_.meanlog() + nu_.sdlog() * normal(rng);
        const double u = boost::random::uniform_01<double>()(rng) * cdf_.back();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        const std::size_t i = std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
        return std::log(nu_.atoms()[i].z);
    }

private:
    const JumpMeasure& nu_;
    std::vector<double> cdf_;
};

// Monitoring times i * dt for i <= n, plus the segment end when it is not on the dt lattice.
struct Segment {
    double dt;
    double length;
    std::size_t full;
    std::size_t last;

    Segment(double step, double len) : dt(step), length(len) {
        full = static_cast<std::size_t>(std::floor(len / step));
        const double rem = len - static_cast<double>(full) * step;
        last = rem > 1e-12 * step ? full + 1 : full;
        if (last == 0) last = 1;  // len below 1e-12 dt: a single point at the end
    }
    double time(std::size_t i) const { return i >= last ? length : std::min(static_cast<double>(i) * dt, length); }
};

struct Hit {
    std::size_t index;
    double y;
};

class ExactSegment {
public:
    ExactSegment(const Segment& seg, double sigma, double barrier, std::mt19937_64& rng,
                 boost::random::normal_distribution<double>& normal)
        : seg_(seg), var_rate_(sigma * sigma), b_(barrier), rng_(rng), normal_(normal) {}

    // Earliest monitoring index in (i0, i1] with y <= b, given y0 > b at i0 and y1 at i1.
    std::optional<Hit> first_hit(std::size_t i0, double y0, std::size_t i1, double y1) {
        if (i1 == i0 + 1) {
            if (y1 <= b_) return Hit{i1, y1};
            return std::nullopt;
        }
        const double t0 = seg_.time(i0);
        const double t1 = seg_.time(i1);
        const double span = t1 - t0;
        if (y1 > b_ && -2.0 * (y0 - b_) * (y1 - b_) / (var_rate_ * span) < kLogPrune) return std::nullopt;
        const std::size_t mid = i0 + (i1 - i0) / 2;
        const double tm = seg_.time(mid);
        const double mean = y0 + (y1 - y0) * ((tm - t0) / span);
        const double sd = std::sqrt(var_rate_ * (tm - t0) * (t1 - tm) / span);
        const double ym = mean + sd * normal_(rng_);
        if (auto left = first_hit(i0, y0, mid, ym)) return left;
        if (ym <= b_) return Hit{mid, ym};
        return first_hit(mid, ym, i1, y1);
    }

private:
    const Segment& seg_;
    double var_rate_;
    double b_;
    std::mt19937_64& rng_;
    boost::random::normal_distribution<double>& normal_;
};

Scheme check_path_arguments(const MarketModel& model, double x0, double l, double dt, double t_max, Scheme scheme) {
    if (!(x0 > 0.0)) throw DomainError("x0 must be positive");
    if (!(l > 0.0) || !(l < model.strike)) throw DomainError("threshold must lie in (0, K)");
    if (!(dt > 0.0) || !(t_max > 0.0)) throw DomainError("dt and t_max must be positive");
    if (model.lambda > 0.0 && dt >= 1.0 / (10.0 * model.lambda)) {
        throw DomainError("dt must be below 1/(10 lambda) to resolve the jump times");
    }
    const bool constant = model.vol.kind() == VolatilityModel::Kind::Constant;
    if (scheme == Scheme::Auto) return constant ? Scheme::Exact : Scheme::Euler;
    if (scheme == Scheme::Exact && !constant) throw DomainError("exact scheme needs constant volatility");
    return scheme;
}

}  // namespace

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) {
    return splitmix64(splitmix64(seed) ^ splitmix64(path + 0x632be59bd9b4e019ULL));
}

PathResult simulate_path(const MarketModel& model, double x0, double l, std::mt19937_64& rng, double dt, double t_max,
                         Scheme scheme) {
    const double k = model.strike;
    scheme = check_path_arguments(model, x0, l, dt, t_max, scheme);

    PathResult out;
    if (x0 <= l) {
        out.payoff = k - x0;
        out.exercised = true;
        return out;
    }

    const double alpha = model.alpha;
    const double mu = model.mu();
    const double b = std::log(l);
    boost::random::normal_distribution<double> normal;
    boost::random::exponential_distribution<double> waiting(model.lambda > 0.0 ? model.lambda : 1.0);
    const JumpSampler jumps(model.jumps);

    auto stop = [&](double tau, double y) {
        out.tau = tau;
        out.exercised = true;
        out.payoff = std::exp(-alpha * tau) * std::max(k - std::exp(y), 0.0);
        return out;
    };

    double t = 0.0;
    double y = std::log(x0);
    while (true) {
        const double tj = model.lambda > 0.0 ? t + waiting(rng) : std::numeric_limits<double>::infinity();
        const bool truncated = tj >= t_max;
        const double te = truncated ? t_max : tj;
        const Segment seg(dt, te - t);

        if (scheme == Scheme::Exact) {
            const double s = model.vol.sigma();
            const double y_end = y + (mu - 0.5 * s * s) * seg.length + s * std::sqrt(seg.length) * normal(rng);
            ExactSegment ex(seg, s, b, rng, normal);
            if (auto hit = ex.first_hit(0, y, seg.last, y_end)) return stop(t + seg.time(hit->index), hit->y);
            y = y_end;
        } else {
            for (std::size_t i = 1; i <= seg.last; ++i) {
                const double h = seg.time(i) - seg.time(i - 1);
                const double s = model.vol(std::exp(y));
                y += (mu - 0.5 * s * s) * h + s * std::sqrt(h) * normal(rng);
                if (y <= b) return stop(t + seg.time(i), y);
            }
        }
        t = te;
        if (truncated) {
            out.tau = t_max;
            return out;
        }
        y += jumps.log_draw(rng, normal);
        ++out.jumps;
        if (y <= b) return stop(t, y);
    }
}

double simulate_payoff(const MarketModel& model, double x0, double l, std::uint64_t seed, double dt, double t_max,
                       Scheme scheme) {
    std::mt19937_64 rng(path_seed(seed, 0));
    return simulate_path(model, x0, l, rng, dt, t_max, scheme).payoff;
}

double pairwise_sum(const double* data, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

McEstimate estimate_value(const MarketModel& model, double x0, double l, std::size_t n_paths, std::uint64_t seed,
                          double dt, double t_max, Scheme scheme) {
    model.validate();
    if (n_paths < 1000) throw DomainError("estimate_value needs at least 1000 paths");
    scheme = check_path_arguments(model, x0, l, dt, t_max, scheme);

    std::vector<double> payoffs(n_paths);
    std::vector<std::size_t> jump_counts(n_paths);
    std::vector<unsigned char> truncated(n_paths);
    parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            std::mt19937_64 rng(path_seed(seed, i));
            const auto p = simulate_path(model, x0, l, rng, dt, t_max, scheme);
            payoffs[i] = p.payoff;
            jump_counts[i] = p.jumps;
            truncated[i] = p.exercised ? 0 : 1;
        }
    });

    McEstimate est;
    est.n_paths = n_paths;
    const double n = static_cast<double>(n_paths);
    est.mean = pairwise_sum(payoffs.data(), n_paths) / n;
    std::vector<double> dev(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) dev[i] = (payoffs[i] - est.mean) * (payoffs[i] - est.mean);
    const double var = pairwise_sum(dev.data(), n_paths) / (n - 1.0);
    est.std_error = std::sqrt(var / n);
    est.ci95 = {est.mean - 1.96 * est.std_error, est.mean + 1.96 * est.std_error};
    est.truncation_bound = std::exp(-model.alpha * t_max) * model.strike;
    for (std::size_t i = 0; i < n_paths; ++i) {
        est.jumps += jump_counts[i];
        est.truncated += truncated[i];
    }
    if (model.lambda == 0.0 && est.jumps != 0) throw std::logic_error("jumps simulated with lambda = 0");
    return est;
}

ValidationReport validate_solution(const Solution& sol, const MarketModel& model, const std::vector<double>& points,
                                   const McSettings& settings) {
    const double l = sol.boundary();
    const double t_max = settings.horizon(model);
    ValidationReport rep;
    for (double x : points) {
        PointCheck pc;
        pc.x = x;
        pc.solver_value = sol.v(x);
        pc.estimate = estimate_value(model, x, l, settings.n_paths, settings.seed, settings.dt, t_max, settings.scheme);
        pc.tolerance = settings.n_sigma * pc.estimate.std_error + pc.estimate.truncation_bound +
                       settings.allowance * model.strike;
        pc.pass = std::abs(pc.solver_value - pc.estimate.mean) <= pc.tolerance;
        rep.all_pass = rep.all_pass && pc.pass;
        rep.points.push_back(pc);
    }
    return rep;
}

std::vector<McEstimate> policy_sweep(const MarketModel& model, double x0, const std::vector<double>& ls,
                                     const McSettings& settings) {
    std::vector<McEstimate> out;
    out.reserve(ls.size());
    for (double l : ls) {
        out.push_back(estimate_value(model, x0, l, settings.n_paths, settings.seed, settings.dt,
                                     settings.horizon(model), settings.scheme));
    }
    return out;
}

}  // namespace jumpput
