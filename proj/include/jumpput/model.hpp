#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace jumpput {

/// Gauss-Hermite rule for the standard normal law: sum_i w_i g(t_i) ~ E[g(N(0,1))].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Golub-Welsch construction of the order-n probabilists' Gauss-Hermite rule.
QuadratureRule gauss_hermite(int order);

/// One atom of a discrete jump law: multiplicative jump size and its probability.
struct Atom {
    double z;
    double p;
};

/**
 * Distribution nu of the multiplicative jump size Z.
 *
 * Either a finite set of atoms or a lognormal law. The lognormal law is carried
 * as a Gauss-Hermite rule in log space so that S f(x) = sum_i p_i f(x z_i) is a
 * finite weighted sum; sampling (Monte Carlo) uses the exact lognormal.
 */
class JumpMeasure {
public:
    enum class Kind { Discrete, Lognormal };

    static JumpMeasure discrete(std::vector<Atom> atoms);
    static JumpMeasure lognormal(double meanlog, double sdlog, int order = 32);
    /// Dirac mass at z = 1 (jumps leave the price unchanged).
    static JumpMeasure identity() { return discrete({{1.0, 1.0}}); }

    Kind kind() const noexcept { return kind_; }
    /// Atoms of the discrete law, or quadrature nodes/weights of the lognormal law.
    std::span<const Atom> atoms() const noexcept { return atoms_; }
    double meanlog() const noexcept { return meanlog_; }
    double sdlog() const noexcept { return sdlog_; }
    int order() const noexcept { return order_; }

private:
    JumpMeasure() = default;

    Kind kind_ = Kind::Discrete;
    std::vector<Atom> atoms_;
    double meanlog_ = 0.0;
    double sdlog_ = 0.0;
    int order_ = 0;
};

/// xi = E[Z]. Throws InvalidMeasure on a non-finite result.
double jump_mean(const JumpMeasure& jumps);

/// Risk-neutral drift mu = r + lambda - lambda * xi.
constexpr double derive_mu(double r, double lambda, double xi) noexcept { return r + lambda - lambda * xi; }

/// Level-dependent volatility x -> sigma(x).
class VolatilityModel {
public:
    enum class Kind { Constant, Cev, Table };

    static VolatilityModel constant(double sigma);
    /// sigma(x) = sigma * x^{-gamma}, gamma in (0, 1).
    static VolatilityModel cev(double sigma, double gamma);
    /// Log-log interpolation of (x_j, sigma_j), constant beyond the end points.
    static VolatilityModel table(std::vector<double> x, std::vector<double> sigma);

    Kind kind() const noexcept { return kind_; }
    double sigma() const noexcept { return sigma_; }
    double gamma() const noexcept { return gamma_; }
    std::span<const double> table_x() const noexcept { return table_x_; }
    std::span<const double> table_sigma() const noexcept { return table_sigma_; }

    double operator()(double x) const;

private:
    VolatilityModel() = default;

    Kind kind_ = Kind::Constant;
    double sigma_ = 0.0;
    double gamma_ = 0.0;
    std::vector<double> table_x_;
    std::vector<double> table_sigma_;
    std::vector<double> log_x_;
    std::vector<double> log_sigma_;
};

/// sigma(x); throws DomainError for x <= 0.
double sigma_eval(const VolatilityModel& vol, double x);

/**
 * Market model: dX = mu X dt + sigma(X) X dB + X_- (Z - 1) dN, N Poisson(lambda),
 * Z ~ jumps, payoff (K - x)^+ discounted at rate alpha.
 */
struct MarketModel {
    VolatilityModel vol;
    double r;
    double alpha;
    double lambda;
    JumpMeasure jumps;
    double strike;

    double xi() const { return jump_mean(jumps); }
    double mu() const { return derive_mu(r, lambda, xi()); }
    /// alpha + lambda, the killing rate of the jump-free diffusion.
    double kill_rate() const noexcept { return alpha + lambda; }

    /// Throws InvalidModel unless r > 0, alpha > 0, lambda >= 0, K > 0.
    void validate() const;
};

}  // namespace jumpput
