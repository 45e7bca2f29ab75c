#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "jumpput/grid.hpp"
#include "jumpput/model.hpp"

namespace jumpput {

/**
 * Increasing (psi) and decreasing (phi) positive solutions of
 *
 *     1/2 sigma^2(x) x^2 u'' + mu x u' - rho u = 0,   rho = alpha + lambda,
 *
 * with Wronskian W = psi' phi - psi phi'. Either the closed-form power pair
 * of geometric Brownian motion or a tabulation produced by shooting on a grid.
 * Both solutions are only defined up to positive constants; rescaled() changes
 * those constants without touching anything else.
 */
class FundamentalPair {
public:
    // Closed-form pair psi = x^{beta+}, phi = x^{beta-}.
    static FundamentalPair power_law(double sigma, double mu, double rho);
    // Tabulated pair: log-values and log-derivatives d log u / d log x at the grid nodes.
    static FundamentalPair tabulated(std::vector<double> log_x, std::vector<double> log_psi,
                                     std::vector<double> psi_elasticity, std::vector<double> log_phi,
                                     std::vector<double> phi_elasticity, double mu, double rho);

    double psi(double x) const;
    double phi(double x) const;
    double dpsi(double x) const;
    double dphi(double x) const;
    double log_psi(double x) const;
    double log_phi(double x) const;
    /// x psi'(x) / psi(x)
    double psi_elasticity(double x) const;
    /// x phi'(x) / phi(x)
    double phi_elasticity(double x) const;
    double wronskian(double x) const;

    double mu() const noexcept { return mu_; }
    double kill_rate() const noexcept { return rho_; }
    bool closed_form() const noexcept { return table_ == nullptr; }
    /// Exponents of the power-law pair (closed form only).
    double beta_plus() const noexcept { return beta_plus_; }
    double beta_minus() const noexcept { return beta_minus_; }

    /// psi -> c_psi psi, phi -> c_phi phi.
    FundamentalPair rescaled(double c_psi, double c_phi) const;

private:
    struct Table {
        std::vector<double> t;
        std::vector<double> lpsi, qpsi;
        std::vector<double> lphi, qphi;
    };
    struct LogEval {
        double value;
        double slope;
    };

    FundamentalPair() = default;
    LogEval eval_psi(double x) const;
    LogEval eval_phi(double x) const;
    LogEval hermite(const std::vector<double>& l, const std::vector<double>& q, double t) const;

    std::shared_ptr<const Table> table_;
    double beta_plus_ = 0.0;
    double beta_minus_ = 0.0;
    double log_c_psi_ = 0.0;
    double log_c_phi_ = 0.0;
    double mu_ = 0.0;
    double rho_ = 0.0;
};

/// Roots beta- < 0 < beta+ of 1/2 sigma^2 b(b-1) + mu b - rho = 0.
std::pair<double, double> characteristic_roots(double sigma, double mu, double rho);

/// Closed-form GBM pair. Throws InvalidModel for sigma <= 0 or rho <= 0.
FundamentalPair gbm_pair(double sigma, double mu, double rho);

struct NumericPairOptions {
    double rel_tol = 1e-13;
    double abs_tol = 1e-14;
    /// Both solutions equal 1 here (typically the strike).
    double normalize_at = 1.0;
};

/**
 * Shooting construction on the grid nodes: psi forward from x_min, phi backward
 * from x_max, each seeded with the frozen-coefficient power solution at its end.
 * The second-order system is integrated in t = log x with an adaptive
 * Dormand-Prince 5(4) stepper and renormalised whenever |u| leaves [0.1, 10].
 */
FundamentalPair numeric_pair(const VolatilityModel& vol, double mu, double rho, const Grid& grid,
                             const NumericPairOptions& opts = {});

enum class ZeroMode { ExitLike, NaturalLike, Unclassified };

std::string to_string(ZeroMode mode);

struct BoundaryBehavior {
    bool infinity_natural = false;
    ZeroMode zero_mode = ZeroMode::Unclassified;
    double phi_ratio_at_max = 0.0;   // phi(x_max) / phi(K)
    double psi_ratio_at_min = 0.0;   // psi(x_min) / psi(K)
    double phi_elasticity_at_min = 0.0;
    double psi_over_w_ratio = 0.0;   // (psi'/W)(x_min) / (psi'/W)(10 x_min)
};

/// Numerical check of the admitted boundary patterns (diagnostic only).
BoundaryBehavior boundary_behavior_check(const FundamentalPair& pair, const Grid& grid, double strike);

/// Max over interior nodes of |1/2 sigma^2 x^2 u'' + mu x u' - rho u| / (|u| + x|u'|), u in {psi, phi}.
double max_ode_residual(const FundamentalPair& pair, const VolatilityModel& vol, const Grid& grid);

/// W(x_j) exp(int_{x_0}^{x_j} 2 mu / (sigma^2(y) y) dy) at every node (constant in exact arithmetic).
std::vector<double> scaled_wronskian(const FundamentalPair& pair, const VolatilityModel& vol, const Grid& grid);

/// CSV dump x,psi,psi_prime,phi,phi_prime,W at the grid nodes.
void write_pair_csv(const FundamentalPair& pair, const Grid& grid, const std::string& path);

}  // namespace jumpput
