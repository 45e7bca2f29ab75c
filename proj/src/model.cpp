#include "jumpput/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "jumpput/errors.hpp"

namespace jumpput {

QuadratureRule gauss_hermite(int order) {
    if (order < 1) throw DomainError("Gauss-Hermite order must be positive");
    const auto n = static_cast<Eigen::Index>(order);
    // Jacobi matrix of the monic probabilists' Hermite recurrence.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) {
        jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    if (eig.info() != Eigen::Success) throw ConstructionFailure("Gauss-Hermite eigen solve failed");

    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(order));
    rule.weights.resize(static_cast<std::size_t>(order));
    for (Eigen::Index k = 0; k < n; ++k) {
        const double v0 = eig.eigenvectors()(0, k);
        rule.nodes[static_cast<std::size_t>(k)] = eig.eigenvalues()(k);
        rule.weights[static_cast<std::size_t>(k)] = v0 * v0;
    }
    // Enforce exact symmetry of the rule about 0.
    for (std::size_t i = 0, j = rule.nodes.size() - 1; i < j; ++i, --j) {
        const double t = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -t;
        rule.nodes[j] = t;
        rule.weights[i] = rule.weights[j] = w;
    }
    if (order % 2 == 1) rule.nodes[rule.nodes.size() / 2] = 0.0;
    return rule;
}

JumpMeasure JumpMeasure::discrete(std::vector<Atom> atoms) {
    if (atoms.empty()) throw InvalidMeasure("jump measure needs at least one atom");
    double total = 0.0;
    for (const auto& a : atoms) {
        if (!(a.z > 0.0) || !std::isfinite(a.z)) throw InvalidMeasure("jump atoms must be strictly positive and finite");
        if (!(a.p >= 0.0) || !std::isfinite(a.p)) throw InvalidMeasure("jump probabilities must be non-negative");
        total += a.p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw InvalidMeasure("jump probabilities sum to " + std::to_string(total) + ", expected 1");
    }
    JumpMeasure m;
    m.kind_ = Kind::Discrete;
    m.atoms_ = std::move(atoms);
    return m;
}

JumpMeasure JumpMeasure::lognormal(double meanlog, double sdlog, int order) {
    if (!std::isfinite(meanlog) || !(sdlog >= 0.0) || !std::isfinite(sdlog)) {
        throw InvalidMeasure("lognormal jump law needs finite meanlog and sdlog >= 0");
    }
    if (order < 1) throw InvalidMeasure("quadrature order must be positive");
    const auto rule = gauss_hermite(order);
    JumpMeasure m;
    m.kind_ = Kind::Lognormal;
    m.meanlog_ = meanlog;
    m.sdlog_ = sdlog;
    m.order_ = order;
    m.atoms_.reserve(rule.nodes.size());
    double total = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double z = std::exp(meanlog + sdlog * rule.nodes[i]);
        if (!(z > 0.0) || !std::isfinite(z)) throw InvalidMeasure("lognormal quadrature node not strictly positive");
        m.atoms_.push_back({z, rule.weights[i]});
        total += rule.weights[i];
    }
    if (std::abs(total - 1.0) > 1e-10) throw InvalidMeasure("quadrature weights do not sum to 1");
    return m;
}

double jump_mean(const JumpMeasure& jumps) {
    double xi = 0.0;
    for (const auto& a : jumps.atoms()) xi += a.z * a.p;
    if (!std::isfinite(xi)) throw InvalidMeasure("jump mean is not finite");
    return xi;
}

VolatilityModel VolatilityModel::constant(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidModel("constant volatility must be positive");
    VolatilityModel v;
    v.kind_ = Kind::Constant;
    v.sigma_ = sigma;
    return v;
}

VolatilityModel VolatilityModel::cev(double sigma, double gamma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidModel("CEV sigma must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidModel("CEV gamma must lie in (0, 1)");
    VolatilityModel v;
    v.kind_ = Kind::Cev;
    v.sigma_ = sigma;
    v.gamma_ = gamma;
    return v;
}

VolatilityModel VolatilityModel::table(std::vector<double> x, std::vector<double> sigma) {
    if (x.size() != sigma.size() || x.empty()) throw InvalidModel("volatility table needs matching non-empty x and sigma");
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(x[j] > 0.0) || !std::isfinite(x[j])) throw InvalidModel("volatility table x must be positive");
        if (!(sigma[j] > 0.0) || !std::isfinite(sigma[j])) throw InvalidModel("volatility table sigma must be positive");
        if (j > 0) {
            if (!(x[j] > x[j - 1])) throw InvalidModel("volatility table x must be strictly increasing");
            const double ratio = std::max(sigma[j], sigma[j - 1]) / std::min(sigma[j], sigma[j - 1]);
            if (ratio > 10.0) {
                throw InvalidModel("volatility table jumps by a factor " + std::to_string(ratio) + " between adjacent nodes");
            }
        }
    }
    VolatilityModel v;
    v.kind_ = Kind::Table;
    v.log_x_.resize(x.size());
    v.log_sigma_.resize(x.size());
    std::transform(x.begin(), x.end(), v.log_x_.begin(), [](double a) { return std::log(a); });
    std::transform(sigma.begin(), sigma.end(), v.log_sigma_.begin(), [](double a) { return std::log(a); });
    v.table_x_ = std::move(x);
    v.table_sigma_ = std::move(sigma);
    return v;
}

double VolatilityModel::operator()(double x) const {
    if (!(x > 0.0)) throw DomainError("volatility evaluated at non-positive price");
    switch (kind_) {
        case Kind::Constant:
            return sigma_;
        case Kind::Cev:
            return sigma_ * std::pow(x, -gamma_);
        case Kind::Table: {
            if (x <= table_x_.front()) return table_sigma_.front();
            if (x >= table_x_.back()) return table_sigma_.back();
            const auto it = std::upper_bound(table_x_.begin(), table_x_.end(), x);
            const auto j = static_cast<std::size_t>(it - table_x_.begin());
            const double lx = std::log(x);
            const double t = (lx - log_x_[j - 1]) / (log_x_[j] - log_x_[j - 1]);
            return std::exp(log_sigma_[j - 1] + t * (log_sigma_[j] - log_sigma_[j - 1]));
        }
    }
    return sigma_;
}

double sigma_eval(const VolatilityModel& vol, double x) { return vol(x); }

void MarketModel::validate() const {
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidModel("interest rate r must be positive");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidModel("discount rate alpha must be positive");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidModel("jump intensity lambda must be non-negative");
    if (!(strike > 0.0) || !std::isfinite(strike)) throw InvalidModel("strike must be positive");
    (void)jump_mean(jumps);
}

}  // namespace jumpput
