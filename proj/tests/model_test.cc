#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "jumpput/errors.hpp"
#include "jumpput/model.hpp"

using namespace jumpput;

TEST(GaussHermite, IntegratesNormalMoments) {
    const auto rule = gauss_hermite(32);
    double m0 = 0, m1 = 0, m2 = 0, m4 = 0, m6 = 0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double t = rule.nodes[i], w = rule.weights[i];
        m0 += w;
        m1 += w * t;
        m2 += w * t * t;
        m4 += w * std::pow(t, 4);
        m6 += w * std::pow(t, 6);
    }
    EXPECT_NEAR(m0, 1.0, 1e-13);
    EXPECT_NEAR(m1, 0.0, 1e-13);
    EXPECT_NEAR(m2, 1.0, 1e-12);
    EXPECT_NEAR(m4, 3.0, 1e-11);
    EXPECT_NEAR(m6, 15.0, 1e-10);
    EXPECT_THROW(gauss_hermite(0), DomainError);
}

TEST(JumpMean, PointMassAtOne) { EXPECT_DOUBLE_EQ(jump_mean(JumpMeasure::identity()), 1.0); }

TEST(JumpMean, SymmetricTwoPoint) {
    EXPECT_DOUBLE_EQ(jump_mean(JumpMeasure::discrete({{0.5, 0.5}, {1.5, 0.5}})), 1.0);
}

TEST(JumpMean, LognormalMatchesMomentFormula) {
    const auto nu = JumpMeasure::lognormal(-0.08, 0.4);
    EXPECT_EQ(nu.order(), 32);
    EXPECT_NEAR(jump_mean(nu), 1.0, 1e-8);
    const auto other = JumpMeasure::lognormal(0.1, 0.3);
    EXPECT_NEAR(jump_mean(other) / std::exp(0.1 + 0.045) - 1.0, 0.0, 1e-8);
}

TEST(JumpMean, LognormalOrderDoublingIsStable) {
    const double a = jump_mean(JumpMeasure::lognormal(-0.08, 0.4, 32));
    const double b = jump_mean(JumpMeasure::lognormal(-0.08, 0.4, 64));
    EXPECT_LT(std::abs(a - b) / b, 1e-8);
}

TEST(JumpMeasureTest, LognormalNodesPositiveWeightsSumToOne) {
    const auto nu = JumpMeasure::lognormal(-0.08, 0.4);
    double total = 0;
    for (const auto& a : nu.atoms()) {
        EXPECT_GT(a.z, 0.0);
        EXPECT_GE(a.p, 0.0);
        total += a.p;
    }
    EXPECT_NEAR(total, 1.0, 1e-10);
}

TEST(JumpMeasureTest, RejectsInvalidAtoms) {
    EXPECT_THROW(JumpMeasure::discrete({}), InvalidMeasure);
    EXPECT_THROW(JumpMeasure::discrete({{0.0, 1.0}}), InvalidMeasure);
    EXPECT_THROW(JumpMeasure::discrete({{-1.0, 1.0}}), InvalidMeasure);
    EXPECT_THROW(JumpMeasure::discrete({{1.0, -0.5}, {2.0, 1.5}}), InvalidMeasure);
    EXPECT_THROW(JumpMeasure::discrete({{1.0, 0.5}, {2.0, 0.4}}), InvalidMeasure);
    EXPECT_THROW(JumpMeasure::discrete({{1.0, 1.0 + 1e-9}}), InvalidMeasure);
    EXPECT_THROW(JumpMeasure::discrete({{std::nan(""), 1.0}}), InvalidMeasure);
    EXPECT_THROW(JumpMeasure::lognormal(0.0, -0.1), InvalidMeasure);
    EXPECT_THROW(JumpMeasure::lognormal(0.0, 0.1, 0), InvalidMeasure);
}

TEST(JumpMean, NonFiniteMeanRejected) {
    EXPECT_THROW(jump_mean(JumpMeasure::lognormal(0.0, 100.0)), InvalidMeasure);
}

TEST(DeriveMu, Examples) {
    EXPECT_DOUBLE_EQ(derive_mu(0.05, 0.0, 1.0), 0.05);
    EXPECT_DOUBLE_EQ(derive_mu(0.05, 0.1, 1.0), 0.05);
    EXPECT_NEAR(derive_mu(0.05, 0.2, 0.9), 0.07, 1e-15);
    static_assert(derive_mu(0.05, 0.0, 1.0) == 0.05);
}

TEST(DeriveMu, ReverseSummationStable) {
    std::vector<Atom> atoms{{0.3, 0.1}, {0.7, 0.2}, {1.1, 0.25}, {1.6, 0.3}, {2.9, 0.15}};
    const double forward = derive_mu(0.05, 0.3, jump_mean(JumpMeasure::discrete(atoms)));
    std::vector<Atom> reversed(atoms.rbegin(), atoms.rend());
    const double backward = derive_mu(0.05, 0.3, jump_mean(JumpMeasure::discrete(reversed)));
    EXPECT_LT(std::abs(forward - backward) / std::abs(forward), 1e-14);
}

TEST(SigmaEval, ConstantAndCev) {
    EXPECT_DOUBLE_EQ(sigma_eval(VolatilityModel::constant(0.2), 37.5), 0.2);
    EXPECT_DOUBLE_EQ(sigma_eval(VolatilityModel::cev(0.2, 0.5), 4.0), 0.1);
    EXPECT_DOUBLE_EQ(sigma_eval(VolatilityModel::cev(0.2, 0.5), 1.0), 0.2);
}

TEST(SigmaEval, NonPositivePriceIsDomainError) {
    EXPECT_THROW(sigma_eval(VolatilityModel::constant(0.2), 0.0), DomainError);
    EXPECT_THROW(sigma_eval(VolatilityModel::cev(0.2, 0.5), -1.0), DomainError);
}

TEST(SigmaEval, TableLogLogInterpolationAndFlatExtrapolation) {
    const auto vol = VolatilityModel::table({0.5, 1.0, 2.0}, {0.4, 0.2, 0.1});
    EXPECT_DOUBLE_EQ(vol(0.1), 0.4);
    EXPECT_DOUBLE_EQ(vol(10.0), 0.1);
    EXPECT_NEAR(vol(std::sqrt(0.5)), std::sqrt(0.4 * 0.2), 1e-15);
    EXPECT_NEAR(vol(1.0), 0.2, 1e-15);
    // log-log linear: the segment [1, 2] is sigma = 0.2 x^{-1}
    EXPECT_NEAR(vol(1.5), 0.2 / 1.5, 1e-15);
}

TEST(VolatilityModelTest, RejectsInvalidParameters) {
    EXPECT_THROW(VolatilityModel::constant(0.0), InvalidModel);
    EXPECT_THROW(VolatilityModel::cev(0.2, 0.0), InvalidModel);
    EXPECT_THROW(VolatilityModel::cev(0.2, 1.0), InvalidModel);
    EXPECT_THROW(VolatilityModel::table({1.0, 2.0}, {0.2}), InvalidModel);
    EXPECT_THROW(VolatilityModel::table({2.0, 1.0}, {0.2, 0.2}), InvalidModel);
    EXPECT_THROW(VolatilityModel::table({1.0, 2.0}, {0.2, -0.2}), InvalidModel);
    EXPECT_THROW(VolatilityModel::table({1.0, 2.0}, {0.2, 2.5}), InvalidModel);
    EXPECT_NO_THROW(VolatilityModel::table({1.0, 2.0}, {0.2, 1.9}));
}

TEST(MarketModelTest, DerivedQuantities) {
    MarketModel m{VolatilityModel::constant(0.2), 0.05, 0.04, 0.2, JumpMeasure::discrete({{0.9, 1.0}}), 1.0};
    EXPECT_DOUBLE_EQ(m.xi(), 0.9);
    EXPECT_NEAR(m.mu(), 0.07, 1e-15);
    EXPECT_DOUBLE_EQ(m.kill_rate(), 0.24);
    EXPECT_NO_THROW(m.validate());
}

TEST(MarketModelTest, ValidateRejectsBadRates) {
    const MarketModel good{VolatilityModel::constant(0.2), 0.05, 0.05, 0.1, JumpMeasure::identity(), 1.0};
    auto bad = good;
    bad.r = 0.0;
    EXPECT_THROW(bad.validate(), InvalidModel);
    bad = good;
    bad.alpha = -0.01;
    EXPECT_THROW(bad.validate(), InvalidModel);
    bad = good;
    bad.lambda = -0.1;
    EXPECT_THROW(bad.validate(), InvalidModel);
    bad = good;
    bad.strike = 0.0;
    EXPECT_THROW(bad.validate(), InvalidModel);
}
