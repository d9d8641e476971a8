#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "kinmarket/model.hpp"

using namespace kinmarket;

namespace {

ModelParams switching_params() {
    ModelParams p;
    p.alpha1 = 0.2;
    p.alpha2 = 0.55;
    p.beta = 6.0;
    p.t_C = 0.02;
    p.gamma_f = 0.1;
    p.S_F = 20.0;
    p.dividend = 0.004;
    p.k_discount = 0.75;
    p.mu_freq = 0.2;
    p.sigma_switch = 0.8;
    p.herding_a = 0.0;
    p.herding_b = 1.0;
    return p;
}

} // namespace

TEST(ValueFunction, ReferencePointAndSaturation) {
    const auto spec = ValueFunctionSpec::standard();
    EXPECT_EQ(value_function(spec, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(value_function(spec, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(value_function(spec, 0.25), 0.5);
    EXPECT_DOUBLE_EQ(value_function(spec, -1.0), -1.0);
}

TEST(ValueFunction, LossBranch) {
    const auto spec = ValueFunctionSpec::standard();
    // -(0.25)^(1/4) = -1/sqrt(2)
    EXPECT_NEAR(value_function(spec, -0.25), -1.0 / std::sqrt(2.0), 1e-15);
}

TEST(ValueFunction, ClampsOutsideDomain) {
    const auto spec = ValueFunctionSpec::standard();
    EXPECT_EQ(value_function(spec, 5.0), 1.0);
    EXPECT_EQ(value_function(spec, -7.0), -1.0);
}

TEST(ValueFunction, ShiftedReferencePoint) {
    const ValueFunctionSpec spec(2.0, 0.5, 0.5, 0.25);
    EXPECT_EQ(value_function(spec, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(value_function(spec, 2.0), 1.0);
    EXPECT_DOUBLE_EQ(value_function(spec, -2.0), -1.0);
    EXPECT_NEAR(value_function(spec, 1.25), std::sqrt(0.75 / 1.5), 1e-15);
}

TEST(ValueFunction, RangeMonotoneAndLossAversion) {
    const auto spec = ValueFunctionSpec::standard();
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 10000; ++i) {
        const double x = -1.5 + 3.0 * i / 10000.0;
        const double v = value_function(spec, x);
        ASSERT_GE(v, -1.0);
        ASSERT_LE(v, 1.0);
        ASSERT_GE(v, prev);
        prev = v;
        if (x > 0.0 && x < 1.0) ASSERT_GE(std::abs(value_function(spec, -x)), value_function(spec, x));
    }
}

TEST(ValueFunctionSpec, RejectsInvalid) {
    EXPECT_THROW(ValueFunctionSpec(0.0, 0.0, 0.5, 0.25), ConfigError);
    EXPECT_THROW(ValueFunctionSpec(1.0, 1.0, 0.5, 0.25), ConfigError);
    EXPECT_THROW(ValueFunctionSpec(1.0, 0.0, 0.25, 0.5), ConfigError);
    EXPECT_THROW(ValueFunctionSpec(1.0, 0.0, 1.0, 0.5), ConfigError);
    EXPECT_THROW(ValueFunctionSpec(1.0, 0.0, 0.5, 0.0), ConfigError);
    EXPECT_NO_THROW(ValueFunctionSpec(1.0, 0.0, 0.5, 0.5));
}

TEST(Herding, Examples) {
    ModelParams p;
    p.herding_a = 1.0;
    p.herding_b = 0.0;
    EXPECT_EQ(herding(p, 0.7), 1.0);
    p.herding_a = 0.0;
    p.herding_b = 1.0;
    EXPECT_EQ(herding(p, 0.0), 1.0);
    EXPECT_EQ(herding(p, 1.0), 0.0);
    EXPECT_EQ(herding(p, -1.0), 0.0);
    p.herding_a = 0.2;
    p.herding_b = 0.5;
    EXPECT_DOUBLE_EQ(herding(p, 0.5), 0.45);
}

TEST(Diffusion, Examples) {
    ModelParams p;
    EXPECT_EQ(diffusion(p, 0.0), 1.0);
    EXPECT_EQ(diffusion(p, 1.0), 0.0);
    EXPECT_EQ(diffusion(p, -1.0), 0.0);
    p.gamma_diff = 2.0;
    EXPECT_DOUBLE_EQ(diffusion(p, 0.5), 0.5625);
}

TEST(HerdingDiffusion, BoundedAndSymmetric) {
    ModelParams p;
    p.herding_a = 0.3;
    p.herding_b = 0.6;
    p.gamma_diff = 1.7;
    for (int i = 0; i <= 10000; ++i) {
        const double y = -1.0 + 2.0 * i / 10000.0;
        const double h = herding(p, y), d = diffusion(p, y);
        ASSERT_GE(h, 0.0);
        ASSERT_LE(h, 1.0);
        ASSERT_GE(d, 0.0);
        ASSERT_LE(d, 1.0);
        ASSERT_EQ(h, herding(p, -y));
        ASSERT_EQ(d, diffusion(p, -y));
    }
}

TEST(Profits, VanishAtFundamentalEquilibrium) {
    const auto p = switching_params();
    EXPECT_DOUBLE_EQ(p.r_return(), 0.0002);
    EXPECT_NEAR(chartist_profit(p, 0.4, 20.0, 0.0), 0.0, 1e-18);
    EXPECT_NEAR(chartist_profit(p, -0.4, 20.0, 0.0), 0.0, 1e-18);
    EXPECT_EQ(fundamentalist_profit(p, 20.0), 0.0);
}

TEST(Profits, FundamentalistExample) {
    const auto p = switching_params();
    EXPECT_DOUBLE_EQ(fundamentalist_profit(p, 10.0), 0.75);
    EXPECT_GE(fundamentalist_profit(p, 35.0), 0.0);
}

TEST(Profits, ChartistSign) {
    const auto p = switching_params();
    // rising price: buyers profit, sellers lose, undecided earn nothing
    EXPECT_GT(chartist_profit(p, 0.3, 20.0, 0.5), 0.0);
    EXPECT_LT(chartist_profit(p, -0.3, 20.0, 0.5), 0.0);
    EXPECT_EQ(chartist_profit(p, 0.0, 20.0, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(chartist_profit(p, 1.0, 20.0, 0.5), (0.5 / 0.2 + 0.004) / 20.0 - 0.0002);
}

TEST(Profits, ConsistencyOverParameterGrid) {
    auto p = switching_params();
    for (double SF : {1.0, 20.0, 500.0})
        for (double D : {0.0, 0.004, 1.0})
            for (double k : {0.1, 0.75, 0.99}) {
                p.S_F = SF;
                p.dividend = D;
                p.k_discount = k;
                EXPECT_NEAR(chartist_profit(p, 0.5, SF, 0.0), 0.0, 1e-15);
                EXPECT_EQ(fundamentalist_profit(p, SF), 0.0);
            }
}

TEST(Profits, NonPositivePriceIsDomainError) {
    const auto p = switching_params();
    EXPECT_THROW(chartist_profit(p, 0.1, 0.0, 0.0), DomainError);
    EXPECT_THROW(fundamentalist_profit(p, -1.0), DomainError);
}

TEST(SwitchRate, Examples) {
    ModelParams p;
    p.sigma_switch = 0.8;
    EXPECT_EQ(switch_rate(p, 0.0), 1.0);
    EXPECT_NEAR(switch_rate(p, 1.0), 2.225540928492468, 1e-14);
    double prev = 0.0;
    for (int i = -100; i <= 100; ++i) {
        const double b = switch_rate(p, i / 10.0);
        ASSERT_GT(b, prev);
        prev = b;
    }
}

TEST(NoiseSupport, OpinionHalfwidth) {
    ModelParams p;
    p.alpha1 = p.alpha2 = 0.01;
    EXPECT_DOUBLE_EQ(opinion_noise_halfwidth(p), 0.49);
    p.alpha1 = 0.4;
    p.alpha2 = 0.6;
    EXPECT_EQ(opinion_noise_halfwidth(p), 0.0);
}

TEST(NoiseSupport, PriceHalfwidth) {
    ModelParams p;
    p.beta = 0.1;
    p.t_C = 1.0;
    p.gamma_f = 1.3;
    EXPECT_NEAR(price_noise_halfwidth(p, 0.5, 0.5), 0.885, 1e-15);
}

TEST(NoiseSupport, AdmissibilityChecks) {
    ModelParams p;
    p.alpha1 = p.alpha2 = 0.01;
    p.sigma2_opinion = max_uniform_variance(0.49);
    EXPECT_NO_THROW(check_opinion_noise(p));
    p.sigma2_opinion *= 1.01;
    try {
        check_opinion_noise(p);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("maximum admissible variance"), std::string::npos);
    }
    p.alpha1 = 0.5;
    p.alpha2 = 0.5;
    p.sigma2_opinion = 1e-9;
    EXPECT_THROW(check_opinion_noise(p), ConfigError);
    p.sigma2_opinion = 0.0;
    EXPECT_NO_THROW(check_opinion_noise(p));

    ModelParams q;
    q.zeta2_price = 0.26;
    EXPECT_NO_THROW(check_price_noise(q, 0.5, 0.5));
    q.zeta2_price = 0.27;
    EXPECT_THROW(check_price_noise(q, 0.5, 0.5), ConfigError);
}

TEST(UniformLaw, HalfwidthRoundTrip) {
    for (double v : {1e-6, 0.01, 0.25})
        EXPECT_NEAR(max_uniform_variance(uniform_halfwidth(v)), v, 1e-15);
}

TEST(ModelParams, Validation) {
    ModelParams p;
    EXPECT_NO_THROW(p.validate());
    auto bad = p;
    bad.alpha1 = 0.6;
    bad.alpha2 = 0.5;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = p;
    bad.herding_a = 0.7;
    bad.herding_b = 0.4;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = p;
    bad.beta = 0.5;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = p;
    bad.k_discount = 1.0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = p;
    bad.S_F = 0.0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = p;
    bad.gamma_diff = 0.0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = p;
    bad.mu_freq = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(bad.validate(), ConfigError);
    EXPECT_NO_THROW(switching_params().validate());
}

TEST(ModelParams, ReturnDerivedFromDividend) {
    ModelParams p;
    p.dividend = 0.5;
    p.S_F = 25.0;
    EXPECT_DOUBLE_EQ(p.r_return(), 0.02);
}
