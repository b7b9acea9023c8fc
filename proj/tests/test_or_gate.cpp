#include <gtest/gtest.h>

#include <cmath>

#include "rbmsat/or_gate.hpp"
#include "rbmsat/random.hpp"

namespace rbmsat {
namespace {

OrGateRbm zero_gate(std::uint32_t k, std::uint32_t hidden) {
    OrGateRbm g;
    g.k = k;
    g.hidden = hidden;
    g.target = 0.5;
    g.weights.assign(std::size_t{k} * hidden, 0.0);
    g.bias.assign(hidden, 0.0);
    return g;
}

TEST(HiddenUnits, PerClauseSize) {
    EXPECT_EQ(hidden_units_for(3), 3U);
    for (std::uint32_t k = 4; k <= 7; ++k)
        EXPECT_EQ(hidden_units_for(k), k + 1);
}

TEST(Softplus, StableAtExtremes) {
    EXPECT_DOUBLE_EQ(softplus(0.0), std::log(2.0));
    EXPECT_DOUBLE_EQ(softplus(800.0), 800.0);
    EXPECT_GT(softplus(-800.0), -1e-300);
    EXPECT_NEAR(softplus(-30.0), std::exp(-30.0), 1e-20);
    EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
    EXPECT_NEAR(sigmoid(-800.0), 0.0, 1e-300);
    EXPECT_DOUBLE_EQ(sigmoid(800.0), 1.0);
}

TEST(FreeEnergy, ZeroParameters) {
    const auto g = zero_gate(4, 5);
    for (std::uint32_t code = 0; code < 16; ++code)
        EXPECT_NEAR(free_energy_of_code(g, code), -5.0 * std::log(2.0), 1e-15);
}

TEST(FreeEnergy, SingleHiddenClosedForm) {
    auto g = zero_gate(3, 1);
    const double t = 1.7;
    g.weights[0] = t;  // W[0][0]
    const std::vector<std::uint8_t> e1{1, 0, 0};
    EXPECT_NEAR(free_energy(g, e1), -std::log1p(std::exp(t)), 1e-15);
    EXPECT_NEAR(free_energy_of_code(g, 1), -std::log1p(std::exp(t)), 1e-15);
}

TEST(FreeEnergy, CodeAndSpanAgree) {
    const auto g = init_or_gate(5, 0.3, 12, 1.0);
    for (std::uint32_t code = 0; code < 32; ++code) {
        std::vector<std::uint8_t> v(5);
        for (int i = 0; i < 5; ++i)
            v[i] = (code >> i) & 1U;
        EXPECT_DOUBLE_EQ(free_energy(g, v), free_energy_of_code(g, code));
    }
    EXPECT_THROW(free_energy(g, std::vector<std::uint8_t>(4)), std::invalid_argument);
}

TEST(FitStats, GradientMatchesFiniteDifferences) {
    const double h = 1e-5;
    for (std::uint64_t point = 0; point < 10; ++point) {
        const std::uint32_t k = 3 + static_cast<std::uint32_t>(point % 5);
        auto g = init_or_gate(k, 0.068 + 0.03 * static_cast<double>(point), 100 + point, 1.0);
        std::vector<double> gw(g.weights.size()), gb(g.bias.size());
        fit_stats(g, gw, gb);
        auto check = [&](std::vector<double>& params, const std::vector<double>& grad) {
            for (std::size_t i = 0; i < params.size(); ++i) {
                const double saved = params[i];
                params[i] = saved + h;
                const double up = regression_loss(g);
                params[i] = saved - h;
                const double down = regression_loss(g);
                params[i] = saved;
                const double fd = (up - down) / (2 * h);
                EXPECT_NEAR(grad[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "point " << point;
            }
        };
        check(g.weights, gw);
        check(g.bias, gb);
    }
}

TEST(TrainOrGate, ThreeInputGateAtLargestTarget) {
    const auto g = train_or_gate(3, 0.528, 1);
    EXPECT_EQ(g.hidden, 3U);
    EXPECT_TRUE(passes_quality_gate(g));
    EXPECT_NEAR(free_energy_of_code(g, 0b000), 0.0, 1e-2);
    EXPECT_NEAR(free_energy_of_code(g, 0b101), -0.528, 1e-2);
    for (std::uint32_t code = 1; code < 8; ++code)
        EXPECT_NEAR(free_energy_of_code(g, code), g.satisfying_free_energy(), 1e-2);
}

TEST(TrainOrGate, SevenInputGateCoversAllInputs) {
    const auto g = train_or_gate(7, 0.248, 3);
    EXPECT_EQ(g.hidden, 8U);
    double worst = 0.0;
    for (std::uint32_t code = 1; code < 128; ++code)
        worst = std::max(worst, std::abs(free_energy_of_code(g, code) + 0.248));
    EXPECT_LE(worst, 1e-2);
    EXPECT_LE(std::abs(free_energy_of_code(g, 0)), 1e-2);
}

TEST(TrainOrGate, Deterministic) {
    EXPECT_EQ(train_or_gate(4, 0.158, 99), train_or_gate(4, 0.158, 99));
    EXPECT_NE(train_or_gate(4, 0.158, 99).weights, train_or_gate(4, 0.158, 100).weights);
}

TEST(TrainOrGate, RejectsBadArguments) {
    EXPECT_THROW(train_or_gate(2, 0.1, 0), std::invalid_argument);
    EXPECT_THROW(train_or_gate(8, 0.1, 0), std::invalid_argument);
    EXPECT_THROW(train_or_gate(3, 0.0, 0), std::invalid_argument);
    EXPECT_THROW(train_or_gate(3, -0.2, 0), std::invalid_argument);
}

TEST(TrainOrGate, ReportsUnmetTolerance) {
    TrainOptions opt;
    opt.max_steps = 3;
    try {
        train_or_gate(5, 0.4, 0, opt);
        FAIL();
    } catch (const TrainingError& e) {
        EXPECT_GT(e.final_max_error(), opt.tolerance);
        EXPECT_GT(e.final_loss(), 0.0);
    }
}

TEST(QualityGate, RejectsNonFinite) {
    auto g = train_or_gate(3, 0.3, 0);
    g.bias[0] = std::nan("");
    EXPECT_FALSE(passes_quality_gate(g));
}

}  // namespace
}  // namespace rbmsat
