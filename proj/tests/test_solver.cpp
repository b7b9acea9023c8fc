#include <gtest/gtest.h>

#include <chrono>

#include "rbmsat/solver.hpp"
#include "support.hpp"

namespace rbmsat {
namespace {

const WeightBank& bank3() {
    static const WeightBank bank = build_weight_bank({0.128, 0.518}, {3}, 0);
    return bank;
}

SolverConfig small_config(SolveMode mode = SolveMode::kFull) {
    SolverConfig c;
    c.time_limit_seconds = 30.0;
    c.chains_per_temperature = 8;
    c.temperature_targets = {0.128, 0.518};
    c.up_interval_steps = 20;
    c.up_wait_steps = 5;
    c.rounds_per_dispatch = 25;
    c.max_steps = 200;
    c.seed = 3;
    c.mode = mode;
    return c;
}

TEST(Mode, NamesRoundTrip) {
    for (auto m : {SolveMode::kFull, SolveMode::kNoUp, SolveMode::kRandomSamplingUp, SolveMode::kUpOnly})
        EXPECT_EQ(parse_mode(to_string(m)), m);
    EXPECT_THROW(parse_mode("fast"), std::invalid_argument);
}

TEST(SolverConfig, Validation) {
    auto c = small_config();
    c.time_limit_seconds = 0.0;
    EXPECT_THROW(validate(c), std::invalid_argument);
    c = small_config();
    c.alpha = 0.0;
    EXPECT_THROW(validate(c), std::invalid_argument);
    c = small_config();
    c.temperature_targets.clear();
    EXPECT_THROW(validate(c), std::invalid_argument);
    c = small_config();
    c.chains_per_temperature = 0;
    EXPECT_THROW(validate(c), std::invalid_argument);
    c = small_config();
    c.rounds_per_dispatch = 0;
    EXPECT_THROW(validate(c), std::invalid_argument);
}

TEST(Solve, ZeroClauseFormula) {
    Formula f;
    f.num_variables = 3;
    const auto r = solve(f, WeightBank{}, small_config());
    EXPECT_EQ(r.satisfied, 0U);
    EXPECT_EQ(r.unsatisfied_cost, 0U);
    EXPECT_EQ(r.best_assignment.size(), 3U);
}

TEST(Solve, MissingGateIsReported) {
    const auto f = testing::random_cnf(10, 30, 4, 1);
    EXPECT_THROW(solve(f, bank3(), small_config()), BankError);
    // modes without an RBM need no gates
    EXPECT_NO_THROW(solve(f, WeightBank{}, small_config(SolveMode::kRandomSamplingUp)));
}

TEST(Solve, ResultInvariants) {
    const auto f = testing::random_cnf(60, 256, 3, 2, 3);
    for (auto mode : {SolveMode::kFull, SolveMode::kNoUp, SolveMode::kRandomSamplingUp, SolveMode::kUpOnly}) {
        auto c = small_config(mode);
        if (mode == SolveMode::kUpOnly)
            c.max_steps = 20;
        const auto r = solve(f, bank3(), c);
        EXPECT_EQ(r.satisfied + r.unsatisfied_cost, f.num_clauses());
        EXPECT_EQ(count_satisfied(f, r.best_assignment), r.satisfied);
        ASSERT_FALSE(r.trace.empty());
        EXPECT_EQ(r.trace.back().satisfied, r.satisfied);
        for (std::size_t i = 1; i < r.trace.size(); ++i) {
            EXPECT_GT(r.trace[i].satisfied, r.trace[i - 1].satisfied);
            EXPECT_GE(r.trace[i].step, r.trace[i - 1].step);
        }
        if (r.unsatisfied_cost > 0) {
            EXPECT_EQ(r.stats.steps, c.max_steps) << to_string(mode);
        }
    }
}

TEST(Solve, RandomModesNeverTouchRbmKernels) {
    const auto f = testing::random_cnf(30, 128, 3, 3);
    for (auto mode : {SolveMode::kRandomSamplingUp, SolveMode::kUpOnly}) {
        auto c = small_config(mode);
        c.max_steps = 40;
        const auto r = solve(f, bank3(), c);
        EXPECT_EQ(r.stats.rbm_assemblies, 0U);
        EXPECT_EQ(r.stats.rbm_chain_steps, 0U);
        EXPECT_GT(r.stats.up_calls, 0U);
    }
    const auto full = solve(f, bank3(), small_config());
    EXPECT_EQ(full.stats.rbm_assemblies, 2U);
    EXPECT_EQ(full.stats.rbm_chain_steps, 200U * 16U);
}

TEST(Solve, UpScheduleFollowsInterval) {
    const auto f = testing::random_cnf(30, 128, 3, 4);
    auto c = small_config();
    c.max_steps = 100;
    c.up_interval_steps = 20;
    EXPECT_EQ(solve(f, bank3(), c).stats.up_calls, 5U);
    c.up_interval_steps = 0;
    EXPECT_EQ(solve(f, bank3(), c).stats.up_calls, 0U);
    EXPECT_EQ(solve(f, bank3(), small_config(SolveMode::kNoUp)).stats.up_calls, 0U);
}

TEST(Solve, DeterministicAcrossRunsWorkersAndUpThreading) {
    const auto f = testing::random_cnf(50, 215, 3, 5);
    auto c = small_config();
    c.max_steps = 300;
    const auto a = solve(f, bank3(), c);
    const auto b = solve(f, bank3(), c);
    EXPECT_TRUE(a.same_search(b));
    c.worker_count = 3;
    EXPECT_TRUE(a.same_search(solve(f, bank3(), c)));
    c.async_up = false;
    EXPECT_TRUE(a.same_search(solve(f, bank3(), c)));
    c.seed = 4;
    EXPECT_FALSE(a.same_search(solve(f, bank3(), c)) && a.trace.size() > 1);
}

TEST(Solve, StopsAtCostZero) {
    const auto f = testing::random_cnf(20, 40, 3, 6);
    auto c = small_config();
    c.max_steps = 0;
    const auto r = solve(f, bank3(), c);
    EXPECT_EQ(r.unsatisfied_cost, 0U);
    EXPECT_LT(r.stats.elapsed_seconds, c.time_limit_seconds);
}

TEST(Solve, StopsAtRequestedCost) {
    const auto f = testing::random_cnf(40, 400, 3, 7);
    auto c = small_config();
    c.max_steps = 0;
    c.stop_at_cost = f.num_clauses();  // met immediately
    const auto r = solve(f, bank3(), c);
    EXPECT_LE(r.stats.steps, c.rounds_per_dispatch);
}

TEST(Solve, HonoursShortDeadline) {
    const auto f = testing::random_cnf(200, 900, 3, 8);
    auto c = small_config();
    c.max_steps = 0;
    c.time_limit_seconds = 0.1;
    c.rounds_per_dispatch = 5;
    const auto& bank = bank3();
    const auto start = std::chrono::steady_clock::now();
    const auto r = solve(f, bank, c);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_EQ(count_satisfied(f, r.best_assignment), r.satisfied);
    EXPECT_LE(wall, c.time_limit_seconds + r.stats.max_dispatch_seconds + r.stats.max_up_seconds + 0.05);
}

TEST(Solve, ImprovementCallbackMirrorsTrace) {
    const auto f = testing::random_cnf(40, 170, 3, 9);
    std::vector<TraceEntry> seen;
    auto c = small_config();
    c.on_improvement = [&](const TraceEntry& e) { seen.push_back(e); };
    const auto r = solve(f, bank3(), c);
    ASSERT_EQ(seen.size(), r.trace.size());
    for (std::size_t i = 0; i < seen.size(); ++i)
        EXPECT_TRUE(seen[i].same_search(r.trace[i]));
}

}  // namespace
}  // namespace rbmsat
