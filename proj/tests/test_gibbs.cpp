#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rbmsat/gibbs.hpp"
#include "support.hpp"

namespace rbmsat {
namespace {

using testing::make_formula;

const OrGateRbm& gate3() {
    static const OrGateRbm g = train_or_gate(3, 0.398, 2);
    return g;
}

OrGateRbm constant_gate(double weight, double bias) {
    OrGateRbm g;
    g.k = 3;
    g.hidden = 3;
    g.target = 0.1;
    g.weights.assign(9, weight);
    g.bias.assign(3, bias);
    return g;
}

FormulaRbm<float> rbm_for(const Formula& f, const OrGateRbm& g = gate3()) {
    return FormulaRbm<float>::assemble(prepare_for_gates(f), g);
}

TEST(InitChains, DeterministicAndUniform) {
    const auto a = init_chains(100, 1024, StreamKey{5, 0});
    EXPECT_EQ(a, init_chains(100, 1024, StreamKey{5, 0}));
    EXPECT_NE(a.v, init_chains(100, 1024, StreamKey{6, 0}).v);
    EXPECT_NE(a.v, init_chains(100, 1024, StreamKey{5, 1}).v);
    const double ones = std::accumulate(a.v.data().begin(), a.v.data().end(), 0.0);
    EXPECT_NEAR(ones / (1024.0 * 100.0), 0.5, 0.02);
    EXPECT_TRUE(std::ranges::all_of(a.nu.data(), [](float x) { return x == 0.25F; }));
    EXPECT_THROW(init_chains(10, 0, StreamKey{}), std::invalid_argument);
}

TEST(InitChains, BestsFromStepZeroCounts) {
    const auto f = testing::random_cnf(20, 80, 3, 1);
    const auto batch = init_chains(rbm_for(f), 32, StreamKey{1, 0});
    for (std::size_t b = 0; b < 32; ++b) {
        EXPECT_EQ(batch.best_count[b], count_satisfied(f, batch.v.row(b)));
        EXPECT_TRUE(std::ranges::equal(batch.best_assignment.row(b), batch.v.row(b)));
    }
}

TEST(GibbsStep, ZeroWeightsKeepVarianceAtQuarter) {
    const auto f = testing::random_cnf(10, 20, 3, 2);
    const auto rbm = rbm_for(f, constant_gate(0.0, 0.0));
    auto batch = init_chains(rbm, 8, StreamKey{2, 0});
    for (int s = 0; s < 5; ++s)
        gibbs_step(rbm, batch, 0.1F, StreamKey{2, 0});
    EXPECT_TRUE(std::ranges::all_of(batch.nu.data(), [](float x) { return x == 0.25F; }));
    EXPECT_EQ(batch.step, 5U);
}

TEST(GibbsStep, AlphaOneGivesCurrentVariance) {
    // hidden units saturate on, so rho is a known function of the structure
    const auto f = testing::random_cnf(8, 12, 3, 3);
    const auto g = constant_gate(0.3, 40.0);
    const auto rbm = rbm_for(f, g);
    auto batch = init_chains(rbm, 4, StreamKey{3, 0});
    gibbs_step(rbm, batch, 1.0F, StreamKey{3, 0});
    const auto padded = prepare_for_gates(f);
    for (std::uint32_t i = 0; i < 8; ++i) {
        float logit = 0.0F;
        for (const auto& c : padded.clauses)
            for (const auto& l : c)
                if (l.var == i)
                    logit += (l.negated ? -0.3F : 0.3F) * 3.0F;
        const float rho = sigmoid(logit);
        for (std::size_t b = 0; b < 4; ++b)
            EXPECT_NEAR(batch.nu(b, i), rho * (1.0F - rho), 1e-6F);
    }
}

TEST(GibbsStep, RejectsBadAlpha) {
    const auto rbm = rbm_for(testing::random_cnf(5, 5, 3, 4));
    auto batch = init_chains(rbm, 2, StreamKey{});
    EXPECT_THROW(gibbs_step(rbm, batch, 0.0F, StreamKey{}), std::invalid_argument);
    EXPECT_THROW(gibbs_step(rbm, batch, 1.5F, StreamKey{}), std::invalid_argument);
}

TEST(GibbsStep, BestsRecordPreStepCountsAndNeverDecrease) {
    const auto f = testing::random_cnf(30, 128, 3, 5);
    const auto rbm = rbm_for(f);
    auto batch = init_chains(rbm, 16, StreamKey{5, 0});
    std::vector<std::size_t> history_max(16, 0);
    for (int s = 0; s < 200; ++s) {
        for (std::size_t b = 0; b < 16; ++b)
            history_max[b] = std::max(history_max[b], count_satisfied(f, batch.v.row(b)));
        const auto before = batch.best_count;
        gibbs_step(rbm, batch, 0.1F, StreamKey{5, 0});
        for (std::size_t b = 0; b < 16; ++b) {
            ASSERT_GE(batch.best_count[b], before[b]);
            ASSERT_EQ(batch.best_count[b], history_max[b]);
            ASSERT_EQ(count_satisfied(f, batch.best_assignment.row(b)), batch.best_count[b]);
        }
        ASSERT_TRUE(std::ranges::all_of(batch.nu.data(), [](float x) { return x >= 0.0F && x <= 0.25F; }));
    }
}

TEST(GibbsStep, SingleClauseMarginal) {
    // (v1), N = 1: P(v1 = 1) from the two-state Boltzmann distribution
    const auto f = make_formula(1, {{1}});
    const auto exact_rbm = FormulaRbm<double>::assemble(prepare_for_gates(f), gate3());
    const double f0 = exact_rbm.free_energy_batch(BitMatrix(1, 1, 0))[0];
    const double f1 = exact_rbm.free_energy_batch(BitMatrix(1, 1, 1))[0];
    const double p1 = 1.0 / (1.0 + std::exp(f1 - f0));
    ASSERT_GT(p1, 0.5);

    const auto rbm = rbm_for(f);
    const std::size_t chains = 100000;
    auto batch = init_chains(rbm, chains, StreamKey{6, 0});
    for (int s = 0; s < 20; ++s)
        gibbs_step(rbm, batch, 0.1F, StreamKey{6, 0});
    const double freq = std::accumulate(batch.v.data().begin(), batch.v.data().end(), 0.0) / chains;
    EXPECT_NEAR(freq, p1, 3 * std::sqrt(p1 * (1 - p1) / chains));
}

TEST(GibbsStep, ChainHistogramMatchesExactMarginal) {
    const auto f = testing::random_cnf(5, 3, 3, 7);
    const auto exact_rbm = FormulaRbm<double>::assemble(prepare_for_gates(f), gate3());
    BitMatrix all(32, 5);
    for (std::uint64_t code = 0; code < 32; ++code)
        std::ranges::copy(testing::from_code(5, code), all.row(code).begin());
    const auto fe = exact_rbm.free_energy_batch(all);
    std::vector<double> p(32);
    double z = 0.0;
    for (std::size_t i = 0; i < 32; ++i)
        z += p[i] = std::exp(-fe[i]);
    for (auto& x : p)
        x /= z;

    const auto rbm = rbm_for(f);
    auto batch = init_chains(rbm, 500, StreamKey{8, 0});
    GibbsScratch<float> scratch(rbm);
    std::vector<double> hist(32, 0.0);
    const int burn = 50, steps = 2000;
    for (int s = 0; s < burn + steps; ++s) {
        advance_chains(rbm, batch, StreamKey{8, 0}, 0.1F, 0, batch.size(), 1, scratch);
        ++batch.step;
        if (s < burn)
            continue;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            std::size_t code = 0;
            for (std::size_t i = 0; i < 5; ++i)
                code |= std::size_t{batch.v(b, i)} << i;
            hist[code] += 1.0;
        }
    }
    double tv = 0.0;
    for (std::size_t i = 0; i < 32; ++i)
        tv += std::abs(hist[i] / (500.0 * steps) - p[i]);
    EXPECT_LT(tv / 2, 0.02);
}

TEST(MergeCandidates, EmptyCandidatesLeaveBatchUnchanged) {
    const auto f = testing::random_cnf(10, 40, 3, 9);
    auto batch = init_chains(rbm_for(f), 4, StreamKey{9, 0});
    const auto before = batch;
    merge_candidates(batch, BitMatrix(0, 10), {}, f);
    EXPECT_EQ(batch, before);
}

TEST(MergeCandidates, BetterCandidateReplacesWorstChain) {
    const auto f = make_formula(3, {{1}, {2}, {3}});
    ChainBatch batch = init_chains(3, 3, StreamKey{});
    const std::vector<Assignment> rows{{1, 1, 0}, {0, 0, 0}, {1, 0, 0}};
    for (std::size_t b = 0; b < 3; ++b) {
        std::ranges::copy(rows[b], batch.v.row(b).begin());
        for (std::size_t i = 0; i < 3; ++i)
            batch.nu(b, i) = 0.1F * static_cast<float>(b + 1);
    }
    BitMatrix cand(1, 3, 1);
    const std::vector<std::uint32_t> prov{1};
    merge_candidates(batch, cand, prov, f);
    // ascending by count: (1,0,0) (1,1,0) (1,1,1); the all-false chain is gone
    EXPECT_TRUE(std::ranges::equal(batch.v.row(0), Assignment{1, 0, 0}));
    EXPECT_TRUE(std::ranges::equal(batch.v.row(1), Assignment{1, 1, 0}));
    EXPECT_TRUE(std::ranges::equal(batch.v.row(2), Assignment{1, 1, 1}));
    EXPECT_FLOAT_EQ(batch.nu(0, 0), 0.3F);
    EXPECT_FLOAT_EQ(batch.nu(1, 0), 0.1F);
    EXPECT_FLOAT_EQ(batch.nu(2, 0), 0.2F);  // inherited from chain 1
}

TEST(MergeCandidates, MatchesNaiveSortOracle) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 50; ++trial) {
        const auto f = testing::random_cnf(8, 30, 3, 100 + trial);
        auto batch = init_chains(8, 4, StreamKey{static_cast<std::uint64_t>(trial), 0});
        for (auto& x : batch.nu.data())
            x = static_cast<float>(rng() % 100) / 400.0F;
        BitMatrix cand(4, 8);
        for (auto& x : cand.data())
            x = rng() & 1U;
        std::vector<std::uint32_t> prov(4);
        for (auto& p : prov)
            p = static_cast<std::uint32_t>(rng() % 4);

        // oracle: stable ascending sort of (count, stacked index), keep last 4
        std::vector<std::pair<std::size_t, std::size_t>> keyed;
        for (std::size_t r = 0; r < 8; ++r) {
            const auto row = r < 4 ? batch.v.row(r) : cand.row(r - 4);
            keyed.emplace_back(testing::naive_count(f, Assignment(row.begin(), row.end())), r);
        }
        std::ranges::sort(keyed);  // index breaks ties, i.e. stable order
        const auto before = batch;
        merge_candidates(batch, cand, prov, f);
        for (std::size_t i = 0; i < 4; ++i) {
            const std::size_t src = keyed[4 + i].second;
            const auto want_v = src < 4 ? before.v.row(src) : cand.row(src - 4);
            const auto want_nu = before.nu.row(src < 4 ? src : prov[src - 4]);
            ASSERT_TRUE(std::ranges::equal(batch.v.row(i), want_v));
            ASSERT_TRUE(std::ranges::equal(batch.nu.row(i), want_nu));
        }
        EXPECT_EQ(batch.best_count, before.best_count);
    }
}

TEST(MergeCandidates, RejectsShapeMismatch) {
    const auto f = testing::random_cnf(8, 10, 3, 1);
    auto batch = init_chains(8, 2, StreamKey{});
    EXPECT_THROW(merge_candidates(batch, BitMatrix(1, 7), std::vector<std::uint32_t>{0}, f),
                 std::invalid_argument);
    EXPECT_THROW(merge_candidates(batch, BitMatrix(1, 8), std::vector<std::uint32_t>{}, f),
                 std::invalid_argument);
}

TEST(AdvanceUniform, RedrawsAndCounts) {
    const auto f = testing::random_cnf(12, 40, 3, 11);
    auto batch = init_chains(12, 8, StreamKey{11, 0});
    observe_all(f, batch);
    const auto v0 = batch.v;
    advance_uniform(f, batch, StreamKey{11, 0}, 0, 8, 10);
    EXPECT_NE(batch.v, v0);
    for (std::size_t b = 0; b < 8; ++b)
        EXPECT_EQ(count_satisfied(f, batch.best_assignment.row(b)), batch.best_count[b]);
}

TEST(RunRounds, WorkerPartitionDoesNotChangeResult) {
    const auto f = testing::random_cnf(25, 100, 3, 12);
    std::vector<FormulaRbm<float>> rbms;
    for (double t : {0.098, 0.398})
        rbms.push_back(FormulaRbm<float>::assemble(prepare_for_gates(f), train_or_gate(3, t, 0)));
    auto serial = EnsembleState<float>::create(rbms, 7, 12);
    auto threaded = EnsembleState<float>::create(rbms, 7, 12);
    run_rounds(serial, 30, 0.1F, 1);
    run_rounds(threaded, 13, 0.1F, 3);
    run_rounds(threaded, 17, 0.1F, 4);
    for (std::size_t l = 0; l < 2; ++l)
        EXPECT_EQ(serial.lanes[l].batch, threaded.lanes[l].batch);
    EXPECT_EQ(serial.best.assignment, threaded.best.assignment);
}

TEST(RunRounds, GlobalBestMonotoneAndConsistent) {
    const auto f = testing::random_cnf(40, 170, 3, 13);
    std::vector<FormulaRbm<float>> rbms{rbm_for(f)};
    auto state = EnsembleState<float>::create(rbms, 16, 13);
    std::uint32_t last = state.best.count;
    for (int r = 0; r < 10; ++r) {
        EXPECT_EQ(run_rounds(state, 5, 0.1F), 5U * 16U);
        EXPECT_GE(state.best.count, last);
        last = state.best.count;
        EXPECT_EQ(count_satisfied(f, state.best.assignment), state.best.count);
        EXPECT_EQ(state.best.count, *std::ranges::max_element(state.lanes[0].batch.best_count));
    }
    EXPECT_THROW(run_rounds(state, 0, 0.1F), std::invalid_argument);
}

}  // namespace
}  // namespace rbmsat
