#include <gtest/gtest.h>

#include <random>

#include "msvq/error.hpp"
#include "msvq/oracle.hpp"
#include "support.hpp"

using namespace msvq;

TEST(ExhaustiveSelect, WorkedInstance) {
    MarginalLossTable t;
    t.n = 3;
    t.t_max = 2;
    t.loss = {11, 1, 0, 11, 5, 0, 5, 2, 0};
    t.step_bits.assign(6, 2.0);
    const auto r = oracle::exhaustive_select(t, 6);
    EXPECT_EQ(r.best_loss, 6.0);  // 27 - 21
    EXPECT_EQ(r.best_plan, (std::vector<std::uint8_t>{1, 2, 0}));
    // Plans with at most three increments out of 27.
    EXPECT_EQ(r.enumerated, 17u);
}

TEST(ExhaustiveSelect, UnlimitedBudgetPicksFullDepth) {
    std::mt19937_64 rng(1);
    const auto t = test::random_table(rng, 4, 3, false, test::StepBits::random);
    const auto r = oracle::exhaustive_select(t, 1e9);
    EXPECT_EQ(r.best_plan, std::vector<std::uint8_t>(4, 3));
    EXPECT_EQ(r.enumerated, 256u);
}

TEST(ExhaustiveSelect, LexicographicTieBreak) {
    MarginalLossTable t;
    t.n = 3;
    t.t_max = 1;
    t.loss = {2, 1, 2, 1, 2, 1};
    t.step_bits = {1, 1, 1};
    EXPECT_EQ(oracle::exhaustive_select(t, 1).best_plan, (std::vector<std::uint8_t>{0, 0, 1}));
}

TEST(ExhaustiveSelect, MatchesGreedyOnConvexEqualStepTables) {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 1000; ++k) {
        const auto t = test::random_table(rng, 1 + k % 6, 1 + k % 3, true, test::StepBits::uniform);
        const double cap = static_cast<double>(rng() % static_cast<std::uint64_t>(t.total_bits() + 1));
        const auto greedy = select_stages(t, cap);
        EXPECT_EQ(test::total_loss(t, greedy.stages), oracle::exhaustive_select(t, cap).best_loss);
    }
}

TEST(ExhaustiveSelect, SizeGuard) {
    MarginalLossTable t;
    t.n = 12;
    t.t_max = 3;
    t.loss.assign(12 * 4, 1.0);
    t.step_bits.assign(12 * 3, 1.0);
    EXPECT_THROW(oracle::exhaustive_select(t, 5), SizeGuardError);
    t.n = 11;  // 4^11 = 4.19e6
    t.loss.resize(11 * 4);
    t.step_bits.resize(11 * 3);
    EXPECT_NO_THROW(oracle::exhaustive_select(t, 2));
}

TEST(ExhaustiveNearest, LowestIndexOnTies) {
    const Codebook cb(1, 2, {1.f, -1.f, 1.f, 3.f});
    EXPECT_EQ(oracle::exhaustive_nearest(cb, std::vector<double>{0.0}), 0u);
    EXPECT_EQ(oracle::exhaustive_nearest(cb, std::vector<double>{2.9}), 3u);
}

TEST(DirectMarginalLoss, FullDepthIsModelLoss) {
    const auto f = test::small_model(400, 8, 4, 2, 3, 2);
    const double full = oracle::direct_marginal_loss(f.model, f.data, 0, 2);
    EXPECT_NEAR(full, oracle::direct_marginal_loss(f.model, f.data, 1, 2), 1e-12 * full);
    EXPECT_NEAR(full, f.report.per_stage_distortion.back(), 1e-9 * full);
    EXPECT_THROW(oracle::direct_marginal_loss(f.model, f.data, 2, 0), IndexError);
}

TEST(DirectMarginalLoss, SingleSubVectorMatchesTrainer) {
    const auto f = test::small_model(500, 4, 4, 3, 4, 3);
    for (std::size_t T = 1; T <= 3; ++T) {
        const double v = oracle::direct_marginal_loss(f.model, f.data, 0, T);
        EXPECT_NEAR(v, f.report.per_stage_distortion[T - 1], 1e-9 * v);
    }
}
