#include <gtest/gtest.h>

#include "lx/cost.hpp"
#include "lx/error.hpp"

using namespace lx::cost;

TEST(Cost, BenchmarkTokenVolumes) {
  EXPECT_EQ(format_usd(estimate_cost(676387, 40804, 1.50, 2.00)), "$1.10");
  EXPECT_EQ(format_usd(estimate_cost(676387, 40804, 10.00, 30.00)), "$7.99");
  // oracle: 676387 * 1.5e-6 + 40804 * 2e-6
  EXPECT_NEAR(estimate_cost(676387, 40804, 1.50, 2.00), 1.0145805 + 0.081608, 1e-12);
}

TEST(Cost, ZeroTokensCostNothing) {
  EXPECT_EQ(estimate_cost(0, 0, 10, 30), 0.0);
  EXPECT_EQ(format_usd(0.0), "$0.00");
}

TEST(Cost, Linear) {
  const double one = estimate_cost(1000, 100, 2.0, 3.0);
  EXPECT_NEAR(estimate_cost(2000, 200, 2.0, 3.0), 2 * one, 1e-15);
}

TEST(Cost, NegativeRejected) {
  EXPECT_THROW(estimate_cost(-1, 0, 1, 1), lx::Error);
  EXPECT_THROW(estimate_cost(1, 0, -1, 1), lx::Error);
}

TEST(Cost, FormatRoundsHalfUp) {
  EXPECT_EQ(format_usd(1.005), "$1.01");
  EXPECT_EQ(format_usd(1.004), "$1.00");
  EXPECT_EQ(format_usd(1585.0), "$1585.00");
}

TEST(Cost, CorpusScalingScenario) {
  // 500,000 reviews of ~268 input tokens at $10/$30 per million, 16 output tokens each.
  const double c = project_corpus_cost(500000, 268, kDefaultOutputTokensPerText, 10.0, 30.0);
  EXPECT_NEAR(c, 1340.0 + 240.0, 1e-9);
  EXPECT_NEAR(c, 1585.0, 10.0);
}

TEST(Cost, WordTokenEstimate) {
  EXPECT_EQ(estimate_tokens_from_words(100), 134);
  EXPECT_EQ(estimate_tokens_from_words(0), 0);
}
