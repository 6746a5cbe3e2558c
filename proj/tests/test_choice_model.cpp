#include <gtest/gtest.h>

#include <random>

#include "adaptfuse/choice_model.hpp"

using namespace adaptfuse;

namespace {

OptionSet make_options(std::initializer_list<std::vector<double>> rows) {
  std::vector<FeatureVector> xs;
  for (const auto& r : rows) xs.emplace_back(r);
  return OptionSet(std::move(xs), {});
}

}  // namespace

TEST(Utility, DotProduct) {
  EXPECT_DOUBLE_EQ(utility(Hypothesis{0, {1.0, 0.0}}, FeatureVector({0.5, 0.9})), 0.5);
  EXPECT_DOUBLE_EQ(utility(Hypothesis{0, {0.0, 0.0, 0.0}}, FeatureVector({0.3, 0.9, 1.0})), 0.0);
  EXPECT_NEAR(utility(Hypothesis{0, {1.0, -1.0, 0.5, 0.0}}, FeatureVector({0.2, 0.4, 0.6, 1.0})), 0.1, 1e-15);
  EXPECT_THROW(utility(Hypothesis{0, {1.0}}, FeatureVector({0.2, 0.4})), ContractViolation);
}

TEST(ChoiceLikelihood, IdenticalOptionsAreUniform) {
  const auto x = make_options({{0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}});
  const auto p = choice_likelihood({6.0}, Hypothesis{0, {1.0, -0.5}}, x);
  for (double v : p.probs()) EXPECT_EQ(v, p[0]);
  EXPECT_NEAR(p[0], 1.0 / 3.0, 1e-15);
}

TEST(ChoiceLikelihood, TwoOptionsBetaSix) {
  const auto x = make_options({{1.0}, {0.0}});
  const auto p = choice_likelihood({6.0}, Hypothesis{0, {1.0}}, x);
  EXPECT_NEAR(p[0], 0.997527376843365225665940092628, 1e-12);
  EXPECT_NEAR(p[1], 0.002472623156634774334059907372, 1e-12);
}

TEST(ChoiceLikelihood, LargeUtilitiesDoNotOverflow) {
  const std::vector<double> u{400.0, 399.0, -400.0};
  const auto p = softmax(u, 6.0);
  for (double v : p) EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(p[0], p[1]);
  EXPECT_GT(p[2], 0.0 - 1e-300);
}

TEST(ChoiceLikelihood, ShiftInvariance) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> util(2 + trial % 6);
    for (auto& v : util) v = u(rng);
    const double c = u(rng) * 10.0;
    std::vector<double> shifted(util);
    for (auto& v : shifted) v += c;
    const auto a = softmax(util, 6.0);
    const auto b = softmax(shifted, 6.0);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(ChoiceLikelihood, MonotoneAndOrderMatching) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> util(3 + trial % 4);
    for (auto& v : util) v = u(rng);
    const auto p = softmax(util, 6.0);
    for (std::size_t i = 0; i < util.size(); ++i)
      for (std::size_t j = 0; j < util.size(); ++j)
        if (util[i] > util[j]) EXPECT_GT(p[i], p[j]);
    auto bumped = util;
    bumped[0] += 0.1;
    EXPECT_GT(softmax(bumped, 6.0)[0], p[0]);
  }
}

TEST(ChoiceLikelihood, ZeroBetaIsUniform) {
  const auto p = softmax(std::vector<double>{0.1, 3.0, -2.0}, 0.0);
  for (double v : p) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  EXPECT_THROW(ChoiceModelConfig{0.0}.validate(), ContractViolation);
}

TEST(BestOption, TiesGoToLowestIndex) {
  const auto x = make_options({{0.2}, {0.9}, {0.9}});
  EXPECT_EQ(best_option(std::vector<double>{1.0}, x), 1u);
  EXPECT_EQ(best_option(std::vector<double>{0.0}, x), 0u);
}
