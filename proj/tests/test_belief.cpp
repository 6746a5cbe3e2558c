#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "adaptfuse/belief_engine.hpp"
#include "adaptfuse/tasks.hpp"

using namespace adaptfuse;

namespace {

std::vector<double> logs(std::vector<double> p) {
  for (auto& v : p) v = std::log(std::max(1e-8, v));
  return p;
}

std::vector<double> random_weights(std::mt19937_64& rng, std::size_t d) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> w(d);
  for (auto& x : w) x = u(rng);
  return w;
}

OptionSet random_options(std::mt19937_64& rng, std::size_t k, std::size_t d) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<FeatureVector> xs;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> f(d);
    for (auto& v : f) v = u(rng);
    xs.emplace_back(std::move(f));
  }
  return OptionSet(std::move(xs), {});
}

}  // namespace

TEST(UniformPrior, Examples) {
  for (double v : uniform_prior(4).masses()) EXPECT_NEAR(v, 0.25, 1e-15);
  EXPECT_NEAR(uniform_prior(1).mass(0), 1.0, 1e-15);
  for (double v : uniform_prior(625).masses()) EXPECT_NEAR(v, 0.0016, 1e-15);
  EXPECT_THROW(uniform_prior(0), ContractViolation);
}

TEST(BayesUpdate, DirectArithmetic) {
  const auto b = bayes_update(uniform_prior(2), logs({0.8, 0.2}));
  EXPECT_NEAR(b.mass(0), 0.8, 1e-15);
  EXPECT_NEAR(b.mass(1), 0.2, 1e-15);
}

TEST(BayesUpdate, UninformativeObservationKeepsBelief) {
  const auto prior = Belief::from_probabilities(std::vector<double>{0.1, 0.6, 0.3});
  const auto b = bayes_update(prior, logs({0.37, 0.37, 0.37}));
  for (std::size_t m = 0; m < 3; ++m) EXPECT_NEAR(b.mass(m), prior.mass(m), 1e-15);
}

TEST(BayesUpdate, FloorAppliesToLikelihood) {
  const auto b = bayes_update(uniform_prior(2), logs({1e-12, 0.5}));
  EXPECT_NEAR(b.mass(0), 1.99999996e-8, 1e-20);
}

TEST(BayesUpdate, FloorThroughChoiceModel) {
  // At d=4 the utility gap of 4 gives P = 1/(1+e^24), far below the floor.
  HypothesisSet hs({{1, 1, 1, 1}, {-1, -1, -1, -1}});
  OptionSet x({FeatureVector({1, 1, 1, 1}), FeatureVector({0, 0, 0, 0})}, {});
  const auto b = bayes_update(BeliefEngineConfig{}, uniform_prior(2), hs, x, 1);
  // 1e-8 / (1e-8 + e^24/(1+e^24)), high-precision reference.
  EXPECT_NEAR(b.mass(0), 9.9999999003775144469e-9, 1e-21);
  EXPECT_GT(b.mass(0), 0.0);
}

TEST(BayesUpdate, FloorMustStayBelowOneOverK) {
  BeliefEngineConfig cfg;
  cfg.likelihood_floor = 0.5;
  EXPECT_THROW(cfg.validate(2), ContractViolation);
  EXPECT_NO_THROW(cfg.validate(1));
}

TEST(ClosedForm, SingleRoundMatchesOneUpdate) {
  const BeliefEngineConfig cfg;
  const auto hs = build_hypothesis_set(2);
  OptionSet x({FeatureVector({0.1, 0.9}), FeatureVector({0.8, 0.3}), FeatureVector({0.5, 0.5})}, {});
  InteractionHistory h;
  h.append(x, 2);
  const auto a = closed_form_posterior(cfg, hs, h);
  const auto b = bayes_update(cfg, uniform_prior(hs.size()), hs, x, 2);
  for (std::size_t m = 0; m < hs.size(); ++m) EXPECT_NEAR(a.mass(m), b.mass(m), 1e-15);
}

TEST(ClosedForm, RejectsEmptyHistory) {
  EXPECT_THROW(closed_form_posterior({}, build_hypothesis_set(2), InteractionHistory{}), ContractViolation);
}

TEST(ClosedForm, AgreesWithSequentialFoldOnRandomHistories) {
  std::mt19937_64 rng(2024);
  const BeliefEngineConfig cfg;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 2 + rng() % 4;
    const std::size_t m = 1 + rng() % 100;
    std::vector<std::vector<double>> rows;
    while (rows.size() < m) rows.push_back(random_weights(rng, d));
    HypothesisSet hs(rows);
    InteractionHistory h;
    Belief seq = uniform_prior(m);
    const std::size_t t_max = 1 + rng() % 10;
    for (std::size_t t = 0; t < t_max; ++t) {
      const std::size_t k = 2 + rng() % 4;
      auto x = random_options(rng, k, d);
      const std::size_t y = rng() % k;
      seq = bayes_update(cfg, seq, hs, x, y);
      h.append(std::move(x), y);
    }
    const auto cf = closed_form_posterior(cfg, hs, h);
    for (std::size_t i = 0; i < m; ++i) ASSERT_NEAR(cf.mass(i), seq.mass(i), 1e-12);
  }
}

TEST(Belief, PositivityUnderAdversarialChoices) {
  const BeliefEngineConfig cfg;
  const auto hs = build_hypothesis_set(4);
  Belief b = uniform_prior(hs.size());
  OptionSet x({FeatureVector({1, 1, 1, 1}), FeatureVector({0, 0, 0, 0})}, {});
  for (int t = 0; t < 400; ++t) {
    b = bayes_update(cfg, b, hs, x, t % 2);
    for (double lm : b.log_masses()) ASSERT_TRUE(std::isfinite(lm));
  }
  for (double lm : b.log_masses()) EXPECT_GT(lm, -std::numeric_limits<double>::infinity());
}

TEST(SymbolicPredictive, MixtureArithmetic) {
  const auto t = LikelihoodTable::from_rows({{0.9, 0.1}, {0.2, 0.8}});
  const auto pi = symbolic_predictive(Belief::from_probabilities(std::vector<double>{0.3, 0.7}), t);
  EXPECT_NEAR(pi[0], 0.41, 1e-15);
  EXPECT_NEAR(pi[1], 0.59, 1e-15);
}

TEST(SymbolicPredictive, PointMassReproducesLikelihood) {
  const ChoiceModelConfig cm;
  const auto hs = build_hypothesis_set(2);
  OptionSet x({FeatureVector({0.1, 0.9}), FeatureVector({0.8, 0.3}), FeatureVector({0.5, 0.5})}, {});
  std::vector<double> lm(hs.size(), -std::numeric_limits<double>::infinity());
  lm[7] = 0.0;
  const auto pi = symbolic_predictive(cm, Belief::from_log_masses(lm), hs, x);
  const auto direct = choice_likelihood(cm, hs[7], x);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(pi[i], direct[i]);
}

TEST(SymbolicPredictive, PermutedHypothesesGiveUniform) {
  const auto t = LikelihoodTable::from_rows({{0.7, 0.2, 0.1}, {0.1, 0.7, 0.2}, {0.2, 0.1, 0.7}});
  const auto pi = symbolic_predictive(uniform_prior(3), t);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(pi[i], 1.0 / 3.0, 1e-15);
}

TEST(SymbolicPredictive, ParseFailureFallback) {
  const BeliefEngineConfig cfg;
  const auto hs = build_hypothesis_set(2);
  const auto b = uniform_prior(hs.size());
  const auto pi = symbolic_predictive_or_uniform(cfg.choice, b, hs, std::nullopt, 4);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(pi[i], 0.25);
  const auto kept = bayes_update_or_keep(cfg, b, hs, std::nullopt, 1);
  for (std::size_t m = 0; m < hs.size(); ++m) EXPECT_EQ(kept.log_mass(m), b.log_mass(m));
}

TEST(Belief, PermutationEquivariance) {
  std::mt19937_64 rng(99);
  const BeliefEngineConfig cfg;
  const auto hs = build_hypothesis_set(3);
  for (int trial = 0; trial < 100; ++trial) {
    Belief a = uniform_prior(hs.size()), b = a;
    for (int t = 0; t < 5; ++t) {
      const std::size_t k = 3 + rng() % 3;
      auto x = random_options(rng, k, 3);
      std::vector<std::size_t> perm(k);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<FeatureVector> px;
      for (std::size_t i = 0; i < k; ++i) px.push_back(x[perm[i]]);
      OptionSet xp(std::move(px), {});
      // Option perm[i] of x sits at position i of xp.
      const std::size_t y = rng() % k;
      const std::size_t yp = static_cast<std::size_t>(std::find(perm.begin(), perm.end(), y) - perm.begin());
      const auto pi = symbolic_predictive(cfg.choice, a, hs, x);
      const auto pip = symbolic_predictive(cfg.choice, b, hs, xp);
      for (std::size_t i = 0; i < k; ++i) ASSERT_NEAR(pip[i], pi[perm[i]], 1e-15);
      a = bayes_update(cfg, a, hs, x, y);
      b = bayes_update(cfg, b, hs, xp, yp);
      for (std::size_t m = 0; m < hs.size(); ++m) ASSERT_NEAR(a.mass(m), b.mass(m), 1e-14);
    }
  }
}

// h* in H, user at beta=6, T=50: mass on h* > 0.99 in at least 95% of 200 runs.
TEST(Belief, WellSpecifiedConcentration) {
  const BeliefEngineConfig cfg;
  const auto schema = flight_schema();
  const auto hs = build_hypothesis_set(schema);
  std::size_t hits = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Rng rng = make_rng(seed, Stream::kEpisode);
    Rng user_rng = make_rng(seed, Stream::kUser);
    SimulatedUser user{draw_true_preference(schema.dim(), true, rng), 6.0, false};
    const std::size_t star = hs.find(user.weights);
    ASSERT_LT(star, hs.size());
    Belief b = uniform_prior(hs.size());
    for (int t = 0; t < 50; ++t) {
      const auto x = generate_option_set(schema, 3, rng);
      b = bayes_update(cfg, b, hs, x, user.choose(x, user_rng));
    }
    if (b.mass(star) > 0.99) ++hits;
  }
  RecordProperty("hits", static_cast<int>(hits));
  EXPECT_GE(hits, 190u);
}

// Same setup, checkpoints along one trajectory per seed.
TEST(Belief, MassOnTruthGrowsWithRounds) {
  const BeliefEngineConfig cfg;
  const auto schema = flight_schema();
  const auto hs = build_hypothesis_set(schema);
  double at10 = 0.0, at50 = 0.0, at200 = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng = make_rng(seed, Stream::kEpisode);
    Rng user_rng = make_rng(seed, Stream::kUser);
    SimulatedUser user{draw_true_preference(schema.dim(), true, rng), 6.0, false};
    const std::size_t star = hs.find(user.weights);
    Belief b = uniform_prior(hs.size());
    for (int t = 1; t <= 200; ++t) {
      const auto x = generate_option_set(schema, 3, rng);
      b = bayes_update(cfg, b, hs, x, user.choose(x, user_rng));
      if (t == 10) at10 += b.mass(star);
      if (t == 50) at50 += b.mass(star);
    }
    at200 += b.mass(star);
  }
  EXPECT_LT(at10, at50);
  EXPECT_LT(at50, at200);
  EXPECT_GT(at200 / 100.0, 0.95);
}

// Brute-force empirical KL over the presented option sets picks the
// hypothesis the posterior ends up on.
TEST(Belief, MisspecifiedConcentratesOnKlMinimizer) {
  const BeliefEngineConfig cfg;
  const std::size_t d = 3, T = 200;
  std::size_t agree = 0, runs = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    std::mt19937_64 rng(seed * 7919);
    std::vector<std::vector<double>> rows;
    while (rows.size() < 10) rows.push_back(random_weights(rng, d));
    HypothesisSet hs(rows);
    const auto truth = random_weights(rng, d);
    SimulatedUser user{truth, 6.0, false};
    Rng user_rng = make_rng(seed, Stream::kUser);
    Belief b = uniform_prior(hs.size());
    std::vector<double> kl(hs.size(), 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      const auto x = random_options(rng, 3, d);
      const auto p = softmax(utilities(truth, x), 6.0);
      for (std::size_t m = 0; m < hs.size(); ++m) {
        const auto q = softmax(utilities(hs[m].weights, x), 6.0);
        for (std::size_t i = 0; i < 3; ++i) kl[m] += p[i] * (std::log(p[i]) - std::log(q[i]));
      }
      b = bayes_update(cfg, b, hs, x, user.choose(x, user_rng));
    }
    const auto best = static_cast<std::size_t>(std::min_element(kl.begin(), kl.end()) - kl.begin());
    ++runs;
    if (b.mode() == best) ++agree;
  }
  EXPECT_GE(agree * 10, runs * 8);
}
