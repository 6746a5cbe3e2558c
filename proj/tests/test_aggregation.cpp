#include <gtest/gtest.h>

#include <mutex>
#include <random>

#include "adaptfuse/aggregation.hpp"

using namespace adaptfuse;

namespace {

OptionSet three_options() {
  return OptionSet({FeatureVector({0.1}), FeatureVector({0.5}), FeatureVector({0.9})}, {});
}

class RecordingSampler : public SemanticSampler {
 public:
  explicit RecordingSampler(std::string reply) : reply_(std::move(reply)) {}
  std::optional<std::string> complete(const SamplerQuery& q) override {
    temps.push_back(q.temperature);
    hints.push_back(q.hint);
    indices.push_back(q.sample_index);
    return reply_;
  }
  std::vector<double> temps;
  std::vector<std::string> hints;
  std::vector<std::size_t> indices;

 private:
  std::string reply_;
};

class ThrowingSampler : public SemanticSampler {
 public:
  std::optional<std::string> complete(const SamplerQuery& q) override {
    if (q.sample_index == 1) throw std::runtime_error("timeout");
    if (q.sample_index == 2) return std::nullopt;
    return "ANSWER: 2 CONFIDENCE: 0.8";
  }
};

Sample random_sample(std::mt19937_64& rng, std::size_t k) {
  if (rng() % 5 == 0) return Sample{};
  return Sample{rng() % k, std::uniform_real_distribution<double>(0.0, 1.0)(rng)};
}

}  // namespace

TEST(ParseAnswer, Formats) {
  auto s = parse_answer("I think option 2 is best.\nANSWER: 2 CONFIDENCE: 0.8", 3);
  ASSERT_TRUE(s);
  EXPECT_EQ(*s->prediction, 1u);
  EXPECT_DOUBLE_EQ(s->confidence, 0.8);

  s = parse_answer("answer: 1, confidence: .25", 3);
  ASSERT_TRUE(s);
  EXPECT_EQ(*s->prediction, 0u);
  EXPECT_DOUBLE_EQ(s->confidence, 0.25);

  s = parse_answer("ANSWER: 1 CONFIDENCE: 0.1\nOn reflection:\nANSWER: 3 CONFIDENCE: 0.9", 3);
  ASSERT_TRUE(s);
  EXPECT_EQ(*s->prediction, 2u);

  s = parse_answer("ANSWER: Flight 3 CONFIDENCE: 1.7", 3);
  ASSERT_TRUE(s);
  EXPECT_DOUBLE_EQ(s->confidence, 1.0);
}

TEST(ParseAnswer, Failures) {
  EXPECT_FALSE(parse_answer("", 3));
  EXPECT_FALSE(parse_answer("I like the second one", 3));
  EXPECT_FALSE(parse_answer("ANSWER: 0 CONFIDENCE: 0.5", 3));
  EXPECT_FALSE(parse_answer("ANSWER: 4 CONFIDENCE: 0.5", 3));
  EXPECT_FALSE(parse_answer("ANSWER: two CONFIDENCE: 0.5", 3));
}

TEST(SampleBatch, TemperaturesCycleAndHintsAlign) {
  RecordingSampler s("ANSWER: 1 CONFIDENCE: 0.5");
  SamplerConfig cfg;
  InteractionHistory h;
  const auto batch = sample_batch(s, three_options(), h, cfg);
  EXPECT_EQ(batch.samples.size(), 5u);
  EXPECT_EQ(s.temps, (std::vector<double>{0.2, 0.7, 1.0, 0.2, 0.7}));
  ASSERT_EQ(s.hints.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(s.hints[i], cfg.hint_pool[i % cfg.hint_pool.size()]);
}

TEST(SampleBatch, GarbageGivesNoValidSamplesAndUniform) {
  RecordingSampler s("no idea, sorry");
  InteractionHistory h;
  const auto batch = sample_batch(s, three_options(), h, SamplerConfig{});
  EXPECT_EQ(batch.valid_count(), 0u);
  const auto pi = dirichlet_aggregate(batch, 3, 1.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(pi[i], 1.0 / 3.0, 1e-15);
  const auto mv = majority_vote(batch, 3);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(mv[i], 1.0 / 3.0, 1e-15);
}

TEST(SampleBatch, TransportFailuresBecomeFailedSamples) {
  ThrowingSampler s;
  InteractionHistory h;
  const auto batch = sample_batch(s, three_options(), h, SamplerConfig{});
  ASSERT_EQ(batch.samples.size(), 5u);
  EXPECT_FALSE(batch.samples[1].valid());
  EXPECT_FALSE(batch.samples[2].valid());
  EXPECT_EQ(batch.valid_count(), 3u);
}

TEST(Dirichlet, SingleSampleExample) {
  SampleBatch b{{Sample{1, 0.9}}};
  DirichletAccumulator acc(3, 1.0);
  acc.add(b);
  EXPECT_NEAR(acc.alpha()[0], 1.05, 1e-15);
  EXPECT_NEAR(acc.alpha()[1], 1.90, 1e-15);
  EXPECT_NEAR(acc.alpha()[2], 1.05, 1e-15);
  const auto pi = acc.mean();
  EXPECT_NEAR(pi[0], 0.2625, 1e-15);
  EXPECT_NEAR(pi[1], 0.475, 1e-15);
  EXPECT_NEAR(pi[2], 0.2625, 1e-15);
}

TEST(Dirichlet, NoSamplesIsUniform) {
  const auto pi = dirichlet_aggregate(SampleBatch{}, 4, 1.0);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(pi[i], 0.25);
}

TEST(Dirichlet, WeightVectorsSumToOne) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 2 + rng() % 7;
    Sample s{rng() % k, std::uniform_real_distribution<double>(0.0, 1.0)(rng)};
    const auto w = sample_weights(s, k);
    double tot = 0.0;
    for (double v : w) tot += v;
    EXPECT_NEAR(tot, 1.0, 1e-12);
  }
}

TEST(Dirichlet, BatchEqualsIncremental) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 2 + rng() % 7;
    SampleBatch b;
    const std::size_t n = rng() % 12;
    for (std::size_t s = 0; s < n; ++s) b.samples.push_back(random_sample(rng, k));
    const auto batch = dirichlet_aggregate(b, k, 1.0);
    // Incremental: posterior after each sample becomes the next prior.
    std::vector<double> alpha(k, 1.0);
    for (const auto& s : b.samples) {
      if (!s.valid()) continue;
      const auto w = sample_weights(s, k);
      for (std::size_t i = 0; i < k; ++i) alpha[i] += w[i];
    }
    const auto inc = OptionDistribution::from_weights(alpha);
    for (std::size_t i = 0; i < k; ++i) ASSERT_NEAR(batch[i], inc[i], 1e-12);
  }
}

TEST(Dirichlet, FullSupportAndConfidenceMonotonicity) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 500; ++t) {
    const std::size_t k = 2 + rng() % 5;
    SampleBatch b;
    for (int s = 0; s < 5; ++s) b.samples.push_back(random_sample(rng, k));
    const auto pi = dirichlet_aggregate(b, k, 1.0);
    for (std::size_t i = 0; i < k; ++i) EXPECT_GT(pi[i], 0.0);

    const std::size_t target = rng() % k;
    const double lo = std::uniform_real_distribution<double>(0.0, 0.9)(rng);
    auto with = [&](double c) {
      SampleBatch bb = b;
      bb.samples.push_back(Sample{target, c});
      return dirichlet_aggregate(bb, k, 1.0)[target];
    };
    EXPECT_GT(with(lo + 0.1), with(lo));
  }
}

TEST(MajorityVote, IgnoresConfidence) {
  SampleBatch b{{Sample{0, 0.1}, Sample{0, 0.2}, Sample{2, 0.99}, Sample{}}};
  const auto mv = majority_vote(b, 3);
  EXPECT_NEAR(mv[0], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(mv[1], 0.0);
  EXPECT_NEAR(mv[2], 1.0 / 3.0, 1e-15);
}

TEST(Smooth, FirstRoundTakesRaw) {
  MomentumMemory mem;
  const OptionDistribution raw({0.2, 0.8});
  const auto [out, next] = smooth(mem, raw);
  EXPECT_EQ(out.vec(), raw.vec());
  ASSERT_TRUE(next.state);
  EXPECT_FALSE(mem.state);
}

TEST(Smooth, MomentumExample) {
  MomentumMemory mem{OptionDistribution({0.6, 0.4}), 0.65};
  const auto [out, next] = smooth(mem, OptionDistribution({0.2, 0.8}));
  EXPECT_NEAR(out[0], 0.46, 1e-15);
  EXPECT_NEAR(out[1], 0.54, 1e-15);
  EXPECT_EQ(next.state->vec(), out.vec());
  EXPECT_NEAR(mem.effective_samples(5), 5.0 / 0.35, 1e-12);
}

TEST(Smooth, ZeroMomentumPassesThrough) {
  MomentumMemory mem{OptionDistribution({0.6, 0.4}), 0.0};
  const auto [out, next] = smooth(mem, OptionDistribution({0.2, 0.8}));
  EXPECT_EQ(out[0], 0.2);
  EXPECT_THROW(smooth(MomentumMemory{std::nullopt, 1.0}, OptionDistribution({0.5, 0.5})), ContractViolation);
}

TEST(Dirichlet, HalfConfidenceOnTwoOptionsIsUninformative) {
  const auto pi = dirichlet_aggregate(SampleBatch{{Sample{0, 0.5}}}, 2, 1.0);
  EXPECT_EQ(pi[0], 0.5);
  EXPECT_EQ(pi[1], 0.5);
}

TEST(Dirichlet, ConcentrationInvariants) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 500; ++t) {
    const std::size_t k = 2 + rng() % 6;
    DirichletAccumulator acc(k, 1.0);
    for (int s = 0; s < 8; ++s) {
      const double before = acc.total();
      const Sample smp = random_sample(rng, k);
      acc.add(smp);
      EXPECT_NEAR(acc.total() - before, smp.valid() ? 1.0 : 0.0, 1e-12);
      for (double a : acc.alpha()) EXPECT_GE(a, 1.0);
    }
    const auto pi = acc.mean();
    const double lb = 1.0 / (static_cast<double>(k) + static_cast<double>(acc.count()));
    for (std::size_t i = 0; i < k; ++i) EXPECT_GE(pi[i], lb - 1e-15);
  }
}

TEST(Smooth, StaysBetweenInputs) {
  std::mt19937_64 rng(10);
  std::exponential_distribution<double> e(1.0);
  for (int t = 0; t < 500; ++t) {
    const std::size_t k = 2 + rng() % 5;
    std::vector<double> a(k), b(k);
    for (auto& v : a) v = e(rng);
    for (auto& v : b) v = e(rng);
    const auto pa = OptionDistribution::from_weights(a), pb = OptionDistribution::from_weights(b);
    const auto [out, next] = smooth(MomentumMemory{pa, 0.65}, pb);
    for (std::size_t i = 0; i < k; ++i) {
      EXPECT_GE(out[i], std::min(pa[i], pb[i]) - 1e-15);
      EXPECT_LE(out[i], std::max(pa[i], pb[i]) + 1e-15);
      EXPECT_NEAR(out[i], 0.65 * pa[i] + 0.35 * pb[i], 1e-12);
    }
  }
}
