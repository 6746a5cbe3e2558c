#pragma once

// Multi-sample semantic prediction: the sampler abstraction, the
// answer-line parser, confidence-weighted Dirichlet aggregation and
// momentum smoothing across interaction rounds.

#include <algorithm>
#include <exception>
#include <future>
#include <optional>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include "adaptfuse/core.hpp"

namespace adaptfuse {

struct SamplerConfig {
  std::size_t n_samples = 5;
  std::vector<double> temperature_pool{0.2, 0.7, 1.0};
  std::vector<std::string> hint_pool{"compare prices first", "consider all attributes",
                                     "weigh trade-offs explicitly", "recall prior user feedback"};

  void validate() const {
    require(n_samples >= 1, "SamplerConfig: n_samples must be >= 1");
    require(!temperature_pool.empty(), "SamplerConfig: temperature pool is empty");
    for (double t : temperature_pool) require(t > 0.0, "SamplerConfig: temperatures must be > 0");
    require(!hint_pool.empty(), "SamplerConfig: hint pool is empty");
  }

  // Temperature and hint share the sample index.
  double temperature_for(std::size_t s) const { return temperature_pool[s % temperature_pool.size()]; }
  const std::string& hint_for(std::size_t s) const { return hint_pool[s % hint_pool.size()]; }
};

/// One elicited answer. A missing prediction marks a parse or transport failure.
struct Sample {
  std::optional<std::size_t> prediction;  // 0-based option index
  double confidence = 0.0;

  bool valid() const { return prediction.has_value(); }
  friend bool operator==(const Sample&, const Sample&) = default;
};

struct SampleBatch {
  std::vector<Sample> samples;

  std::size_t valid_count() const {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [](const Sample& s) { return s.valid(); }));
  }
  friend bool operator==(const SampleBatch&, const SampleBatch&) = default;
};

/// Everything a sampler backend sees for a single call.
struct SamplerQuery {
  const OptionSet& options;
  const InteractionHistory& history;
  double temperature;
  const std::string& hint;
  std::size_t sample_index;  // 0-based position within the batch
};

/// Which sampler implementation a run or service uses.
enum class Backend { kSynthetic, kHttp };

/// A semantic predictor queried N times per decision point. Returns the raw
/// response text, or nullopt on transport failure.
class SemanticSampler {
 public:
  virtual ~SemanticSampler() = default;
  virtual std::optional<std::string> complete(const SamplerQuery& query) = 0;
  /// True when complete() may be called from several threads at once.
  virtual bool concurrent_calls() const { return false; }
};

/// Parses the last `ANSWER: <index> CONFIDENCE: <c>` line of a response.
/// Matching is case-insensitive, the index is 1-based and must lie in
/// [1, K], and the confidence is clamped to [0, 1].
inline std::optional<Sample> parse_answer(const std::string& text, std::size_t k) {
  static const std::regex re(
      R"(answer\s*[:=]?\s*(?:option\s*|flight\s*|hotel\s*|item\s*)?#?\s*(\d+)\s*[,;]?\s*confidence\s*[:=]?\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?))",
      std::regex::icase | std::regex::ECMAScript);
  std::optional<Sample> last;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    unsigned long idx = 0;
    double conf = 0.0;
    try {
      idx = std::stoul(m[1].str());
      conf = std::stod(m[2].str());
    } catch (const std::exception&) {
      last.reset();
      continue;
    }
    if (idx < 1 || idx > k || !std::isfinite(conf)) {
      last.reset();
      continue;
    }
    last = Sample{idx - 1, std::clamp(conf, 0.0, 1.0)};
  }
  return last;
}

/// Issues exactly n_samples calls. Sample s uses temperature_pool[s mod P]
/// and hint_pool[s mod H]. A call that throws, times out or returns text
/// without a valid answer line is recorded as a failed sample.
inline SampleBatch sample_batch(SemanticSampler& sampler, const OptionSet& options,
                                const InteractionHistory& history, const SamplerConfig& cfg) {
  cfg.validate();
  const std::size_t k = options.size();
  auto one = [&](std::size_t s) -> Sample {
    try {
      const SamplerQuery q{options, history, cfg.temperature_for(s), cfg.hint_for(s), s};
      auto text = sampler.complete(q);
      if (!text) return Sample{};
      return parse_answer(*text, k).value_or(Sample{});
    } catch (const std::exception&) {
      return Sample{};
    }
  };

  SampleBatch batch;
  batch.samples.resize(cfg.n_samples);
  if (sampler.concurrent_calls() && cfg.n_samples > 1) {
    std::vector<std::future<Sample>> pending;
    pending.reserve(cfg.n_samples);
    for (std::size_t s = 0; s < cfg.n_samples; ++s)
      pending.push_back(std::async(std::launch::async, one, s));
    for (std::size_t s = 0; s < cfg.n_samples; ++s) batch.samples[s] = pending[s].get();
  } else {
    for (std::size_t s = 0; s < cfg.n_samples; ++s) batch.samples[s] = one(s);
  }
  return batch;
}

/// Pseudo-count vector of one valid sample: c on the predicted option and
/// (1 - c)/(K - 1) on each of the others.
inline std::vector<double> sample_weights(const Sample& s, std::size_t k) {
  require(k >= 2, "sample_weights: K must be >= 2");
  require(s.valid() && *s.prediction < k, "sample_weights: invalid sample");
  require(s.confidence >= 0.0 && s.confidence <= 1.0, "sample_weights: confidence outside [0,1]");
  std::vector<double> w(k, (1.0 - s.confidence) / static_cast<double>(k - 1));
  w[*s.prediction] = s.confidence;
  return w;
}

/// Dirichlet concentration built from a symmetric prior plus sample pseudo-counts.
class DirichletAccumulator {
 public:
  DirichletAccumulator(std::size_t k, double alpha0) : alpha0_(alpha0), alpha_(k, alpha0) {
    require(k >= 2, "DirichletAccumulator: K must be >= 2");
    require(alpha0 > 0.0, "DirichletAccumulator: alpha_0 must be > 0");
  }

  void add(const Sample& s) {
    if (!s.valid()) return;
    const auto w = sample_weights(s, alpha_.size());
    for (std::size_t i = 0; i < w.size(); ++i) alpha_[i] += w[i];
    ++count_;
  }

  void add(const SampleBatch& batch) {
    for (const auto& s : batch.samples) add(s);
  }

  const std::vector<double>& alpha() const { return alpha_; }
  double alpha0() const { return alpha0_; }
  std::size_t count() const { return count_; }
  double total() const {
    double t = 0.0;
    for (double a : alpha_) t += a;
    return t;
  }

  /// Posterior mean alpha / ||alpha||_1.
  OptionDistribution mean() const { return OptionDistribution::from_weights(alpha_); }

 private:
  double alpha0_;
  std::vector<double> alpha_;
  std::size_t count_ = 0;
};

inline OptionDistribution dirichlet_aggregate(const SampleBatch& batch, std::size_t k, double alpha0 = 1.0) {
  DirichletAccumulator acc(k, alpha0);
  acc.add(batch);
  return acc.mean();
}

/// Vote shares of the valid samples; confidences are ignored and options
/// with no vote get zero mass. No valid samples gives uniform.
inline OptionDistribution majority_vote(const SampleBatch& batch, std::size_t k) {
  require(k >= 2, "majority_vote: K must be >= 2");
  std::vector<double> votes(k, 0.0);
  for (const auto& s : batch.samples)
    if (s.valid() && *s.prediction < k) votes[*s.prediction] += 1.0;
  if (std::all_of(votes.begin(), votes.end(), [](double v) { return v == 0.0; }))
    return OptionDistribution::uniform(k);
  return OptionDistribution::from_weights(votes);
}

/// Exponential moving average over aggregated distributions. Empty until
/// the first interaction round writes to it.
struct MomentumMemory {
  std::optional<OptionDistribution> state;
  double momentum = 0.65;

  void validate() const {
    require(momentum >= 0.0 && momentum < 1.0, "MomentumMemory: momentum must be in [0,1)");
  }

  /// Asymptotic effective sample count N / (1 - m).
  double effective_samples(std::size_t n) const { return static_cast<double>(n) / (1.0 - momentum); }

  std::uint64_t checksum() const {
    if (!state) return 0;
    return adaptfuse::checksum(state->probs());
  }

  friend bool operator==(const MomentumMemory&, const MomentumMemory&) = default;
};

/// Returns the smoothed distribution and the memory that would hold it.
/// The caller decides whether to keep the returned memory.
inline std::pair<OptionDistribution, MomentumMemory> smooth(const MomentumMemory& memory,
                                                            const OptionDistribution& raw) {
  memory.validate();
  MomentumMemory next = memory;
  if (!memory.state) {
    next.state = raw;
    return {raw, next};
  }
  require(memory.state->size() == raw.size(), "smooth: memory and raw differ in K");
  const double m = memory.momentum;
  std::vector<double> mix(raw.size());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = m * (*memory.state)[i] + (1.0 - m) * raw[i];
  OptionDistribution out = OptionDistribution::from_weights(mix);
  next.state = out;
  return {out, next};
}

}  // namespace adaptfuse
