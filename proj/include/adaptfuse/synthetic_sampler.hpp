#pragma once

// Calibrated stand-in for a language model: answers with the user's best
// option with probability p (otherwise a uniformly random wrong option) and
// reports a Beta-distributed confidence conditioned on correctness.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "adaptfuse/aggregation.hpp"
#include "adaptfuse/choice_model.hpp"
#include "adaptfuse/rng.hpp"

namespace adaptfuse {

struct BetaParams {
  double a = 1.0;
  double b = 1.0;
};

struct SyntheticSamplerConfig {
  // Accuracy per completed-round count; the last entry repeats.
  std::vector<double> accuracy{0.55};
  BetaParams correct_confidence{5.0, 2.0};
  BetaParams incorrect_confidence{2.0, 5.0};
  double failure_rate = 0.0;  // fraction of calls answered with unparseable text

  void validate() const {
    require(!accuracy.empty(), "SyntheticSamplerConfig: accuracy schedule is empty");
    for (double p : accuracy) require(p >= 0.0 && p <= 1.0, "SyntheticSamplerConfig: accuracy must be in [0,1]");
    require(correct_confidence.a > 0 && correct_confidence.b > 0 && incorrect_confidence.a > 0 &&
                incorrect_confidence.b > 0,
            "SyntheticSamplerConfig: Beta parameters must be > 0");
    require(failure_rate >= 0.0 && failure_rate <= 1.0, "SyntheticSamplerConfig: failure rate must be in [0,1]");
  }

  double accuracy_at(std::size_t completed_rounds) const {
    return accuracy[std::min(completed_rounds, accuracy.size() - 1)];
  }
};

class SyntheticSampler final : public SemanticSampler {
 public:
  SyntheticSampler(SyntheticSamplerConfig cfg, std::vector<double> reference_weights, Rng rng)
      : cfg_(std::move(cfg)), reference_(std::move(reference_weights)), rng_(std::move(rng)) {
    cfg_.validate();
  }

  std::optional<std::string> complete(const SamplerQuery& q) override {
    const std::size_t k = q.options.size();
    if (cfg_.failure_rate > 0.0 && uniform01(rng_) < cfg_.failure_rate) return std::string("I cannot decide.");
    const std::size_t best = best_option(reference_, q.options);
    const bool correct = uniform01(rng_) < cfg_.accuracy_at(q.history.size());
    std::size_t pick = best;
    if (!correct) {
      pick = static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<long>(k) - 2));
      if (pick >= best) ++pick;
    }
    const BetaParams& bp = correct ? cfg_.correct_confidence : cfg_.incorrect_confidence;
    const double c = sample_beta(rng_, bp.a, bp.b);
    char buf[96];
    std::snprintf(buf, sizeof buf, "ANSWER: %zu CONFIDENCE: %.17g", pick + 1, c);
    return std::string(buf);
  }

 private:
  SyntheticSamplerConfig cfg_;
  std::vector<double> reference_;
  Rng rng_;
};

}  // namespace adaptfuse
