#pragma once

// One decision step of the fused recommender and its ablation variants.
//
// predict() is a pure function of (belief, memory, option set, sample batch).
// The caller owns the order of operations: predict with the pre-update
// belief, commit the smoothed memory on interaction rounds only, then fold
// in the observed choice.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "adaptfuse/aggregation.hpp"
#include "adaptfuse/belief_engine.hpp"
#include "adaptfuse/fusion.hpp"

namespace adaptfuse {

enum class VariantKind { kAdaptFuse, kSymbolicOnly, kSamplerOnly, kMajorityVote, kFixedFusion, kNoEma };

struct AgentVariant {
  VariantKind kind = VariantKind::kAdaptFuse;
  double lambda = 0.5;  // fixed_fusion only

  bool uses_sampler() const { return kind != VariantKind::kSymbolicOnly; }

  std::string tag() const {
    switch (kind) {
      case VariantKind::kAdaptFuse: return "adaptfuse";
      case VariantKind::kSymbolicOnly: return "symbolic_only";
      case VariantKind::kSamplerOnly: return "sampler_only";
      case VariantKind::kMajorityVote: return "majority_vote";
      case VariantKind::kNoEma: return "no_ema";
      case VariantKind::kFixedFusion: {
        char buf[64];
        std::snprintf(buf, sizeof buf, "fixed_fusion(%g)", lambda);
        return buf;
      }
    }
    return "?";
  }

  static std::optional<AgentVariant> parse(const std::string& s) {
    if (s == "adaptfuse" || s == "full") return AgentVariant{VariantKind::kAdaptFuse};
    if (s == "symbolic_only") return AgentVariant{VariantKind::kSymbolicOnly};
    if (s == "sampler_only") return AgentVariant{VariantKind::kSamplerOnly};
    if (s == "majority_vote") return AgentVariant{VariantKind::kMajorityVote};
    if (s == "no_ema") return AgentVariant{VariantKind::kNoEma};
    if (s == "fixed_fusion") return AgentVariant{VariantKind::kFixedFusion, 0.5};
    const std::string prefix = "fixed_fusion(";
    if (s.rfind(prefix, 0) == 0 && s.size() > prefix.size() + 1 && s.back() == ')') {
      try {
        std::size_t used = 0;
        const std::string num = s.substr(prefix.size(), s.size() - prefix.size() - 1);
        const double lam = std::stod(num, &used);
        if (used != num.size() || lam < 0.0 || lam > 1.0) return std::nullopt;
        return AgentVariant{VariantKind::kFixedFusion, lam};
      } catch (const std::exception&) {
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  friend bool operator==(const AgentVariant&, const AgentVariant&) = default;
};

/// Hyperparameters shared by every variant.
struct AgentConfig {
  BeliefEngineConfig engine{};
  double alpha0 = 1.0;
  double momentum = 0.65;
  FusionConfig fusion{};
  SamplerConfig sampler{};

  void validate(std::size_t k) const {
    engine.validate(k);
    require(alpha0 > 0.0, "AgentConfig: alpha_0 must be > 0");
    require(momentum >= 0.0 && momentum < 1.0, "AgentConfig: momentum must be in [0,1)");
    fusion.validate();
    sampler.validate();
  }
};

struct AgentState {
  Belief belief;
  MomentumMemory memory;

  std::uint64_t checksum() const {
    return adaptfuse::checksum(belief.log_masses(), memory.checksum() ^ 0x9e3779b97f4a7c15ull);
  }
};

inline AgentState initial_state(const AgentConfig& cfg, const AgentVariant& v, std::size_t m) {
  AgentState s{uniform_prior(m), MomentumMemory{}};
  s.memory.momentum = v.kind == VariantKind::kNoEma ? 0.0 : cfg.momentum;
  return s;
}

struct Prediction {
  OptionDistribution pi_sym;
  std::optional<OptionDistribution> pi_llm_raw;
  std::optional<OptionDistribution> pi_llm;
  OptionDistribution fused;
  std::size_t chosen = 0;  // 0-based
  FusionDiagnostics diagnostics;
  MomentumMemory memory_after;  // what an interaction round would commit
  bool features_ok = true;
};

/// Fused prediction for one option set. `parsed` is empty when feature
/// extraction failed for any option; `batch` is required for variants that
/// use the sampler.
inline Prediction predict(const AgentConfig& cfg, const AgentVariant& v, const AgentState& state,
                          const HypothesisSet& hs, const std::optional<OptionSet>& parsed, std::size_t k,
                          const SampleBatch* batch) {
  cfg.validate(k);
  Prediction p;
  p.features_ok = parsed.has_value();
  p.pi_sym = symbolic_predictive_or_uniform(cfg.engine.choice, state.belief, hs, parsed, k);
  p.memory_after = state.memory;

  if (v.uses_sampler()) {
    require(batch != nullptr, "predict: this variant needs a sample batch");
    OptionDistribution raw =
        v.kind == VariantKind::kMajorityVote ? majority_vote(*batch, k) : dirichlet_aggregate(*batch, k, cfg.alpha0);
    auto [smoothed, mem] = smooth(state.memory, raw);
    p.pi_llm_raw = std::move(raw);
    p.pi_llm = std::move(smoothed);
    p.memory_after = std::move(mem);
  }

  switch (v.kind) {
    case VariantKind::kSymbolicOnly: {
      p.fused = p.pi_sym;
      p.chosen = p.fused.argmax();
      auto& d = p.diagnostics;
      d.entropy_sym = normalized_entropy(p.pi_sym);
      d.w_llm = 0.0;
      d.w_sym = 1.0;
      d.llm_share = 0.0;
      d.bound = 0.5;
      break;
    }
    case VariantKind::kSamplerOnly: {
      p.fused = *p.pi_llm;
      p.chosen = p.fused.argmax();
      auto& d = p.diagnostics;
      d.entropy_sym = normalized_entropy(p.pi_sym);
      d.entropy_llm = normalized_entropy(*p.pi_llm);
      d.w_llm = 1.0;
      d.w_sym = 0.0;
      d.llm_share = 1.0;
      d.bound = 1.0;
      break;
    }
    default: {
      FusionConfig fc = cfg.fusion;
      if (v.kind == VariantKind::kFixedFusion)
        fc.mode = FixedWeighting{v.lambda};
      else
        fc.mode = AdaptiveWeighting{};
      auto r = fuse(*p.pi_llm, p.pi_sym, fc);
      p.fused = std::move(r.fused);
      p.chosen = r.chosen;
      p.diagnostics = r.diagnostics;
      break;
    }
  }
  return p;
}

/// Commits an interaction round: memory takes the smoothed value produced by
/// the prediction, then the belief absorbs the observed choice y.
inline AgentState commit_round(const AgentConfig& cfg, const AgentState& state, const Prediction& pred,
                               const HypothesisSet& hs, const std::optional<OptionSet>& parsed, std::size_t y) {
  AgentState next;
  next.memory = pred.memory_after;
  next.belief = bayes_update_or_keep(cfg.engine, state.belief, hs, parsed, y);
  return next;
}

}  // namespace adaptfuse
