#pragma once

// Entropy-adaptive fusion of the semantic and symbolic option distributions.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <utility>
#include <variant>

#include "adaptfuse/core.hpp"

namespace adaptfuse {

struct AdaptiveWeighting {};
struct FixedWeighting {
  double lambda = 0.5;  // weight on the semantic source
};

struct FusionConfig {
  double weight_floor = 1e-3;
  std::variant<AdaptiveWeighting, FixedWeighting> mode = AdaptiveWeighting{};

  void validate() const {
    require(weight_floor > 0.0 && weight_floor <= 1.0, "FusionConfig: weight floor must be in (0,1]");
    if (const auto* f = std::get_if<FixedWeighting>(&mode))
      require(f->lambda >= 0.0 && f->lambda <= 1.0, "FusionConfig: lambda must be in [0,1]");
  }

  bool adaptive() const { return std::holds_alternative<AdaptiveWeighting>(mode); }
};

struct FusionDiagnostics {
  double w_llm = 0.0;
  double w_sym = 0.0;
  double llm_share = 0.0;  // w_llm / (w_llm + w_sym)
  double bound = 0.0;      // 1 / (1 + w_sym)
  double entropy_llm = 0.0;
  double entropy_sym = 0.0;

  bool bound_holds(double tol = 1e-12) const { return llm_share <= bound + tol; }
};

struct FusionResult {
  OptionDistribution fused;
  std::size_t chosen = 0;  // 0-based; lowest index wins ties
  FusionDiagnostics diagnostics;
};

/// Shannon entropy divided by log K, clamped to [0,1]. 0 log 0 is 0.
inline double normalized_entropy(std::span<const double> pi) {
  require(pi.size() >= 2, "normalized_entropy: K must be >= 2");
  double h = 0.0;
  for (double p : pi)
    if (p > 0.0) h -= p * std::log(p);
  return std::clamp(h / std::log(static_cast<double>(pi.size())), 0.0, 1.0);
}

inline double normalized_entropy(const OptionDistribution& pi) { return normalized_entropy(pi.probs()); }

inline double confidence_weight(const OptionDistribution& pi, double floor) {
  return std::max(floor, 1.0 - normalized_entropy(pi));
}

/// (w_llm, w_sym), each max(floor, 1 - normalized entropy).
inline std::pair<double, double> adaptive_weights(const OptionDistribution& pi_llm,
                                                  const OptionDistribution& pi_sym,
                                                  const FusionConfig& cfg) {
  cfg.validate();
  require(pi_llm.size() == pi_sym.size(), "adaptive_weights: K mismatch");
  return {confidence_weight(pi_llm, cfg.weight_floor), confidence_weight(pi_sym, cfg.weight_floor)};
}

inline FusionResult fuse(const OptionDistribution& pi_llm, const OptionDistribution& pi_sym,
                         const FusionConfig& cfg) {
  cfg.validate();
  require(pi_llm.size() == pi_sym.size(), "fuse: K mismatch");

  FusionDiagnostics diag;
  diag.entropy_llm = normalized_entropy(pi_llm);
  diag.entropy_sym = normalized_entropy(pi_sym);
  if (const auto* f = std::get_if<FixedWeighting>(&cfg.mode)) {
    diag.w_llm = f->lambda;
    diag.w_sym = 1.0 - f->lambda;
  } else {
    diag.w_llm = std::max(cfg.weight_floor, 1.0 - diag.entropy_llm);
    diag.w_sym = std::max(cfg.weight_floor, 1.0 - diag.entropy_sym);
  }
  diag.llm_share = diag.w_llm / (diag.w_llm + diag.w_sym);
  diag.bound = 1.0 / (1.0 + diag.w_sym);

  std::vector<double> mix(pi_llm.size());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = diag.w_llm * pi_llm[i] + diag.w_sym * pi_sym[i];
  FusionResult out{OptionDistribution::from_weights(mix), 0, diag};
  out.chosen = out.fused.argmax();

  // A violated bound can only come from a bug in the weights above.
  assert(diag.bound_holds());
#ifdef NDEBUG
  if (!diag.bound_holds())
    std::fprintf(stderr, "fuse: share bound violated (share=%.17g bound=%.17g)\n", diag.llm_share,
                 diag.bound);
#endif
  return out;
}

}  // namespace adaptfuse
