#pragma once

// Linear utility and Luce (softmax) choice probabilities.

#include <cmath>
#include <span>
#include <vector>

#include "adaptfuse/core.hpp"

namespace adaptfuse {

struct ChoiceModelConfig {
  double beta = 6.0;  // inverse temperature

  void validate() const { require(beta > 0.0, "ChoiceModelConfig: beta must be > 0"); }
};

inline double utility(std::span<const double> weights, const FeatureVector& x) {
  require(weights.size() == x.dim(), "utility: dimension mismatch");
  double u = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) u += weights[i] * x[i];
  return u;
}

inline double utility(const Hypothesis& h, const FeatureVector& x) {
  return utility(std::span<const double>(h.weights), x);
}

inline std::vector<double> utilities(std::span<const double> weights, const OptionSet& options) {
  std::vector<double> u(options.size());
  for (std::size_t i = 0; i < options.size(); ++i) u[i] = utility(weights, options[i]);
  return u;
}

/// softmax(beta * u), computed with max-subtraction. Equal utilities give
/// bitwise-equal probabilities. beta == 0 is accepted here and yields uniform.
inline std::vector<double> softmax(std::span<const double> u, double beta) {
  require(!u.empty(), "softmax: empty input");
  double hi = u[0];
  for (double v : u) hi = std::max(hi, v);
  std::vector<double> p(u.size());
  double z = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    p[i] = std::exp(beta * (u[i] - hi));
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

/// log softmax(beta * u) for a single entry.
inline double log_softmax_at(std::span<const double> u, double beta, std::size_t i) {
  double hi = u[0];
  for (double v : u) hi = std::max(hi, v);
  double z = 0.0;
  for (double v : u) z += std::exp(beta * (v - hi));
  return beta * (u[i] - hi) - std::log(z);
}

inline OptionDistribution choice_likelihood(const ChoiceModelConfig& cfg,
                                            std::span<const double> weights,
                                            const OptionSet& options) {
  cfg.validate();
  return OptionDistribution(softmax(utilities(weights, options), cfg.beta));
}

inline OptionDistribution choice_likelihood(const ChoiceModelConfig& cfg, const Hypothesis& h,
                                            const OptionSet& options) {
  return choice_likelihood(cfg, std::span<const double>(h.weights), options);
}

/// Index of the highest-utility option; ties go to the lowest index.
inline std::size_t best_option(std::span<const double> weights, const OptionSet& options) {
  const auto u = utilities(weights, options);
  std::size_t best = 0;
  for (std::size_t i = 1; i < u.size(); ++i)
    if (u[i] > u[best]) best = i;
  return best;
}

}  // namespace adaptfuse
