#pragma once

// Exact sequential Bayesian posterior over a discrete hypothesis set, and the
// posterior-predictive distribution over the options of one decision point.
//
// Likelihoods are floored at epsilon before taking logs; beliefs live in log
// space so that long histories do not underflow.

#include <cmath>
#include <optional>
#include <vector>

#include "adaptfuse/choice_model.hpp"
#include "adaptfuse/core.hpp"

namespace adaptfuse {

struct BeliefEngineConfig {
  double likelihood_floor = 1e-8;
  ChoiceModelConfig choice{};

  void validate(std::size_t k) const {
    choice.validate();
    require(likelihood_floor > 0.0, "BeliefEngineConfig: floor must be > 0");
    require(likelihood_floor < 1.0 / static_cast<double>(k),
            "BeliefEngineConfig: floor must be < 1/K");
  }
};

/// Row-major M x K matrix of P(i | X, h_m).
class LikelihoodTable {
 public:
  LikelihoodTable(const ChoiceModelConfig& cfg, const HypothesisSet& hs, const OptionSet& x)
      : m_(hs.size()), k_(x.size()), p_(m_ * k_) {
    cfg.validate();
    require(hs.dim() == x.dim(), "LikelihoodTable: dimension mismatch");
    std::vector<double> u(k_);
    for (std::size_t m = 0; m < m_; ++m) {
      for (std::size_t i = 0; i < k_; ++i) u[i] = utility(hs[m], x[i]);
      const auto row = softmax(u, cfg.beta);
      std::copy(row.begin(), row.end(), p_.begin() + static_cast<std::ptrdiff_t>(m * k_));
    }
  }

  /// Table from explicit per-hypothesis option distributions.
  static LikelihoodTable from_rows(const std::vector<std::vector<double>>& rows) {
    require(!rows.empty() && rows.front().size() >= 2, "LikelihoodTable: need M >= 1 rows of K >= 2");
    LikelihoodTable t(rows.size(), rows.front().size());
    for (std::size_t m = 0; m < rows.size(); ++m) {
      require(rows[m].size() == t.k_, "LikelihoodTable: ragged rows");
      require(is_probability_vector(rows[m]), "LikelihoodTable: row is not a distribution");
      std::copy(rows[m].begin(), rows[m].end(), t.p_.begin() + static_cast<std::ptrdiff_t>(m * t.k_));
    }
    return t;
  }

  std::size_t hypotheses() const { return m_; }
  std::size_t options() const { return k_; }
  double operator()(std::size_t m, std::size_t i) const { return p_[m * k_ + i]; }
  std::span<const double> row(std::size_t m) const { return {p_.data() + m * k_, k_}; }

 private:
  LikelihoodTable(std::size_t m, std::size_t k) : m_(m), k_(k), p_(m * k) {}

  std::size_t m_, k_;
  std::vector<double> p_;
};

inline Belief uniform_prior(std::size_t m) {
  require(m >= 1, "uniform_prior: M must be >= 1");
  return Belief::from_log_masses(std::vector<double>(m, -std::log(static_cast<double>(m))));
}

/// log max(eps, P(y | X, h_m)) for every hypothesis.
inline std::vector<double> floored_log_likelihoods(const LikelihoodTable& table, std::size_t y,
                                                   double floor) {
  require(y < table.options(), "floored_log_likelihoods: choice index out of range");
  std::vector<double> ll(table.hypotheses());
  for (std::size_t m = 0; m < ll.size(); ++m) ll[m] = std::log(std::max(floor, table(m, y)));
  return ll;
}

/// Posterior from a prior and per-hypothesis log-likelihoods of one choice.
inline Belief bayes_update(const Belief& b, std::span<const double> log_likelihood) {
  require(b.size() == log_likelihood.size(), "bayes_update: belief/likelihood size mismatch");
  std::vector<double> lm(b.size());
  for (std::size_t m = 0; m < lm.size(); ++m) lm[m] = b.log_mass(m) + log_likelihood[m];
  return Belief::from_log_masses(std::move(lm));
}

inline Belief bayes_update(const BeliefEngineConfig& cfg, const Belief& b, const LikelihoodTable& table,
                           std::size_t y) {
  cfg.validate(table.options());
  require(b.size() == table.hypotheses(), "bayes_update: belief size != M");
  return bayes_update(b, floored_log_likelihoods(table, y, cfg.likelihood_floor));
}

inline Belief bayes_update(const BeliefEngineConfig& cfg, const Belief& b, const HypothesisSet& hs,
                           const OptionSet& x, std::size_t y) {
  require(y < x.size(), "bayes_update: choice index out of range");
  return bayes_update(cfg, b, LikelihoodTable(cfg.choice, hs, x), y);
}

/// Unrolled posterior under the uniform prior: the normalized product of all
/// floored likelihoods in the history.
inline Belief closed_form_posterior(const BeliefEngineConfig& cfg, const HypothesisSet& hs,
                                    const InteractionHistory& history) {
  require(!history.empty(), "closed_form_posterior: history must be nonempty");
  std::vector<double> acc(hs.size(), 0.0);
  for (const auto& r : history) {
    cfg.validate(r.options.size());
    const auto ll = floored_log_likelihoods(LikelihoodTable(cfg.choice, hs, r.options), r.chosen,
                                            cfg.likelihood_floor);
    for (std::size_t m = 0; m < acc.size(); ++m) acc[m] += ll[m];
  }
  return Belief::from_log_masses(std::move(acc));
}

inline OptionDistribution symbolic_predictive(const Belief& b, const LikelihoodTable& table) {
  require(b.size() == table.hypotheses(), "symbolic_predictive: belief size != M");
  std::vector<double> pi(table.options(), 0.0);
  for (std::size_t m = 0; m < table.hypotheses(); ++m) {
    const double w = b.mass(m);
    if (w == 0.0) continue;
    const auto row = table.row(m);
    for (std::size_t i = 0; i < pi.size(); ++i) pi[i] += w * row[i];
  }
  return OptionDistribution::from_weights(pi);
}

inline OptionDistribution symbolic_predictive(const ChoiceModelConfig& cfg, const Belief& b,
                                              const HypothesisSet& hs, const OptionSet& x) {
  return symbolic_predictive(b, LikelihoodTable(cfg, hs, x));
}

/// Predictive for a round whose option features may have failed to parse:
/// without features there is no likelihood, so the prediction is uniform.
inline OptionDistribution symbolic_predictive_or_uniform(const ChoiceModelConfig& cfg, const Belief& b,
                                                         const HypothesisSet& hs,
                                                         const std::optional<OptionSet>& x,
                                                         std::size_t k) {
  if (!x) return OptionDistribution::uniform(k);
  return symbolic_predictive(cfg, b, hs, *x);
}

/// Update that becomes a no-op when the round's features are unavailable.
inline Belief bayes_update_or_keep(const BeliefEngineConfig& cfg, const Belief& b,
                                   const HypothesisSet& hs, const std::optional<OptionSet>& x,
                                   std::size_t y) {
  if (!x) return b;
  return bayes_update(cfg, b, hs, *x, y);
}

}  // namespace adaptfuse
