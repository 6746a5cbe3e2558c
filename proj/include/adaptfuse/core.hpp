#pragma once

// Shared domain types and probability-vector arithmetic.
//
// Indices are 0-based everywhere inside the library. Anything that crosses a
// process boundary (JSON payloads, CLI output, model answers) is 1-based and is
// converted at that boundary only.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace adaptfuse {

/// Tolerance used when validating that a vector sums to one.
inline constexpr double kSumTolerance = 1e-9;

/// Thrown when a caller breaks a documented precondition.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a vector cannot be normalized (all zero, or non-finite).
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline void require(bool cond, const char* what) {
  if (!cond) throw ContractViolation(what);
}

/// Returns raw / sum(raw). Entries must be finite and nonnegative with at
/// least one positive entry.
inline std::vector<double> normalize(std::span<const double> raw) {
  double total = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v)) throw DegenerateInput("normalize: non-finite entry");
    if (v < 0.0) throw DegenerateInput("normalize: negative entry");
    total += v;
  }
  if (!(total > 0.0)) throw DegenerateInput("normalize: all entries are zero");
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / total;
  return out;
}

inline std::vector<double> normalize(const std::vector<double>& raw) {
  return normalize(std::span<const double>(raw));
}

/// log(sum(exp(v))) with max-subtraction.
inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double hi = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

inline bool is_probability_vector(std::span<const double> p,
                                  double tol = kSumTolerance) {
  if (p.empty()) return false;
  double total = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) return false;
    total += v;
  }
  return std::abs(total - 1.0) <= tol;
}

/// A point in [0,1]^d: one normalized scalar per item attribute.
class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(std::vector<double> values) : values_(std::move(values)) {
    require(!values_.empty(), "FeatureVector: dimensionality must be >= 1");
    for (double v : values_)
      require(v >= 0.0 && v <= 1.0, "FeatureVector: entries must lie in [0,1]");
  }

  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::vector<double> values_;
};

/// A candidate preference weight vector. The id is its row in the owning set.
struct Hypothesis {
  std::size_t id = 0;
  std::vector<double> weights;

  std::size_t dim() const { return weights.size(); }
};

/// Fixed read-only table of candidate preference vectors.
class HypothesisSet {
 public:
  HypothesisSet() = default;

  explicit HypothesisSet(std::vector<std::vector<double>> weights) {
    require(!weights.empty(), "HypothesisSet: M must be >= 1");
    dim_ = weights.front().size();
    require(dim_ >= 1, "HypothesisSet: d must be >= 1");
    hypotheses_.reserve(weights.size());
    for (std::size_t m = 0; m < weights.size(); ++m) {
      require(weights[m].size() == dim_, "HypothesisSet: mixed dimensionality");
      hypotheses_.push_back(Hypothesis{m, std::move(weights[m])});
    }
    // Duplicate check on a sorted index view.
    std::vector<std::size_t> order(hypotheses_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return hypotheses_[a].weights < hypotheses_[b].weights;
    });
    for (std::size_t i = 1; i < order.size(); ++i)
      require(hypotheses_[order[i - 1]].weights != hypotheses_[order[i]].weights,
              "HypothesisSet: duplicate weight vector");
  }

  std::size_t size() const { return hypotheses_.size(); }
  std::size_t dim() const { return dim_; }
  const Hypothesis& operator[](std::size_t m) const { return hypotheses_[m]; }
  auto begin() const { return hypotheses_.begin(); }
  auto end() const { return hypotheses_.end(); }

  /// Row index of an exact weight match, or size() when absent.
  std::size_t find(std::span<const double> w) const {
    for (const auto& h : hypotheses_)
      if (std::equal(h.weights.begin(), h.weights.end(), w.begin(), w.end())) return h.id;
    return hypotheses_.size();
  }

 private:
  std::vector<Hypothesis> hypotheses_;
  std::size_t dim_ = 0;
};

/// Posterior over a HypothesisSet, held as log-masses normalized so that
/// log-sum-exp is zero. Probabilities are materialized on read.
class Belief {
 public:
  Belief() = default;

  static Belief from_log_masses(std::vector<double> log_mass) {
    require(!log_mass.empty(), "Belief: M must be >= 1");
    const double z = log_sum_exp(log_mass);
    if (!std::isfinite(z)) throw DegenerateInput("Belief: log-masses do not normalize");
    for (double& v : log_mass) v -= z;
    Belief b;
    b.log_mass_ = std::move(log_mass);
    return b;
  }

  static Belief from_probabilities(std::span<const double> p) {
    require(is_probability_vector(p), "Belief: not a probability vector");
    std::vector<double> lm(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      require(p[i] > 0.0, "Belief: entries must be strictly positive");
      lm[i] = std::log(p[i]);
    }
    return from_log_masses(std::move(lm));
  }

  std::size_t size() const { return log_mass_.size(); }
  std::span<const double> log_masses() const { return log_mass_; }
  double log_mass(std::size_t m) const { return log_mass_[m]; }
  double mass(std::size_t m) const { return std::exp(log_mass_[m]); }

  std::vector<double> masses() const {
    std::vector<double> p(log_mass_.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(log_mass_[i]);
    return p;
  }

  std::size_t mode() const {
    return static_cast<std::size_t>(
        std::max_element(log_mass_.begin(), log_mass_.end()) - log_mass_.begin());
  }

  /// Shannon entropy in nats.
  double entropy() const {
    double h = 0.0;
    for (double lm : log_mass_) h -= std::exp(lm) * lm;
    return h;
  }

  friend bool operator==(const Belief&, const Belief&) = default;

 private:
  std::vector<double> log_mass_;
};

/// K candidate items for one decision point.
class OptionSet {
 public:
  OptionSet() = default;
  OptionSet(std::vector<FeatureVector> options, std::vector<std::string> raw_texts)
      : options_(std::move(options)), raw_texts_(std::move(raw_texts)) {
    require(options_.size() >= 2, "OptionSet: K must be >= 2");
    const std::size_t d = options_.front().dim();
    for (const auto& x : options_) require(x.dim() == d, "OptionSet: mixed dimensionality");
    if (raw_texts_.empty()) raw_texts_.resize(options_.size());
    require(raw_texts_.size() == options_.size(), "OptionSet: text count != K");
  }

  std::size_t size() const { return options_.size(); }
  std::size_t dim() const { return options_.front().dim(); }
  const FeatureVector& operator[](std::size_t i) const { return options_[i]; }
  const std::vector<FeatureVector>& options() const { return options_; }
  const std::vector<std::string>& raw_texts() const { return raw_texts_; }

  friend bool operator==(const OptionSet&, const OptionSet&) = default;

 private:
  std::vector<FeatureVector> options_;
  std::vector<std::string> raw_texts_;
};

/// Probability vector over the K options of one OptionSet.
class OptionDistribution {
 public:
  OptionDistribution() = default;
  explicit OptionDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    require(is_probability_vector(probs_), "OptionDistribution: not a probability vector");
  }

  static OptionDistribution uniform(std::size_t k) {
    require(k >= 1, "OptionDistribution: K must be >= 1");
    return OptionDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }

  /// Normalizes nonnegative weights into a distribution.
  static OptionDistribution from_weights(std::span<const double> w) {
    return OptionDistribution(normalize(w));
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }
  const std::vector<double>& vec() const { return probs_; }

  /// Lowest index among the maxima.
  std::size_t argmax() const {
    return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) -
                                    probs_.begin());
  }

  friend bool operator==(const OptionDistribution&, const OptionDistribution&) = default;

 private:
  std::vector<double> probs_;
};

struct Round {
  OptionSet options;
  std::size_t chosen = 0;  // 0-based
};

/// Observed (option set, choice) pairs in order.
class InteractionHistory {
 public:
  void append(OptionSet options, std::size_t chosen) {
    require(chosen < options.size(), "InteractionHistory: chosen index out of range");
    rounds_.push_back(Round{std::move(options), chosen});
  }

  std::size_t size() const { return rounds_.size(); }
  bool empty() const { return rounds_.empty(); }
  const Round& operator[](std::size_t t) const { return rounds_[t]; }
  auto begin() const { return rounds_.begin(); }
  auto end() const { return rounds_.end(); }

 private:
  std::vector<Round> rounds_;
};

/// FNV-1a over the object representation of a sequence of doubles. Used for
/// state checksums; equal values give equal hashes on the same platform.
inline std::uint64_t checksum(std::span<const double> v, std::uint64_t seed = 1469598103934665603ull) {
  std::uint64_t h = seed;
  for (double x : v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &x, sizeof(double));
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace adaptfuse
