#pragma once

// Small statistics helpers for the experiment summaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "adaptfuse/core.hpp"
#include "adaptfuse/rng.hpp"

namespace adaptfuse::stats {

inline double mean(std::span<const double> v) {
  require(!v.empty(), "stats::mean: empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation / sqrt(n).
inline double standard_error(std::span<const double> v) {
  require(v.size() >= 2, "stats::standard_error: need at least two observations");
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  const double n = static_cast<double>(v.size());
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

/// P(X >= k) for X ~ Binomial(n, 1/2).
inline double binomial_upper_tail_half(std::size_t k, std::size_t n) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  double p = 0.0;
  const double log_half_n = static_cast<double>(n) * std::log(0.5);
  for (std::size_t i = k; i <= n; ++i) {
    const double lc = std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(i) + 1.0) -
                      std::lgamma(static_cast<double>(n - i) + 1.0);
    p += std::exp(lc + log_half_n);
  }
  return std::min(1.0, p);
}

struct SignTest {
  std::size_t increases = 0;
  std::size_t decreases = 0;
  std::size_t ties = 0;
  double p_value = 1.0;  // one-sided, H1: after > before
};

/// Paired one-sided sign test; ties are dropped.
inline SignTest sign_test(std::span<const double> before, std::span<const double> after) {
  require(before.size() == after.size(), "stats::sign_test: unpaired samples");
  SignTest r;
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (after[i] > before[i]) ++r.increases;
    else if (after[i] < before[i]) ++r.decreases;
    else ++r.ties;
  }
  r.p_value = binomial_upper_tail_half(r.increases, r.increases + r.decreases);
  return r;
}

struct BootstrapResult {
  double estimate = 0.0;
  double lower = 0.0;  // one-sided lower quantile
  double upper = 0.0;
};

/// Block bootstrap of the mean of paired differences. Consecutive seeds are
/// grouped into blocks of `block` and whole blocks are resampled; trailing
/// seeds that do not fill a block are dropped.
inline BootstrapResult block_bootstrap_mean(std::span<const double> diffs, std::size_t block, std::size_t resamples,
                                            double alpha, std::uint64_t seed) {
  require(block >= 1 && diffs.size() >= block, "stats::block_bootstrap_mean: not enough data");
  const std::size_t nb = diffs.size() / block;
  std::vector<double> block_means(nb);
  for (std::size_t b = 0; b < nb; ++b) block_means[b] = mean(diffs.subspan(b * block, block));
  BootstrapResult r;
  r.estimate = mean(block_means);
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, nb - 1);
  std::vector<double> stats(resamples);
  for (auto& s : stats) {
    double acc = 0.0;
    for (std::size_t b = 0; b < nb; ++b) acc += block_means[pick(rng)];
    s = acc / static_cast<double>(nb);
  }
  std::sort(stats.begin(), stats.end());
  const auto at = [&](double q) {
    const auto i = static_cast<std::size_t>(std::floor(q * static_cast<double>(resamples - 1)));
    return stats[std::min(i, resamples - 1)];
  };
  r.lower = at(alpha);
  r.upper = at(1.0 - alpha);
  return r;
}

}  // namespace adaptfuse::stats
