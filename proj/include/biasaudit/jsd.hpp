#pragma once

#include <map>
#include <string>
#include <vector>

#include "biasaudit/preprocess.hpp"

namespace biasaudit {

// Relative word frequencies for one group; entries are strictly positive and
// sum to 1 up to floating-point error.
struct FreqDistribution {
  std::map<std::string, double> probs;
};

// Base 2 keeps the divergence in [0, 1] with disjoint supports at exactly 1.
enum class LogBase { Two, E };

enum class FavoredSide { Marked, Unmarked };

struct JsdContribution {
  std::string word;
  double contribution = 0.0;  // this word's share of the total divergence
  double percent = 0.0;       // 100 * contribution / total
  FavoredSide favored = FavoredSide::Unmarked;
  bool tie = false;  // equal probability on both sides; assigned Unmarked
};

// Throws EmptyCorpus on zero total.
FreqDistribution to_distribution(const GroupCounts& counts);

// Jensen-Shannon divergence via the mixture M = (P + Q) / 2. Zero-probability
// terms contribute nothing. Throws EmptyDistribution.
double jsd(const FreqDistribution& p, const FreqDistribution& q, LogBase base = LogBase::Two);

// Per-word decomposition of the divergence: the contributions sum exactly to
// jsd(p, q) and each one is nonnegative. Sorted by contribution descending,
// ties alphabetical; top_k <= 0 returns every word in the union support.
// Throws ZeroDivergence when p == q, since percentages are undefined there.
std::vector<JsdContribution> word_contributions(const FreqDistribution& p,
                                                const FreqDistribution& q, int top_k,
                                                LogBase base = LogBase::Two);

}  // namespace biasaudit
