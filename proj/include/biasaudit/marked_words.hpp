#pragma once

#include <map>
#include <string>
#include <vector>

#include "biasaudit/preprocess.hpp"

namespace biasaudit {

// Informative Dirichlet prior: per-word pseudo-counts proportional to the
// combined corpus frequencies, so alpha0 is exactly 1.
struct PriorVector {
  std::map<std::string, double> alpha;
  double alpha0 = 1.0;
};

struct MarkedWordsConfig {
  double z_threshold = 1.96;
  // Additive smoothing applied to per-word counts everywhere they appear in
  // the log-odds and variance terms. 0 keeps the pure informative-prior form;
  // paper-style runs use 0.5.
  double laplace = 0.0;
  long long min_count = 0;
};

struct LogOddsStat {
  std::string word;
  double delta = 0.0;         // prior-smoothed log-odds difference, natural log
  double var_marked = 0.0;    // variance contribution from the marked group
  double var_unmarked = 0.0;  // variance contribution from the unmarked group
  double z = 0.0;
};

// alpha[w] = combined.counts[w] / combined.total. Throws EmptyCorpus.
PriorVector compute_prior(const GroupCounts& combined);

// Log-odds delta, per-group variances and z-score for one word. Throws
// InvalidArgument if the word is not in the prior, EmptyCorpus on zero totals,
// NonPositiveDenominator on degenerate tiny corpora.
LogOddsStat log_odds_stat(const std::string& word, const GroupCounts& marked,
                          const GroupCounts& unmarked, const PriorVector& prior,
                          const MarkedWordsConfig& config);

// Full statistic over the shared vocabulary, z descending, ties alphabetical.
// The prior is computed from merge(marked, unmarked).
std::vector<LogOddsStat> all_log_odds_stats(const GroupCounts& marked, const GroupCounts& unmarked,
                                            const MarkedWordsConfig& config);

// Words significantly favoring the marked group: marked count >= min_count
// and z > z_threshold, sorted as above. Swap the arguments for the
// unmarked-direction table; antisymmetry makes the two runs consistent.
std::vector<LogOddsStat> marked_words(const GroupCounts& marked, const GroupCounts& unmarked,
                                      const MarkedWordsConfig& config);

}  // namespace biasaudit
