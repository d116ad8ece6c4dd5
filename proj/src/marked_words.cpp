#include "biasaudit/marked_words.hpp"

#include <algorithm>
#include <cmath>

#include "biasaudit/errors.hpp"

namespace biasaudit {

PriorVector compute_prior(const GroupCounts& combined) {
  if (combined.total <= 0) throw EmptyCorpus("cannot build a prior from an empty corpus");
  PriorVector prior;
  const double denom = static_cast<double>(combined.total);
  for (const auto& [word, count] : combined.counts)
    prior.alpha.emplace(word, static_cast<double>(count) / denom);
  prior.alpha0 = 1.0;
  return prior;
}

LogOddsStat log_odds_stat(const std::string& word, const GroupCounts& marked,
                          const GroupCounts& unmarked, const PriorVector& prior,
                          const MarkedWordsConfig& config) {
  if (config.laplace < 0.0) throw InvalidArgument("laplace must be nonnegative");
  const auto it = prior.alpha.find(word);
  if (it == prior.alpha.end()) throw InvalidArgument("word not in prior: " + word);
  if (marked.total <= 0 || unmarked.total <= 0)
    throw EmptyCorpus("log-odds needs a non-empty token stream on both sides");

  const double alpha_w = it->second;
  const double alpha_rest = prior.alpha0 - alpha_w;

  const double c_marked = static_cast<double>(marked.count_of(word)) + config.laplace;
  const double c_unmarked = static_cast<double>(unmarked.count_of(word)) + config.laplace;
  const double rest_marked = (static_cast<double>(marked.total) - c_marked) + alpha_rest;
  const double rest_unmarked = (static_cast<double>(unmarked.total) - c_unmarked) + alpha_rest;
  if (rest_marked <= 0.0 || rest_unmarked <= 0.0)
    throw NonPositiveDenominator("degenerate corpus: all mass on \"" + word + "\"");

  LogOddsStat stat;
  stat.word = word;
  stat.delta = std::log((c_marked + alpha_w) / rest_marked) -
               std::log((c_unmarked + alpha_w) / rest_unmarked);
  stat.var_marked = 1.0 / (c_marked + alpha_w) + 1.0 / rest_marked;
  stat.var_unmarked = 1.0 / (c_unmarked + alpha_w) + 1.0 / rest_unmarked;
  stat.z = stat.delta / std::sqrt(stat.var_marked + stat.var_unmarked);
  return stat;
}

namespace {

void sort_by_z(std::vector<LogOddsStat>& stats) {
  std::sort(stats.begin(), stats.end(), [](const LogOddsStat& a, const LogOddsStat& b) {
    if (a.z != b.z) return a.z > b.z;
    return a.word < b.word;
  });
}

}  // namespace

std::vector<LogOddsStat> all_log_odds_stats(const GroupCounts& marked, const GroupCounts& unmarked,
                                            const MarkedWordsConfig& config) {
  if (config.z_threshold <= 0.0) throw InvalidArgument("z_threshold must be positive");
  if (config.laplace < 0.0) throw InvalidArgument("laplace must be nonnegative");
  if (config.min_count < 0) throw InvalidArgument("min_count must be nonnegative");
  if (marked.total <= 0 || unmarked.total <= 0)
    throw EmptyCorpus("marked-words needs non-empty token streams on both sides");
  const PriorVector prior = compute_prior(merge_counts(marked, unmarked));

  std::vector<LogOddsStat> stats;
  stats.reserve(prior.alpha.size());
  for (const auto& [word, alpha] : prior.alpha)
    stats.push_back(log_odds_stat(word, marked, unmarked, prior, config));
  sort_by_z(stats);
  return stats;
}

std::vector<LogOddsStat> marked_words(const GroupCounts& marked, const GroupCounts& unmarked,
                                      const MarkedWordsConfig& config) {
  std::vector<LogOddsStat> stats = all_log_odds_stats(marked, unmarked, config);
  std::vector<LogOddsStat> out;
  for (auto& stat : stats) {
    if (marked.count_of(stat.word) < config.min_count) continue;
    if (stat.z > config.z_threshold) out.push_back(std::move(stat));
  }
  return out;
}

}  // namespace biasaudit
