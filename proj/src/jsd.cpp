#include "biasaudit/jsd.hpp"

#include <algorithm>
#include <cmath>

#include "biasaudit/errors.hpp"

namespace biasaudit {

namespace {

double xlog_ratio(double p, double m, LogBase base) {
  if (p <= 0.0) return 0.0;
  return base == LogBase::Two ? p * std::log2(p / m) : p * std::log(p / m);
}

// Walks the union support of two ordered maps.
template <typename Fn>
void for_each_union(const FreqDistribution& p, const FreqDistribution& q, Fn&& fn) {
  auto ip = p.probs.begin();
  auto iq = q.probs.begin();
  while (ip != p.probs.end() || iq != q.probs.end()) {
    if (iq == q.probs.end() || (ip != p.probs.end() && ip->first < iq->first)) {
      fn(ip->first, ip->second, 0.0);
      ++ip;
    } else if (ip == p.probs.end() || iq->first < ip->first) {
      fn(iq->first, 0.0, iq->second);
      ++iq;
    } else {
      fn(ip->first, ip->second, iq->second);
      ++ip;
      ++iq;
    }
  }
}

double pointwise_term(double pv, double qv, LogBase base) {
  const double m = 0.5 * (pv + qv);
  return 0.5 * (xlog_ratio(pv, m, base) + xlog_ratio(qv, m, base));
}

}  // namespace

FreqDistribution to_distribution(const GroupCounts& counts) {
  if (counts.total <= 0) throw EmptyCorpus("cannot normalize empty counts into a distribution");
  FreqDistribution dist;
  const double denom = static_cast<double>(counts.total);
  for (const auto& [word, count] : counts.counts)
    dist.probs.emplace(word, static_cast<double>(count) / denom);
  return dist;
}

double jsd(const FreqDistribution& p, const FreqDistribution& q, LogBase base) {
  if (p.probs.empty() || q.probs.empty())
    throw EmptyDistribution("jsd needs two non-empty distributions");
  double total = 0.0;
  for_each_union(p, q, [&](const std::string&, double pv, double qv) {
    total += pointwise_term(pv, qv, base);
  });
  return total;
}

std::vector<JsdContribution> word_contributions(const FreqDistribution& p,
                                                const FreqDistribution& q, int top_k,
                                                LogBase base) {
  if (p.probs.empty() || q.probs.empty())
    throw EmptyDistribution("jsd needs two non-empty distributions");

  std::vector<JsdContribution> out;
  double total = 0.0;
  for_each_union(p, q, [&](const std::string& word, double pv, double qv) {
    JsdContribution c;
    c.word = word;
    c.contribution = pointwise_term(pv, qv, base);
    c.favored = pv > qv ? FavoredSide::Marked : FavoredSide::Unmarked;
    c.tie = pv == qv;
    total += c.contribution;
    out.push_back(std::move(c));
  });
  if (total <= 0.0)
    throw ZeroDivergence("distributions are identical; contribution shares are undefined");

  for (auto& c : out) c.percent = 100.0 * c.contribution / total;
  std::sort(out.begin(), out.end(), [](const JsdContribution& a, const JsdContribution& b) {
    if (a.contribution != b.contribution) return a.contribution > b.contribution;
    return a.word < b.word;
  });
  if (top_k > 0 && static_cast<std::size_t>(top_k) < out.size()) out.resize(top_k);
  return out;
}

}  // namespace biasaudit
