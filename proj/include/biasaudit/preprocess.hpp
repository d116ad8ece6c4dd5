#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace biasaudit {

// Tokens are always lowercase [a-z0-9]+.
using TokenList = std::vector<std::string>;

// Lowercases, deletes hyphens and apostrophes (joining the surrounding
// characters, so "Noise-Canceling" becomes "noisecanceling"), and treats every
// other non-alphanumeric character as a separator.
TokenList normalize_tokenize(std::string_view text);

std::string join_tokens(const TokenList& tokens);

// Explicit demographic markers removed before classifier-style analyses.
// Matching is whole-token; every stored term is itself a single valid token.
struct AnonymizationLexicon {
  std::unordered_set<std::string> pronoun_terms;
  std::unordered_set<std::string> race_terms;
  std::unordered_set<std::string> gender_terms;
  std::unordered_set<std::string> title_terms;

  bool matches(const std::string& token) const {
    return pronoun_terms.count(token) || race_terms.count(token) || gender_terms.count(token) ||
           title_terms.count(token);
  }

  std::size_t size() const {
    return pronoun_terms.size() + race_terms.size() + gender_terms.size() + title_terms.size();
  }

  std::vector<std::string> all_terms() const;
};

// The lexicon shipped with the toolkit. Covers he/she/they pronoun forms, the
// five race labels with common variants, gender nouns, and salutation titles.
const AnonymizationLexicon& default_lexicon();

// Plain text, one term per line, '#' starts a comment. Terms are normalized
// through the tokenizer; a line must yield exactly one token.
AnonymizationLexicon load_lexicon(const std::filesystem::path& path);

TokenList anonymize(const TokenList& tokens, const AnonymizationLexicon& lexicon);

// Standard English stopword list, already in token form. Off by default in
// every pipeline; enabled only by explicit flag.
const std::unordered_set<std::string>& english_stopwords();

TokenList remove_stopwords(const TokenList& tokens);

// Word counts for one group's text. total is the token count C of the group.
struct GroupCounts {
  std::map<std::string, long long> counts;  // no zero-valued entries
  long long total = 0;

  long long count_of(const std::string& word) const {
    auto it = counts.find(word);
    return it == counts.end() ? 0 : it->second;
  }

  bool operator==(const GroupCounts&) const = default;
};

GroupCounts count_words(const TokenList& tokens);
GroupCounts merge_counts(const GroupCounts& a, const GroupCounts& b);

}  // namespace biasaudit
