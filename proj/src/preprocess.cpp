#include "biasaudit/preprocess.hpp"

#include <algorithm>
#include <fstream>

#include "biasaudit/errors.hpp"

namespace biasaudit {

namespace {

bool is_lower_alnum(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); }

void insert_terms(std::unordered_set<std::string>& set, std::initializer_list<const char*> terms) {
  for (const char* term : terms) set.insert(term);
}

}  // namespace

TokenList normalize_tokenize(std::string_view text) {
  TokenList out;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (c >= 'A' && c <= 'Z') {
      current.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      current.push_back(static_cast<char>(c));
    } else if (c == '-' || c == '\'') {
      // joins the surrounding characters
    } else if (c == 0xE2 && i + 2 < text.size() &&
               static_cast<unsigned char>(text[i + 1]) == 0x80) {
      // UTF-8 typographic quotes U+2018/U+2019 and hyphens U+2010/U+2011 join
      // like their ASCII counterparts; other punctuation in this block splits.
      const unsigned char third = static_cast<unsigned char>(text[i + 2]);
      i += 2;
      if (third == 0x98 || third == 0x99 || third == 0x90 || third == 0x91) continue;
      if (!current.empty()) {
        out.push_back(std::move(current));
        current.clear();
      }
    } else {
      if (!current.empty()) {
        out.push_back(std::move(current));
        current.clear();
      }
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::string join_tokens(const TokenList& tokens) {
  std::string out;
  for (const auto& token : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

std::vector<std::string> AnonymizationLexicon::all_terms() const {
  std::vector<std::string> out;
  out.reserve(size());
  for (const auto* set : {&pronoun_terms, &race_terms, &gender_terms, &title_terms})
    out.insert(out.end(), set->begin(), set->end());
  std::sort(out.begin(), out.end());
  return out;
}

const AnonymizationLexicon& default_lexicon() {
  static const AnonymizationLexicon lexicon = [] {
    AnonymizationLexicon lex;
    // subject/object/possessive forms for he, she, they
    insert_terms(lex.pronoun_terms, {"he", "him", "his", "she", "her", "hers", "they", "them",
                                     "their", "theirs"});
    insert_terms(lex.race_terms, {"asian", "black", "latino", "latina", "latinx", "middleeastern",
                                  "white", "caucasian"});
    insert_terms(lex.gender_terms, {"man", "woman", "men", "women", "nonbinary"});
    insert_terms(lex.title_terms, {"mr", "mrs", "ms", "mx"});
    return lex;
  }();
  return lexicon;
}

AnonymizationLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open lexicon file " + path.string());

  AnonymizationLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  std::string section = "pronoun";
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    std::string comment;
    if (hash != std::string::npos) {
      comment = line.substr(hash + 1);
      line = line.substr(0, hash);
    }
    // "# section: race" comments switch the target set; terms before any
    // section marker count as pronouns.
    auto marker = comment.find("section:");
    if (marker != std::string::npos) {
      TokenList name = normalize_tokenize(comment.substr(marker + 8));
      if (name.size() == 1) section = name[0];
    }
    TokenList tokens = normalize_tokenize(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 1)
      throw ValidationFailure("lexicon line " + std::to_string(line_no) +
                              " does not normalize to a single token: " + line);
    auto& target = section == "race"     ? lex.race_terms
                   : section == "gender" ? lex.gender_terms
                   : section == "title"  ? lex.title_terms
                                         : lex.pronoun_terms;
    target.insert(tokens[0]);
  }
  return lex;
}

TokenList anonymize(const TokenList& tokens, const AnonymizationLexicon& lexicon) {
  TokenList out;
  out.reserve(tokens.size());
  for (const auto& token : tokens)
    if (!lexicon.matches(token)) out.push_back(token);
  return out;
}

const std::unordered_set<std::string>& english_stopwords() {
  static const std::unordered_set<std::string> words = [] {
    // Common English function words; apostrophe forms appear here already
    // collapsed the way the tokenizer collapses them.
    static const char* kWords[] = {
        "a",       "about",   "above",  "after",   "again",    "against", "all",     "am",
        "an",      "and",     "any",    "are",     "arent",    "as",      "at",      "be",
        "because", "been",    "before", "being",   "below",    "between", "both",    "but",
        "by",      "cant",    "cannot", "could",   "couldnt",  "did",     "didnt",   "do",
        "does",    "doesnt",  "doing",  "dont",    "down",     "during",  "each",    "few",
        "for",     "from",    "further", "had",    "hadnt",    "has",     "hasnt",   "have",
        "havent",  "having",  "he",     "hed",     "hell",     "hes",     "her",     "here",
        "heres",   "hers",    "herself", "him",    "himself",  "his",     "how",     "hows",
        "i",       "id",      "ill",    "im",      "ive",      "if",      "in",      "into",
        "is",      "isnt",    "it",     "its",     "itself",   "lets",    "me",      "more",
        "most",    "mustnt",  "my",     "myself",  "no",       "nor",     "not",     "of",
        "off",     "on",      "once",   "only",    "or",       "other",   "ought",   "our",
        "ours",    "ourselves", "out",  "over",    "own",      "same",    "shant",   "she",
        "shed",    "shell",   "shes",   "should",  "shouldnt", "so",      "some",    "such",
        "than",    "that",    "thats",  "the",     "their",    "theirs",  "them",    "themselves",
        "then",    "there",   "theres", "these",   "they",     "theyd",   "theyll",  "theyre",
        "theyve",  "this",    "those",  "through", "to",       "too",     "under",   "until",
        "up",      "very",    "was",    "wasnt",   "we",       "wed",     "well",    "were",
        "weve",    "werent",  "what",   "whats",   "when",     "whens",   "where",   "wheres",
        "which",   "while",   "who",    "whos",    "whom",     "why",     "whys",    "with",
        "wont",    "would",   "wouldnt", "you",    "youd",     "youll",   "youre",   "youve",
        "your",    "yours",   "yourself", "yourselves"};
    std::unordered_set<std::string> set;
    for (const char* w : kWords) set.insert(w);
    return set;
  }();
  return words;
}

TokenList remove_stopwords(const TokenList& tokens) {
  const auto& stop = english_stopwords();
  TokenList out;
  out.reserve(tokens.size());
  for (const auto& token : tokens)
    if (!stop.count(token)) out.push_back(token);
  return out;
}

GroupCounts count_words(const TokenList& tokens) {
  GroupCounts out;
  for (const auto& token : tokens) ++out.counts[token];
  out.total = static_cast<long long>(tokens.size());
  return out;
}

GroupCounts merge_counts(const GroupCounts& a, const GroupCounts& b) {
  GroupCounts out = a;
  for (const auto& [word, count] : b.counts) out.counts[word] += count;
  out.total = a.total + b.total;
  return out;
}

}  // namespace biasaudit
