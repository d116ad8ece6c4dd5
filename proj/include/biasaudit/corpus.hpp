#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "biasaudit/groups.hpp"

namespace biasaudit {

struct ProductEntry {
  std::string name;
  std::string reason;

  bool operator==(const ProductEntry&) const = default;
};

// One model response. item_text/reason_text are derived from products and are
// never stored in corpus files.
struct RecommendationRecord {
  GroupSpec group{};
  std::vector<ProductEntry> products;
  std::string raw_response;
  std::string model_id;
  double temperature = 0.0;
  std::string created_at;  // RFC 3339 UTC
  int response_index = 0;

  std::string item_text() const;
  std::string reason_text() const;

  // A fully conformant response carries exactly 10 products. Anything else is
  // kept but surfaced as a quality flag, never dropped.
  bool conformant_product_count() const { return products.size() == 10; }

  bool operator==(const RecommendationRecord&) const = default;
};

class Corpus {
 public:
  static constexpr int kSchemaVersion = 1;

  // Ordered insert keeping records sorted by (group, response_index); equal
  // keys retain insertion order.
  void add(RecommendationRecord record);

  const std::vector<RecommendationRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  bool contains(const GroupSpec& group, int response_index) const;

  bool operator==(const Corpus&) const = default;

 private:
  std::vector<RecommendationRecord> records_;
};

enum class TextField { Item, Reason, Both };

std::string_view to_label(TextField field);

// Extracts the key/value pairs of a model response in document order.
// A bounded repair pass runs once before giving up: code fences stripped,
// trailing commas before '}' removed, text outside the outermost braces cut.
// Throws UnparseableResponse (carrying the raw text) or EmptyObject.
std::vector<ProductEntry> parse_llm_response(std::string_view raw);

// Space-joined field text across all records of the group, in corpus order.
// Both emits item text then reason text per record. Absent group yields "".
std::string build_group_text(const Corpus& corpus, const GroupSpec& group, TextField field);

// JSON Lines, one record per line, UTF-8. load validates labels and the
// schema version, and restores canonical record order.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

std::string record_to_json_line(const RecommendationRecord& record);

struct CorpusValidation {
  std::size_t record_count = 0;
  std::vector<std::pair<GroupSpec, std::size_t>> per_group;
  std::size_t nonconformant_product_counts = 0;  // products != 10
  std::size_t raw_reparse_mismatches = 0;        // raw_response no longer yields products
  bool complete_grid = false;                    // every one of the 15 groups present
};

CorpusValidation validate_corpus(const Corpus& corpus);

}  // namespace biasaudit
