#include "biasaudit/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "biasaudit/errors.hpp"

namespace biasaudit {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string join_nonempty(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& part : parts) {
    if (part.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += part;
  }
  return out;
}

auto record_key(const RecommendationRecord& r) {
  return std::tuple(r.group.race, r.group.gender, r.response_index);
}

std::string strip_code_fences(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos && line.compare(first, 3, "```") == 0) continue;
    out += line;
    out.push_back('\n');
  }
  return out;
}

std::string strip_trailing_commas(const std::string& text) {
  static const std::regex trailing(R"(,\s*\})");
  return std::regex_replace(text, trailing, "}");
}

std::string trim_to_braces(const std::string& text) {
  auto open = text.find('{');
  auto close = text.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) return text;
  return text.substr(open, close - open + 1);
}

std::vector<ProductEntry> pairs_from_object(const ordered_json& obj) {
  std::vector<ProductEntry> out;
  for (const auto& item : obj.items()) {
    const auto& value = item.value();
    out.push_back({item.key(), value.is_string() ? value.get<std::string>() : value.dump()});
  }
  return out;
}

RecommendationRecord record_from_json(const ordered_json& j, std::size_t line_no) {
  auto fail = [line_no](const std::string& what) -> ValidationFailure {
    return ValidationFailure("corpus line " + std::to_string(line_no) + ": " + what);
  };

  if (!j.is_object()) throw fail("not a JSON object");

  for (const char* field : {"race", "gender", "products", "raw_response", "model_id",
                            "temperature", "created_at", "response_index", "schema_version"})
    if (!j.contains(field)) throw fail(std::string("missing field \"") + field + "\"");

  const int schema = j.at("schema_version").get<int>();
  if (schema != Corpus::kSchemaVersion)
    throw SchemaMismatch("corpus line " + std::to_string(line_no) + ": unknown schema_version " +
                         std::to_string(schema));

  RecommendationRecord record;
  const auto race = parse_race(j.at("race").get<std::string>());
  if (!race) throw fail("unknown race label \"" + j.at("race").get<std::string>() + "\"");
  const auto gender = parse_gender(j.at("gender").get<std::string>());
  if (!gender) throw fail("unknown gender label \"" + j.at("gender").get<std::string>() + "\"");
  record.group = {*race, *gender};

  const auto& products = j.at("products");
  if (!products.is_array() || products.empty()) throw fail("products must be a non-empty array");
  for (const auto& p : products) {
    if (!p.is_object() || !p.contains("name") || !p.contains("reason"))
      throw fail("product entries need name and reason");
    record.products.push_back({p.at("name").get<std::string>(), p.at("reason").get<std::string>()});
  }

  record.raw_response = j.at("raw_response").get<std::string>();
  record.model_id = j.at("model_id").get<std::string>();
  record.temperature = j.at("temperature").get<double>();
  record.created_at = j.at("created_at").get<std::string>();
  record.response_index = j.at("response_index").get<int>();
  if (record.response_index < 0) throw fail("response_index must be >= 0");
  return record;
}

}  // namespace

std::string RecommendationRecord::item_text() const {
  std::vector<std::string> names;
  names.reserve(products.size());
  for (const auto& p : products) names.push_back(p.name);
  return join_nonempty(names);
}

std::string RecommendationRecord::reason_text() const {
  std::vector<std::string> reasons;
  reasons.reserve(products.size());
  for (const auto& p : products) reasons.push_back(p.reason);
  return join_nonempty(reasons);
}

void Corpus::add(RecommendationRecord record) {
  auto pos = std::upper_bound(records_.begin(), records_.end(), record,
                              [](const RecommendationRecord& a, const RecommendationRecord& b) {
                                return record_key(a) < record_key(b);
                              });
  records_.insert(pos, std::move(record));
}

bool Corpus::contains(const GroupSpec& group, int response_index) const {
  return std::any_of(records_.begin(), records_.end(), [&](const RecommendationRecord& r) {
    return r.group == group && r.response_index == response_index;
  });
}

std::string_view to_label(TextField field) {
  switch (field) {
    case TextField::Item: return "item";
    case TextField::Reason: return "reason";
    case TextField::Both: return "both";
  }
  return "";
}

std::vector<ProductEntry> parse_llm_response(std::string_view raw) {
  if (raw.empty()) throw UnparseableResponse("empty response text", std::string(raw));

  const std::string original(raw);
  ordered_json parsed = ordered_json::parse(original, nullptr, false);
  if (parsed.is_discarded()) {
    std::string repaired = trim_to_braces(strip_trailing_commas(strip_code_fences(original)));
    parsed = ordered_json::parse(repaired, nullptr, false);
    if (parsed.is_discarded())
      throw UnparseableResponse("response is not valid JSON after repair", original);
  }
  if (!parsed.is_object())
    throw UnparseableResponse("response JSON is not an object", original);
  if (parsed.empty()) throw EmptyObject("response object has no key/value pairs");
  return pairs_from_object(parsed);
}

std::string build_group_text(const Corpus& corpus, const GroupSpec& group, TextField field) {
  std::vector<std::string> parts;
  for (const auto& record : corpus.records()) {
    if (record.group != group) continue;
    switch (field) {
      case TextField::Item: parts.push_back(record.item_text()); break;
      case TextField::Reason: parts.push_back(record.reason_text()); break;
      case TextField::Both:
        parts.push_back(record.item_text());
        parts.push_back(record.reason_text());
        break;
    }
  }
  return join_nonempty(parts);
}

std::string record_to_json_line(const RecommendationRecord& record) {
  ordered_json j;
  j["race"] = to_label(record.group.race);
  j["gender"] = to_label(record.group.gender);
  ordered_json products = ordered_json::array();
  for (const auto& p : record.products) {
    ordered_json entry;
    entry["name"] = p.name;
    entry["reason"] = p.reason;
    products.push_back(std::move(entry));
  }
  j["products"] = std::move(products);
  j["raw_response"] = record.raw_response;
  j["model_id"] = record.model_id;
  j["temperature"] = record.temperature;
  j["created_at"] = record.created_at;
  j["response_index"] = record.response_index;
  j["schema_version"] = Corpus::kSchemaVersion;
  return j.dump();
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + tmp.string() + " for writing");
    for (const auto& record : corpus.records()) out << record_to_json_line(record) << '\n';
    if (!out) throw IoFailure("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoFailure("cannot move " + tmp.string() + " to " + path.string());
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string() + " for reading");

  Corpus corpus;
  std::set<std::tuple<Race, Gender, int>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw UnparseableResponse("corpus line " + std::to_string(line_no) + " is not valid JSON",
                                line);
    RecommendationRecord record = record_from_json(j, line_no);
    auto key = std::tuple(record.group.race, record.group.gender, record.response_index);
    if (!seen.insert(key).second)
      throw ValidationFailure("corpus line " + std::to_string(line_no) + ": duplicate record for " +
                              record.group.slug() + " index " +
                              std::to_string(record.response_index));
    corpus.add(std::move(record));
  }
  return corpus;
}

CorpusValidation validate_corpus(const Corpus& corpus) {
  CorpusValidation v;
  v.record_count = corpus.size();

  std::map<GroupSpec, std::size_t> counts;
  for (const auto& record : corpus.records()) {
    ++counts[record.group];
    if (!record.conformant_product_count()) ++v.nonconformant_product_counts;
    try {
      if (parse_llm_response(record.raw_response) != record.products) ++v.raw_reparse_mismatches;
    } catch (const Error&) {
      ++v.raw_reparse_mismatches;
    }
  }
  v.per_group.assign(counts.begin(), counts.end());
  v.complete_grid = counts.size() == all_groups().size();
  return v;
}

}  // namespace biasaudit
