#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "biasaudit/corpus.hpp"
#include "biasaudit/errors.hpp"
#include "biasaudit/preprocess.hpp"
#include "support/temp_dir.hpp"

using namespace biasaudit;
using testsupport::TempDir;

namespace {

RecommendationRecord make_record(Race race, Gender gender, int index,
                                 std::vector<ProductEntry> products) {
  RecommendationRecord record;
  record.group = {race, gender};
  record.products = std::move(products);
  nlohmann::ordered_json raw = nlohmann::ordered_json::object();
  for (const auto& product : record.products) raw[product.name] = product.reason;
  record.raw_response = raw.dump();
  record.model_id = "test";
  record.temperature = 1.0;
  record.created_at = "2025-01-01T00:00:00Z";
  record.response_index = index;
  return record;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("group grid has the 15 expected cells") {
  const auto& groups = all_groups();
  CHECK(groups.size() == 15);
  CHECK(std::set<GroupSpec>(groups.begin(), groups.end()).size() == 15);

  for (const auto& group : groups) {
    CHECK((group.race_markedness() == Markedness::Marked) == (group.race != Race::White));
    CHECK((group.gender_markedness() == Markedness::Marked) == (group.gender != Gender::Man));
    const Pronouns p = group.pronouns();
    CHECK(!p.subject.empty());
    CHECK(!p.object.empty());
    CHECK(!p.possessive.empty());
  }

  CHECK(GroupSpec{Race::White, Gender::Man}.pronouns().object == "him");
  CHECK(GroupSpec{Race::Asian, Gender::Woman}.pronouns().subject == "she");
  CHECK(GroupSpec{Race::Black, Gender::Nonbinary}.pronouns().possessive == "their");
  CHECK(GroupSpec{Race::MiddleEastern, Gender::Woman}.phrase() == "Middle-Eastern women");
  CHECK(GroupSpec{Race::Latino, Gender::Nonbinary}.phrase() == "Latino nonbinary people");
  CHECK(GroupSpec{Race::Asian, Gender::Woman}.slug() == "asian_woman");
}

TEST_CASE("race labels parse strictly") {
  CHECK(parse_race("MiddleEastern") == Race::MiddleEastern);
  CHECK(!parse_race("Martian").has_value());
  CHECK(!parse_race("asian").has_value());
  CHECK(parse_race_flexible("middle-eastern") == Race::MiddleEastern);
  CHECK(parse_gender_flexible("NONBINARY") == Gender::Nonbinary);
}

TEST_CASE("parse_llm_response handles a well-formed object in order") {
  const auto pairs = parse_llm_response(R"({"Tea Kettle": "reason a", "Rice Cooker": "reason b"})");
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].name == "Tea Kettle");
  CHECK(pairs[0].reason == "reason a");
  CHECK(pairs[1].name == "Rice Cooker");
  CHECK(pairs[1].reason == "reason b");
}

TEST_CASE("parse_llm_response repair pass") {
  SUBCASE("code fence and trailing comma") {
    const auto pairs = parse_llm_response("```json\n{\"A\": \"x\",}\n```");
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].name == "A");
    CHECK(pairs[0].reason == "x");
  }
  SUBCASE("prose around the object") {
    const auto pairs =
        parse_llm_response("Sure! Here you go:\n{\"Desk Lamp\": \"bright\"}\nHope that helps.");
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].name == "Desk Lamp");
  }
  SUBCASE("all three repairs together") {
    const auto pairs = parse_llm_response("prefix ```\n{\"A\": \"x\", \"B\": \"y\",}\n``` suffix");
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[1].name == "B");
  }
  SUBCASE("non-string values are stringified") {
    const auto pairs = parse_llm_response(R"({"A": 3, "B": true})");
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].reason == "3");
    CHECK(pairs[1].reason == "true");
  }
}

TEST_CASE("parse_llm_response error cases") {
  CHECK_THROWS_AS(parse_llm_response(""), UnparseableResponse);
  CHECK_THROWS_AS(parse_llm_response("not json at all"), UnparseableResponse);
  CHECK_THROWS_AS(parse_llm_response("[1, 2, 3]"), UnparseableResponse);
  CHECK_THROWS_AS(parse_llm_response("{}"), EmptyObject);

  try {
    parse_llm_response("broken { nope");
    FAIL("expected UnparseableResponse");
  } catch (const UnparseableResponse& e) {
    CHECK(e.raw() == "broken { nope");
  }
}

TEST_CASE("parse_llm_response is idempotent on its re-serialized output") {
  const std::string raw = "```json\n{\"A\": \"x\", \"B\": \"y\",}\n```";
  const auto pairs = parse_llm_response(raw);
  nlohmann::ordered_json round = nlohmann::ordered_json::object();
  for (const auto& pair : pairs) round[pair.name] = pair.reason;
  CHECK(parse_llm_response(round.dump()) == pairs);
}

TEST_CASE("item and reason text derive from products") {
  const auto record = make_record(Race::Asian, Gender::Woman, 0,
                                  {{"rice cooker", "cooks rice"}, {"tea kettle", "boils water"}});
  CHECK(record.item_text() == "rice cooker tea kettle");
  CHECK(record.reason_text() == "cooks rice boils water");
  CHECK(!record.conformant_product_count());
}

TEST_CASE("build_group_text joins records in corpus order") {
  Corpus corpus;
  corpus.add(make_record(Race::Asian, Gender::Woman, 1, {{"smartwatch", "c"}, {"headphones", "d"}}));
  corpus.add(make_record(Race::Asian, Gender::Woman, 0, {{"rice cooker", "a"}, {"tea kettle", "b"}}));

  const GroupSpec group{Race::Asian, Gender::Woman};
  CHECK(build_group_text(corpus, group, TextField::Item) ==
        "rice cooker tea kettle smartwatch headphones");
  CHECK(build_group_text(corpus, group, TextField::Reason) == "a b c d");
  CHECK(build_group_text(corpus, {Race::Black, Gender::Man}, TextField::Item) == "");

  Corpus single;
  single.add(make_record(Race::White, Gender::Man, 0, {{"a b", "c d"}}));
  CHECK(build_group_text(single, {Race::White, Gender::Man}, TextField::Both) == "a b c d");
}

TEST_CASE("corpus keeps canonical (group, response_index) order") {
  Corpus corpus;
  corpus.add(make_record(Race::White, Gender::Man, 0, {{"x", "y"}}));
  corpus.add(make_record(Race::Asian, Gender::Woman, 1, {{"x", "y"}}));
  corpus.add(make_record(Race::Asian, Gender::Woman, 0, {{"x", "y"}}));
  corpus.add(make_record(Race::Asian, Gender::Man, 3, {{"x", "y"}}));

  REQUIRE(corpus.size() == 4);
  CHECK(corpus.records()[0].group == GroupSpec{Race::Asian, Gender::Man});
  CHECK(corpus.records()[1].response_index == 0);
  CHECK(corpus.records()[1].group == GroupSpec{Race::Asian, Gender::Woman});
  CHECK(corpus.records()[2].response_index == 1);
  CHECK(corpus.records()[3].group == GroupSpec{Race::White, Gender::Man});
  CHECK(corpus.contains({Race::Asian, Gender::Woman}, 1));
  CHECK(!corpus.contains({Race::Asian, Gender::Woman}, 2));
}

TEST_CASE("save/load round trip is the identity") {
  TempDir tmp;

  SUBCASE("empty corpus") {
    Corpus empty;
    save_corpus(empty, tmp.file("empty.jsonl"));
    CHECK(slurp(tmp.file("empty.jsonl")).empty());
    CHECK(load_corpus(tmp.file("empty.jsonl")) == empty);
  }

  SUBCASE("records with awkward strings") {
    Corpus corpus;
    corpus.add(make_record(Race::Asian, Gender::Woman, 0,
                           {{"rice \"cooker\"", "has\nnewline and \\ backslash"},
                            {"tea kettle", "unicode \xC3\xA9\xE2\x82\xAC"}}));
    corpus.add(make_record(Race::MiddleEastern, Gender::Nonbinary, 3,
                           {{"air purifier", "clean air"}}));

    const auto path = tmp.file("round.jsonl");
    save_corpus(corpus, path);
    const Corpus loaded = load_corpus(path);
    CHECK(loaded == corpus);

    const std::string first = slurp(path);
    save_corpus(loaded, path);
    CHECK(slurp(path) == first);
  }
}

TEST_CASE("random corpora survive the round trip unchanged") {
  std::mt19937_64 rng(2025);
  const std::vector<std::string> name_pool = {
      "rice cooker", "noise-canceling headphones", "caf\xC3\xA9 press", "10\" tablet stand",
      "mat { } [ ]", "smart\tlabel", "d\xC3\xA9cor \xE2\x82\xAC", "plain mug"};
  const std::vector<std::string> reason_pool = {
      "good \"value\"", "line\nbreak", "backslash \\ escape", "", "plain and simple"};

  std::uniform_int_distribution<std::size_t> pick_group(0, all_groups().size() - 1);
  std::uniform_int_distribution<std::size_t> pick_name(0, name_pool.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_reason(0, reason_pool.size() - 1);
  std::uniform_int_distribution<int> record_count(0, 12);
  std::uniform_int_distribution<int> product_count(1, 10);

  TempDir tmp;
  for (int round = 0; round < 25; ++round) {
    Corpus corpus;
    std::set<std::pair<std::size_t, int>> used;
    const int records = record_count(rng);
    for (int r = 0; r < records; ++r) {
      const std::size_t g = pick_group(rng);
      int index = 0;
      while (used.count({g, index})) ++index;
      used.insert({g, index});

      std::vector<ProductEntry> products;
      const int n = product_count(rng);
      std::set<std::string> names;
      for (int p = 0; p < n; ++p) {
        std::string name = name_pool[pick_name(rng)];
        while (names.count(name)) name += "x";
        names.insert(name);
        products.push_back({name, reason_pool[pick_reason(rng)]});
      }
      corpus.add(make_record(all_groups()[g].race, all_groups()[g].gender, index,
                             std::move(products)));
    }

    const auto path = tmp.file("prop.jsonl");
    save_corpus(corpus, path);
    CHECK(load_corpus(path) == corpus);
    const std::string bytes = slurp(path);
    save_corpus(load_corpus(path), path);
    CHECK(slurp(path) == bytes);
  }
}

TEST_CASE("load_corpus rejects invalid input") {
  TempDir tmp;
  auto write_line = [&](const std::string& name, const std::string& line) {
    std::ofstream out(tmp.file(name), std::ios::binary);
    out << line << "\n";
    return tmp.file(name);
  };

  CHECK_THROWS_AS(load_corpus(tmp.file("missing.jsonl")), IoFailure);
  CHECK_THROWS_AS(load_corpus(write_line("garbage.jsonl", "not json")), UnparseableResponse);

  const std::string valid =
      R"({"race":"Asian","gender":"Woman","products":[{"name":"x","reason":"y"}],)"
      R"("raw_response":"{}","model_id":"m","temperature":1.0,)"
      R"("created_at":"2025-01-01T00:00:00Z","response_index":0,"schema_version":1})";

  CHECK_NOTHROW(load_corpus(write_line("ok.jsonl", valid)));

  std::string martian = valid;
  martian.replace(martian.find("Asian"), 5, "Martian");
  CHECK_THROWS_AS(load_corpus(write_line("martian.jsonl", martian)), ValidationFailure);

  std::string schema = valid;
  schema.replace(schema.find("\"schema_version\":1"), 18, "\"schema_version\":9");
  CHECK_THROWS_AS(load_corpus(write_line("schema.jsonl", schema)), SchemaMismatch);

  std::string empty_products = valid;
  empty_products.replace(empty_products.find(R"([{"name":"x","reason":"y"}])"), 27, "[]");
  CHECK_THROWS_AS(load_corpus(write_line("noproducts.jsonl", empty_products)), ValidationFailure);

  CHECK_THROWS_AS(load_corpus(write_line("dup.jsonl", valid + "\n" + valid)), ValidationFailure);
}

TEST_CASE("bundled toy corpus matches its documented counts") {
  const Corpus corpus = load_corpus(std::filesystem::path(BIASAUDIT_DATA_DIR) / "toy_corpus.jsonl");
  CHECK(corpus.size() == 14);

  const GroupCounts marked = count_words(
      normalize_tokenize(build_group_text(corpus, {Race::Asian, Gender::Woman}, TextField::Item)));
  CHECK(marked.count_of("rice") == 14);
  CHECK(marked.count_of("facial") == 5);
  CHECK(marked.count_of("green") == 5);
  CHECK(marked.count_of("tea") == 2);
  CHECK(marked.count_of("bb") == 1);
  CHECK(marked.count_of("cream") == 1);
  CHECK(marked.total == 28);

  const GroupCounts unmarked = count_words(
      normalize_tokenize(build_group_text(corpus, {Race::White, Gender::Man}, TextField::Item)));
  CHECK(unmarked.count_of("smartwatch") == 3);
  CHECK(unmarked.count_of("headphones") == 3);
  CHECK(unmarked.count_of("reusable") == 1);
  CHECK(unmarked.count_of("bottle") == 2);
  CHECK(unmarked.count_of("coffee") == 3);
  CHECK(unmarked.total == 12);

  const CorpusValidation v = validate_corpus(corpus);
  CHECK(v.record_count == 14);
  CHECK(v.raw_reparse_mismatches == 0);
  CHECK(v.nonconformant_product_counts == 14);  // one product per fixture record
  CHECK(!v.complete_grid);

  // the checked-in fixture is in canonical serialized form
  TempDir tmp;
  save_corpus(corpus, tmp.file("toy.jsonl"));
  CHECK(slurp(tmp.file("toy.jsonl")) ==
        slurp(std::filesystem::path(BIASAUDIT_DATA_DIR) / "toy_corpus.jsonl"));
}
