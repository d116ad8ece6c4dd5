#include <cstring>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "biasaudit.h"
#include "support/temp_dir.hpp"

using nlohmann::json;
using testsupport::TempDir;

namespace {

struct OwnedString {
  char* value = nullptr;
  ~OwnedString() { ba_string_free(value); }
  std::string str() const { return value == nullptr ? "" : value; }
};

std::string toy_path() {
  return (std::filesystem::path(BIASAUDIT_DATA_DIR) / "toy_corpus.jsonl").string();
}

}  // namespace

TEST_CASE("version and error plumbing") {
  CHECK(ba_version() != nullptr);
  CHECK(ba_last_error_message() != nullptr);

  ba_corpus* corpus = nullptr;
  CHECK(ba_corpus_load("/nonexistent/corpus.jsonl", &corpus) == BA_ERROR_IO);
  CHECK(std::strlen(ba_last_error_message()) > 0);
  CHECK(ba_corpus_load(nullptr, &corpus) == BA_ERROR_INVALID_ARGUMENT);
}

TEST_CASE("corpus load, count, save and validate through the C surface") {
  ba_corpus* corpus = nullptr;
  REQUIRE(ba_corpus_load(toy_path().c_str(), &corpus) == BA_OK);

  size_t count = 0;
  CHECK(ba_corpus_record_count(corpus, &count) == BA_OK);
  CHECK(count == 14);

  OwnedString validation;
  REQUIRE(ba_corpus_validate(corpus, &validation.value) == BA_OK);
  const json v = json::parse(validation.str());
  CHECK(v["records"] == 14);
  CHECK(v["complete_grid"] == false);
  CHECK(v["raw_reparse_mismatches"] == 0);
  CHECK(v["per_group"].size() == 2);

  OwnedString text;
  REQUIRE(ba_corpus_group_text(corpus, "asian", "woman", "item", &text.value) == BA_OK);
  CHECK(text.str().find("rice facial green tea rice") == 0);

  OwnedString absent;
  REQUIRE(ba_corpus_group_text(corpus, "black", "man", "item", &absent.value) == BA_OK);
  CHECK(absent.str().empty());

  TempDir tmp;
  CHECK(ba_corpus_save(corpus, tmp.file("copy.jsonl").string().c_str()) == BA_OK);
  ba_corpus* copy = nullptr;
  REQUIRE(ba_corpus_load(tmp.file("copy.jsonl").string().c_str(), &copy) == BA_OK);
  size_t copy_count = 0;
  CHECK(ba_corpus_record_count(copy, &copy_count) == BA_OK);
  CHECK(copy_count == count);

  ba_corpus_free(copy);
  ba_corpus_free(corpus);
}

TEST_CASE("parse and tokenize through the C surface") {
  OwnedString pairs;
  REQUIRE(ba_parse_response("```json\n{\"A\": \"x\",}\n```", &pairs.value) == BA_OK);
  const json parsed = json::parse(pairs.str());
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0][0] == "A");
  CHECK(parsed[0][1] == "x");

  OwnedString bad;
  CHECK(ba_parse_response("nope", &bad.value) == BA_ERROR_PARSE);
  CHECK(ba_parse_response("{}", &bad.value) == BA_ERROR_PARSE);

  OwnedString tokens;
  REQUIRE(ba_tokenize("Noise-Canceling Headphones!", &tokens.value) == BA_OK);
  CHECK(json::parse(tokens.str()) == json::array({"noisecanceling", "headphones"}));
}

TEST_CASE("lexicon handles and anonymization through the C surface") {
  ba_lexicon* builtin = nullptr;
  REQUIRE(ba_lexicon_default(&builtin) == BA_OK);

  OwnedString out;
  REQUIRE(ba_anonymize_tokens(builtin, R"(["she","loves","green","tea"])", &out.value) == BA_OK);
  CHECK(json::parse(out.str()) == json::array({"loves", "green", "tea"}));

  OwnedString invalid;
  CHECK(ba_anonymize_tokens(builtin, "{\"not\":\"array\"}", &invalid.value) ==
        BA_ERROR_INVALID_ARGUMENT);

  const std::string lexicon_file =
      (std::filesystem::path(BIASAUDIT_DATA_DIR) / "anonymization_lexicon.txt").string();
  ba_lexicon* loaded = nullptr;
  REQUIRE(ba_lexicon_load(lexicon_file.c_str(), &loaded) == BA_OK);
  OwnedString out2;
  REQUIRE(ba_anonymize_tokens(loaded, R"(["mx","jones","asian","rice"])", &out2.value) == BA_OK);
  CHECK(json::parse(out2.str()) == json::array({"jones", "rice"}));

  ba_lexicon_free(loaded);
  ba_lexicon_free(builtin);
}

TEST_CASE("direct statistics through the C surface") {
  OwnedString rows;
  REQUIRE(ba_marked_words_from_texts("rice rice rice tea", "coffee coffee bottle", 1.96, 0.0, 0,
                                     &rows.value) == BA_OK);
  const json parsed = json::parse(rows.str());
  REQUIRE(!parsed.empty());
  CHECK(parsed[0].contains("word"));
  CHECK(parsed[0].contains("delta"));
  CHECK(parsed[0].contains("z"));
  for (std::size_t i = 1; i < parsed.size(); ++i)
    CHECK(parsed[i - 1]["z"].get<double>() >= parsed[i]["z"].get<double>());

  double divergence = 0.0;
  OwnedString contributions;
  REQUIRE(ba_jsd_from_texts("apple apple pear", "apple plum plum", 0, 0, &divergence,
                            &contributions.value) == BA_OK);
  CHECK(divergence > 0.0);
  CHECK(divergence <= 1.0);
  const json rows2 = json::parse(contributions.str());
  double percent = 0.0;
  for (const auto& row : rows2) percent += row["percent"].get<double>();
  CHECK(percent == doctest::Approx(100.0).epsilon(1e-9));

  OwnedString zero;
  double unused = 0.0;
  CHECK(ba_jsd_from_texts("same text", "same text", 0, 0, &unused, &zero.value) ==
        BA_ERROR_ZERO_DIVERGENCE);
}

TEST_CASE("mock generation and analysis through the C surface") {
  TempDir tmp;
  const std::string corpus_path = tmp.file("corpus.jsonl").string();

  ba_generation_options gen;
  ba_generation_options_init(&gen);
  gen.corpus_path = corpus_path.c_str();
  gen.groups = "asian:woman,asian:man,white:man,white:woman";
  gen.responses_per_group = 3;
  gen.use_mock = 1;

  OwnedString summary;
  REQUIRE(ba_generate(&gen, &summary.value) == BA_OK);
  json s = json::parse(summary.str());
  CHECK(s["records_total"] == 12);
  CHECK(s["records_new"] == 12);
  CHECK(s["requests_issued"] == 12);
  CHECK(s["cells_failed"] == 0);

  // rerun resumes and issues nothing
  OwnedString resumed;
  REQUIRE(ba_generate(&gen, &resumed.value) == BA_OK);
  CHECK(json::parse(resumed.str())["requests_issued"] == 0);

  const std::string out_dir = tmp.file("reports").string();
  ba_analysis_options analysis;
  ba_analysis_options_init(&analysis);
  analysis.method = "marked-words";
  analysis.axis = "race";

  OwnedString analysis_summary;
  REQUIRE(ba_analyze(corpus_path.c_str(), &analysis, out_dir.c_str(), &analysis_summary.value) ==
          BA_OK);
  const json a = json::parse(analysis_summary.str());
  CHECK(a["method"] == "marked-words");
  CHECK(a["pairs"].size() == 1);  // only Asian has marked records here
  CHECK(a["skipped"].size() == 3);
  CHECK(std::filesystem::exists(tmp.file("reports") / "marked_words_race.txt"));

  ba_analysis_options svm;
  ba_analysis_options_init(&svm);
  svm.method = "svm";
  svm.axis = "race";
  OwnedString svm_summary;
  REQUIRE(ba_analyze(corpus_path.c_str(), &svm, out_dir.c_str(), &svm_summary.value) == BA_OK);
  const json sv = json::parse(svm_summary.str());
  CHECK(sv.contains("accuracy_mean"));
  CHECK(sv["pairs"][0].contains("test_accuracy"));
}

TEST_CASE("generation option validation through the C surface") {
  TempDir tmp;
  const std::string corpus_path = tmp.file("c.jsonl").string();

  ba_generation_options gen;
  ba_generation_options_init(&gen);
  gen.corpus_path = corpus_path.c_str();
  gen.use_mock = 1;
  gen.responses_per_group = 0;
  OwnedString summary;
  CHECK(ba_generate(&gen, &summary.value) == BA_ERROR_INVALID_ARGUMENT);

  gen.responses_per_group = 1;
  gen.groups = "asian:martian";
  CHECK(ba_generate(&gen, &summary.value) == BA_ERROR_INVALID_ARGUMENT);

  // live mode without the key env var set
  unsetenv("BIASAUDIT_CAPI_ABSENT_KEY");
  gen.groups = "all";
  gen.use_mock = 0;
  gen.api_key_env = "BIASAUDIT_CAPI_ABSENT_KEY";
  CHECK(ba_generate(&gen, &summary.value) == BA_ERROR_AUTH);
}

TEST_CASE("analysis error statuses through the C surface") {
  ba_analysis_options analysis;
  ba_analysis_options_init(&analysis);
  TempDir tmp;

  OwnedString summary;
  CHECK(ba_analyze("/nonexistent.jsonl", &analysis, tmp.path.string().c_str(), &summary.value) ==
        BA_ERROR_IO);

  analysis.method = "frequency";
  CHECK(ba_analyze(toy_path().c_str(), &analysis, tmp.path.string().c_str(), &summary.value) ==
        BA_ERROR_INVALID_ARGUMENT);

  // gender axis works on the toy corpus (Man present); combined too; but a
  // corpus without the unmarked side fails validation
  ba_analysis_options mw;
  ba_analysis_options_init(&mw);
  OwnedString gender_summary;
  mw.axis = "gender";
  CHECK(ba_analyze(toy_path().c_str(), &mw, tmp.path.string().c_str(), &gender_summary.value) ==
        BA_OK);
}
