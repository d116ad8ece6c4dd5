#include "biasaudit.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "json.hpp"

#include "biasaudit/analysis.hpp"
#include "biasaudit/corpus.hpp"
#include "biasaudit/errors.hpp"
#include "biasaudit/jsd.hpp"
#include "biasaudit/llm_client.hpp"
#include "biasaudit/marked_words.hpp"
#include "biasaudit/preprocess.hpp"

struct ba_corpus {
  biasaudit::Corpus impl;
};

struct ba_lexicon {
  biasaudit::AnonymizationLexicon impl;
};

namespace {

using ordered_json = nlohmann::ordered_json;

thread_local std::string g_last_error;

ba_status status_for(biasaudit::ErrorCode code) {
  using biasaudit::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return BA_ERROR_INVALID_ARGUMENT;
    case ErrorCode::Io: return BA_ERROR_IO;
    case ErrorCode::Parse: return BA_ERROR_PARSE;
    case ErrorCode::Validation: return BA_ERROR_VALIDATION;
    case ErrorCode::EmptyInput: return BA_ERROR_EMPTY_INPUT;
    case ErrorCode::Degenerate: return BA_ERROR_DEGENERATE;
    case ErrorCode::ZeroDivergence: return BA_ERROR_ZERO_DIVERGENCE;
    case ErrorCode::ClassTooSmall: return BA_ERROR_CLASS_TOO_SMALL;
    case ErrorCode::Endpoint: return BA_ERROR_ENDPOINT;
    case ErrorCode::Auth: return BA_ERROR_AUTH;
    case ErrorCode::Unknown: return BA_ERROR;
  }
  return BA_ERROR;
}

template <typename Fn>
ba_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const biasaudit::Error& e) {
    g_last_error = e.what();
    return status_for(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BA_ERROR;
  } catch (...) {
    g_last_error = "unknown failure";
    return BA_ERROR;
  }
}

char* dup_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out != nullptr) std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

ba_status require(bool condition, const char* message) {
  if (condition) return BA_OK;
  g_last_error = message;
  return BA_ERROR_INVALID_ARGUMENT;
}

biasaudit::TokenList tokens_from_json(const char* tokens_json) {
  const ordered_json parsed = ordered_json::parse(tokens_json, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_array())
    throw biasaudit::InvalidArgument("tokens must be a JSON array of strings");
  biasaudit::TokenList tokens;
  for (const auto& item : parsed) {
    if (!item.is_string())
      throw biasaudit::InvalidArgument("tokens must be a JSON array of strings");
    tokens.push_back(item.get<std::string>());
  }
  return tokens;
}

std::string tokens_to_json(const biasaudit::TokenList& tokens) {
  ordered_json out = ordered_json::array();
  for (const auto& token : tokens) out.push_back(token);
  return out.dump();
}

std::vector<biasaudit::GroupSpec> parse_group_list(const char* groups) {
  using namespace biasaudit;
  std::vector<GroupSpec> out;
  const std::string text = groups == nullptr ? "all" : groups;
  if (text.empty() || text == "all") {
    out.assign(all_groups().begin(), all_groups().end());
    return out;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::string entry = text.substr(pos, comma - pos);
    pos = comma + 1;
    while (!entry.empty() && entry.front() == ' ') entry.erase(entry.begin());
    while (!entry.empty() && entry.back() == ' ') entry.pop_back();
    if (entry.empty()) continue;
    const auto colon = entry.find(':');
    if (colon == std::string::npos)
      throw InvalidArgument("group \"" + entry + "\" must look like race:gender");
    const auto race = parse_race_flexible(entry.substr(0, colon));
    const auto gender = parse_gender_flexible(entry.substr(colon + 1));
    if (!race || !gender) throw InvalidArgument("unknown group \"" + entry + "\"");
    out.push_back({*race, *gender});
  }
  if (out.empty()) throw InvalidArgument("group list is empty");
  return out;
}

}  // namespace

extern "C" {

const char* ba_version(void) { return "0.1.0"; }

const char* ba_last_error_message(void) { return g_last_error.c_str(); }

void ba_string_free(char* s) { std::free(s); }

/* corpus ------------------------------------------------------------------ */

ba_status ba_corpus_load(const char* path, ba_corpus** out) {
  if (auto rc = require(path && out, "path and out must be non-NULL")) return rc;
  return guarded([&] {
    auto handle = std::make_unique<ba_corpus>();
    handle->impl = biasaudit::load_corpus(path);
    *out = handle.release();
    return BA_OK;
  });
}

ba_status ba_corpus_save(const ba_corpus* corpus, const char* path) {
  if (auto rc = require(corpus && path, "corpus and path must be non-NULL")) return rc;
  return guarded([&] {
    biasaudit::save_corpus(corpus->impl, path);
    return BA_OK;
  });
}

void ba_corpus_free(ba_corpus* corpus) { delete corpus; }

ba_status ba_corpus_record_count(const ba_corpus* corpus, size_t* out) {
  if (auto rc = require(corpus && out, "corpus and out must be non-NULL")) return rc;
  *out = corpus->impl.size();
  return BA_OK;
}

ba_status ba_corpus_validate(const ba_corpus* corpus, char** summary_json) {
  if (auto rc = require(corpus && summary_json, "corpus and summary_json must be non-NULL"))
    return rc;
  return guarded([&] {
    const biasaudit::CorpusValidation v = biasaudit::validate_corpus(corpus->impl);
    ordered_json j;
    j["records"] = v.record_count;
    j["complete_grid"] = v.complete_grid;
    j["nonconformant_product_counts"] = v.nonconformant_product_counts;
    j["raw_reparse_mismatches"] = v.raw_reparse_mismatches;
    ordered_json groups = ordered_json::array();
    for (const auto& [group, count] : v.per_group) {
      ordered_json g;
      g["race"] = biasaudit::to_label(group.race);
      g["gender"] = biasaudit::to_label(group.gender);
      g["records"] = count;
      groups.push_back(std::move(g));
    }
    j["per_group"] = std::move(groups);
    *summary_json = dup_string(j.dump());
    return BA_OK;
  });
}

ba_status ba_corpus_group_text(const ba_corpus* corpus, const char* race, const char* gender,
                               const char* field, char** text_out) {
  if (auto rc = require(corpus && race && gender && field && text_out,
                        "all arguments must be non-NULL"))
    return rc;
  return guarded([&] {
    const auto r = biasaudit::parse_race_flexible(race);
    if (!r) throw biasaudit::InvalidArgument(std::string("unknown race \"") + race + "\"");
    const auto g = biasaudit::parse_gender_flexible(gender);
    if (!g) throw biasaudit::InvalidArgument(std::string("unknown gender \"") + gender + "\"");
    const auto f = biasaudit::parse_text_field(field);
    if (!f) throw biasaudit::InvalidArgument(std::string("unknown field \"") + field + "\"");
    *text_out = dup_string(biasaudit::build_group_text(corpus->impl, {*r, *g}, *f));
    return BA_OK;
  });
}

/* text operations ---------------------------------------------------------- */

ba_status ba_parse_response(const char* raw, char** pairs_json) {
  if (auto rc = require(raw && pairs_json, "raw and pairs_json must be non-NULL")) return rc;
  return guarded([&] {
    const auto pairs = biasaudit::parse_llm_response(raw);
    ordered_json out = ordered_json::array();
    for (const auto& pair : pairs) out.push_back(ordered_json::array({pair.name, pair.reason}));
    *pairs_json = dup_string(out.dump());
    return BA_OK;
  });
}

ba_status ba_tokenize(const char* text, char** tokens_json) {
  if (auto rc = require(text && tokens_json, "text and tokens_json must be non-NULL")) return rc;
  return guarded([&] {
    *tokens_json = dup_string(tokens_to_json(biasaudit::normalize_tokenize(text)));
    return BA_OK;
  });
}

ba_status ba_lexicon_default(ba_lexicon** out) {
  if (auto rc = require(out != nullptr, "out must be non-NULL")) return rc;
  return guarded([&] {
    auto handle = std::make_unique<ba_lexicon>();
    handle->impl = biasaudit::default_lexicon();
    *out = handle.release();
    return BA_OK;
  });
}

ba_status ba_lexicon_load(const char* path, ba_lexicon** out) {
  if (auto rc = require(path && out, "path and out must be non-NULL")) return rc;
  return guarded([&] {
    auto handle = std::make_unique<ba_lexicon>();
    handle->impl = biasaudit::load_lexicon(path);
    *out = handle.release();
    return BA_OK;
  });
}

void ba_lexicon_free(ba_lexicon* lexicon) { delete lexicon; }

ba_status ba_anonymize_tokens(const ba_lexicon* lexicon, const char* tokens_json,
                              char** tokens_out) {
  if (auto rc = require(lexicon && tokens_json && tokens_out, "all arguments must be non-NULL"))
    return rc;
  return guarded([&] {
    const auto tokens = tokens_from_json(tokens_json);
    *tokens_out = dup_string(tokens_to_json(biasaudit::anonymize(tokens, lexicon->impl)));
    return BA_OK;
  });
}

/* direct statistics -------------------------------------------------------- */

ba_status ba_marked_words_from_texts(const char* marked_text, const char* unmarked_text,
                                     double z_threshold, double laplace, long long min_count,
                                     char** rows_json) {
  if (auto rc = require(marked_text && unmarked_text && rows_json,
                        "texts and rows_json must be non-NULL"))
    return rc;
  return guarded([&] {
    using namespace biasaudit;
    const GroupCounts marked = count_words(normalize_tokenize(marked_text));
    const GroupCounts unmarked = count_words(normalize_tokenize(unmarked_text));
    MarkedWordsConfig config;
    config.z_threshold = z_threshold;
    config.laplace = laplace;
    config.min_count = min_count;

    ordered_json rows = ordered_json::array();
    for (const auto& stat : all_log_odds_stats(marked, unmarked, config)) {
      ordered_json row;
      row["word"] = stat.word;
      row["delta"] = stat.delta;
      row["var_marked"] = stat.var_marked;
      row["var_unmarked"] = stat.var_unmarked;
      row["z"] = stat.z;
      row["significant"] =
          marked.count_of(stat.word) >= min_count && stat.z > config.z_threshold;
      rows.push_back(std::move(row));
    }
    *rows_json = dup_string(rows.dump());
    return BA_OK;
  });
}

ba_status ba_jsd_from_texts(const char* marked_text, const char* unmarked_text, int top_k,
                            int natural_log, double* jsd_out, char** rows_json) {
  if (auto rc = require(marked_text && unmarked_text && jsd_out && rows_json,
                        "texts, jsd_out and rows_json must be non-NULL"))
    return rc;
  return guarded([&] {
    using namespace biasaudit;
    const LogBase base = natural_log ? LogBase::E : LogBase::Two;
    const FreqDistribution p = to_distribution(count_words(normalize_tokenize(marked_text)));
    const FreqDistribution q = to_distribution(count_words(normalize_tokenize(unmarked_text)));
    *jsd_out = jsd(p, q, base);

    ordered_json rows = ordered_json::array();
    int rank = 1;
    for (const auto& c : word_contributions(p, q, top_k, base)) {
      ordered_json row;
      row["rank"] = rank++;
      row["word"] = c.word;
      row["contribution"] = c.contribution;
      row["percent"] = c.percent;
      row["favored"] = c.favored == FavoredSide::Marked ? "marked" : "unmarked";
      if (c.tie) row["tie"] = true;
      rows.push_back(std::move(row));
    }
    *rows_json = dup_string(rows.dump());
    return BA_OK;
  });
}

/* generation ---------------------------------------------------------------- */

void ba_generation_options_init(ba_generation_options* options) {
  if (options == nullptr) return;
  options->corpus_path = nullptr;
  options->groups = "all";
  options->responses_per_group = 15;
  options->temperature = 1.0;
  options->model_id = nullptr;
  options->max_retries = 2;
  options->retry_backoff_ms = 250;
  options->use_mock = 0;
  options->base_url = "https://api.openai.com/v1";
  options->api_key_env = "OPENAI_API_KEY";
  options->timeout_ms = 30000;
  options->max_in_flight = 4;
  options->cache_dir = nullptr;
}

ba_status ba_generate(const ba_generation_options* options, char** summary_json) {
  if (auto rc = require(options && summary_json, "options and summary_json must be non-NULL"))
    return rc;
  if (auto rc = require(options->corpus_path != nullptr, "corpus_path must be set")) return rc;
  return guarded([&] {
    using namespace biasaudit;

    GenerationJob job;
    job.groups = parse_group_list(options->groups);
    job.responses_per_group = options->responses_per_group;
    job.temperature = options->temperature;
    job.model_id = options->model_id != nullptr ? options->model_id
                   : options->use_mock          ? "mock"
                                                : "gpt-4o";
    job.max_retries = options->max_retries;
    job.retry_backoff = std::chrono::milliseconds(options->retry_backoff_ms);
    if (options->base_url != nullptr) job.endpoint.base_url = options->base_url;
    if (options->api_key_env != nullptr) job.endpoint.api_key_env_var = options->api_key_env;
    job.endpoint.timeout = std::chrono::milliseconds(options->timeout_ms);
    job.endpoint.requests_in_flight_limit = options->max_in_flight;

    std::unique_ptr<CompletionBackend> backend;
    if (options->use_mock) {
      backend = std::make_unique<MockBackend>();
      job.retry_backoff = std::chrono::milliseconds(0);
    } else {
      std::optional<std::filesystem::path> cache;
      if (options->cache_dir != nullptr) cache = options->cache_dir;
      backend = std::make_unique<HttpBackend>(job.endpoint, cache);
    }

    const GenerationResult result = run_generation(job, *backend, options->corpus_path);

    ordered_json j;
    j["corpus_path"] = options->corpus_path;
    j["records_total"] = result.corpus.size();
    j["records_new"] = result.records_appended;
    j["requests_issued"] = result.requests_issued;
    j["cells_failed"] = result.failures.size();
    ordered_json failures = ordered_json::array();
    for (const auto& failure : result.failures) {
      ordered_json f;
      f["race"] = to_label(failure.group.race);
      f["gender"] = to_label(failure.group.gender);
      f["response_index"] = failure.response_index;
      f["error"] = failure.error;
      failures.push_back(std::move(f));
    }
    j["failures"] = std::move(failures);
    *summary_json = dup_string(j.dump());

    if (!result.failures.empty()) {
      g_last_error = std::to_string(result.failures.size()) + " cell(s) exhausted retries";
      return BA_ERROR_PARTIAL;
    }
    return BA_OK;
  });
}

/* analysis ------------------------------------------------------------------ */

void ba_analysis_options_init(ba_analysis_options* options) {
  if (options == nullptr) return;
  options->method = "marked-words";
  options->axis = "race";
  options->text_field = nullptr;
  options->anonymize = -1;
  options->use_stopwords = 0;
  options->lexicon_path = nullptr;
  options->z_threshold = 1.96;
  options->laplace = 0.0;
  options->paper_mode = 0;
  options->min_count = 0;
  options->top_k = 20;
  options->natural_log = 0;
  options->train_fraction = 0.8;
  options->reg_c = 1.0;
  options->seed = 42;
  options->abs_coefficients = 0;
}

ba_status ba_analyze(const char* corpus_path, const ba_analysis_options* options,
                     const char* output_dir, char** summary_json) {
  if (auto rc = require(corpus_path && options && output_dir && summary_json,
                        "all arguments must be non-NULL"))
    return rc;
  return guarded([&] {
    using namespace biasaudit;

    AnalysisOptions opts;
    const auto method = parse_method(options->method == nullptr ? "" : options->method);
    if (!method) throw InvalidArgument("method must be marked-words, jsd or svm");
    opts.method = *method;
    const auto axis = parse_axis(options->axis == nullptr ? "" : options->axis);
    if (!axis) throw InvalidArgument("axis must be race, gender or combined");
    opts.axis = *axis;
    if (options->text_field != nullptr) {
      const auto field = parse_text_field(options->text_field);
      if (!field) throw InvalidArgument("text_field must be item, reason or both");
      opts.field = *field;
    }
    if (options->anonymize >= 0) opts.anonymize = options->anonymize != 0;
    opts.use_stopwords = options->use_stopwords != 0;
    if (options->lexicon_path != nullptr) opts.lexicon_path = options->lexicon_path;
    opts.z_threshold = options->z_threshold;
    opts.laplace = options->laplace;
    opts.paper_mode = options->paper_mode != 0;
    opts.min_count = options->min_count;
    opts.top_k = options->top_k;
    opts.log_base = options->natural_log ? LogBase::E : LogBase::Two;
    opts.train_fraction = options->train_fraction;
    opts.reg_c = options->reg_c;
    opts.seed = options->seed;
    opts.abs_coefficients = options->abs_coefficients != 0;
    opts.corpus_label = corpus_path;

    const Corpus corpus = load_corpus(corpus_path);
    const AnalysisReport report = run_analysis(corpus, opts, output_dir);

    ordered_json j;
    j["method"] = to_label(report.method);
    j["axis"] = to_label(report.axis);
    j["field"] = to_label(report.field);
    j["anonymize"] = report.anonymized;
    j["output_dir"] = output_dir;
    ordered_json pairs = ordered_json::array();
    for (const auto& pair : report.pairs) {
      ordered_json p;
      p["name"] = pair.name;
      p["marked_records"] = pair.marked_records;
      p["unmarked_records"] = pair.unmarked_records;
      if (report.method == Method::MarkedWords) {
        p["significant_marked"] = pair.significant_marked;
        p["significant_unmarked"] = pair.significant_unmarked;
      }
      if (report.method == Method::Jsd) p["jsd"] = pair.jsd_value;
      if (report.method == Method::Svm) {
        p["train_accuracy"] = pair.train_accuracy;
        p["test_accuracy"] = pair.test_accuracy;
        p["converged"] = pair.converged;
      }
      ordered_json files = ordered_json::array();
      for (const auto& file : pair.files) files.push_back(file);
      p["files"] = std::move(files);
      pairs.push_back(std::move(p));
    }
    j["pairs"] = std::move(pairs);
    ordered_json skipped = ordered_json::array();
    for (const auto& name : report.skipped) skipped.push_back(name);
    j["skipped"] = std::move(skipped);
    ordered_json files = ordered_json::array();
    for (const auto& file : report.files) files.push_back(file);
    j["files"] = std::move(files);
    if (report.method == Method::Svm) {
      j["accuracy_mean"] = report.accuracy_mean;
      j["accuracy_std"] = report.accuracy_std;
    }
    *summary_json = dup_string(j.dump());
    return BA_OK;
  });
}

}  // extern "C"
