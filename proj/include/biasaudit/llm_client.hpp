#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "biasaudit/corpus.hpp"
#include "biasaudit/groups.hpp"

namespace biasaudit {

// Text with {group_phrase}, {pronouns_object} and {pronouns_subject}
// placeholders; rendering must resolve every one of them.
struct PromptTemplate {
  std::string text;

  // The fixed recommendation prompt shipped with the toolkit.
  static PromptTemplate standard();
};

std::string render_prompt(const PromptTemplate& tmpl, const GroupSpec& group);

struct ModelEndpointConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env_var = "OPENAI_API_KEY";
  std::chrono::milliseconds timeout{30000};
  int requests_in_flight_limit = 4;
};

struct CompletionContext {
  const GroupSpec& group;
  int response_index;
  const std::string& prompt;
  const std::string& model_id;
  double temperature;
};

// One completion request. Implementations throw Error subclasses on failure;
// the generation driver treats any throw as a retryable attempt.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string complete(const CompletionContext& ctx) = 0;
};

// Offline deterministic stand-in for a live endpoint: canned product pools
// keyed by demographic group, rotated by response index. Output is always a
// valid ten-pair JSON object.
class MockBackend : public CompletionBackend {
 public:
  std::string complete(const CompletionContext& ctx) override;
};

// Chat-completions-compatible HTTP client. The bearer key is read from the
// configured environment variable at construction (AuthMissing if unset); the
// request body carries model, temperature and a single user message, and only
// the first choice's message content is consumed. Responses are cached by
// (model, prompt hash, response index) when a cache directory is given.
class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(const ModelEndpointConfig& config,
                       std::optional<std::filesystem::path> cache_dir = std::nullopt);
  ~HttpBackend() override;

  std::string complete(const CompletionContext& ctx) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct GenerationJob {
  std::vector<GroupSpec> groups;  // defaults to all 15 when empty
  int responses_per_group = 15;
  double temperature = 1.0;
  std::string model_id = "gpt-4o";
  int max_retries = 2;
  std::chrono::milliseconds retry_backoff{0};
  ModelEndpointConfig endpoint;
  PromptTemplate prompt_template = PromptTemplate::standard();
};

struct CellFailure {
  GroupSpec group{};
  int response_index = 0;
  std::string error;
};

struct GenerationResult {
  Corpus corpus;
  int requests_issued = 0;   // backend calls, including retries
  int records_appended = 0;  // new records this run
  std::vector<CellFailure> failures;  // cells whose retries were exhausted
};

// Fills corpus_path with one record per (group, response index) cell. Existing
// records are loaded first and their cells are skipped, so resuming a finished
// run issues zero requests. Each completed record is appended immediately; the
// file is rewritten in canonical order once the run ends. Failed cells are
// reported, not fatal.
GenerationResult run_generation(const GenerationJob& job, CompletionBackend& backend,
                                const std::filesystem::path& corpus_path);

std::string now_utc_rfc3339();

}  // namespace biasaudit
