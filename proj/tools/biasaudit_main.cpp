// biasaudit command line front end. Everything goes through the C API in
// biasaudit.h; exit codes follow the 0 = success, 1 = error, 2 = partial
// generation contract.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "biasaudit.h"

namespace {

using nlohmann::json;

struct OwnedString {
  char* value = nullptr;
  ~OwnedString() { ba_string_free(value); }
  std::string str() const { return value == nullptr ? "" : value; }
};

int fail(ba_status status) {
  std::cerr << "error: " << ba_last_error_message() << "\n";
  return status == BA_ERROR_PARTIAL ? 2 : 1;
}

struct GenerateArgs {
  std::string out;
  std::string groups = "all";
  int n = 15;
  double temperature = 1.0;
  std::string model;  // empty = backend default (gpt-4o live, "mock" offline)
  int max_retries = 2;
  long retry_backoff_ms = 250;
  bool mock = false;
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  long timeout_ms = 30000;
  int concurrency = 4;
  std::string cache_dir;
};

int run_generate(const GenerateArgs& args) {
  ba_generation_options options;
  ba_generation_options_init(&options);
  options.corpus_path = args.out.c_str();
  options.groups = args.groups.c_str();
  options.responses_per_group = args.n;
  options.temperature = args.temperature;
  if (!args.model.empty()) options.model_id = args.model.c_str();
  options.max_retries = args.max_retries;
  options.retry_backoff_ms = args.retry_backoff_ms;
  options.use_mock = args.mock ? 1 : 0;
  options.base_url = args.base_url.c_str();
  options.api_key_env = args.api_key_env.c_str();
  options.timeout_ms = args.timeout_ms;
  options.max_in_flight = args.concurrency;
  options.cache_dir = args.cache_dir.empty() ? nullptr : args.cache_dir.c_str();

  OwnedString summary;
  const ba_status status = ba_generate(&options, &summary.value);
  if (status != BA_OK && status != BA_ERROR_PARTIAL) return fail(status);

  const json j = json::parse(summary.str());
  std::cout << "corpus: " << j["corpus_path"].get<std::string>() << "\n"
            << "records total: " << j["records_total"].get<std::size_t>() << "\n"
            << "records new:   " << j["records_new"].get<int>() << "\n"
            << "requests:      " << j["requests_issued"].get<int>() << "\n";
  if (status == BA_ERROR_PARTIAL) {
    std::cerr << "warning: " << j["cells_failed"].get<std::size_t>()
              << " cell(s) exhausted retries\n";
    for (const auto& failure : j["failures"])
      std::cerr << "  " << failure["race"].get<std::string>() << ":"
                << failure["gender"].get<std::string>() << " index "
                << failure["response_index"].get<int>() << ": "
                << failure["error"].get<std::string>() << "\n";
    return 2;
  }
  return 0;
}

struct AnalyzeArgs {
  std::string corpus;
  std::string method = "marked-words";
  std::string axis = "race";
  std::string out = ".";
  std::string field;
  bool anonymize_on = false;
  bool anonymize_off = false;
  bool stopwords = false;
  std::string lexicon;
  double z_threshold = 1.96;
  double laplace = 0.0;
  bool paper_mode = false;
  long long min_count = 0;
  int top_k = 20;
  bool natural_log = false;
  double train_fraction = 0.8;
  double reg_c = 1.0;
  unsigned long long seed = 42;
  bool abs_coefficients = false;
};

void fill_options(const AnalyzeArgs& args, ba_analysis_options& options) {
  ba_analysis_options_init(&options);
  options.method = args.method.c_str();
  options.axis = args.axis.c_str();
  options.text_field = args.field.empty() ? nullptr : args.field.c_str();
  options.anonymize = args.anonymize_on ? 1 : args.anonymize_off ? 0 : -1;
  options.use_stopwords = args.stopwords ? 1 : 0;
  options.lexicon_path = args.lexicon.empty() ? nullptr : args.lexicon.c_str();
  options.z_threshold = args.z_threshold;
  options.laplace = args.laplace;
  options.paper_mode = args.paper_mode ? 1 : 0;
  options.min_count = args.min_count;
  options.top_k = args.top_k;
  options.natural_log = args.natural_log ? 1 : 0;
  options.train_fraction = args.train_fraction;
  options.reg_c = args.reg_c;
  options.seed = args.seed;
  options.abs_coefficients = args.abs_coefficients ? 1 : 0;
}

void print_analysis_summary(const json& j, std::ostream& out) {
  out << "[" << j["method"].get<std::string>() << " " << j["axis"].get<std::string>()
      << "] field=" << j["field"].get<std::string>()
      << " anonymize=" << (j["anonymize"].get<bool>() ? "on" : "off") << "\n";
  for (const auto& pair : j["pairs"]) {
    out << "  " << pair["name"].get<std::string>() << ": ";
    if (pair.contains("significant_marked"))
      out << pair["significant_marked"].get<std::size_t>() << " marked / "
          << pair["significant_unmarked"].get<std::size_t>() << " unmarked significant words";
    if (pair.contains("jsd")) out << "jsd=" << pair["jsd"].get<double>();
    if (pair.contains("test_accuracy"))
      out << "train=" << pair["train_accuracy"].get<double>()
          << " test=" << pair["test_accuracy"].get<double>();
    out << "\n";
  }
  if (j.contains("accuracy_mean")) {
    char line[64];
    std::snprintf(line, sizeof(line), "  test accuracy: %.2f +/- %.2f",
                  j["accuracy_mean"].get<double>(), j["accuracy_std"].get<double>());
    out << line << "\n";
  }
  for (const auto& skipped : j["skipped"])
    out << "  skipped (no marked records): " << skipped.get<std::string>() << "\n";
  out << "  files:";
  for (const auto& file : j["files"]) out << " " << file.get<std::string>();
  out << "\n";
}

int run_analyze(const AnalyzeArgs& args) {
  ba_analysis_options options;
  fill_options(args, options);
  OwnedString summary;
  const ba_status status = ba_analyze(args.corpus.c_str(), &options, args.out.c_str(),
                                      &summary.value);
  if (status != BA_OK) return fail(status);
  print_analysis_summary(json::parse(summary.str()), std::cout);
  return 0;
}

struct ReportArgs {
  std::string corpus;
  std::string out = ".";
  std::string axes = "race,gender,combined";
  unsigned long long seed = 42;
};

int run_report(const ReportArgs& args) {
  std::vector<std::string> axes;
  std::string current;
  for (char c : args.axes + ",") {
    if (c == ',') {
      if (!current.empty()) axes.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }

  std::ostringstream index;
  index << "biasaudit report index\ncorpus=" << args.corpus << "\n";
  for (const std::string& axis : axes) {
    for (const char* method : {"marked-words", "jsd", "svm"}) {
      AnalyzeArgs one;
      one.corpus = args.corpus;
      one.method = method;
      one.axis = axis;
      one.out = args.out;
      one.seed = args.seed;
      ba_analysis_options options;
      fill_options(one, options);
      OwnedString summary;
      const ba_status status = ba_analyze(args.corpus.c_str(), &options, args.out.c_str(),
                                          &summary.value);
      if (status != BA_OK) return fail(status);
      const json j = json::parse(summary.str());
      print_analysis_summary(j, std::cout);
      index << "\n";
      print_analysis_summary(j, index);
    }
  }

  const std::string index_path = args.out + "/index.txt";
  std::ofstream out(index_path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot write " << index_path << "\n";
    return 1;
  }
  out << index.str();
  std::cout << "index: " << index_path << "\n";
  return 0;
}

int run_validate(const std::string& corpus_path) {
  ba_corpus* corpus = nullptr;
  ba_status status = ba_corpus_load(corpus_path.c_str(), &corpus);
  if (status != BA_OK) return fail(status);

  OwnedString summary;
  status = ba_corpus_validate(corpus, &summary.value);
  ba_corpus_free(corpus);
  if (status != BA_OK) return fail(status);

  const json j = json::parse(summary.str());
  std::cout << "records: " << j["records"].get<std::size_t>() << "\n"
            << "complete 15-group grid: " << (j["complete_grid"].get<bool>() ? "yes" : "no")
            << "\n"
            << "responses without exactly 10 products: "
            << j["nonconformant_product_counts"].get<std::size_t>() << "\n"
            << "raw responses that no longer reparse: "
            << j["raw_reparse_mismatches"].get<std::size_t>() << "\n";
  for (const auto& group : j["per_group"])
    std::cout << "  " << group["race"].get<std::string>() << ":"
              << group["gender"].get<std::string>() << " " << group["records"].get<std::size_t>()
              << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"persona product-recommendation generation and group disparity analysis"};
  app.set_version_flag("--version", ba_version());
  app.require_subcommand(1);

  GenerateArgs generate_args;
  auto* generate = app.add_subcommand(
      "generate", "Generate a recommendation corpus from a chat-completions endpoint");
  generate->add_option("--out", generate_args.out, "Corpus output path (JSON Lines)")->required();
  generate->add_option("--groups", generate_args.groups,
                       "\"all\" or comma-separated race:gender cells");
  generate->add_option("--n", generate_args.n, "Responses per group (default 15)");
  generate->add_option("--temperature", generate_args.temperature, "Sampling temperature");
  generate->add_option("--model", generate_args.model, "Model identifier");
  generate->add_option("--max-retries", generate_args.max_retries,
                       "Extra attempts per cell after a failure");
  generate->add_option("--retry-backoff-ms", generate_args.retry_backoff_ms,
                       "Sleep between attempts");
  generate->add_flag("--mock", generate_args.mock, "Use the bundled deterministic offline backend");
  generate->add_option("--base-url", generate_args.base_url, "Chat-completions base URL");
  generate->add_option("--api-key-env", generate_args.api_key_env,
                       "Environment variable holding the bearer key");
  generate->add_option("--timeout-ms", generate_args.timeout_ms, "Per-request timeout");
  generate->add_option("--concurrency", generate_args.concurrency,
                       "Maximum requests in flight");
  generate->add_option("--cache-dir", generate_args.cache_dir,
                       "Cache raw responses here to avoid duplicate spend");

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze", "Run one analysis method over one axis");
  analyze->add_option("--corpus", analyze_args.corpus, "Corpus path")->required();
  analyze->add_option("--method", analyze_args.method, "marked-words, jsd or svm");
  analyze->add_option("--axis", analyze_args.axis, "race, gender or combined");
  analyze->add_option("--out", analyze_args.out, "Report output directory");
  analyze->add_option("--field", analyze_args.field,
                      "item, reason or both (default depends on the method)");
  analyze->add_flag("--anonymize", analyze_args.anonymize_on,
                    "Force demographic-term removal on");
  analyze->add_flag("--no-anonymize", analyze_args.anonymize_off,
                    "Force demographic-term removal off");
  analyze->add_flag("--stopwords", analyze_args.stopwords, "Drop standard English stopwords");
  analyze->add_option("--lexicon", analyze_args.lexicon, "Anonymization lexicon file");
  analyze->add_option("--z-threshold", analyze_args.z_threshold,
                      "Significance threshold (marked-words)");
  analyze->add_option("--laplace", analyze_args.laplace, "Additive smoothing (marked-words)");
  analyze->add_flag("--paper-mode", analyze_args.paper_mode,
                    "Uniform 0.5 Laplace smoothing (marked-words)");
  analyze->add_option("--min-count", analyze_args.min_count,
                      "Minimum marked-group count (marked-words)");
  analyze->add_option("--top-k", analyze_args.top_k, "Contribution rows per pair (jsd)");
  analyze->add_flag("--natural-log", analyze_args.natural_log, "Base e instead of base 2 (jsd)");
  analyze->add_option("--train-fraction", analyze_args.train_fraction, "Training fraction (svm)");
  analyze->add_option("--reg-c", analyze_args.reg_c, "Hinge-loss weight (svm)");
  analyze->add_option("--seed", analyze_args.seed, "Split and shuffle seed (svm)");
  analyze->add_flag("--abs-coefficients", analyze_args.abs_coefficients,
                    "Rank features by |coefficient| (svm)");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report",
                                    "Run all three methods over the chosen axes and write an index");
  report->add_option("--corpus", report_args.corpus, "Corpus path")->required();
  report->add_option("--out", report_args.out, "Report output directory");
  report->add_option("--axes", report_args.axes, "Comma-separated axes (default all three)");
  report->add_option("--seed", report_args.seed, "Seed forwarded to the svm runs");

  std::string validate_corpus_path;
  auto* validate = app.add_subcommand("validate", "Load a corpus and print a quality summary");
  validate->add_option("--corpus", validate_corpus_path, "Corpus path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (generate->parsed()) return run_generate(generate_args);
  if (analyze->parsed()) return run_analyze(analyze_args);
  if (report->parsed()) return run_report(report_args);
  if (validate->parsed()) return run_validate(validate_corpus_path);
  return 1;
}
