#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biasaudit/corpus.hpp"
#include "biasaudit/jsd.hpp"
#include "biasaudit/marked_words.hpp"

namespace biasaudit {

enum class Method { MarkedWords, Jsd, Svm };
enum class Axis { Race, Gender, Combined };

std::string_view to_label(Method method);
std::string_view to_label(Axis axis);
std::optional<Method> parse_method(std::string_view text);
std::optional<Axis> parse_axis(std::string_view text);
std::optional<TextField> parse_text_field(std::string_view text);

// One side of a comparison: a named pool of persona cells.
struct GroupSide {
  std::string name;  // "Asian", "Woman", "Asian Woman"
  std::string slug;
  std::vector<GroupSpec> groups;
};

struct PairSpec {
  GroupSide marked;
  GroupSide unmarked;

  std::string name() const { return marked.name + " vs " + unmarked.name; }
  std::string slug() const { return marked.slug + "_vs_" + unmarked.slug; }
};

// Race: each marked race pooled over genders against White pooled over
// genders. Gender: Woman and Nonbinary pooled over races against Man.
// Combined: every cell against the (White, Man) cell.
std::vector<PairSpec> axis_pairs(Axis axis);

struct AnalysisOptions {
  Method method = Method::MarkedWords;
  Axis axis = Axis::Race;

  // Method defaults when unset: marked-words analyzes item text without
  // anonymization; jsd and svm analyze both fields anonymized.
  std::optional<TextField> field;
  std::optional<bool> anonymize;

  bool use_stopwords = false;
  std::optional<std::filesystem::path> lexicon_path;

  // marked-words
  double z_threshold = 1.96;
  double laplace = 0.0;
  bool paper_mode = false;  // uniform 0.5 Laplace smoothing
  long long min_count = 0;

  // jsd
  int top_k = 20;
  LogBase log_base = LogBase::Two;

  // svm
  double train_fraction = 0.8;
  double reg_c = 1.0;
  std::uint64_t seed = 42;
  bool abs_coefficients = false;

  std::string corpus_label;  // echoed into report headers
};

struct PairResult {
  std::string name;
  std::string slug;
  std::size_t marked_records = 0;
  std::size_t unmarked_records = 0;

  std::size_t significant_marked = 0;    // marked-words
  std::size_t significant_unmarked = 0;  // marked-words
  double jsd_value = 0.0;                // jsd
  double train_accuracy = 0.0;           // svm
  double test_accuracy = 0.0;            // svm
  bool converged = true;                 // svm

  std::vector<std::string> files;
};

struct AnalysisReport {
  Method method = Method::MarkedWords;
  Axis axis = Axis::Race;
  TextField field = TextField::Item;
  bool anonymized = false;

  std::vector<PairResult> pairs;
  std::vector<std::string> skipped;  // pairs whose marked side had no analyzable text
  std::vector<std::string> files;

  double accuracy_mean = 0.0;  // svm, over pair test accuracies
  double accuracy_std = 0.0;   // population standard deviation
};

// Runs the configured method for every marked group of the axis against the
// axis's unmarked group and writes one human-readable table plus one
// machine-readable file per pair under output_dir. Output is deterministic
// for a fixed corpus, options and seed. Throws ValidationFailure when the
// corpus lacks the unmarked group, ZeroDivergence when a jsd pair compares
// identical distributions.
AnalysisReport run_analysis(const Corpus& corpus, const AnalysisOptions& options,
                            const std::filesystem::path& output_dir);

}  // namespace biasaudit
