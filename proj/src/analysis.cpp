#include "biasaudit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "biasaudit/errors.hpp"
#include "biasaudit/svm.hpp"

namespace biasaudit {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(double value, const char* spec = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, value);
  return buf;
}

std::string fold_slug(std::string_view label) {
  std::string out;
  for (char c : label) {
    if (c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

TextField default_field(Method method) {
  return method == Method::MarkedWords ? TextField::Item : TextField::Both;
}

bool default_anonymize(Method method) { return method != Method::MarkedWords; }

struct Preprocessor {
  bool anonymize_on = false;
  bool stopwords_on = false;
  const AnonymizationLexicon* lexicon = nullptr;

  TokenList run(const std::string& text) const {
    TokenList tokens = normalize_tokenize(text);
    if (anonymize_on) tokens = anonymize(tokens, *lexicon);
    if (stopwords_on) tokens = remove_stopwords(tokens);
    return tokens;
  }
};

std::string field_text(const RecommendationRecord& record, TextField field) {
  switch (field) {
    case TextField::Item: return record.item_text();
    case TextField::Reason: return record.reason_text();
    case TextField::Both: {
      std::string item = record.item_text();
      std::string reason = record.reason_text();
      if (item.empty()) return reason;
      if (reason.empty()) return item;
      return item + " " + reason;
    }
  }
  return "";
}

std::vector<const RecommendationRecord*> records_for(const Corpus& corpus,
                                                     const std::vector<GroupSpec>& groups) {
  const std::set<GroupSpec> wanted(groups.begin(), groups.end());
  std::vector<const RecommendationRecord*> out;
  for (const auto& record : corpus.records())
    if (wanted.count(record.group)) out.push_back(&record);
  return out;
}

TokenList side_tokens(const std::vector<const RecommendationRecord*>& records, TextField field,
                      const Preprocessor& prep) {
  std::string text;
  for (const auto* record : records) {
    const std::string part = field_text(*record, field);
    if (part.empty()) continue;
    if (!text.empty()) text.push_back(' ');
    text += part;
  }
  return prep.run(text);
}

class ReportFile {
 public:
  ReportFile(const std::filesystem::path& dir, std::string name)
      : name_(std::move(name)), out_(dir / name_, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoFailure("cannot open report file " + (dir / name_).string());
  }

  const std::string& name() const { return name_; }
  std::ofstream& stream() { return out_; }

 private:
  std::string name_;
  std::ofstream out_;
};

// The header carries every effective setting so a report is reproducible from
// its own metadata plus the corpus.
void write_header(std::ofstream& out, const AnalysisOptions& options, TextField field,
                  bool anonymize_on, double laplace) {
  out << "# biasaudit " << to_label(options.method) << " report\n";
  out << "# corpus=" << (options.corpus_label.empty() ? "-" : options.corpus_label)
      << " method=" << to_label(options.method) << " axis=" << to_label(options.axis)
      << " field=" << to_label(field) << " anonymize=" << (anonymize_on ? "on" : "off")
      << " stopwords=" << (options.use_stopwords ? "on" : "off") << " lexicon="
      << (options.lexicon_path ? options.lexicon_path->string() : std::string("builtin")) << "\n";
  switch (options.method) {
    case Method::MarkedWords:
      out << "# z_threshold=" << fmt(options.z_threshold) << " laplace=" << fmt(laplace)
          << " min_count=" << options.min_count
          << " paper_mode=" << (options.paper_mode ? "on" : "off") << "\n";
      break;
    case Method::Jsd:
      out << "# log_base=" << (options.log_base == LogBase::Two ? "2" : "e")
          << " top_k=" << options.top_k << "\n";
      break;
    case Method::Svm:
      out << "# train_fraction=" << fmt(options.train_fraction) << " seed=" << options.seed
          << " reg_c=" << fmt(options.reg_c)
          << " abs_coefficients=" << (options.abs_coefficients ? "on" : "off") << "\n";
      break;
  }
}

void write_table_row(std::ofstream& out, const std::string& group, const std::string& word,
                     const std::string& z) {
  out << group;
  for (std::size_t i = group.size(); i < 28; ++i) out.put(' ');
  out << word;
  for (std::size_t i = word.size(); i < 22; ++i) out.put(' ');
  out << z << "\n";
}

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

double population_std(const std::vector<double>& values, double mean) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += (v - mean) * (v - mean);
  return std::sqrt(sum / static_cast<double>(values.size()));
}

}  // namespace

std::string_view to_label(Method method) {
  switch (method) {
    case Method::MarkedWords: return "marked-words";
    case Method::Jsd: return "jsd";
    case Method::Svm: return "svm";
  }
  return "";
}

std::string_view to_label(Axis axis) {
  switch (axis) {
    case Axis::Race: return "race";
    case Axis::Gender: return "gender";
    case Axis::Combined: return "combined";
  }
  return "";
}

std::optional<Method> parse_method(std::string_view text) {
  const std::string key = fold_slug(text);
  if (key == "markedwords") return Method::MarkedWords;
  if (key == "jsd") return Method::Jsd;
  if (key == "svm") return Method::Svm;
  return std::nullopt;
}

std::optional<Axis> parse_axis(std::string_view text) {
  const std::string key = fold_slug(text);
  if (key == "race") return Axis::Race;
  if (key == "gender") return Axis::Gender;
  if (key == "combined") return Axis::Combined;
  return std::nullopt;
}

std::optional<TextField> parse_text_field(std::string_view text) {
  const std::string key = fold_slug(text);
  if (key == "item") return TextField::Item;
  if (key == "reason") return TextField::Reason;
  if (key == "both") return TextField::Both;
  return std::nullopt;
}

std::vector<PairSpec> axis_pairs(Axis axis) {
  const std::array<Gender, 3> genders = {Gender::Man, Gender::Woman, Gender::Nonbinary};
  const std::array<Race, 5> races = {Race::Asian, Race::Black, Race::Latino, Race::MiddleEastern,
                                     Race::White};

  auto race_side = [&](Race race) {
    GroupSide side;
    side.name = std::string(display_name(race));
    side.slug = fold_slug(to_label(race));
    for (Gender gender : genders) side.groups.push_back({race, gender});
    return side;
  };
  auto gender_side = [&](Gender gender) {
    GroupSide side;
    side.name = std::string(to_label(gender));
    side.slug = fold_slug(to_label(gender));
    for (Race race : races) side.groups.push_back({race, gender});
    return side;
  };
  auto cell_side = [](const GroupSpec& group) {
    return GroupSide{group.display(), group.slug(), {group}};
  };

  std::vector<PairSpec> pairs;
  switch (axis) {
    case Axis::Race:
      for (Race race : {Race::Asian, Race::Black, Race::Latino, Race::MiddleEastern})
        pairs.push_back({race_side(race), race_side(Race::White)});
      break;
    case Axis::Gender:
      for (Gender gender : {Gender::Woman, Gender::Nonbinary})
        pairs.push_back({gender_side(gender), gender_side(Gender::Man)});
      break;
    case Axis::Combined: {
      const GroupSpec reference{Race::White, Gender::Man};
      for (const GroupSpec& group : all_groups())
        if (group != reference) pairs.push_back({cell_side(group), cell_side(reference)});
      break;
    }
  }
  return pairs;
}

AnalysisReport run_analysis(const Corpus& corpus, const AnalysisOptions& options,
                            const std::filesystem::path& output_dir) {
  std::filesystem::create_directories(output_dir);

  const TextField field = options.field.value_or(default_field(options.method));
  const bool anonymize_on = options.anonymize.value_or(default_anonymize(options.method));
  const double laplace = options.paper_mode ? 0.5 : options.laplace;

  AnonymizationLexicon loaded;
  Preprocessor prep;
  prep.anonymize_on = anonymize_on;
  prep.stopwords_on = options.use_stopwords;
  if (options.lexicon_path) {
    loaded = load_lexicon(*options.lexicon_path);
    prep.lexicon = &loaded;
  } else {
    prep.lexicon = &default_lexicon();
  }

  AnalysisReport report;
  report.method = options.method;
  report.axis = options.axis;
  report.field = field;
  report.anonymized = anonymize_on;

  const std::vector<PairSpec> pairs = axis_pairs(options.axis);

  const std::string axis_name(to_label(options.axis));
  const std::string method_file = options.method == Method::MarkedWords ? "marked_words"
                                  : options.method == Method::Jsd       ? "jsd"
                                                                        : "svm";
  ReportFile summary(output_dir, method_file + "_" + axis_name + ".txt");
  write_header(summary.stream(), options, field, anonymize_on, laplace);
  report.files.push_back(summary.name());

  if (options.method == Method::MarkedWords) {
    summary.stream() << "\n";
    write_table_row(summary.stream(), "Group", "Word", "Z-Score");
    summary.stream() << std::string(58, '-') << "\n";
  }

  std::vector<double> test_accuracies;

  for (const PairSpec& pair : pairs) {
    const auto marked_records = records_for(corpus, pair.marked.groups);
    const auto unmarked_records = records_for(corpus, pair.unmarked.groups);
    if (unmarked_records.empty())
      throw ValidationFailure("corpus lacks the unmarked group " + pair.unmarked.name +
                              " required by the " + axis_name + " axis");
    if (marked_records.empty()) {
      report.skipped.push_back(pair.name());
      continue;
    }

    PairResult result;
    result.name = pair.name();
    result.slug = pair.slug();
    result.marked_records = marked_records.size();
    result.unmarked_records = unmarked_records.size();

    if (options.method == Method::MarkedWords) {
      const GroupCounts marked = count_words(side_tokens(marked_records, field, prep));
      const GroupCounts unmarked = count_words(side_tokens(unmarked_records, field, prep));
      if (marked.total == 0) {
        report.skipped.push_back(pair.name());
        continue;
      }
      if (unmarked.total == 0)
        throw ValidationFailure("unmarked group " + pair.unmarked.name +
                                " has no analyzable text");

      MarkedWordsConfig config;
      config.z_threshold = options.z_threshold;
      config.laplace = laplace;
      config.min_count = options.min_count;

      const auto stats = all_log_odds_stats(marked, unmarked, config);

      ReportFile tsv(output_dir, method_file + "_" + axis_name + "_" + result.slug + ".tsv");
      write_header(tsv.stream(), options, field, anonymize_on, laplace);
      tsv.stream() << "# pair=" << result.name << " marked_total=" << marked.total
                   << " unmarked_total=" << unmarked.total << "\n";
      tsv.stream() << "word\tdelta\tvar_marked\tvar_unmarked\tz\n";
      for (const auto& stat : stats)
        tsv.stream() << stat.word << '\t' << fmt(stat.delta) << '\t' << fmt(stat.var_marked)
                     << '\t' << fmt(stat.var_unmarked) << '\t' << fmt(stat.z) << '\n';
      result.files.push_back(tsv.name());

      std::size_t marked_rows = 0;
      for (const auto& stat : stats) {
        if (marked.count_of(stat.word) < config.min_count) continue;
        if (stat.z > config.z_threshold) {
          write_table_row(summary.stream(), pair.marked.name, stat.word, fmt(stat.z, "%.3f"));
          ++marked_rows;
        }
      }
      if (marked_rows == 0)
        write_table_row(summary.stream(), pair.marked.name, "(no significant words)", "");
      result.significant_marked = marked_rows;

      // Unmarked-direction rows come from the same run: z below -threshold,
      // shown with the magnitude of the effect.
      const std::string unmarked_label = pair.unmarked.name + " (vs " + pair.marked.name + ")";
      std::size_t unmarked_rows = 0;
      std::vector<LogOddsStat> reversed(stats.rbegin(), stats.rend());
      for (const auto& stat : reversed) {
        if (unmarked.count_of(stat.word) < config.min_count) continue;
        if (stat.z < -config.z_threshold) {
          write_table_row(summary.stream(), unmarked_label, stat.word, fmt(-stat.z, "%.3f"));
          ++unmarked_rows;
        }
      }
      if (unmarked_rows == 0)
        write_table_row(summary.stream(), unmarked_label, "(no significant words)", "");
      result.significant_unmarked = unmarked_rows;
    }

    if (options.method == Method::Jsd) {
      const GroupCounts marked = count_words(side_tokens(marked_records, field, prep));
      const GroupCounts unmarked = count_words(side_tokens(unmarked_records, field, prep));
      if (marked.total == 0) {
        report.skipped.push_back(pair.name());
        continue;
      }
      if (unmarked.total == 0)
        throw ValidationFailure("unmarked group " + pair.unmarked.name +
                                " has no analyzable text");

      const FreqDistribution p = to_distribution(marked);
      const FreqDistribution q = to_distribution(unmarked);
      result.jsd_value = jsd(p, q, options.log_base);
      const auto contributions = word_contributions(p, q, options.top_k, options.log_base);

      ReportFile tsv(output_dir, method_file + "_" + axis_name + "_" + result.slug + ".tsv");
      write_header(tsv.stream(), options, field, anonymize_on, laplace);
      tsv.stream() << "# pair=" << result.name << " jsd=" << fmt(result.jsd_value) << "\n";
      tsv.stream() << "# a trailing * on favored_group marks equal frequency on both sides\n";
      tsv.stream() << "rank\tword\tcontribution\tpercent\tfavored_group\n";
      int rank = 1;
      for (const auto& c : contributions) {
        const char* favored = c.favored == FavoredSide::Marked ? "marked" : "unmarked";
        tsv.stream() << rank++ << '\t' << c.word << '\t' << fmt(c.contribution) << '\t'
                     << fmt(c.percent) << '\t' << favored << (c.tie ? "*" : "") << '\n';
      }
      result.files.push_back(tsv.name());

      summary.stream() << "\n" << result.name << ": jsd=" << fmt(result.jsd_value)
                       << " (marked=" << pair.marked.name << ", unmarked=" << pair.unmarked.name
                       << ")\n";
      int shown = 0;
      for (const auto& c : contributions) {
        if (shown++ == 10) break;
        summary.stream() << "  " << shown << ". " << c.word << "  " << fmt(c.percent, "%.2f")
                         << "%  ("
                         << (c.favored == FavoredSide::Marked ? pair.marked.name
                                                              : pair.unmarked.name)
                         << ")\n";
      }
    }

    if (options.method == Method::Svm) {
      std::vector<TokenList> docs;
      std::vector<int> labels;
      for (const auto* record : marked_records) {
        docs.push_back(prep.run(field_text(*record, field)));
        labels.push_back(1);
      }
      for (const auto* record : unmarked_records) {
        docs.push_back(prep.run(field_text(*record, field)));
        labels.push_back(-1);
      }

      const auto [train_idx, test_idx] = stratified_split(labels, options.train_fraction,
                                                          options.seed);
      std::vector<TokenList> train_docs;
      std::vector<int> train_labels;
      for (std::size_t i : train_idx) {
        train_docs.push_back(docs[i]);
        train_labels.push_back(labels[i]);
      }
      std::vector<TokenList> test_docs;
      std::vector<int> test_labels;
      for (std::size_t i : test_idx) {
        test_docs.push_back(docs[i]);
        test_labels.push_back(labels[i]);
      }

      const FeatureSpace space = FeatureSpace::from_documents(train_docs);
      if (space.size() == 0)
        throw ValidationFailure("pair " + result.name + " has an empty training vocabulary");
      const CountMatrix x_train = vectorize(train_docs, space);
      const CountMatrix x_test = vectorize(test_docs, space);

      const LinearModel model = train_linear_svm(x_train, train_labels, options.reg_c,
                                                 options.seed);
      TrainReport train_report;
      train_report.train_accuracy = evaluate(model, x_train, train_labels);
      train_report.test_accuracy = evaluate(model, x_test, test_labels);
      train_report.train_fraction = options.train_fraction;
      train_report.seed = options.seed;
      train_report.converged = model.converged;
      train_report.top_features = top_features(model, space, 10, options.abs_coefficients);

      result.train_accuracy = train_report.train_accuracy;
      result.test_accuracy = train_report.test_accuracy;
      result.converged = train_report.converged;
      test_accuracies.push_back(result.test_accuracy);

      const auto& top = train_report.top_features;

      ReportFile model_file(output_dir,
                            method_file + "_" + axis_name + "_" + result.slug + "_model.txt");
      write_header(model_file.stream(), options, field, anonymize_on, laplace);
      model_file.stream() << "# pair=" << result.name << " converged="
                          << (model.converged ? "yes" : "no") << " epochs=" << model.epochs_run
                          << " objective=" << fmt(model.objective) << "\n";
      model_file.stream() << "bias\t" << fmt(model.bias) << "\n";
      for (const auto& [word, coefficient] : top_features(model, space, 0, false))
        model_file.stream() << word << '\t' << fmt(coefficient) << '\n';
      result.files.push_back(model_file.name());

      ordered_json j;
      j["pair"] = result.name;
      j["marked"] = pair.marked.name;
      j["unmarked"] = pair.unmarked.name;
      j["train_accuracy"] = train_report.train_accuracy;
      j["test_accuracy"] = train_report.test_accuracy;
      j["train_fraction"] = train_report.train_fraction;
      j["seed"] = train_report.seed;
      j["reg_c"] = options.reg_c;
      j["converged"] = train_report.converged;
      j["epochs"] = model.epochs_run;
      j["objective"] = model.objective;
      ordered_json features = ordered_json::array();
      for (const auto& [word, coefficient] : top) {
        ordered_json f;
        f["word"] = word;
        f["coefficient"] = coefficient;
        features.push_back(std::move(f));
      }
      j["top_features"] = std::move(features);

      ReportFile report_file(output_dir,
                             method_file + "_" + axis_name + "_" + result.slug + "_report.json");
      report_file.stream() << j.dump(2) << "\n";
      result.files.push_back(report_file.name());

      summary.stream() << "\n" << result.name << ": train_accuracy="
                       << fmt(result.train_accuracy, "%.4f")
                       << " test_accuracy=" << fmt(result.test_accuracy, "%.4f")
                       << " converged=" << (model.converged ? "yes" : "no") << "\n";
      for (const auto& [word, coefficient] : top)
        summary.stream() << "  " << word << "  " << fmt(coefficient, "%+.6f") << "\n";
    }

    for (const auto& file : result.files) report.files.push_back(file);
    report.pairs.push_back(std::move(result));
  }

  if (options.method == Method::Svm && !test_accuracies.empty()) {
    report.accuracy_mean = mean_of(test_accuracies);
    report.accuracy_std = population_std(test_accuracies, report.accuracy_mean);
    summary.stream() << "\ntest accuracy over " << test_accuracies.size()
                     << " pairs: " << fmt(report.accuracy_mean, "%.2f") << " \xC2\xB1 "
                     << fmt(report.accuracy_std, "%.2f") << "\n";
  }

  if (!report.skipped.empty()) {
    summary.stream() << "\n";
    for (const auto& name : report.skipped)
      summary.stream() << "# skipped (no marked-group records): " << name << "\n";
  }

  return report;
}

}  // namespace biasaudit
