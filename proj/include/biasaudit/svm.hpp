#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "biasaudit/preprocess.hpp"

namespace biasaudit {

// Word-to-column mapping. Build it from training documents only so test
// vocabulary never leaks into the feature space.
struct FeatureSpace {
  std::vector<std::string> words;            // sorted, defines column order
  std::map<std::string, std::size_t> index;  // dense indices 0..size-1

  static FeatureSpace from_documents(const std::vector<TokenList>& docs);
  std::size_t size() const { return words.size(); }
};

// Dense row-major count matrix; fine at this scale (hundreds of documents).
struct CountMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double* row(std::size_t i) { return values.data() + i * cols; }
  const double* row(std::size_t i) const { return values.data() + i * cols; }
};

// Raw token counts per document; out-of-vocabulary tokens are ignored.
CountMatrix vectorize(const std::vector<TokenList>& docs, const FeatureSpace& space);

// Deterministic per-class split preserving class proportions to within one
// element; both sides of every class stay non-empty. Returns (train, test)
// index lists, each sorted ascending. Throws ClassTooSmall below 2 members.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<int>& labels, double train_fraction, std::uint64_t seed);

struct SvmTrainOptions {
  int max_epochs = 500;
  double rel_tol = 1e-6;  // stop when the relative objective change drops below this
};

struct LinearModel {
  std::vector<double> weights;  // one per vocabulary word
  double bias = 0.0;
  double reg_c = 1.0;
  std::uint64_t seed = 0;
  bool converged = false;  // false means the epoch budget ran out first
  int epochs_run = 0;
  double objective = 0.0;
  std::vector<double> objective_trace;  // accepted end-of-epoch objective values
};

// Minimizes 0.5*||w||^2 + reg_c * sum_i hinge(y_i * (w.x_i + b)) by
// epoch-ordered subgradient descent with seed-derived shuffling. An epoch that
// raises the objective is rolled back and retried with a halved step scale,
// so the accepted objective trace is non-increasing. Labels are +1 for the
// marked class and -1 for the unmarked class. Throws DegenerateLabels when
// only one class is present.
LinearModel train_linear_svm(const CountMatrix& X, const std::vector<int>& y, double reg_c,
                             std::uint64_t seed, const SvmTrainOptions& options = {});

// k largest coefficients (signed, favoring the marked class), descending,
// ties alphabetical. absolute ranks by |coefficient| instead.
std::vector<std::pair<std::string, double>> top_features(const LinearModel& model,
                                                         const FeatureSpace& space, int k = 10,
                                                         bool absolute = false);

// Fraction of sign(w.x + b) matching the labels; sign(0) counts as +1.
double evaluate(const LinearModel& model, const CountMatrix& X, const std::vector<int>& y);

struct TrainReport {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool converged = true;
  std::vector<std::pair<std::string, double>> top_features;
};

}  // namespace biasaudit
