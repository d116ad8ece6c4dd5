#include "biasaudit/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "biasaudit/errors.hpp"

namespace biasaudit {

FeatureSpace FeatureSpace::from_documents(const std::vector<TokenList>& docs) {
  std::set<std::string> vocab;
  for (const auto& doc : docs) vocab.insert(doc.begin(), doc.end());

  FeatureSpace space;
  space.words.assign(vocab.begin(), vocab.end());
  for (std::size_t i = 0; i < space.words.size(); ++i) space.index.emplace(space.words[i], i);
  return space;
}

CountMatrix vectorize(const std::vector<TokenList>& docs, const FeatureSpace& space) {
  if (space.size() == 0) throw InvalidArgument("vectorize needs a non-empty feature space");

  CountMatrix m;
  m.rows = docs.size();
  m.cols = space.size();
  m.values.assign(m.rows * m.cols, 0.0);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    double* row = m.row(i);
    for (const auto& token : docs[i]) {
      auto it = space.index.find(token);
      if (it != space.index.end()) row[it->second] += 1.0;
    }
  }
  return m;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<int>& labels, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InvalidArgument("train_fraction must be in (0, 1)");
  if (labels.empty()) throw InvalidArgument("stratified_split needs at least one label");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [label, members] : by_class)
    if (members.size() < 2)
      throw ClassTooSmall("class " + std::to_string(label) + " has fewer than 2 members");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n = members.size();
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    train.insert(train.end(), members.begin(), members.begin() + n_train);
    test.insert(test.end(), members.begin() + n_train, members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

namespace {

double dot_row(const CountMatrix& X, std::size_t i, const std::vector<double>& w) {
  const double* row = X.row(i);
  double sum = 0.0;
  for (std::size_t j = 0; j < X.cols; ++j) sum += row[j] * w[j];
  return sum;
}

double objective_value(const CountMatrix& X, const std::vector<int>& y, double reg_c,
                       const std::vector<double>& w, double b) {
  double reg = 0.0;
  for (double v : w) reg += v * v;
  reg *= 0.5;

  double hinge_sum = 0.0;
  for (std::size_t i = 0; i < X.rows; ++i) {
    const double margin = y[i] * (dot_row(X, i, w) + b);
    if (margin < 1.0) hinge_sum += 1.0 - margin;
  }
  return reg + reg_c * hinge_sum;
}

}  // namespace

LinearModel train_linear_svm(const CountMatrix& X, const std::vector<int>& y, double reg_c,
                             std::uint64_t seed, const SvmTrainOptions& options) {
  if (X.rows != y.size()) throw InvalidArgument("label count does not match matrix rows");
  if (X.rows == 0 || X.cols == 0) throw InvalidArgument("cannot train on an empty matrix");
  if (reg_c <= 0.0) throw InvalidArgument("reg_c must be positive");

  bool has_pos = false;
  bool has_neg = false;
  for (int label : y) {
    if (label == 1) has_pos = true;
    else if (label == -1) has_neg = true;
    else throw InvalidArgument("labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw DegenerateLabels("training needs both classes present");

  const std::size_t n = X.rows;
  const double lambda = 1.0 / (static_cast<double>(n) * reg_c);
  const double radius = 1.0 / std::sqrt(lambda);  // the optimum lies inside this ball

  LinearModel model;
  model.reg_c = reg_c;
  model.seed = seed;
  model.weights.assign(X.cols, 0.0);
  std::vector<double>& w = model.weights;
  double b = 0.0;

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  double f_prev = objective_value(X, y, reg_c, w, b);
  model.objective_trace.push_back(f_prev);

  double scale = 1.0;  // halved whenever an epoch overshoots
  long long t = 1;
  int epoch = 0;
  for (; epoch < options.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const std::vector<double> w_snapshot = w;
    const double b_snapshot = b;
    const long long t_snapshot = t;

    for (std::size_t i : order) {
      const double eta = scale / (lambda * static_cast<double>(t));
      const double margin = y[i] * (dot_row(X, i, w) + b);

      const double shrink = std::max(0.0, 1.0 - eta * lambda);
      for (double& v : w) v *= shrink;
      if (margin < 1.0) {
        const double* row = X.row(i);
        const double step = eta * y[i];
        for (std::size_t j = 0; j < X.cols; ++j) w[j] += step * row[j];
        b += (scale / static_cast<double>(t)) * y[i];
      }

      double norm_sq = 0.0;
      for (double v : w) norm_sq += v * v;
      if (norm_sq > radius * radius) {
        const double shrink_to_ball = radius / std::sqrt(norm_sq);
        for (double& v : w) v *= shrink_to_ball;
      }
      ++t;
    }

    const double f_now = objective_value(X, y, reg_c, w, b);
    if (f_now > f_prev) {
      w = w_snapshot;
      b = b_snapshot;
      t = t_snapshot;
      scale *= 0.5;
      if (scale < 1e-12) {
        model.converged = true;
        break;
      }
      continue;
    }

    const double improvement = (f_prev - f_now) / std::max(1.0, f_prev);
    f_prev = f_now;
    model.objective_trace.push_back(f_now);
    if (improvement < options.rel_tol) {
      model.converged = true;
      break;
    }
    // Slow progress means the iterate is orbiting the optimum at the current
    // step size; annealing the scale settles it into the tolerance band.
    if (improvement < 1000.0 * options.rel_tol) scale *= 0.5;
  }

  model.bias = b;
  model.epochs_run = std::min(epoch + 1, options.max_epochs);
  model.objective = f_prev;
  return model;
}

std::vector<std::pair<std::string, double>> top_features(const LinearModel& model,
                                                         const FeatureSpace& space, int k,
                                                         bool absolute) {
  if (model.weights.size() != space.size())
    throw InvalidArgument("model and feature space disagree on vocabulary size");

  std::vector<std::pair<std::string, double>> features;
  features.reserve(space.size());
  for (std::size_t j = 0; j < space.size(); ++j)
    features.emplace_back(space.words[j], model.weights[j]);

  std::sort(features.begin(), features.end(), [absolute](const auto& a, const auto& b) {
    const double av = absolute ? std::fabs(a.second) : a.second;
    const double bv = absolute ? std::fabs(b.second) : b.second;
    if (av != bv) return av > bv;
    return a.first < b.first;
  });
  if (k > 0 && static_cast<std::size_t>(k) < features.size()) features.resize(k);
  return features;
}

double evaluate(const LinearModel& model, const CountMatrix& X, const std::vector<int>& y) {
  if (X.rows != y.size()) throw InvalidArgument("label count does not match matrix rows");
  if (X.cols != model.weights.size())
    throw InvalidArgument("model and matrix disagree on vocabulary size");
  if (X.rows == 0) throw InvalidArgument("cannot evaluate on an empty matrix");

  std::size_t correct = 0;
  for (std::size_t i = 0; i < X.rows; ++i) {
    const double score = dot_row(X, i, model.weights) + model.bias;
    const int predicted = score >= 0.0 ? 1 : -1;
    if (predicted == y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(X.rows);
}

}  // namespace biasaudit
