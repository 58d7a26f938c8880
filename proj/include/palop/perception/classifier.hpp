#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include <json.hpp>

#include "palop/error.hpp"
#include "palop/perception/dataset.hpp"
#include "palop/sim/world.hpp"

namespace palop::perception {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
inline double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Mean logistic loss of weights w (bias last) on rows X with 0/1 labels y.
inline double logistic_loss(const Vec& w, const std::vector<Vec>& X,
                            const std::vector<int>& y) {
  double total = 0;
  const std::size_t d = w.size() - 1;
  for (std::size_t n = 0; n < X.size(); ++n) {
    double z = w[d];
    for (std::size_t i = 0; i < d; ++i) z += w[i] * X[n][i];
    total += softplus(z) - y[n] * z;
  }
  return total / static_cast<double>(X.size());
}

inline Vec logistic_gradient(const Vec& w, const std::vector<Vec>& X,
                             const std::vector<int>& y) {
  const std::size_t d = w.size() - 1;
  Vec g(w.size(), 0.0);
  for (std::size_t n = 0; n < X.size(); ++n) {
    double z = w[d];
    for (std::size_t i = 0; i < d; ++i) z += w[i] * X[n][i];
    double r = sigmoid(z) - y[n];
    for (std::size_t i = 0; i < d; ++i) g[i] += r * X[n][i];
    g[d] += r;
  }
  for (auto& x : g) x /= static_cast<double>(X.size());
  return g;
}

struct TrainOptions {
  int epochs = 10;
  double learning_rate = 1e-4;
  double threshold = 0.5;
  bool balance = false;
  std::uint64_t seed = 0;
};

// ρ_{t,p}: logistic regression on standardized features. `weights` holds
// D coefficients followed by the bias; `mean`/`scale` are fixed at the
// first (or a cold-start) training.
struct ClassifierModel {
  std::size_t dim = 0;
  Vec weights;
  Vec mean;
  Vec scale;
  double threshold = 0.5;
  int epochs = 10;
  double learning_rate = 1e-4;
  bool balance = false;
  std::uint64_t seed = 0;
  std::size_t trainings = 0;

  static ClassifierModel fresh(std::size_t dim, const TrainOptions& o = {}) {
    if (!(o.threshold > 0.0 && o.threshold < 1.0)) {
      throw ClassifierError("threshold must lie in (0,1)");
    }
    ClassifierModel m;
    m.dim = dim;
    m.weights.assign(dim + 1, 0.0);
    m.mean.assign(dim, 0.0);
    m.scale.assign(dim, 1.0);
    m.threshold = o.threshold;
    m.epochs = o.epochs;
    m.learning_rate = o.learning_rate;
    m.balance = o.balance;
    m.seed = o.seed;
    return m;
  }

  bool trained() const { return trainings > 0; }

  Vec standardize(const Vec& x) const {
    if (x.size() != dim) {
      throw ClassifierError("feature dimension " + std::to_string(x.size()) +
                            " does not match model dimension " + std::to_string(dim));
    }
    Vec out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = (x[i] - mean[i]) / scale[i];
    return out;
  }

  double probability(const Vec& x) const {
    Vec s = standardize(x);
    double z = weights[dim];
    for (std::size_t i = 0; i < dim; ++i) z += weights[i] * s[i];
    return sigmoid(z);
  }
};

struct Prediction {
  double probability = 0.5;
  bool positive = false;
};

inline Prediction classifier_predict(const ClassifierModel& m, const Vec& x) {
  double p = m.probability(x);
  return {p, p > m.threshold};
}

// Per-sample SGD on the logistic loss, positives from T_pos and negatives
// from T_neg. Warm-starts from the current weights unless cold_start.
inline ClassifierModel classifier_train(ClassifierModel m, const TrainingSet& pos,
                                        const TrainingSet& neg,
                                        bool cold_start = false) {
  if (pos.empty() || neg.empty()) {
    throw ClassifierError("training needs non-empty positive and negative sets (" +
                          std::to_string(pos.size()) + "/" +
                          std::to_string(neg.size()) + ")");
  }
  std::vector<Vec> X;
  std::vector<int> y;
  for (const auto& s : pos.samples) {
    X.push_back(s.features);
    y.push_back(1);
  }
  for (const auto& s : neg.samples) {
    X.push_back(s.features);
    y.push_back(0);
  }
  for (const auto& x : X) {
    if (x.size() != m.dim) throw ClassifierError("feature dimension mismatch");
  }
  if (m.epochs <= 0) return m;

  std::mt19937_64 rng = sim::make_rng(m.seed, sim::Stream::kTrain, m.trainings);
  if (cold_start || m.trainings == 0) {
    for (std::size_t i = 0; i < m.dim; ++i) {
      double mu = 0, var = 0;
      for (const auto& x : X) mu += x[i];
      mu /= static_cast<double>(X.size());
      for (const auto& x : X) var += (x[i] - mu) * (x[i] - mu);
      var /= static_cast<double>(X.size());
      m.mean[i] = mu;
      m.scale[i] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    std::normal_distribution<double> normal(0.0, 1e-3);
    for (auto& w : m.weights) w = normal(rng);
  }

  std::vector<Vec> Z;
  for (const auto& x : X) Z.push_back(m.standardize(x));
  std::vector<std::size_t> order(Z.size());
  std::iota(order.begin(), order.end(), 0);
  if (m.balance) {
    std::size_t np = pos.size(), nn = neg.size();
    std::size_t minority_start = np < nn ? 0 : np;
    std::size_t minority = std::min(np, nn);
    for (std::size_t k = 0; k < std::max(np, nn) - minority; ++k) {
      order.push_back(minority_start + k % minority);
    }
  }
  for (int e = 0; e < m.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t n : order) {
      double z = m.weights[m.dim];
      for (std::size_t i = 0; i < m.dim; ++i) z += m.weights[i] * Z[n][i];
      double r = sigmoid(z) - y[n];
      for (std::size_t i = 0; i < m.dim; ++i) m.weights[i] -= m.learning_rate * r * Z[n][i];
      m.weights[m.dim] -= m.learning_rate * r;
    }
  }
  ++m.trainings;
  return m;
}

inline nlohmann::json to_json(const ClassifierModel& m) {
  return {{"dim", m.dim},
          {"weights", m.weights},
          {"mean", m.mean},
          {"scale", m.scale},
          {"threshold", m.threshold},
          {"epochs", m.epochs},
          {"learning_rate", m.learning_rate},
          {"balance", m.balance},
          {"seed", m.seed},
          {"trainings", m.trainings}};
}

inline ClassifierModel model_from_json(const nlohmann::json& j) {
  ClassifierModel m;
  try {
    m.dim = j.at("dim").get<std::size_t>();
    m.weights = j.at("weights").get<Vec>();
    m.mean = j.at("mean").get<Vec>();
    m.scale = j.at("scale").get<Vec>();
    m.threshold = j.at("threshold").get<double>();
    m.epochs = j.at("epochs").get<int>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.balance = j.value("balance", false);
    m.seed = j.value("seed", std::uint64_t{0});
    m.trainings = j.value("trainings", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ClassifierError(std::string("model: ") + e.what());
  }
  if (m.weights.size() != m.dim + 1 || m.mean.size() != m.dim ||
      m.scale.size() != m.dim) {
    throw ClassifierError("model arrays do not match its dimension");
  }
  return m;
}

}  // namespace palop::perception
