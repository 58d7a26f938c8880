#include <cmath>
#include <random>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "palop/perception/anchor.hpp"
#include "palop/perception/classifier.hpp"
#include "palop/perception/dataset.hpp"

namespace palop {
namespace {

using perception::Sample;
using perception::TrainingSet;
using sim::Vec;

sim::Detection det(std::string type, sim::Cell cell, Vec f) {
  return {std::move(type), std::move(f), cell, 1.0};
}

TEST(Anchor, EmptyStoreCreates) {
  perception::AnchorStore store;
  auto m = perception::anchor_match(det("Tv", {1, 1}, {0, 0}), store);
  EXPECT_TRUE(m.created);
  EXPECT_EQ(m.constant, "tv0");
}

TEST(Anchor, RedetectionMatches) {
  perception::AnchorStore store;
  auto a = store.match(det("Tv", {1, 1}, {0.5, 0.5}));
  auto b = store.match(det("Tv", {1, 1}, {0.5, 0.5}));
  EXPECT_FALSE(b.created);
  EXPECT_EQ(a.constant, b.constant);
  EXPECT_EQ(store.find(a.constant)->count, 2u);
}

TEST(Anchor, TypeMustAgree) {
  perception::AnchorStore store;
  store.match(det("Tv", {1, 1}, {0, 0}));
  EXPECT_TRUE(store.match(det("Box", {1, 1}, {0, 0})).created);
}

TEST(Anchor, TwoObjectsBeyondPositionGate) {
  perception::AnchorStore store({0.5, 0.3});
  auto a = store.match(det("Tv", {1, 1}, {0, 0}));
  auto b = store.match(det("Tv", {2, 1}, {0, 0}));  // distance 1 > 0.5
  EXPECT_TRUE(b.created);
  EXPECT_NE(a.constant, b.constant);
}

TEST(Anchor, FeatureGate) {
  perception::AnchorStore store({0.5, 0.3});
  store.match(det("Tv", {1, 1}, {0, 0}));
  EXPECT_TRUE(store.match(det("Tv", {1, 1}, {1, 1})).created);
  EXPECT_FALSE(store.match(det("Tv", {1, 1}, {0.1, 0.1})).created);
}

TEST(Anchor, CentroidIsRunningMean) {
  perception::AnchorStore store({0.5, 1.0});
  store.match(det("Tv", {0, 0}, {0, 0}));
  store.match(det("Tv", {0, 0}, {0.6, 0}));
  store.match(det("Tv", {0, 0}, {0.3, 0.9}));
  const auto& c = store.anchors()[0].centroid;
  EXPECT_NEAR(c[0], 0.3, 1e-12);
  EXPECT_NEAR(c[1], 0.3, 1e-12);
}

TEST(Anchor, ProcessingAPerceptTwiceIsIdempotent) {
  perception::AnchorStore store;
  sim::Percept p{{}, {det("Tv", {1, 1}, {0, 0}), det("Tv", {3, 1}, {0, 0}),
                      det("Box", {1, 2}, {1, 1})}};
  auto first = store.process(p);
  std::size_t n = store.anchors().size();
  auto second = store.process(p);
  EXPECT_EQ(store.anchors().size(), n);
  for (std::size_t i = 0; i < first.size(); ++i) {
    EXPECT_FALSE(second[i].created);
    EXPECT_EQ(first[i].constant, second[i].constant);
  }
}

TEST(Anchor, OneToOneWithinAPercept) {
  perception::AnchorStore store({1.5, 0.3});
  store.match(det("Tv", {1, 1}, {0, 0}));
  // both within the gate of tv0; only one may claim it
  auto r = store.process({{}, {det("Tv", {1, 1}, {0, 0}), det("Tv", {2, 1}, {0, 0})}});
  EXPECT_FALSE(r[0].created);
  EXPECT_TRUE(r[1].created);
}

TrainingSet set(const std::string& p, std::vector<Vec> xs) {
  TrainingSet t{"tv", p, {}};
  std::size_t step = 0;
  for (auto& x : xs) {
    perception::dataset_add(t, {std::move(x), !p.starts_with("not_"), "tv0", step++, "tv", p});
  }
  return t;
}

TEST(Classifier, SeparablePairLearned) {
  perception::TrainOptions o;
  o.epochs = 200;
  o.learning_rate = 0.5;
  auto m = perception::ClassifierModel::fresh(2, o);
  m = perception::classifier_train(m, set("on", {{1, 1}}), set("not_on", {{-1, -1}}));
  EXPECT_TRUE(perception::classifier_predict(m, {1, 1}).positive);
  EXPECT_FALSE(perception::classifier_predict(m, {-1, -1}).positive);
  EXPECT_TRUE(m.trained());
}

TEST(Classifier, ZeroEpochsUnchanged) {
  perception::TrainOptions o;
  o.epochs = 0;
  auto m = perception::ClassifierModel::fresh(2, o);
  auto after = perception::classifier_train(m, set("on", {{1, 1}}), set("not_on", {{-1, -1}}));
  EXPECT_EQ(perception::to_json(after), perception::to_json(m));
}

TEST(Classifier, EmptySetRejected) {
  auto m = perception::ClassifierModel::fresh(2);
  EXPECT_THROW(perception::classifier_train(m, set("on", {{1, 1}}), set("not_on", {})),
               ClassifierError);
  EXPECT_THROW(perception::classifier_train(m, set("on", {}), set("not_on", {{1, 1}})),
               ClassifierError);
}

// 1-D points +1 (positive) and -1 (negative): with the bias at the midpoint
// the bias gradient vanishes for every slope, and the slope gradient points
// towards larger margins.
TEST(Classifier, SymmetricPairGradient) {
  std::vector<Vec> X{{1.0}, {-1.0}};
  std::vector<int> y{1, 0};
  for (double w : {0.0, 0.5, 2.0, 7.0}) {
    Vec g = perception::logistic_gradient({w, 0.0}, X, y);
    EXPECT_NEAR(g[1], 0.0, 1e-15);
    EXPECT_LT(g[0], 0.0);
    EXPECT_NEAR(g[0], perception::sigmoid(w) - 1.0, 1e-15);
  }
}

TEST(Classifier, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = 1e-5;
  for (int inst = 0; inst < 100; ++inst) {
    std::size_t d = 1 + rng() % 5, n = 1 + rng() % 8;
    std::vector<Vec> X(n, Vec(d));
    std::vector<int> y(n);
    for (std::size_t k = 0; k < n; ++k) {
      for (auto& x : X[k]) x = normal(rng);
      y[k] = static_cast<int>(rng() % 2);
    }
    Vec w(d + 1);
    for (auto& x : w) x = normal(rng);
    Vec g = perception::logistic_gradient(w, X, y);
    double diff = 0, norm = 0;
    for (std::size_t i = 0; i <= d; ++i) {
      Vec up = w, down = w;
      up[i] += h;
      down[i] -= h;
      double fd = (perception::logistic_loss(up, X, y) - perception::logistic_loss(down, X, y)) /
                  (2 * h);
      diff += (fd - g[i]) * (fd - g[i]);
      norm += g[i] * g[i];
    }
    EXPECT_LE(std::sqrt(diff), 1e-5 * std::max(std::sqrt(norm), 1e-3)) << "instance " << inst;
  }
}

TEST(Classifier, SigmoidAgainstMultiprecision) {
  using big = boost::multiprecision::cpp_bin_float_50;
  for (double z = -40.0; z <= 40.0; z += 0.37) {
    big ref = big(1) / (big(1) + exp(-big(z)));
    double err = std::abs(perception::sigmoid(z) - ref.convert_to<double>());
    EXPECT_LE(err, 1e-12) << "z=" << z;
    EXPECT_LE(err, 1e-12 * ref.convert_to<double>() + 1e-300) << "relative, z=" << z;
  }
}

TEST(Predict, ZeroWeights) {
  auto m = perception::ClassifierModel::fresh(3);
  auto p = perception::classifier_predict(m, {1, 2, 3});
  EXPECT_DOUBLE_EQ(p.probability, 0.5);
  EXPECT_FALSE(p.positive);
}

TEST(Predict, LargeMargin) {
  auto m = perception::ClassifierModel::fresh(2);
  m.weights = {10, 10, 0};
  EXPECT_GT(perception::classifier_predict(m, {1, 1}).probability, 0.99);
}

TEST(Predict, DimensionMismatch) {
  auto m = perception::ClassifierModel::fresh(2);
  EXPECT_THROW(perception::classifier_predict(m, {1, 2, 3}), ClassifierError);
}

TEST(Predict, ThresholdMustBeOpenUnitInterval) {
  perception::TrainOptions o;
  o.threshold = 1.0;
  EXPECT_THROW(perception::ClassifierModel::fresh(2, o), ClassifierError);
}

TEST(Classifier, DeterministicUnderSeed) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec> pos, neg;
  for (int i = 0; i < 30; ++i) {
    pos.push_back({1 + normal(rng), normal(rng)});
    neg.push_back({-1 + normal(rng), normal(rng)});
  }
  perception::TrainOptions o;
  o.seed = 9;
  auto train = [&] {
    return perception::to_json(perception::classifier_train(
        perception::ClassifierModel::fresh(2, o), set("on", pos), set("not_on", neg)));
  };
  EXPECT_EQ(train(), train());
}

TEST(Classifier, WarmStartKeepsStandardization) {
  perception::TrainOptions o;
  o.epochs = 5;
  o.learning_rate = 0.1;
  auto m = perception::classifier_train(perception::ClassifierModel::fresh(1, o),
                                        set("on", {{2.0}}), set("not_on", {{0.0}}));
  auto warm = perception::classifier_train(m, set("on", {{5.0}}), set("not_on", {{-3.0}}));
  EXPECT_EQ(warm.mean, m.mean);
  auto cold = perception::classifier_train(m, set("on", {{5.0}}), set("not_on", {{-1.0}}), true);
  EXPECT_NE(cold.mean, m.mean);
  EXPECT_EQ(cold.trainings, 2u);
}

TEST(Model, JsonRoundTrip) {
  auto m = perception::classifier_train(perception::ClassifierModel::fresh(2),
                                        set("on", {{1, 0}}), set("not_on", {{0, 1}}));
  auto back = perception::model_from_json(perception::to_json(m));
  EXPECT_EQ(perception::to_json(back), perception::to_json(m));
  EXPECT_THROW(perception::model_from_json({{"dim", 2}}), ClassifierError);
}

TEST(Dataset, AddGrows) {
  TrainingSet t{"tv", "on", {}};
  perception::dataset_add(t, {{1, 2}, true, "tv0", 0, "tv", "on"});
  EXPECT_EQ(t.size(), 1u);
  for (int k = 0; k < 4; ++k) perception::dataset_add(t, {{1, 2}, true, "tv0", 1, "tv", "on"});
  EXPECT_EQ(t.size(), 5u);
}

TEST(Dataset, PairMismatch) {
  TrainingSet t{"tv", "on", {}};
  EXPECT_THROW(perception::dataset_add(t, {{1, 2}, true, "tv0", 0, "tv", "not_on"}), Error);
}

TEST(Dataset, CsvRoundTrip) {
  TrainingSet t = set("on", {{0.1, -2.5e-7}, {1.0 / 3.0, 12345.678}});
  std::string csv = perception::to_csv(t);
  TrainingSet back = perception::training_set_from_csv(csv, "tv", "on");
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(back.samples[i].features, t.samples[i].features);
    EXPECT_EQ(back.samples[i].positive, t.samples[i].positive);
    EXPECT_EQ(back.samples[i].constant, t.samples[i].constant);
    EXPECT_EQ(back.samples[i].step, t.samples[i].step);
  }
  EXPECT_EQ(perception::to_csv(back), csv);
}

}  // namespace
}  // namespace palop
