#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/classifiers.hpp"

#include <cmath>
#include <string>

#include "core/common.hpp"
#include "core/rng.hpp"

using namespace gs;

namespace {

double brute_force_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  size_t pairs = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

Dataset gaussian_blobs(size_t per_class, double sep, uint64_t seed) {
  Dataset d;
  Rng rng(seed);
  for (size_t i = 0; i < per_class; ++i) {
    d.x.push_back({sep + rng.normal() * 0.5, sep + rng.normal() * 0.5});
    d.y.push_back(1);
    d.x.push_back({-sep + rng.normal() * 0.5, -sep + rng.normal() * 0.5});
    d.y.push_back(0);
  }
  return d;
}

Dataset xor_dataset(size_t per_quadrant, uint64_t seed) {
  Dataset d;
  Rng rng(seed);
  for (size_t i = 0; i < per_quadrant; ++i) {
    for (int sx : {-1, 1}) {
      for (int sy : {-1, 1}) {
        d.x.push_back({sx * 1.0 + rng.normal() * 0.2, sy * 1.0 + rng.normal() * 0.2});
        d.y.push_back(sx * sy > 0 ? 1 : 0);
      }
    }
  }
  return d;
}

Dataset noise_dataset(size_t n, uint64_t seed) {
  Dataset d;
  Rng rng(seed);
  for (size_t i = 0; i < n; ++i) {
    d.x.push_back({rng.normal(), rng.normal(), rng.normal()});
    d.y.push_back(i % 2 == 0 ? 1 : 0);
  }
  return d;
}

}  // namespace

TEST_CASE("AUC matches the brute-force pairwise count on tied score sets") {
  Rng rng(77);
  for (int trial = 0; trial < 12; ++trial) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 100; ++i) {
      scores.push_back(static_cast<double>(rng.below(12)));  // heavy ties
      labels.push_back(i < 40 ? 1 : 0);
    }
    CHECK(auc_mann_whitney(scores, labels) ==
          doctest::Approx(brute_force_auc(scores, labels)).epsilon(1e-12));
  }
}

TEST_CASE("AUC hits the extremes under perfect separation") {
  std::vector<double> scores = {0.9, 0.8, 0.7, 0.2, 0.1};
  std::vector<int> labels = {1, 1, 1, 0, 0};
  CHECK(auc_mann_whitney(scores, labels) == 1.0);
  std::vector<int> flipped = {0, 0, 0, 1, 1};
  CHECK(auc_mann_whitney(scores, flipped) == 0.0);
  std::vector<double> constant(5, 3.0);
  CHECK(auc_mann_whitney(constant, labels) == 0.5);
}

TEST_CASE("attack evaluation reproduces a hand-worked confusion matrix") {
  std::vector<double> scores = {0.9, 0.8, 0.3, 0.1};
  std::vector<int> preds = {1, 1, 1, 0};
  std::vector<int> labels = {1, 0, 1, 0};
  MetricsRow m = evaluate_attack(scores, preds, labels);
  CHECK(m.auc == doctest::Approx(0.75));
  CHECK(m.advantage == doctest::Approx(m.auc - 0.5));
  CHECK(m.accuracy == doctest::Approx(0.75));
  CHECK(m.precision == doctest::Approx(2.0 / 3.0));
  CHECK(m.recall == doctest::Approx(1.0));
  CHECK(m.f1 == doctest::Approx(0.8));

  // nothing predicted positive: precision, recall and f1 all collapse to 0
  std::vector<int> none = {0, 0, 0, 0};
  MetricsRow z = evaluate_attack(scores, none, labels);
  CHECK(z.precision == 0.0);
  CHECK(z.recall == 0.0);
  CHECK(z.f1 == 0.0);
  CHECK(z.auc == doctest::Approx(0.75));  // scores unchanged

  std::vector<int> single(4, 1);
  CHECK_THROWS_AS(evaluate_attack(scores, preds, single), Error);
}

TEST_CASE("probability evaluation thresholds at one half") {
  std::vector<double> probs = {0.9, 0.51, 0.49, 0.1};
  std::vector<int> labels = {1, 0, 1, 0};
  MetricsRow m = evaluate_probs(probs, labels);
  // predictions {1,1,0,0}: TP 1, FP 1, FN 1, TN 1
  CHECK(m.accuracy == doctest::Approx(0.5));
  CHECK(m.precision == doctest::Approx(0.5));
  CHECK(m.recall == doctest::Approx(0.5));
  CHECK(m.advantage == doctest::Approx(m.auc - 0.5));
}

TEST_CASE("classifiers refuse single-class training data") {
  Dataset d;
  d.x = {{0.0}, {1.0}, {2.0}};
  d.y = {1, 1, 1};
  Hyperparams hp;
  for (auto kind : {classifier_kind::knn, classifier_kind::logreg, classifier_kind::rf})
    CHECK_THROWS_AS(train_classifier(kind, d, hp, 1), Error);
}

TEST_CASE("all classifiers separate well-separated blobs") {
  Dataset train = gaussian_blobs(30, 2.0, 5);
  Dataset eval = gaussian_blobs(30, 2.0, 6);
  Hyperparams hp;
  for (auto kind : {classifier_kind::knn, classifier_kind::logreg, classifier_kind::rf}) {
    auto clf = train_classifier(kind, train, hp, 9);
    MetricsRow m = evaluate_probs(clf->predict(eval.x), eval.y);
    CAPTURE(classifier_name(kind));
    CHECK(m.auc > 0.95);
    CHECK(m.accuracy > 0.9);
  }
}

TEST_CASE("the forest learns XOR where the linear model cannot") {
  Dataset train = xor_dataset(25, 11);
  Dataset eval = xor_dataset(25, 12);
  Hyperparams hp;

  auto rf = train_classifier(classifier_kind::rf, train, hp, 3);
  MetricsRow mrf = evaluate_probs(rf->predict(eval.x), eval.y);
  CHECK(mrf.auc > 0.9);

  auto lr = train_classifier(classifier_kind::logreg, train, hp, 3);
  MetricsRow mlr = evaluate_probs(lr->predict(eval.x), eval.y);
  CHECK(mlr.auc < 0.75);
}

TEST_CASE("training is deterministic for a fixed seed") {
  Dataset train = gaussian_blobs(20, 1.0, 31);
  Dataset eval = gaussian_blobs(10, 1.0, 32);
  Hyperparams hp;
  for (auto kind : {classifier_kind::knn, classifier_kind::logreg, classifier_kind::rf}) {
    auto a = train_classifier(kind, train, hp, 42);
    auto b = train_classifier(kind, train, hp, 42);
    CHECK(a->predict(eval.x) == b->predict(eval.x));
  }
}

TEST_CASE("labels without signal keep every classifier near chance") {
  Hyperparams hp;
  for (auto kind : {classifier_kind::knn, classifier_kind::logreg, classifier_kind::rf}) {
    double sum = 0.0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
      Dataset train = noise_dataset(40, 100 + seed);
      Dataset eval = noise_dataset(100, 200 + seed);
      auto clf = train_classifier(kind, train, hp, seed);
      sum += auc_mann_whitney(clf->predict(eval.x), eval.y);
    }
    double mean = sum / 10.0;
    CAPTURE(classifier_name(kind));
    CHECK(mean > 0.4);
    CHECK(mean < 0.6);
  }
}

TEST_CASE("classifier names are stable") {
  CHECK(std::string(classifier_name(classifier_kind::knn)) == "knn");
  CHECK(std::string(classifier_name(classifier_kind::logreg)) == "logreg");
  CHECK(std::string(classifier_name(classifier_kind::rf)) == "rf");
}
