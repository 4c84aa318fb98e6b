#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace gs {

struct Dataset {
  std::vector<std::vector<double>> x;
  std::vector<int> y;  // 1 = member, 0 = non-member
};

enum class classifier_kind { knn, logreg, rf };

const char* classifier_name(classifier_kind k);

struct Hyperparams {
  int knn_k = 5;
  double logreg_lr = 0.1;
  int logreg_iters = 500;
  double logreg_l2 = 1e-3;
  int rf_trees = 100;
  int rf_depth = 8;
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  // member probability per row
  virtual std::vector<double> predict(const std::vector<std::vector<double>>& x) const = 0;
};

// Deterministic for a fixed seed. Raises ClassImbalanceFatal when either
// class is absent from the training rows.
std::unique_ptr<Classifier> train_classifier(classifier_kind kind, const Dataset& train,
                                             const Hyperparams& hp, uint64_t seed);

// Mann-Whitney AUC of "higher score means member", ties counted half.
double auc_mann_whitney(const std::vector<double>& scores, const std::vector<int>& labels);

struct MetricsRow {
  double auc = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double advantage = 0.0;  // auc - 0.5 exactly
};

// scores rank members high; predictions are hard 0/1 calls. Raises
// SingleClassEval unless both labels occur. Precision is 0 when nothing is
// predicted positive.
MetricsRow evaluate_attack(const std::vector<double>& scores, const std::vector<int>& predictions,
                           const std::vector<int>& labels);

// classifier convention: prediction = probability >= 0.5
MetricsRow evaluate_probs(const std::vector<double>& probs, const std::vector<int>& labels);

}  // namespace gs
