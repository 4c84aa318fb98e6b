#include "core/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/common.hpp"
#include "core/rng.hpp"

namespace gs {

const char* classifier_name(classifier_kind k) {
  switch (k) {
    case classifier_kind::knn: return "knn";
    case classifier_kind::logreg: return "logreg";
    case classifier_kind::rf: return "rf";
  }
  return "?";
}

namespace {

void check_classes(const Dataset& train) {
  require(!train.x.empty() && train.x.size() == train.y.size(), errc::dimension_mismatch,
          "labels do not match feature rows");
  size_t pos = 0;
  for (int y : train.y) pos += y ? 1u : 0u;
  require(pos > 0 && pos < train.y.size(), errc::class_imbalance,
          "training rows must contain both classes");
}

// ---- logistic regression ---------------------------------------------------

class Logreg : public Classifier {
 public:
  Logreg(const Dataset& train, const Hyperparams& hp) {
    size_t n = train.x.size(), d = train.x[0].size();
    w_.assign(d, 0.0);
    b_ = 0.0;
    std::vector<double> p(n);
    std::vector<double> gw(d);
    for (int it = 0; it < hp.logreg_iters; ++it) {
      for (size_t i = 0; i < n; ++i) p[i] = sigmoid(dot(train.x[i]) + b_);
      std::fill(gw.begin(), gw.end(), 0.0);
      double gb = 0.0;
      for (size_t i = 0; i < n; ++i) {
        double e = p[i] - train.y[i];
        for (size_t j = 0; j < d; ++j) gw[j] += e * train.x[i][j];
        gb += e;
      }
      for (size_t j = 0; j < d; ++j)
        w_[j] -= hp.logreg_lr * (gw[j] / static_cast<double>(n) + hp.logreg_l2 * w_[j]);
      b_ -= hp.logreg_lr * gb / static_cast<double>(n);
    }
  }

  std::vector<double> predict(const std::vector<std::vector<double>>& x) const override {
    std::vector<double> out;
    out.reserve(x.size());
    for (const auto& row : x) {
      require(row.size() == w_.size(), errc::dimension_mismatch, "bad feature dimension");
      out.push_back(sigmoid(dot(row) + b_));
    }
    return out;
  }

 private:
  static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
  double dot(const std::vector<double>& row) const {
    double s = 0.0;
    for (size_t j = 0; j < w_.size(); ++j) s += w_[j] * row[j];
    return s;
  }

  std::vector<double> w_;
  double b_ = 0.0;
};

// ---- k nearest neighbours --------------------------------------------------

class Knn : public Classifier {
 public:
  Knn(const Dataset& train, const Hyperparams& hp)
      : x_(train.x), y_(train.y), k_(std::min<size_t>(hp.knn_k, train.x.size())) {}

  std::vector<double> predict(const std::vector<std::vector<double>>& x) const override {
    std::vector<double> out;
    out.reserve(x.size());
    std::vector<std::pair<double, size_t>> dist(x_.size());
    for (const auto& row : x) {
      require(row.size() == x_[0].size(), errc::dimension_mismatch, "bad feature dimension");
      for (size_t i = 0; i < x_.size(); ++i) {
        double s = 0.0;
        for (size_t j = 0; j < row.size(); ++j) {
          double d = row[j] - x_[i][j];
          s += d * d;
        }
        dist[i] = {s, i};  // squared distance; ties break on row index
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<ptrdiff_t>(k_), dist.end());
      size_t members = 0;
      for (size_t i = 0; i < k_; ++i) members += y_[dist[i].second] ? 1u : 0u;
      out.push_back(static_cast<double>(members) / static_cast<double>(k_));
    }
    return out;
  }

 private:
  std::vector<std::vector<double>> x_;
  std::vector<int> y_;
  size_t k_;
};

// ---- random forest ---------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double thresh = 0.0;
  int left = -1;
  int right = -1;
  double prob = 0.0;  // member fraction at the leaf
};

class Tree {
 public:
  Tree(const Dataset& train, const std::vector<size_t>& rows, int max_depth, Rng& rng) {
    build(train, rows, 0, max_depth, rng);
  }

  double predict(const std::vector<double>& row) const {
    int node = 0;
    while (nodes_[static_cast<size_t>(node)].feature >= 0) {
      const auto& nd = nodes_[static_cast<size_t>(node)];
      node = row[static_cast<size_t>(nd.feature)] <= nd.thresh ? nd.left : nd.right;
    }
    return nodes_[static_cast<size_t>(node)].prob;
  }

 private:
  static double gini(size_t pos, size_t n) {
    if (n == 0) return 0.0;
    double p = static_cast<double>(pos) / static_cast<double>(n);
    return 2.0 * p * (1.0 - p);
  }

  int build(const Dataset& train, const std::vector<size_t>& rows, int depth, int max_depth,
            Rng& rng) {
    int idx = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    size_t pos = 0;
    for (size_t r : rows) pos += train.y[r] ? 1u : 0u;
    double leaf_prob = rows.empty() ? 0.0
                                    : static_cast<double>(pos) / static_cast<double>(rows.size());
    bool pure = pos == 0 || pos == rows.size();
    if (depth >= max_depth || rows.size() < 2 || pure) {
      nodes_[static_cast<size_t>(idx)].prob = leaf_prob;
      return idx;
    }

    size_t d = train.x[0].size();
    size_t m = std::max<size_t>(1, static_cast<size_t>(std::sqrt(static_cast<double>(d))));
    std::vector<size_t> feats(d);
    std::iota(feats.begin(), feats.end(), 0);
    rng.shuffle(feats);
    feats.resize(m);

    double parent = gini(pos, rows.size());
    double best_gain = -1.0;
    int best_feat = -1;
    double best_thresh = 0.0;
    std::vector<std::pair<double, size_t>> vals(rows.size());
    for (size_t f : feats) {
      for (size_t i = 0; i < rows.size(); ++i) vals[i] = {train.x[rows[i]][f], rows[i]};
      std::sort(vals.begin(), vals.end());
      size_t lpos = 0;
      for (size_t i = 0; i + 1 < vals.size(); ++i) {
        lpos += train.y[vals[i].second] ? 1u : 0u;
        if (vals[i].first == vals[i + 1].first) continue;
        size_t nl = i + 1, nr = vals.size() - nl;
        double gain = parent -
                      (static_cast<double>(nl) * gini(lpos, nl) +
                       static_cast<double>(nr) * gini(pos - lpos, nr)) /
                          static_cast<double>(vals.size());
        // any valid split qualifies; zero-gain splits still partition the
        // space and let deeper levels separate XOR-like patterns
        if (gain > best_gain) {
          best_gain = gain;
          best_feat = static_cast<int>(f);
          best_thresh = 0.5 * (vals[i].first + vals[i + 1].first);
        }
      }
    }

    if (best_feat < 0) {
      nodes_[static_cast<size_t>(idx)].prob = leaf_prob;
      return idx;
    }

    std::vector<size_t> lrows, rrows;
    for (size_t r : rows) {
      if (train.x[r][static_cast<size_t>(best_feat)] <= best_thresh)
        lrows.push_back(r);
      else
        rrows.push_back(r);
    }
    nodes_[static_cast<size_t>(idx)].feature = best_feat;
    nodes_[static_cast<size_t>(idx)].thresh = best_thresh;
    int l = build(train, lrows, depth + 1, max_depth, rng);
    int r = build(train, rrows, depth + 1, max_depth, rng);
    nodes_[static_cast<size_t>(idx)].left = l;
    nodes_[static_cast<size_t>(idx)].right = r;
    return idx;
  }

  std::vector<TreeNode> nodes_;
};

class RandomForest : public Classifier {
 public:
  RandomForest(const Dataset& train, const Hyperparams& hp, uint64_t seed) {
    trees_.reserve(static_cast<size_t>(hp.rf_trees));
    size_t n = train.x.size();
    for (int t = 0; t < hp.rf_trees; ++t) {
      Rng rng(mix_seed(seed, static_cast<uint64_t>(t)));
      std::vector<size_t> rows(n);
      for (auto& r : rows) r = rng.below(n);
      trees_.emplace_back(train, rows, hp.rf_depth, rng);
    }
  }

  std::vector<double> predict(const std::vector<std::vector<double>>& x) const override {
    std::vector<double> out;
    out.reserve(x.size());
    for (const auto& row : x) {
      double s = 0.0;
      for (const auto& t : trees_) s += t.predict(row);
      out.push_back(s / static_cast<double>(trees_.size()));
    }
    return out;
  }

 private:
  std::vector<Tree> trees_;
};

}  // namespace

std::unique_ptr<Classifier> train_classifier(classifier_kind kind, const Dataset& train,
                                             const Hyperparams& hp, uint64_t seed) {
  check_classes(train);
  switch (kind) {
    case classifier_kind::logreg: return std::make_unique<Logreg>(train, hp);
    case classifier_kind::knn: return std::make_unique<Knn>(train, hp);
    case classifier_kind::rf: return std::make_unique<RandomForest>(train, hp, seed);
  }
  raise(errc::invalid_config, "unknown classifier kind");
}

double auc_mann_whitney(const std::vector<double>& scores, const std::vector<int>& labels) {
  require(scores.size() == labels.size(), errc::dimension_mismatch,
          "scores do not match labels");
  size_t pos = 0, neg = 0;
  for (int y : labels) (y ? pos : neg) += 1;
  require(pos > 0 && neg > 0, errc::single_class_eval, "need both classes for AUC");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // average ranks over tie groups, 1-based
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (size_t k = i; k < j; ++k)
      if (labels[order[k]]) rank_sum_pos += avg_rank;
    i = j;
  }
  double u = rank_sum_pos - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

MetricsRow evaluate_attack(const std::vector<double>& scores, const std::vector<int>& predictions,
                           const std::vector<int>& labels) {
  require(scores.size() == labels.size() && predictions.size() == labels.size(),
          errc::dimension_mismatch, "scores, predictions and labels must align");
  MetricsRow m;
  m.auc = auc_mann_whitney(scores, labels);
  m.advantage = m.auc - 0.5;

  size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] && labels[i]) ++tp;
    else if (predictions[i] && !labels[i]) ++fp;
    else if (!predictions[i] && !labels[i]) ++tn;
    else ++fn;
  }
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(labels.size());
  m.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

MetricsRow evaluate_probs(const std::vector<double>& probs, const std::vector<int>& labels) {
  std::vector<int> preds(probs.size());
  for (size_t i = 0; i < probs.size(); ++i) preds[i] = probs[i] >= 0.5 ? 1 : 0;
  return evaluate_attack(probs, preds, labels);
}

}  // namespace gs
