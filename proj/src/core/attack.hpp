#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/classifiers.hpp"
#include "core/features.hpp"
#include "core/model.hpp"
#include "core/mutation.hpp"
#include "core/tokenizer.hpp"

namespace gs {

// Accuracy-maximizing cutoff over the calibration scores; prediction is
// member iff score <= tau (members are expected to score low). Ties in
// accuracy resolve to the smaller tau; -inf (predict nobody) is a candidate.
double calibrate_threshold(const std::vector<double>& scores, const std::vector<int>& labels);
std::vector<int> threshold_predict(double tau, const std::vector<double>& scores);

enum class feature_mode { model_only, hybrid };
const char* feature_mode_name(feature_mode m);

struct ExperimentConfig {
  int32_t cohort_size = 20;
  int32_t n_rounds = 5;
  bool model_only_block = true;
  bool hybrid_block = true;
  uint64_t seed = 0;
  Hyperparams hp;
  // per-target synthesis settings for the genomic block
  int32_t gen_max_new_tokens = 160;
  double gen_temperature = 1.0;
  int32_t gen_top_k = 50;
  int workers = 1;
};

struct RoundInfo {
  std::vector<std::string> target_ids;  // members first, then non-members
  std::vector<int> labels;
  std::vector<size_t> attacker_train;  // indices into target_ids
  std::vector<size_t> attacker_test;
};

struct RoundRow {
  int32_t round = 0;
  std::string attack;  // threshold | knn | logreg | rf
  MetricsRow metrics;
};

struct AggRow {
  std::string attack;
  MetricsRow mean;
  MetricsRow stddev;  // population std over rounds
};

struct AttackBlock {
  feature_mode mode = feature_mode::model_only;
  std::vector<RoundRow> rows;  // n_rounds x 4 attacks
  std::vector<AggRow> aggregate;
};

struct AttackReport {
  std::vector<RoundInfo> rounds;  // shared by every block: identical targets
  std::vector<AttackBlock> blocks;
  int32_t cohort_size = 0;
  uint64_t seed = 0;
};

// Repeated randomized-target MIA evaluation. Members come from the model's
// training cohort, non-members from the holdout; each round draws fresh
// target sets, splits them 50/50 stratified into attacker train/test, and
// runs threshold, knn, logreg and rf on the configured feature blocks.
// Raises CohortTooSmall when either cohort cannot seat a target set.
AttackReport run_experiment(const GptParams<float>& params, const Tokenizer& tok,
                            const Cohort& train, const Cohort& holdout,
                            const ExperimentConfig& cfg);

// mean AUC over every row of the block (all attacks, all rounds)
double block_mean_auc(const AttackBlock& block);
const AttackBlock* find_block(const AttackReport& report, feature_mode mode);

void write_attack_report_json(const AttackReport& report, const std::string& path);
void write_attack_rounds_csv(const AttackReport& report, const std::string& path);
void write_attack_plot_csv(const AttackReport& report, const std::string& path);

}  // namespace gs
