#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "core/mutation.hpp"
#include "core/synthesis.hpp"
#include "core/tokenizer.hpp"

namespace gs {

// Non-overlapping windows of max_seq_len consecutive tokens; a trailing
// window shorter than 2 is dropped. Raises SequenceTooShort when ids < 2.
std::vector<std::vector<int32_t>> subsequence_split(const std::vector<int32_t>& ids,
                                                    int32_t max_seq_len);

// Passive, model-based block.
struct ModelFeatures {
  double perplexity = 0.0;        // exp of token-weighted mean NLL
  double avg_loss = 0.0;          // unweighted mean of per-window losses
  double loss_variance = 0.0;     // population variance of per-window losses
  double avg_logit_magnitude = 0.0;  // mean L2 norm of flattened window logits
  double avg_confidence = 0.0;    // mean max softmax prob over scored positions

  static const std::vector<std::string>& names();
  std::vector<double> values() const;
};

// Scores the profile's corpus-line text under the model, framed exactly like
// training: BOS + tokens + EOS, split into windows.
ModelFeatures model_features(GptRunner<float>& runner, const Tokenizer& tok,
                             const SampleProfile& profile);

// Active, genomics-based block, computed on the synthetic profile generated
// for the target. Prompt mutation excluded throughout; counts are over the
// valid generated mutations, ratios divide by their number.
struct GenomicFeatures {
  double mutation_rate = 0.0;  // GT carries >= 1 alt allele
  double gt_hom_ref = 0.0;
  double gt_het = 0.0;
  double gt_hom_alt = 0.0;
  double n_substitution = 0.0;
  double n_insertion = 0.0;
  double n_deletion = 0.0;
  double n_biallelic = 0.0;
  double n_multiallelic = 0.0;
  double r_substitution = 0.0;
  double r_insertion = 0.0;
  double r_deletion = 0.0;
  double r_biallelic = 0.0;
  double r_multiallelic = 0.0;
  bool empty_profile = false;  // no valid generated mutation: all zeros

  static const std::vector<std::string>& names();
  std::vector<double> values() const;
};

GenomicFeatures genomic_features(const GeneratedProfile& gp);

// Per-feature z-scoring fitted on the attacker's labeled rows only. A
// zero-variance feature passes through centered.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stdev;

  void fit(const std::vector<std::vector<double>>& rows);
  std::vector<double> transform(const std::vector<double>& row) const;
  std::vector<std::vector<double>> transform_all(
      const std::vector<std::vector<double>>& rows) const;
};

void write_feature_csv(const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& rows,
                       const std::vector<std::string>& row_ids, const std::string& path);

}  // namespace gs
