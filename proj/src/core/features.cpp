#include "core/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "core/common.hpp"
#include "core/io.hpp"

namespace gs {

std::vector<std::vector<int32_t>> subsequence_split(const std::vector<int32_t>& ids,
                                                    int32_t max_seq_len) {
  require(ids.size() >= 2, errc::sequence_too_short, "need at least 2 tokens to score");
  require(max_seq_len >= 2, errc::invalid_config, "max_seq_len must be >= 2");
  std::vector<std::vector<int32_t>> windows;
  size_t step = static_cast<size_t>(max_seq_len);
  for (size_t begin = 0; begin < ids.size(); begin += step) {
    size_t end = std::min(ids.size(), begin + step);
    if (end - begin < 2) break;
    windows.emplace_back(ids.begin() + static_cast<ptrdiff_t>(begin),
                         ids.begin() + static_cast<ptrdiff_t>(end));
  }
  return windows;
}

const std::vector<std::string>& ModelFeatures::names() {
  static const std::vector<std::string> kNames = {
      "perplexity", "avg_loss", "loss_variance", "avg_logit_magnitude", "avg_confidence"};
  return kNames;
}

std::vector<double> ModelFeatures::values() const {
  return {perplexity, avg_loss, loss_variance, avg_logit_magnitude, avg_confidence};
}

ModelFeatures model_features(GptRunner<float>& runner, const Tokenizer& tok,
                             const SampleProfile& profile) {
  std::vector<int32_t> ids;
  ids.push_back(Tokenizer::kBos);
  for (int32_t t : tok.encode(corpus_line(profile))) ids.push_back(t);
  ids.push_back(Tokenizer::kEos);

  auto windows = subsequence_split(ids, runner.params().cfg.max_seq_len);

  ModelFeatures f;
  std::vector<double> losses;
  double nll_sum = 0.0;
  size_t nll_count = 0;
  double logit_norm_sum = 0.0;
  double conf_sum = 0.0;
  size_t conf_count = 0;

  int32_t vocab = runner.params().cfg.vocab_size;
  for (const auto& w : windows) {
    const auto& logits = runner.forward(w);
    std::vector<int32_t> targets(w.begin() + 1, w.end());
    double loss = runner.loss(targets);
    losses.push_back(loss);
    nll_sum += loss * static_cast<double>(targets.size());
    nll_count += targets.size();

    double sq = 0.0;
    for (float v : logits) sq += static_cast<double>(v) * static_cast<double>(v);
    logit_norm_sum += std::sqrt(sq);

    for (size_t row = 0; row + 1 < w.size(); ++row) {
      const float* r = logits.data() + row * static_cast<size_t>(vocab);
      double mx = r[0];
      for (int32_t j = 1; j < vocab; ++j) mx = std::max(mx, static_cast<double>(r[j]));
      double denom = 0.0;
      for (int32_t j = 0; j < vocab; ++j) denom += std::exp(static_cast<double>(r[j]) - mx);
      conf_sum += 1.0 / denom;  // exp(mx - mx) / sum
      ++conf_count;
    }
  }

  double n = static_cast<double>(losses.size());
  f.perplexity = std::exp(nll_sum / static_cast<double>(nll_count));
  double mean = 0.0;
  for (double l : losses) mean += l;
  mean /= n;
  f.avg_loss = mean;
  double var = 0.0;
  for (double l : losses) var += (l - mean) * (l - mean);
  f.loss_variance = var / n;
  f.avg_logit_magnitude = logit_norm_sum / n;
  f.avg_confidence = conf_sum / static_cast<double>(conf_count);
  return f;
}

const std::vector<std::string>& GenomicFeatures::names() {
  static const std::vector<std::string> kNames = {
      "mutation_rate",  "gt_hom_ref",     "gt_het",        "gt_hom_alt",
      "n_substitution", "n_insertion",    "n_deletion",    "n_biallelic",
      "n_multiallelic", "r_substitution", "r_insertion",   "r_deletion",
      "r_biallelic",    "r_multiallelic"};
  return kNames;
}

std::vector<double> GenomicFeatures::values() const {
  return {mutation_rate,  gt_hom_ref,     gt_het,      gt_hom_alt,  n_substitution,
          n_insertion,    n_deletion,     n_biallelic, n_multiallelic,
          r_substitution, r_insertion,    r_deletion,  r_biallelic, r_multiallelic};
}

GenomicFeatures genomic_features(const GeneratedProfile& gp) {
  GenomicFeatures f;
  size_t n = 0, mutated = 0, hom_ref = 0, het = 0, hom_alt = 0;
  size_t sub = 0, ins = 0, del = 0, bi = 0, multi = 0;
  for (size_t i = 1; i < gp.profile.mutations.size(); ++i) {
    auto m = parse_mutation(gp.profile.mutations[i]);
    if (!m) continue;
    ++n;
    if (m->gt_a > 0 || m->gt_b > 0) ++mutated;
    if (m->gt_a == 0 && m->gt_b == 0)
      ++hom_ref;
    else if (m->gt_a != m->gt_b)
      ++het;
    else
      ++hom_alt;
    if (m->alts.size() >= 2)
      ++multi;
    else
      ++bi;
    for (const auto& alt : m->alts) {
      if (alt.size() == m->ref.size())
        ++sub;
      else if (alt.size() > m->ref.size())
        ++ins;
      else
        ++del;
    }
  }
  if (n == 0) {
    f.empty_profile = true;
    return f;
  }
  double dn = static_cast<double>(n);
  f.mutation_rate = static_cast<double>(mutated) / dn;
  f.gt_hom_ref = static_cast<double>(hom_ref) / dn;
  f.gt_het = static_cast<double>(het) / dn;
  f.gt_hom_alt = static_cast<double>(hom_alt) / dn;
  f.n_substitution = static_cast<double>(sub);
  f.n_insertion = static_cast<double>(ins);
  f.n_deletion = static_cast<double>(del);
  f.n_biallelic = static_cast<double>(bi);
  f.n_multiallelic = static_cast<double>(multi);
  f.r_substitution = f.n_substitution / dn;
  f.r_insertion = f.n_insertion / dn;
  f.r_deletion = f.n_deletion / dn;
  f.r_biallelic = f.n_biallelic / dn;
  f.r_multiallelic = f.n_multiallelic / dn;
  return f;
}

void Standardizer::fit(const std::vector<std::vector<double>>& rows) {
  require(!rows.empty(), errc::empty_cohort, "cannot fit a standardizer on zero rows");
  size_t d = rows[0].size();
  mean.assign(d, 0.0);
  stdev.assign(d, 0.0);
  for (const auto& r : rows) {
    require(r.size() == d, errc::dimension_mismatch, "ragged feature matrix");
    for (size_t j = 0; j < d; ++j) mean[j] += r[j];
  }
  for (size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(rows.size());
  for (const auto& r : rows)
    for (size_t j = 0; j < d; ++j) stdev[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
  for (size_t j = 0; j < d; ++j) stdev[j] = std::sqrt(stdev[j] / static_cast<double>(rows.size()));
}

std::vector<double> Standardizer::transform(const std::vector<double>& row) const {
  require(row.size() == mean.size(), errc::dimension_mismatch,
          "feature row does not match the fitted dimension");
  std::vector<double> out(row.size());
  for (size_t j = 0; j < row.size(); ++j) {
    double centered = row[j] - mean[j];
    out[j] = stdev[j] > 0.0 ? centered / stdev[j] : centered;
  }
  return out;
}

std::vector<std::vector<double>> Standardizer::transform_all(
    const std::vector<std::vector<double>>& rows) const {
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(transform(r));
  return out;
}

void write_feature_csv(const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& rows,
                       const std::vector<std::string>& row_ids, const std::string& path) {
  require(rows.size() == row_ids.size(), errc::dimension_mismatch,
          "row ids do not match feature rows");
  std::string csv = "sample_id";
  for (const auto& n : names) csv += "," + n;
  csv += "\n";
  char buf[40];
  for (size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == names.size(), errc::dimension_mismatch, "ragged feature matrix");
    csv += row_ids[i];
    for (double v : rows[i]) {
      std::snprintf(buf, sizeof(buf), "%.9g", v);
      csv += ",";
      csv += buf;
    }
    csv += "\n";
  }
  write_file(path, csv);
}

}  // namespace gs
