#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "core/mutation.hpp"
#include "core/synthesis.hpp"
#include "core/vcf.hpp"

namespace gs {

// Per-sample mutation lists the metrics operate on. For synthetic cohorts the
// prompt mutation is excluded: only newly generated chunks count.
struct CohortView {
  std::vector<std::vector<std::string>> mutations;  // format-valid texts per sample
  size_t valid_chunks = 0;
  size_t invalid_chunks = 0;
};

CohortView view_from_sidecar(const std::vector<SidecarEntry>& entries);
CohortView view_from_synthesis(const SynthesisResult& res);
// Real cohorts: every mutation is one valid chunk.
CohortView view_from_cohort(const Cohort& c);

struct ChromosomeBounds {
  std::map<std::string, int64_t> max_pos;  // min position is always 1
};

// TSV "chrom<TAB>max_pos", '#' comments. Raises MissingBounds when empty.
ChromosomeBounds load_bounds(const std::string& path);

double validity(size_t valid_chunks, size_t invalid_chunks, bool* warn = nullptr);

// Fraction of format-valid mutation instances whose chromosome is known and
// whose position lies in [1, max_pos]. Unknown chromosomes count against.
double quality(const CohortView& view, const ChromosomeBounds& bounds, bool* warn = nullptr,
               size_t* in_bounds = nullptr, size_t* total = nullptr);

// Over distinct mutation texts: fraction present in exactly one sample, and
// its complement. Raises EmptyCohort when there is no distinct mutation.
std::pair<double, double> uniqueness_repetition(const CohortView& view);

// Over distinct generated texts vs the training full-text set: novelty first,
// memorization second. Raises EmptyCohort when there is no distinct mutation.
std::pair<double, double> novelty_memorization(const CohortView& view,
                                               const std::set<std::string>& train_texts);

struct VariantStatsReport {
  // distinct variants (locus + alleles)
  size_t n_variants = 0;
  size_t biallelic = 0;
  size_t multiallelic = 0;
  // per alt allele of each distinct variant
  size_t substitutions = 0;
  size_t insertions = 0;
  size_t deletions = 0;
  // pooled over all sample-mutation instances
  size_t gt_total = 0;
  size_t hom_ref = 0;
  size_t het = 0;
  size_t hom_alt = 0;

  double frac_biallelic() const { return n_variants ? double(biallelic) / n_variants : 0.0; }
  double frac_multiallelic() const { return n_variants ? double(multiallelic) / n_variants : 0.0; }
  double gt_freq_hom_ref() const { return gt_total ? double(hom_ref) / gt_total : 0.0; }
  double gt_freq_het() const { return gt_total ? double(het) / gt_total : 0.0; }
  double gt_freq_hom_alt() const { return gt_total ? double(hom_alt) / gt_total : 0.0; }
};

VariantStatsReport variant_stats(const CohortView& view);

// VCF-side statistics (real inputs only).
struct VariantInfo {
  std::string key;  // locus key CHR:POS:REF>ALTS
  size_t ns = 0;    // samples with a non-missing genotype
  size_t an = 0;    // 2 * ns (diploid)
  std::vector<int64_t> allele_counts;  // index 0 = ref, then one per alt
  std::vector<double> af;              // empty when an == 0
  std::vector<double> aaf;             // af restricted to alternates
};

std::vector<VariantInfo> info_fields(const std::vector<VariantRecord>& records);

double call_rate(const std::vector<VariantRecord>& records, bool* warn = nullptr);
std::map<std::string, size_t> filter_histogram(const std::vector<VariantRecord>& records);

struct UtilityReport {
  double validity = 0.0;
  double quality = 0.0;
  double uniqueness = 0.0;
  double repetition = 0.0;
  double novelty = 0.0;
  double memorization = 0.0;

  size_t valid_chunks = 0;
  size_t invalid_chunks = 0;
  size_t bounds_in = 0;
  size_t bounds_total = 0;
  size_t distinct_total = 0;
  size_t distinct_single = 0;
  size_t distinct_memorized = 0;

  bool validity_warn = false;
  bool quality_warn = false;
  bool distinct_warn = false;  // no distinct mutation: pair metrics forced to 0

  VariantStatsReport stats;
  std::string settings;  // provenance tag compared by compare_reports
};

// Guarded aggregate of every metric above; per-op errors become warn flags.
UtilityReport utility_report(const CohortView& view, const ChromosomeBounds& bounds,
                             const std::set<std::string>& train_texts,
                             const std::string& settings);

// Flat (name, value) rows in a fixed documented order.
std::vector<std::pair<std::string, double>> metric_rows(const UtilityReport& r);

struct ComparisonRow {
  std::string metric;
  double synthetic = 0.0;
  double benchmark = 0.0;
  double delta = 0.0;                // synthetic - benchmark
  std::optional<double> rel = 0.0;   // delta / benchmark; empty when benchmark == 0
};

// Raises SettingsMismatch unless both reports carry the same settings tag.
std::vector<ComparisonRow> compare_reports(const UtilityReport& synthetic,
                                           const UtilityReport& benchmark);

std::string utility_report_json(const UtilityReport& r);
void write_utility_report(const UtilityReport& r, const std::string& json_path,
                          const std::string& csv_path);
void write_comparison(const std::vector<ComparisonRow>& rows, const std::string& csv_path);

}  // namespace gs
