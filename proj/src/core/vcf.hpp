#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/mutation.hpp"

namespace gs {

struct Genotype {
  int a = 0;
  int b = 0;
  bool phased = false;
  bool missing = false;
};

struct VariantRecord {
  std::string chrom;
  int64_t pos = 0;                  // 1-based
  std::optional<std::string> id;    // "." becomes nullopt
  std::string ref;
  std::vector<std::string> alts;
  std::optional<double> qual;
  std::string filter;
  std::map<std::string, std::string> info;
  std::vector<Genotype> genotypes;  // one per sample column
};

struct VcfFile {
  std::vector<std::string> sample_names;
  std::vector<VariantRecord> records;
  long skipped = 0;  // lenient mode: malformed data lines dropped
};

// Reads plain or gzip-compressed VCF. Strict mode raises MalformedHeader /
// MalformedRecord with line numbers; lenient mode skips bad data lines and
// counts them.
VcfFile parse_vcf_file(const std::string& path, bool lenient = false);
VcfFile parse_vcf_lines(const std::vector<std::string>& lines, bool lenient = false);

Mutation encode_mutation(const VariantRecord& rec, size_t sample_index);

// One profile per sample, mutations in ascending position order. By default a
// record contributes only to samples carrying at least one alt allele;
// include_ref_genotypes adds 0|0 calls too. Missing genotypes never contribute.
Cohort build_profiles(const VcfFile& vcf, bool include_ref_genotypes = false);

// Deterministic split; holdout gets round(fraction * n) samples clamped to
// [1, n-1]. Raises TooFewSamples when n < 2.
std::pair<Cohort, Cohort> split_train_holdout(const Cohort& c, double holdout_fraction,
                                              uint64_t seed);

}  // namespace gs
