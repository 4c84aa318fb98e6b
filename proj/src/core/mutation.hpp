#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gs {

// One variant carried by one sample, in the textual form
//   CHR:POS:REF>ALT[,ALT...]_a|b   (or a/b for unphased calls)
struct Mutation {
  std::string chrom;
  int64_t pos = 0;
  std::string ref;
  std::vector<std::string> alts;
  int gt_a = 0;
  int gt_b = 0;
  bool phased = true;

  std::string render() const;
  // text up to and excluding the _GT suffix
  std::string locus_key() const;
  bool operator==(const Mutation&) const = default;
};

// Strict parse of the grammar above. Returns nullopt on any violation,
// including genotype allele indices beyond the alt list.
std::optional<Mutation> parse_mutation(const std::string& text);

enum class origin_t { real, synthetic };

struct SampleProfile {
  std::string sample_id;
  std::vector<std::string> mutations;  // rendered texts, position order
  origin_t origin = origin_t::real;
};

// Distinct-variant index of a cohort: full texts (with GT) and locus keys.
struct VariantIndex {
  std::set<std::string> full_texts;
  std::set<std::string> locus_keys;
};

struct Cohort {
  std::vector<SampleProfile> samples;
  VariantIndex index;

  void rebuild_index();
};

// corpus format: one sample per line, mutations joined by single spaces
std::string corpus_line(const SampleProfile& p);
void write_corpus(const Cohort& c, const std::string& path);
// strict load; sample ids synthesized from the id_prefix and line number
Cohort load_corpus(const std::string& path, const std::string& id_prefix,
                   origin_t origin = origin_t::real);

}  // namespace gs
