#pragma once

#include <cstdint>
#include <string>

namespace gs {

// Desk-scale stand-in for a real cohort VCF: positions drawn without
// replacement, allele makeup and per-variant alternate allele frequencies
// from a seeded mixture, genotypes sampled per sample from those
// frequencies. Pure function of the config, so files are byte-identical
// across runs.
struct DemoConfig {
  int32_t n_samples = 60;
  int32_t n_variants = 300;
  uint64_t seed = 1;
  std::string chrom = "22";
  int64_t max_pos = 50000000;
  double frac_multiallelic = 0.08;  // substitution variants with two alts
  double frac_indel = 0.15;         // insertion/deletion variants (biallelic)
  double common_frac = 0.10;        // variants drawn from the common aaf band
  double rare_aaf_lo = 0.02;
  double rare_aaf_hi = 0.12;
  double common_aaf_lo = 0.20;
  double common_aaf_hi = 0.50;
};

std::string make_demo_vcf(const DemoConfig& cfg);
void write_demo_vcf(const DemoConfig& cfg, const std::string& path);

// chromosome-bounds TSV matching the demo build
std::string make_demo_bounds(const DemoConfig& cfg);

}  // namespace gs
