#include "core/demo.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <vector>

#include "core/common.hpp"
#include "core/io.hpp"
#include "core/rng.hpp"

namespace gs {

namespace {

const char kBases[] = {'A', 'C', 'G', 'T'};

char random_base(Rng& rng) { return kBases[rng.below(4)]; }

char random_base_except(Rng& rng, char not_this) {
  char c;
  do {
    c = random_base(rng);
  } while (c == not_this);
  return c;
}

std::vector<int64_t> draw_positions(int64_t max_pos, size_t n, Rng& rng) {
  std::vector<int64_t> pos;
  if (max_pos <= static_cast<int64_t>(4 * n)) {
    pos.resize(static_cast<size_t>(max_pos));
    for (int64_t i = 0; i < max_pos; ++i) pos[static_cast<size_t>(i)] = i + 1;
    rng.shuffle(pos);
    pos.resize(n);
  } else {
    std::set<int64_t> seen;
    while (seen.size() < n)
      seen.insert(static_cast<int64_t>(rng.below(static_cast<uint64_t>(max_pos))) + 1);
    pos.assign(seen.begin(), seen.end());
  }
  std::sort(pos.begin(), pos.end());
  return pos;
}

std::string fmt_af(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string make_demo_vcf(const DemoConfig& cfg) {
  require(cfg.n_samples >= 4, errc::invalid_config, "need at least 4 samples");
  require(cfg.n_variants >= 10, errc::invalid_config, "need at least 10 variants");
  require(cfg.max_pos >= cfg.n_variants, errc::bounds_too_tight,
          "cannot place that many distinct positions");

  Rng rng(mix_seed(cfg.seed, "demo"));
  size_t nv = static_cast<size_t>(cfg.n_variants);
  size_t ns = static_cast<size_t>(cfg.n_samples);
  auto positions = draw_positions(cfg.max_pos, nv, rng);

  std::string out;
  out += "##fileformat=VCFv4.2\n";
  out += "##source=genomesynth-demo\n";
  out += "##contig=<ID=" + cfg.chrom + ",length=" + std::to_string(cfg.max_pos) + ">\n";
  out += "##INFO=<ID=NS,Number=1,Type=Integer,Description=\"Number of samples with data\">\n";
  out += "##INFO=<ID=AN,Number=1,Type=Integer,Description=\"Total number of alleles\">\n";
  out += "##INFO=<ID=AC,Number=A,Type=Integer,Description=\"Alternate allele counts\">\n";
  out += "##INFO=<ID=AF,Number=A,Type=Float,Description=\"Alternate allele frequencies\">\n";
  out += "##FORMAT=<ID=GT,Number=1,Type=String,Description=\"Genotype\">\n";
  out += "#CHROM\tPOS\tID\tREF\tALT\tQUAL\tFILTER\tINFO\tFORMAT";
  for (size_t s = 0; s < ns; ++s) {
    char name[24];
    std::snprintf(name, sizeof(name), "S%04zu", s + 1);
    out += "\t";
    out += name;
  }
  out += "\n";

  for (size_t v = 0; v < nv; ++v) {
    std::string ref;
    std::vector<std::string> alts;
    double roll = rng.uniform();
    if (roll < cfg.frac_indel) {
      char base = random_base(rng);
      if (rng.uniform() < 0.5) {
        ref = std::string(1, base);
        alts.push_back(ref + random_base(rng));  // insertion
      } else {
        ref = std::string(1, base) + random_base(rng);  // deletion
        alts.push_back(std::string(1, base));
      }
    } else {
      char base = random_base(rng);
      ref = std::string(1, base);
      char a1 = random_base_except(rng, base);
      alts.push_back(std::string(1, a1));
      if (rng.uniform() < cfg.frac_multiallelic) {
        char a2;
        do {
          a2 = random_base_except(rng, base);
        } while (a2 == a1);
        alts.push_back(std::string(1, a2));
      }
    }

    bool common = rng.uniform() < cfg.common_frac;
    double lo = common ? cfg.common_aaf_lo : cfg.rare_aaf_lo;
    double hi = common ? cfg.common_aaf_hi : cfg.rare_aaf_hi;
    std::vector<double> aaf;
    for (size_t a = 0; a < alts.size(); ++a) {
      double f = lo + (hi - lo) * rng.uniform();
      aaf.push_back(alts.size() > 1 ? f / 2.0 : f);
    }

    std::vector<std::pair<int, int>> gts;
    std::vector<int64_t> allele_counts(alts.size() + 1, 0);
    auto draw_allele = [&]() {
      double u = rng.uniform();
      double acc = 0.0;
      for (size_t a = 0; a < aaf.size(); ++a) {
        acc += aaf[a];
        if (u < acc) return static_cast<int>(a) + 1;
      }
      return 0;
    };
    for (size_t s = 0; s < ns; ++s) {
      int a = draw_allele();
      int b = draw_allele();
      gts.emplace_back(a, b);
      ++allele_counts[static_cast<size_t>(a)];
      ++allele_counts[static_cast<size_t>(b)];
    }

    int64_t an = static_cast<int64_t>(2 * ns);
    std::string info = "NS=" + std::to_string(ns) + ";AN=" + std::to_string(an) + ";AC=";
    for (size_t a = 0; a < alts.size(); ++a)
      info += (a ? "," : "") + std::to_string(allele_counts[a + 1]);
    info += ";AF=";
    for (size_t a = 0; a < alts.size(); ++a)
      info += (a ? "," : "") +
              fmt_af(static_cast<double>(allele_counts[a + 1]) / static_cast<double>(an));

    std::string filter = rng.uniform() < 0.05 ? "s50" : "PASS";
    int qual = 30 + static_cast<int>(rng.below(70));

    out += cfg.chrom + "\t" + std::to_string(positions[v]) + "\t.\t" + ref + "\t";
    for (size_t a = 0; a < alts.size(); ++a) out += (a ? "," : "") + alts[a];
    out += "\t" + std::to_string(qual) + "\t" + filter + "\t" + info + "\tGT";
    for (const auto& [a, b] : gts)
      out += "\t" + std::to_string(a) + "|" + std::to_string(b);
    out += "\n";
  }
  return out;
}

void write_demo_vcf(const DemoConfig& cfg, const std::string& path) {
  write_file(path, make_demo_vcf(cfg));
}

std::string make_demo_bounds(const DemoConfig& cfg) {
  return "# chrom\tmax_pos\n" + cfg.chrom + "\t" + std::to_string(cfg.max_pos) + "\n";
}

}  // namespace gs
