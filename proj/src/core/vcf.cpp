#include "core/vcf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "core/common.hpp"
#include "core/io.hpp"
#include "core/rng.hpp"

namespace gs {

namespace {

bool all_bases(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c != 'A' && c != 'C' && c != 'G' && c != 'T' && c != 'N') return false;
  return true;
}

bool alt_ok(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c != 'A' && c != 'C' && c != 'G' && c != 'T' && c != 'N' && c != '*') return false;
  return true;
}

bool parse_int(const std::string& s, int64_t& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size()) return false;
  out = v;
  return true;
}

// GT subfield like 0|1, 2/0, .|., .; any '.' allele makes the call missing
bool parse_gt(const std::string& s, Genotype& g) {
  if (s.empty()) return false;
  size_t sep = s.find_first_of("|/");
  if (sep == std::string::npos) {
    if (s == ".") {
      g = Genotype{0, 0, false, true};
      return true;
    }
    return false;  // haploid calls unsupported
  }
  std::string a = s.substr(0, sep);
  std::string b = s.substr(sep + 1);
  g.phased = s[sep] == '|';
  if (a == "." || b == ".") {
    g.a = g.b = 0;
    g.missing = true;
    return true;
  }
  int64_t va = 0, vb = 0;
  if (!parse_int(a, va) || !parse_int(b, vb) || va < 0 || vb < 0) return false;
  g.a = static_cast<int>(va);
  g.b = static_cast<int>(vb);
  g.missing = false;
  return true;
}

VariantRecord parse_data_line(const std::string& line, size_t n_samples, size_t lineno) {
  auto fail = [&](const std::string& why) {
    raise(errc::malformed_record, "line " + std::to_string(lineno) + ": " + why);
  };

  std::vector<std::string> f = split(line, '\t');
  size_t expect = n_samples == 0 ? 8 : 9 + n_samples;
  if (f.size() != expect)
    fail("expected " + std::to_string(expect) + " fields, got " + std::to_string(f.size()));

  VariantRecord rec;
  rec.chrom = f[0];
  if (rec.chrom.empty()) fail("empty CHROM");
  for (char c : rec.chrom)
    if (!((c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z')))
      fail("CHROM must be alphanumeric, got '" + rec.chrom + "'");

  if (!parse_int(f[1], rec.pos) || rec.pos < 1) fail("bad POS '" + f[1] + "'");
  if (f[2] != "." && !f[2].empty()) rec.id = f[2];

  rec.ref = f[3];
  if (!all_bases(rec.ref)) fail("REF must be over ACGTN, got '" + rec.ref + "'");

  for (const auto& a : split(f[4], ',')) {
    if (!alt_ok(a)) fail("bad ALT allele '" + a + "'");
    if (a == rec.ref) fail("ALT equals REF");
    rec.alts.push_back(a);
  }

  if (f[5] != ".") {
    char* end = nullptr;
    errno = 0;
    double q = std::strtod(f[5].c_str(), &end);
    if (errno != 0 || end != f[5].c_str() + f[5].size()) fail("bad QUAL '" + f[5] + "'");
    rec.qual = q;
  }

  rec.filter = f[6];
  if (rec.filter.empty()) fail("empty FILTER");

  if (f[7] != ".") {
    for (const auto& kv : split(f[7], ';')) {
      if (kv.empty()) continue;
      size_t eq = kv.find('=');
      if (eq == std::string::npos)
        rec.info[kv] = "";
      else
        rec.info[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
  }

  if (n_samples > 0) {
    std::vector<std::string> fmt = split(f[8], ':');
    auto gt_it = std::find(fmt.begin(), fmt.end(), "GT");
    size_t gt_idx = static_cast<size_t>(gt_it - fmt.begin());
    int n_alts = static_cast<int>(rec.alts.size());
    for (size_t s = 0; s < n_samples; ++s) {
      const std::string& col = f[9 + s];
      Genotype g;
      if (gt_it == fmt.end()) {
        g.missing = true;  // no GT subfield declared
      } else {
        std::vector<std::string> sub = split(col, ':');
        if (gt_idx >= sub.size()) fail("sample column missing GT subfield");
        if (!parse_gt(sub[gt_idx], g)) fail("bad GT '" + sub[gt_idx] + "'");
        if (!g.missing && (g.a > n_alts || g.b > n_alts))
          fail("GT allele index out of range in '" + sub[gt_idx] + "'");
      }
      rec.genotypes.push_back(g);
    }
  }
  return rec;
}

}  // namespace

VcfFile parse_vcf_lines(const std::vector<std::string>& lines, bool lenient) {
  VcfFile vcf;
  bool header_seen = false;
  size_t lineno = 0;
  for (const auto& line : lines) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("##", 0) == 0) {
      if (header_seen)
        raise(errc::malformed_header,
              "line " + std::to_string(lineno) + ": meta line after #CHROM header");
      continue;
    }
    if (line[0] == '#') {
      if (header_seen)
        raise(errc::malformed_header, "line " + std::to_string(lineno) + ": duplicate header");
      std::vector<std::string> f = split(line, '\t');
      if (f.size() < 8 || f[0] != "#CHROM")
        raise(errc::malformed_header, "line " + std::to_string(lineno) + ": bad header line");
      if (f.size() == 8) {
        // site-only file
      } else {
        if (f.size() == 9)
          raise(errc::malformed_header,
                "line " + std::to_string(lineno) + ": FORMAT present but no samples");
        vcf.sample_names.assign(f.begin() + 9, f.end());
      }
      header_seen = true;
      continue;
    }
    if (!header_seen)
      raise(errc::malformed_header,
            "line " + std::to_string(lineno) + ": data before #CHROM header");
    try {
      vcf.records.push_back(parse_data_line(line, vcf.sample_names.size(), lineno));
    } catch (const Error& e) {
      if (e.code() == errc::malformed_record && lenient)
        ++vcf.skipped;
      else
        throw;
    }
  }
  if (!header_seen) raise(errc::malformed_header, "no #CHROM header line found");
  return vcf;
}

VcfFile parse_vcf_file(const std::string& path, bool lenient) {
  std::vector<std::string> lines;
  LineReader reader(path);
  std::string line;
  while (reader.next(line)) lines.push_back(line);
  return parse_vcf_lines(lines, lenient);
}

Mutation encode_mutation(const VariantRecord& rec, size_t sample_index) {
  require(sample_index < rec.genotypes.size(), errc::malformed_record,
          "sample index out of range");
  const Genotype& g = rec.genotypes[sample_index];
  require(!g.missing, errc::missing_genotype,
          "cannot encode missing genotype for sample " + std::to_string(sample_index));
  Mutation m;
  m.chrom = rec.chrom;
  m.pos = rec.pos;
  m.ref = rec.ref;
  m.alts = rec.alts;
  m.gt_a = g.a;
  m.gt_b = g.b;
  m.phased = g.phased;
  return m;
}

Cohort build_profiles(const VcfFile& vcf, bool include_ref_genotypes) {
  Cohort cohort;
  size_t n = vcf.sample_names.size();

  // position-stable record order per profile
  std::vector<size_t> order(vcf.records.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return vcf.records[a].pos < vcf.records[b].pos;
  });

  for (size_t s = 0; s < n; ++s) {
    SampleProfile p;
    p.sample_id = vcf.sample_names[s];
    p.origin = origin_t::real;
    for (size_t ri : order) {
      const VariantRecord& rec = vcf.records[ri];
      if (s >= rec.genotypes.size()) continue;
      const Genotype& g = rec.genotypes[s];
      if (g.missing) continue;
      if (!include_ref_genotypes && g.a == 0 && g.b == 0) continue;
      p.mutations.push_back(encode_mutation(rec, s).render());
    }
    cohort.samples.push_back(std::move(p));
  }
  cohort.rebuild_index();
  return cohort;
}

std::pair<Cohort, Cohort> split_train_holdout(const Cohort& c, double holdout_fraction,
                                              uint64_t seed) {
  size_t n = c.samples.size();
  require(n >= 2, errc::too_few_samples,
          "need at least 2 samples to split, got " + std::to_string(n));
  require(holdout_fraction >= 0.0 && holdout_fraction <= 1.0, errc::invalid_config,
          "holdout fraction must be in [0,1]");

  size_t h = static_cast<size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
  h = std::max<size_t>(1, std::min(h, n - 1));

  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(mix_seed(seed, "split"));
  rng.shuffle(idx);

  std::vector<size_t> hold(idx.begin(), idx.begin() + static_cast<long>(h));
  std::vector<size_t> train(idx.begin() + static_cast<long>(h), idx.end());
  std::sort(hold.begin(), hold.end());
  std::sort(train.begin(), train.end());

  Cohort train_c, hold_c;
  for (size_t i : train) train_c.samples.push_back(c.samples[i]);
  for (size_t i : hold) hold_c.samples.push_back(c.samples[i]);
  train_c.rebuild_index();
  hold_c.rebuild_index();
  return {train_c, hold_c};
}

}  // namespace gs
