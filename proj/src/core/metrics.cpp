#include "core/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "core/common.hpp"
#include "core/io.hpp"
#include "vendor/json.hpp"

namespace gs {

CohortView view_from_sidecar(const std::vector<SidecarEntry>& entries) {
  CohortView v;
  for (const auto& e : entries) {
    std::vector<std::string> valid;
    for (const auto& chunk : whitespace_chunks(e.raw_text)) {
      if (auto m = parse_mutation(chunk)) {
        valid.push_back(m->render());
        ++v.valid_chunks;
      } else {
        ++v.invalid_chunks;
      }
    }
    v.mutations.push_back(std::move(valid));
  }
  return v;
}

CohortView view_from_synthesis(const SynthesisResult& res) {
  CohortView v;
  for (const auto& gp : res.profiles) {
    std::vector<std::string> valid(gp.profile.mutations.begin() + 1, gp.profile.mutations.end());
    v.valid_chunks += gp.valid_chunks;
    v.invalid_chunks += gp.invalid_chunks;
    v.mutations.push_back(std::move(valid));
  }
  return v;
}

CohortView view_from_cohort(const Cohort& c) {
  CohortView v;
  for (const auto& s : c.samples) {
    v.mutations.push_back(s.mutations);
    v.valid_chunks += s.mutations.size();
  }
  return v;
}

ChromosomeBounds load_bounds(const std::string& path) {
  ChromosomeBounds b;
  std::istringstream in(read_file(path));
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string chrom;
    int64_t max_pos = 0;
    if (!(ls >> chrom >> max_pos) || max_pos < 1)
      raise(errc::invalid_config,
            "bad bounds line " + std::to_string(lineno) + " in " + path);
    b.max_pos[chrom] = max_pos;
  }
  require(!b.max_pos.empty(), errc::missing_bounds, "no chromosome bounds in " + path);
  return b;
}

double validity(size_t valid_chunks, size_t invalid_chunks, bool* warn) {
  size_t total = valid_chunks + invalid_chunks;
  if (warn) *warn = total == 0;
  return total == 0 ? 0.0 : static_cast<double>(valid_chunks) / static_cast<double>(total);
}

double quality(const CohortView& view, const ChromosomeBounds& bounds, bool* warn,
               size_t* in_bounds, size_t* total) {
  require(!bounds.max_pos.empty(), errc::missing_bounds, "chromosome bounds not provided");
  size_t n = 0, in = 0;
  for (const auto& sample : view.mutations) {
    for (const auto& text : sample) {
      auto m = parse_mutation(text);
      if (!m) continue;
      ++n;
      auto it = bounds.max_pos.find(m->chrom);
      if (it != bounds.max_pos.end() && m->pos >= 1 && m->pos <= it->second) ++in;
    }
  }
  if (warn) *warn = n == 0;
  if (in_bounds) *in_bounds = in;
  if (total) *total = n;
  return n == 0 ? 0.0 : static_cast<double>(in) / static_cast<double>(n);
}

namespace {

// text -> number of samples carrying it (within-sample duplicates collapse)
std::map<std::string, size_t> sample_counts(const CohortView& view) {
  std::map<std::string, size_t> counts;
  for (const auto& sample : view.mutations) {
    std::set<std::string> seen(sample.begin(), sample.end());
    for (const auto& text : seen) ++counts[text];
  }
  return counts;
}

}  // namespace

std::pair<double, double> uniqueness_repetition(const CohortView& view) {
  auto counts = sample_counts(view);
  require(!counts.empty(), errc::empty_cohort, "no distinct mutations in cohort");
  size_t single = 0;
  for (const auto& [text, n] : counts)
    if (n == 1) ++single;
  double u = static_cast<double>(single) / static_cast<double>(counts.size());
  return {u, 1.0 - u};
}

std::pair<double, double> novelty_memorization(const CohortView& view,
                                               const std::set<std::string>& train_texts) {
  auto counts = sample_counts(view);
  require(!counts.empty(), errc::empty_cohort, "no distinct mutations in cohort");
  size_t memorized = 0;
  for (const auto& [text, n] : counts)
    if (train_texts.count(text)) ++memorized;
  double m = static_cast<double>(memorized) / static_cast<double>(counts.size());
  return {1.0 - m, m};
}

VariantStatsReport variant_stats(const CohortView& view) {
  VariantStatsReport r;
  std::map<std::string, Mutation> variants;
  for (const auto& sample : view.mutations) {
    for (const auto& text : sample) {
      auto m = parse_mutation(text);
      if (!m) continue;
      variants.emplace(m->locus_key(), *m);
      ++r.gt_total;
      if (m->gt_a == 0 && m->gt_b == 0)
        ++r.hom_ref;
      else if (m->gt_a != m->gt_b)
        ++r.het;
      else
        ++r.hom_alt;
    }
  }
  r.n_variants = variants.size();
  for (const auto& [key, m] : variants) {
    if (m.alts.size() >= 2)
      ++r.multiallelic;
    else
      ++r.biallelic;
    for (const auto& alt : m.alts) {
      if (alt.size() == m.ref.size())
        ++r.substitutions;
      else if (alt.size() > m.ref.size())
        ++r.insertions;
      else
        ++r.deletions;
    }
  }
  return r;
}

std::vector<VariantInfo> info_fields(const std::vector<VariantRecord>& records) {
  std::vector<VariantInfo> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    VariantInfo vi;
    vi.key = rec.chrom + ":" + std::to_string(rec.pos) + ":" + rec.ref + ">" +
             join(rec.alts, ",");
    vi.allele_counts.assign(rec.alts.size() + 1, 0);
    for (const auto& gt : rec.genotypes) {
      if (gt.missing) continue;
      ++vi.ns;
      vi.an += 2;
      ++vi.allele_counts[static_cast<size_t>(gt.a)];
      ++vi.allele_counts[static_cast<size_t>(gt.b)];
    }
    if (vi.an > 0) {
      for (int64_t c : vi.allele_counts)
        vi.af.push_back(static_cast<double>(c) / static_cast<double>(vi.an));
      vi.aaf.assign(vi.af.begin() + 1, vi.af.end());
    }
    out.push_back(std::move(vi));
  }
  return out;
}

double call_rate(const std::vector<VariantRecord>& records, bool* warn) {
  if (warn) *warn = records.empty();
  if (records.empty()) return 0.0;
  size_t pass = 0;
  for (const auto& rec : records)
    if (rec.filter == "PASS") ++pass;
  return static_cast<double>(pass) / static_cast<double>(records.size());
}

std::map<std::string, size_t> filter_histogram(const std::vector<VariantRecord>& records) {
  std::map<std::string, size_t> h;
  for (const auto& rec : records) ++h[rec.filter];
  return h;
}

UtilityReport utility_report(const CohortView& view, const ChromosomeBounds& bounds,
                             const std::set<std::string>& train_texts,
                             const std::string& settings) {
  UtilityReport r;
  r.settings = settings;
  r.valid_chunks = view.valid_chunks;
  r.invalid_chunks = view.invalid_chunks;
  r.validity = validity(view.valid_chunks, view.invalid_chunks, &r.validity_warn);
  r.quality = quality(view, bounds, &r.quality_warn, &r.bounds_in, &r.bounds_total);

  auto counts = sample_counts(view);
  r.distinct_total = counts.size();
  if (counts.empty()) {
    r.distinct_warn = true;
  } else {
    for (const auto& [text, n] : counts) {
      if (n == 1) ++r.distinct_single;
      if (train_texts.count(text)) ++r.distinct_memorized;
    }
    r.uniqueness = static_cast<double>(r.distinct_single) / static_cast<double>(r.distinct_total);
    r.repetition = 1.0 - r.uniqueness;
    r.memorization =
        static_cast<double>(r.distinct_memorized) / static_cast<double>(r.distinct_total);
    r.novelty = 1.0 - r.memorization;
  }
  r.stats = variant_stats(view);
  return r;
}

std::vector<std::pair<std::string, double>> metric_rows(const UtilityReport& r) {
  size_t alts = r.stats.substitutions + r.stats.insertions + r.stats.deletions;
  auto frac = [&](size_t c) { return alts ? static_cast<double>(c) / alts : 0.0; };
  return {
      {"validity", r.validity},
      {"quality", r.quality},
      {"uniqueness", r.uniqueness},
      {"repetition", r.repetition},
      {"novelty", r.novelty},
      {"memorization", r.memorization},
      {"frac_biallelic", r.stats.frac_biallelic()},
      {"frac_multiallelic", r.stats.frac_multiallelic()},
      {"frac_substitution", frac(r.stats.substitutions)},
      {"frac_insertion", frac(r.stats.insertions)},
      {"frac_deletion", frac(r.stats.deletions)},
      {"gt_freq_hom_ref", r.stats.gt_freq_hom_ref()},
      {"gt_freq_het", r.stats.gt_freq_het()},
      {"gt_freq_hom_alt", r.stats.gt_freq_hom_alt()},
  };
}

std::vector<ComparisonRow> compare_reports(const UtilityReport& synthetic,
                                           const UtilityReport& benchmark) {
  require(synthetic.settings == benchmark.settings, errc::settings_mismatch,
          "reports were computed with different settings");
  auto a = metric_rows(synthetic);
  auto b = metric_rows(benchmark);
  std::vector<ComparisonRow> rows;
  for (size_t i = 0; i < a.size(); ++i) {
    ComparisonRow row;
    row.metric = a[i].first;
    row.synthetic = a[i].second;
    row.benchmark = b[i].second;
    row.delta = row.synthetic - row.benchmark;
    if (row.benchmark != 0.0)
      row.rel = row.delta / row.benchmark;
    else
      row.rel.reset();
    rows.push_back(row);
  }
  return rows;
}

namespace {

nlohmann::json report_json(const UtilityReport& r) {
  nlohmann::json j;
  j["schema"] = "genomesynth.utility_report.v1";
  j["settings"] = r.settings;
  for (const auto& [name, value] : metric_rows(r)) j["metrics"][name] = value;
  j["counts"] = {{"valid_chunks", r.valid_chunks},
                 {"invalid_chunks", r.invalid_chunks},
                 {"bounds_in", r.bounds_in},
                 {"bounds_total", r.bounds_total},
                 {"distinct_total", r.distinct_total},
                 {"distinct_single", r.distinct_single},
                 {"distinct_memorized", r.distinct_memorized},
                 {"n_variants", r.stats.n_variants},
                 {"biallelic", r.stats.biallelic},
                 {"multiallelic", r.stats.multiallelic},
                 {"substitutions", r.stats.substitutions},
                 {"insertions", r.stats.insertions},
                 {"deletions", r.stats.deletions},
                 {"gt_total", r.stats.gt_total},
                 {"hom_ref", r.stats.hom_ref},
                 {"het", r.stats.het},
                 {"hom_alt", r.stats.hom_alt}};
  j["warnings"] = {{"validity", r.validity_warn},
                   {"quality", r.quality_warn},
                   {"distinct", r.distinct_warn}};
  return j;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string utility_report_json(const UtilityReport& r) { return report_json(r).dump(2) + "\n"; }

void write_utility_report(const UtilityReport& r, const std::string& json_path,
                          const std::string& csv_path) {
  write_file(json_path, utility_report_json(r));
  std::string csv = "metric,value\n";
  for (const auto& [name, value] : metric_rows(r)) csv += name + "," + fmt(value) + "\n";
  write_file(csv_path, csv);
}

void write_comparison(const std::vector<ComparisonRow>& rows, const std::string& csv_path) {
  std::string csv = "metric,synthetic,benchmark,delta,rel\n";
  for (const auto& row : rows) {
    csv += row.metric + "," + fmt(row.synthetic) + "," + fmt(row.benchmark) + "," +
           fmt(row.delta) + "," + (row.rel ? fmt(*row.rel) : std::string("")) + "\n";
  }
  write_file(csv_path, csv);
}

}  // namespace gs
