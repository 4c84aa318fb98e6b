#include "core/mutation.hpp"

#include <cstdio>

#include "core/common.hpp"
#include "core/io.hpp"

namespace gs {

namespace {

bool is_alnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_base(char c) {
  return c == 'A' || c == 'C' || c == 'G' || c == 'T' || c == 'N';
}
bool is_alt_char(char c) { return is_base(c) || c == '*'; }

// scans [pos, end) while pred holds; returns span length
template <typename Pred>
size_t scan(const std::string& s, size_t pos, Pred pred) {
  size_t n = 0;
  while (pos + n < s.size() && pred(s[pos + n])) ++n;
  return n;
}

}  // namespace

std::string Mutation::render() const {
  std::string out = chrom;
  out += ':';
  out += std::to_string(pos);
  out += ':';
  out += ref;
  out += '>';
  for (size_t i = 0; i < alts.size(); ++i) {
    if (i) out += ',';
    out += alts[i];
  }
  out += '_';
  out += std::to_string(gt_a);
  out += phased ? '|' : '/';
  out += std::to_string(gt_b);
  return out;
}

std::string Mutation::locus_key() const {
  std::string t = render();
  return t.substr(0, t.rfind('_'));
}

std::optional<Mutation> parse_mutation(const std::string& text) {
  Mutation m;
  size_t p = 0;

  size_t n = scan(text, p, is_alnum);
  if (n == 0) return std::nullopt;
  m.chrom = text.substr(p, n);
  p += n;
  if (p >= text.size() || text[p] != ':') return std::nullopt;
  ++p;

  n = scan(text, p, is_digit);
  if (n == 0 || n > 18) return std::nullopt;
  m.pos = std::stoll(text.substr(p, n));
  p += n;
  if (p >= text.size() || text[p] != ':') return std::nullopt;
  ++p;

  n = scan(text, p, is_base);
  if (n == 0) return std::nullopt;
  m.ref = text.substr(p, n);
  p += n;
  if (p >= text.size() || text[p] != '>') return std::nullopt;
  ++p;

  while (true) {
    n = scan(text, p, is_alt_char);
    if (n == 0) return std::nullopt;
    m.alts.push_back(text.substr(p, n));
    p += n;
    if (p < text.size() && text[p] == ',') {
      ++p;
      continue;
    }
    break;
  }
  if (p >= text.size() || text[p] != '_') return std::nullopt;
  ++p;

  n = scan(text, p, is_digit);
  if (n == 0 || n > 9) return std::nullopt;
  m.gt_a = std::stoi(text.substr(p, n));
  p += n;
  if (p >= text.size() || (text[p] != '|' && text[p] != '/')) return std::nullopt;
  m.phased = text[p] == '|';
  ++p;

  n = scan(text, p, is_digit);
  if (n == 0 || n > 9) return std::nullopt;
  m.gt_b = std::stoi(text.substr(p, n));
  p += n;

  if (p != text.size()) return std::nullopt;
  int n_alts = static_cast<int>(m.alts.size());
  if (m.gt_a > n_alts || m.gt_b > n_alts) return std::nullopt;
  return m;
}

void Cohort::rebuild_index() {
  index.full_texts.clear();
  index.locus_keys.clear();
  for (const auto& s : samples) {
    for (const auto& t : s.mutations) {
      index.full_texts.insert(t);
      size_t us = t.rfind('_');
      index.locus_keys.insert(us == std::string::npos ? t : t.substr(0, us));
    }
  }
}

std::string corpus_line(const SampleProfile& p) { return join(p.mutations, " "); }

void write_corpus(const Cohort& c, const std::string& path) {
  std::string out;
  for (const auto& s : c.samples) {
    out += corpus_line(s);
    out += '\n';
  }
  write_file(path, out);
}

Cohort load_corpus(const std::string& path, const std::string& id_prefix, origin_t origin) {
  Cohort c;
  LineReader reader(path);
  std::string line;
  size_t lineno = 0;
  while (reader.next(line)) {
    ++lineno;
    if (line.empty()) continue;
    SampleProfile p;
    char idbuf[64];
    std::snprintf(idbuf, sizeof(idbuf), "%s%04zu", id_prefix.c_str(), lineno - 1);
    p.sample_id = idbuf;
    p.origin = origin;
    for (const auto& tok : split(line, ' ')) {
      if (tok.empty()) continue;
      if (!parse_mutation(tok))
        raise(errc::malformed_record,
              path + " line " + std::to_string(lineno) + ": bad mutation '" + tok + "'");
      p.mutations.push_back(tok);
    }
    c.samples.push_back(std::move(p));
  }
  c.rebuild_index();
  return c;
}

}  // namespace gs
