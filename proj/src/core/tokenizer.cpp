#include "core/tokenizer.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

#include "core/common.hpp"
#include "core/io.hpp"

namespace gs {

const std::string Tokenizer::kDefaultPattern =
    R"([0-9A-Za-z]+:[0-9]+:[ACGTN]+>[ACGTN,*]+_[0-9]+[|/][0-9]+\s?|\s+|\S+\s?)";

Tokenizer::Tokenizer(std::string pattern) : pattern_(std::move(pattern)) {
  try {
    re_.assign(pattern_, std::regex::ECMAScript | std::regex::optimize);
  } catch (const std::regex_error& e) {
    raise(errc::bad_tokenizer_file, std::string("bad pretoken pattern: ") + e.what());
  }
}

std::vector<std::string> Tokenizer::pretokenize(const std::string& text) const {
  std::vector<std::string> chunks;
  size_t cur = 0;
  auto begin = std::sregex_iterator(text.begin(), text.end(), re_);
  auto end = std::sregex_iterator();
  for (auto it = begin; it != end; ++it) {
    size_t mpos = static_cast<size_t>(it->position());
    size_t mlen = static_cast<size_t>(it->length());
    if (mlen == 0) continue;
    if (mpos > cur) chunks.push_back(text.substr(cur, mpos - cur));  // pattern gap
    chunks.push_back(text.substr(mpos, mlen));
    cur = mpos + mlen;
  }
  if (cur < text.size()) chunks.push_back(text.substr(cur));
  return chunks;
}

namespace {

using Pair = std::pair<int32_t, int32_t>;

struct PairHash {
  size_t operator()(const Pair& p) const {
    return std::hash<uint64_t>()((static_cast<uint64_t>(p.first) << 32) |
                                 static_cast<uint32_t>(p.second));
  }
};

void merge_in_place(std::vector<int32_t>& seq, Pair pair, int32_t new_id) {
  size_t w = 0;
  for (size_t r = 0; r < seq.size();) {
    if (r + 1 < seq.size() && seq[r] == pair.first && seq[r + 1] == pair.second) {
      seq[w++] = new_id;
      r += 2;
    } else {
      seq[w++] = seq[r++];
    }
  }
  seq.resize(w);
}

}  // namespace

void Tokenizer::train(const std::vector<std::string>& corpus_lines, int32_t target_vocab) {
  require(target_vocab > kFirstMergeId, errc::vocab_too_small,
          "target vocab must exceed " + std::to_string(kFirstMergeId));
  merges_.clear();

  // aggregate identical chunks; weights carry the duplication
  std::unordered_map<std::string, int64_t> chunk_counts;
  for (const auto& line : corpus_lines)
    for (auto& chunk : pretokenize(line)) ++chunk_counts[chunk];

  std::vector<std::vector<int32_t>> seqs;
  std::vector<int64_t> weights;
  // deterministic iteration order
  std::map<std::string, int64_t> ordered(chunk_counts.begin(), chunk_counts.end());
  for (const auto& [chunk, cnt] : ordered) {
    std::vector<int32_t> seq(chunk.size());
    for (size_t i = 0; i < chunk.size(); ++i)
      seq[i] = static_cast<int32_t>(static_cast<unsigned char>(chunk[i]));
    seqs.push_back(std::move(seq));
    weights.push_back(cnt);
  }

  while (vocab_size() < target_vocab) {
    std::unordered_map<Pair, int64_t, PairHash> counts;
    for (size_t s = 0; s < seqs.size(); ++s) {
      const auto& seq = seqs[s];
      for (size_t i = 0; i + 1 < seq.size(); ++i)
        counts[{seq[i], seq[i + 1]}] += weights[s];
    }
    Pair best{0, 0};
    int64_t best_count = 0;
    for (const auto& [pair, cnt] : counts) {
      if (cnt > best_count || (cnt == best_count && cnt > 0 && pair < best)) {
        best = pair;
        best_count = cnt;
      }
    }
    if (best_count < 2) break;

    int32_t new_id = vocab_size();
    merges_.push_back({best.first, best.second, new_id});
    for (auto& seq : seqs) merge_in_place(seq, best, new_id);
  }
}

std::vector<int32_t> Tokenizer::apply_merges(const std::string& chunk) const {
  std::vector<int32_t> seq(chunk.size());
  for (size_t i = 0; i < chunk.size(); ++i)
    seq[i] = static_cast<int32_t>(static_cast<unsigned char>(chunk[i]));
  // learned order, left-to-right within the chunk
  for (const auto& m : merges_) {
    if (seq.size() < 2) break;
    merge_in_place(seq, {m.left, m.right}, m.id);
  }
  return seq;
}

std::vector<int32_t> Tokenizer::encode(const std::string& text) const {
  std::vector<int32_t> out;
  for (const auto& chunk : pretokenize(text)) {
    auto ids = apply_merges(chunk);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

std::string Tokenizer::token_bytes(int32_t id) const {
  if (id >= 0 && id < 256) return std::string(1, static_cast<char>(id));
  if (id >= 256 && id < kFirstMergeId) return "";  // specials carry no bytes
  int32_t mi = id - kFirstMergeId;
  if (mi < 0 || mi >= static_cast<int32_t>(merges_.size()))
    raise(errc::unknown_token_id, "token id " + std::to_string(id) + " not in vocab");
  const Merge& m = merges_[mi];
  return token_bytes(m.left) + token_bytes(m.right);
}

std::string Tokenizer::decode(const std::vector<int32_t>& ids) const {
  std::string out;
  for (int32_t id : ids) out += token_bytes(id);
  return out;
}

void Tokenizer::save(const std::string& path) const {
  std::ostringstream ss;
  ss << "genomesynth.tokenizer.v1\n";
  ss << "pattern=" << pattern_ << "\n";
  ss << "special BOS " << kBos << "\n";
  ss << "special EOS " << kEos << "\n";
  ss << "special SEP " << kSep << "\n";
  ss << "special PAD " << kPad << "\n";
  for (const auto& m : merges_) ss << "merge " << m.left << " " << m.right << " " << m.id << "\n";
  write_file(path, ss.str());
}

Tokenizer Tokenizer::load(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "genomesynth.tokenizer.v1")
    raise(errc::bad_tokenizer_file, path + ": bad or missing version line");
  if (!std::getline(in, line) || line.rfind("pattern=", 0) != 0)
    raise(errc::bad_tokenizer_file, path + ": missing pattern line");

  Tokenizer tok(line.substr(8));
  int64_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "special") {
      std::string name;
      int32_t id;
      if (!(ls >> name >> id)) raise(errc::bad_tokenizer_file, path + ": bad special line");
      int32_t expect = name == "BOS"   ? kBos
                       : name == "EOS" ? kEos
                       : name == "SEP" ? kSep
                       : name == "PAD" ? kPad
                                       : -1;
      if (expect != id)
        raise(errc::bad_tokenizer_file, path + ": unexpected special token " + name);
    } else if (kind == "merge") {
      Merge m;
      if (!(ls >> m.left >> m.right >> m.id))
        raise(errc::bad_tokenizer_file,
              path + " line " + std::to_string(lineno) + ": bad merge line");
      if (m.id != tok.vocab_size() || m.left >= m.id || m.right >= m.id || m.left < 0 ||
          m.right < 0)
        raise(errc::bad_tokenizer_file,
              path + " line " + std::to_string(lineno) + ": inconsistent merge ids");
      if ((m.left >= 256 && m.left < kFirstMergeId) ||
          (m.right >= 256 && m.right < kFirstMergeId))
        raise(errc::bad_tokenizer_file,
              path + " line " + std::to_string(lineno) + ": merge references special token");
      tok.merges_.push_back(m);
    } else {
      raise(errc::bad_tokenizer_file,
            path + " line " + std::to_string(lineno) + ": unknown line kind '" + kind + "'");
    }
  }
  return tok;
}

}  // namespace gs
