#pragma once

#include <cstdint>
#include <regex>
#include <string>
#include <vector>

namespace gs {

// Byte-level BPE with regex pretokenization. Ids 0..255 are raw bytes,
// 256..259 the special tokens, learned merges follow from 260.
class Tokenizer {
 public:
  static constexpr int32_t kBos = 256;
  static constexpr int32_t kEos = 257;
  static constexpr int32_t kSep = 258;
  static constexpr int32_t kPad = 259;
  static constexpr int32_t kNumSpecial = 4;
  static constexpr int32_t kFirstMergeId = 256 + kNumSpecial;

  struct Merge {
    int32_t left = 0;
    int32_t right = 0;
    int32_t id = 0;
  };

  // Default chunk pattern: a well-formed mutation string with optional
  // trailing space, else a whitespace run, else a non-space run with
  // optional trailing space. Alternation order matters.
  static const std::string kDefaultPattern;

  explicit Tokenizer(std::string pattern = kDefaultPattern);

  // Splits text into chunks whose concatenation equals text exactly.
  std::vector<std::string> pretokenize(const std::string& text) const;

  // Learns merges until vocab_size() == target or no pair repeats. Counts
  // never cross chunk boundaries. Ties break on the smaller (left, right).
  void train(const std::vector<std::string>& corpus_lines, int32_t target_vocab);

  std::vector<int32_t> encode(const std::string& text) const;
  std::string decode(const std::vector<int32_t>& ids) const;

  int32_t vocab_size() const { return kFirstMergeId + static_cast<int32_t>(merges_.size()); }
  const std::vector<Merge>& merges() const { return merges_; }
  const std::string& pattern() const { return pattern_; }
  // byte expansion of any id; specials expand to nothing
  std::string token_bytes(int32_t id) const;

  void save(const std::string& path) const;
  static Tokenizer load(const std::string& path);

 private:
  std::vector<int32_t> apply_merges(const std::string& chunk) const;

  std::string pattern_;
  std::regex re_;
  std::vector<Merge> merges_;
};

}  // namespace gs
