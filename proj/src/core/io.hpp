#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gs {

// Line reader over plain or gzip-compressed files (zlib reads both
// transparently). Strips trailing \n and \r.
class LineReader {
 public:
  explicit LineReader(const std::string& path);
  ~LineReader();
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  // false on EOF
  bool next(std::string& line);

 private:
  void* gz_ = nullptr;
  std::string buf_;
  size_t pos_ = 0;
  bool eof_ = false;
  std::string path_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
bool file_exists(const std::string& path);

// FNV-1a 64-bit, hex encoded; used for artifact manifests
uint64_t fnv1a64(const void* data, size_t n);
std::string fnv1a64_hex(const std::string& content);
std::string hash_file(const std::string& path);

std::vector<std::string> split(const std::string& s, char delim);
std::string join(const std::vector<std::string>& parts, const std::string& sep);

}  // namespace gs
