#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gs {

// Sectioned key=value experiment config; keys address as "section.key",
// top-level keys (before any section) by bare name.
struct KvConfig {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  std::string get_str(const std::string& key, const std::string& def) const;
  int64_t get_int(const std::string& key, int64_t def) const;
  double get_double(const std::string& key, double def) const;
  bool get_bool(const std::string& key, bool def) const;
};

KvConfig parse_config_text(const std::string& text);
KvConfig parse_config_file(const std::string& path);

struct PipelineOptions {
  std::string config_path;
  std::string out_dir;                    // overrides [paths] out_dir
  std::vector<std::string> force;         // stage names, or "all"
  std::optional<uint64_t> seed_override;  // CLI beats GENOMESYNTH_SEED beats config
  std::optional<int> workers_override;
};

struct StageStatus {
  std::string name;
  bool ran = false;  // false = outputs existed, stage skipped
};

struct PipelineResult {
  std::vector<StageStatus> stages;
  std::string out_dir;
  std::string manifest_path;
};

// Stages in order: demo (only when data.demo), ingest, tokenize, train,
// generate, utility, attack. A stage runs when forced, when any output is
// missing, or when an earlier stage ran; otherwise it is skipped. Every
// produced artifact lands in out_dir and is content-hashed into
// manifest.json (relative paths, no timestamps). Stage errors are rethrown
// with the stage name prefixed.
PipelineResult run_pipeline(const PipelineOptions& opt);

}  // namespace gs
