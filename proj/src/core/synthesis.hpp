#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "core/mutation.hpp"
#include "core/tokenizer.hpp"

namespace gs {

enum class prompt_source { fixed, first_mutation, random_train };

struct GenerationSpec {
  int32_t n_samples = 1;
  prompt_source source = prompt_source::random_train;
  std::string fixed_prompt;  // source == fixed
  int32_t max_new_tokens = 160;
  double temperature = 1.0;
  int32_t top_k = 50;
  uint64_t seed = 0;
};

// One synthetic sample: the profile keeps the prompt mutation first, then the
// format-valid generated mutations in emission order. raw_text is only the
// newly generated bytes, kept verbatim for auditing.
struct GeneratedProfile {
  SampleProfile profile;
  std::string prompt;
  std::string raw_text;
  size_t valid_chunks = 0;
  size_t invalid_chunks = 0;
};

struct SynthesisResult {
  Cohort cohort;                           // profiles in prompt order
  std::vector<GeneratedProfile> profiles;  // parallel to cohort.samples
};

std::vector<std::string> whitespace_chunks(const std::string& text);

// Prompt list per spec.source: the fixed prompt broadcast, each target's first
// mutation, or uniformly drawn training mutations (seeded independently).
std::vector<std::string> build_prompts(const GenerationSpec& spec, const Cohort& source);

GeneratedProfile generate_profile(const GptParams<float>& params, const Tokenizer& tok,
                                  const std::string& prompt, const GenerationSpec& spec,
                                  uint64_t seed);

// One profile per prompt, sample ids synth_0000..; per-profile seed is
// spec.seed + index so results do not depend on the worker count.
SynthesisResult generate_cohort(const GptParams<float>& params, const Tokenizer& tok,
                                const std::vector<std::string>& prompts,
                                const GenerationSpec& spec, int workers = 1);

// Sidecar with prompts, raw texts and chunk tallies for a generated cohort.
void write_cohort_sidecar(const SynthesisResult& res, const std::string& path);

struct SidecarEntry {
  std::string sample_id;
  std::string prompt;
  std::string raw_text;
  size_t valid_chunks = 0;
  size_t invalid_chunks = 0;
};

std::vector<SidecarEntry> load_cohort_sidecar(const std::string& path);

}  // namespace gs
