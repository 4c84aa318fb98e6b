#include "core/synthesis.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>

#include "core/common.hpp"
#include "core/dp.hpp"
#include "core/io.hpp"
#include "vendor/json.hpp"

namespace gs {

std::vector<std::string> whitespace_chunks(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::string> build_prompts(const GenerationSpec& spec, const Cohort& source) {
  require(spec.n_samples >= 1, errc::invalid_config, "n_samples must be >= 1");
  size_t n = static_cast<size_t>(spec.n_samples);
  std::vector<std::string> prompts;
  prompts.reserve(n);
  switch (spec.source) {
    case prompt_source::fixed: {
      require(!spec.fixed_prompt.empty(), errc::empty_prompt, "fixed prompt is empty");
      prompts.assign(n, spec.fixed_prompt);
      break;
    }
    case prompt_source::first_mutation: {
      require(source.samples.size() >= n, errc::cohort_too_small,
              "need one target per generated sample");
      for (size_t i = 0; i < n; ++i) {
        const auto& s = source.samples[i];
        require(!s.mutations.empty(), errc::empty_prompt,
                "target sample " + s.sample_id + " has no mutations");
        prompts.push_back(s.mutations.front());
      }
      break;
    }
    case prompt_source::random_train: {
      require(!source.samples.empty(), errc::empty_corpus, "no source samples for prompts");
      Rng rng(mix_seed(spec.seed, "prompts"));
      for (size_t i = 0; i < n; ++i) {
        const SampleProfile* s = nullptr;
        // skip empty samples; give up if the whole cohort is empty
        for (int tries = 0; tries < 64; ++tries) {
          const auto& cand = source.samples[rng.below(source.samples.size())];
          if (!cand.mutations.empty()) {
            s = &cand;
            break;
          }
        }
        require(s != nullptr, errc::empty_prompt, "no non-empty sample to prompt from");
        prompts.push_back(s->mutations[rng.below(s->mutations.size())]);
      }
      break;
    }
  }
  return prompts;
}

GeneratedProfile generate_profile(const GptParams<float>& params, const Tokenizer& tok,
                                  const std::string& prompt, const GenerationSpec& spec,
                                  uint64_t seed) {
  require(parse_mutation(prompt).has_value(), errc::empty_prompt,
          "prompt is not a valid mutation string: " + prompt);
  // trailing space so generation starts at a fresh mutation boundary
  std::vector<int32_t> prompt_ids = tok.encode(prompt + " ");
  require(!prompt_ids.empty(), errc::empty_prompt, "prompt encodes to no tokens");

  std::vector<int32_t> ids;
  ids.reserve(prompt_ids.size() + 1);
  ids.push_back(Tokenizer::kBos);
  ids.insert(ids.end(), prompt_ids.begin(), prompt_ids.end());

  GenerateOptions opt;
  opt.max_new_tokens = spec.max_new_tokens;
  opt.temperature = spec.temperature;
  opt.top_k = spec.top_k;
  opt.stop_ids = {Tokenizer::kEos, Tokenizer::kSep};

  Rng rng(seed);
  std::vector<int32_t> full = generate(params, ids, opt, rng);
  std::vector<int32_t> fresh(full.begin() + static_cast<ptrdiff_t>(ids.size()), full.end());

  GeneratedProfile out;
  out.prompt = prompt;
  out.raw_text = tok.decode(fresh);
  out.profile.origin = origin_t::synthetic;
  out.profile.mutations.push_back(prompt);
  for (const auto& chunk : whitespace_chunks(out.raw_text)) {
    if (auto m = parse_mutation(chunk)) {
      ++out.valid_chunks;
      out.profile.mutations.push_back(m->render());
    } else {
      ++out.invalid_chunks;
    }
  }
  return out;
}

SynthesisResult generate_cohort(const GptParams<float>& params, const Tokenizer& tok,
                                const std::vector<std::string>& prompts,
                                const GenerationSpec& spec, int workers) {
  require(!prompts.empty(), errc::empty_prompt, "no prompts given");
  require(prompts.size() == 1 || prompts.size() == static_cast<size_t>(spec.n_samples),
          errc::invalid_config, "prompt list must match n_samples or be a single prompt");
  size_t n = static_cast<size_t>(spec.n_samples);

  SynthesisResult res;
  res.profiles.resize(n);
  parallel_for(n, workers, [&](size_t begin, size_t end, int) {
    for (size_t i = begin; i < end; ++i) {
      const std::string& prompt = prompts.size() == 1 ? prompts[0] : prompts[i];
      res.profiles[i] = generate_profile(params, tok, prompt, spec, spec.seed + i);
      char buf[32];
      std::snprintf(buf, sizeof(buf), "synth_%04zu", i);
      res.profiles[i].profile.sample_id = buf;
    }
  });
  res.cohort.samples.reserve(n);
  for (auto& gp : res.profiles) res.cohort.samples.push_back(gp.profile);
  res.cohort.rebuild_index();
  return res;
}

// Sampled bytes are not always valid UTF-8, but raw_text must survive the
// JSON sidecar verbatim: widen each byte to the same-numbered code point on
// write and narrow back on load.
namespace {

std::string widen_bytes(const std::string& bytes) {
  std::string out;
  out.reserve(bytes.size());
  for (unsigned char c : bytes) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

std::string narrow_bytes(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (size_t i = 0; i < text.size(); ++i) {
    unsigned char c = text[i];
    if ((c == 0xC2 || c == 0xC3) && i + 1 < text.size() &&
        (static_cast<unsigned char>(text[i + 1]) & 0xC0) == 0x80) {
      out.push_back(static_cast<char>(((c & 0x03) << 6) |
                                      (static_cast<unsigned char>(text[i + 1]) & 0x3F)));
      ++i;
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

}  // namespace

void write_cohort_sidecar(const SynthesisResult& res, const std::string& path) {
  nlohmann::json j;
  j["schema"] = "genomesynth.cohort_sidecar.v1";
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& gp : res.profiles) {
    samples.push_back({{"sample_id", gp.profile.sample_id},
                       {"prompt", gp.prompt},
                       {"raw_text", widen_bytes(gp.raw_text)},
                       {"valid_chunks", gp.valid_chunks},
                       {"invalid_chunks", gp.invalid_chunks}});
  }
  j["samples"] = std::move(samples);
  write_file(path, j.dump(2) + "\n");
}

std::vector<SidecarEntry> load_cohort_sidecar(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  require(j.value("schema", "") == "genomesynth.cohort_sidecar.v1", errc::settings_mismatch,
          "unrecognized sidecar schema in " + path);
  std::vector<SidecarEntry> out;
  for (const auto& s : j.at("samples")) {
    SidecarEntry e;
    e.sample_id = s.at("sample_id").get<std::string>();
    e.prompt = s.at("prompt").get<std::string>();
    e.raw_text = narrow_bytes(s.at("raw_text").get<std::string>());
    e.valid_chunks = s.at("valid_chunks").get<size_t>();
    e.invalid_chunks = s.at("invalid_chunks").get<size_t>();
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace gs
