#include "core/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>

#include "core/attack.hpp"
#include "core/common.hpp"
#include "core/demo.hpp"
#include "core/dp.hpp"
#include "core/io.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/mutation.hpp"
#include "core/synthesis.hpp"
#include "core/tokenizer.hpp"
#include "core/vcf.hpp"
#include "vendor/json.hpp"

namespace gs {

std::string KvConfig::get_str(const std::string& key, const std::string& def) const {
  auto it = values.find(key);
  return it == values.end() ? def : it->second;
}

int64_t KvConfig::get_int(const std::string& key, int64_t def) const {
  auto it = values.find(key);
  if (it == values.end()) return def;
  try {
    size_t used = 0;
    int64_t v = std::stoll(it->second, &used);
    require(used == it->second.size(), errc::invalid_config, "");
    return v;
  } catch (...) {
    raise(errc::invalid_config, "config key " + key + " is not an integer: " + it->second);
  }
}

double KvConfig::get_double(const std::string& key, double def) const {
  auto it = values.find(key);
  if (it == values.end()) return def;
  try {
    size_t used = 0;
    double v = std::stod(it->second, &used);
    require(used == it->second.size(), errc::invalid_config, "");
    return v;
  } catch (...) {
    raise(errc::invalid_config, "config key " + key + " is not a number: " + it->second);
  }
}

bool KvConfig::get_bool(const std::string& key, bool def) const {
  auto it = values.find(key);
  if (it == values.end()) return def;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  raise(errc::invalid_config, "config key " + key + " is not a boolean: " + v);
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

KvConfig parse_config_text(const std::string& text) {
  KvConfig cfg;
  std::string section;
  long lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      require(line.back() == ']' && line.size() > 2, errc::invalid_config,
              "bad section header at line " + std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      continue;
    }
    size_t eq = line.find('=');
    require(eq != std::string::npos, errc::invalid_config,
            "expected key = value at line " + std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), errc::invalid_config,
            "empty key at line " + std::to_string(lineno));
    cfg.values[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

KvConfig parse_config_file(const std::string& path) {
  return parse_config_text(read_file(path));
}

namespace {

struct StageRunner {
  std::vector<StageStatus>& stages;
  std::vector<std::string>& artifacts;  // paths relative to out_dir
  const std::string& out_dir;
  std::function<bool(const std::string&)> forced;
  bool cascade = false;

  void operator()(const std::string& name, const std::vector<std::string>& outputs,
                  const std::function<void()>& fn) {
    bool need = cascade || forced(name);
    if (!need)
      for (const auto& o : outputs)
        if (!file_exists(out_dir + "/" + o)) {
          need = true;
          break;
        }
    if (need) {
      try {
        fn();
      } catch (const Error& e) {
        throw Error(e.code(), "stage " + name + ": " + e.what());
      } catch (const std::exception& e) {
        throw Error(errc::io_error, "stage " + name + ": " + std::string(e.what()));
      }
      cascade = true;
    }
    stages.push_back({name, need});
    for (const auto& o : outputs) artifacts.push_back(o);
  }
};

std::vector<std::string> corpus_lines(const std::string& path) {
  std::vector<std::string> lines;
  LineReader reader(path);
  std::string line;
  while (reader.next(line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

prompt_source parse_prompt_source(const std::string& s) {
  if (s == "random-train") return prompt_source::random_train;
  if (s == "first-mutation") return prompt_source::first_mutation;
  if (s == "fixed") return prompt_source::fixed;
  raise(errc::invalid_config, "unknown prompt mode: " + s);
}

}  // namespace

PipelineResult run_pipeline(const PipelineOptions& opt) {
  KvConfig cfg = parse_config_file(opt.config_path);
  require(cfg.get_str("schema", "") == "genomesynth.config.v1", errc::invalid_config,
          "config schema missing or unsupported");

  uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  if (const char* env = std::getenv("GENOMESYNTH_SEED")) {
    try {
      seed = std::stoull(env);
    } catch (...) {
      raise(errc::invalid_config, "GENOMESYNTH_SEED is not an integer");
    }
  }
  if (opt.seed_override) seed = *opt.seed_override;

  int workers = static_cast<int>(cfg.get_int("workers", 1));
  if (opt.workers_override) workers = *opt.workers_override;
  require(workers >= 1, errc::invalid_config, "workers must be >= 1");

  std::string out_dir = !opt.out_dir.empty() ? opt.out_dir : cfg.get_str("paths.out_dir", "");
  require(!out_dir.empty(), errc::invalid_config, "no output directory configured");

  static const std::vector<std::string> kStageNames = {
      "demo", "ingest", "tokenize", "train", "generate", "utility", "attack"};
  bool force_all = false;
  for (const auto& f : opt.force) {
    if (f == "all") {
      force_all = true;
      continue;
    }
    require(std::find(kStageNames.begin(), kStageNames.end(), f) != kStageNames.end(),
            errc::invalid_config, "unknown stage in --force: " + f);
  }
  auto forced = [&, force_all](const std::string& name) {
    return force_all || std::find(opt.force.begin(), opt.force.end(), name) != opt.force.end();
  };

  bool demo = cfg.get_bool("data.demo", false);
  std::string vcf_path = cfg.get_str("data.vcf", demo ? out_dir + "/demo.vcf" : "");
  std::string bounds_path =
      cfg.get_str("utility.bounds", demo ? out_dir + "/bounds.tsv" : "");

  PipelineResult res;
  res.out_dir = out_dir;
  std::vector<std::string> artifacts;
  StageRunner stage{res.stages, artifacts, out_dir, forced};

  auto at = [&](const char* name) { return out_dir + "/" + name; };

  if (demo) {
    stage("demo", {"demo.vcf", "bounds.tsv"}, [&] {
      DemoConfig dc;
      dc.n_samples = static_cast<int32_t>(cfg.get_int("data.demo_samples", 60));
      dc.n_variants = static_cast<int32_t>(cfg.get_int("data.demo_variants", 300));
      dc.chrom = cfg.get_str("data.demo_chrom", "22");
      dc.max_pos = cfg.get_int("data.demo_max_pos", 50000000);
      dc.seed = mix_seed(seed, "demo");
      write_demo_vcf(dc, at("demo.vcf"));
      write_file(at("bounds.tsv"), make_demo_bounds(dc));
    });
  }

  stage("ingest", {"corpus_train.txt", "corpus_holdout.txt"}, [&] {
    require(!vcf_path.empty(), errc::invalid_config, "no vcf path configured");
    require(file_exists(vcf_path), errc::io_error, "vcf not found: " + vcf_path);
    VcfFile vcf = parse_vcf_file(vcf_path, cfg.get_bool("data.lenient", false));
    Cohort cohort = build_profiles(vcf, cfg.get_bool("data.include_ref_genotypes", false));
    auto [train_c, holdout_c] =
        split_train_holdout(cohort, cfg.get_double("data.holdout_fraction", 0.5), seed);
    write_corpus(train_c, at("corpus_train.txt"));
    write_corpus(holdout_c, at("corpus_holdout.txt"));
  });

  stage("tokenize", {"tokenizer.txt"}, [&] {
    Tokenizer tok;
    tok.train(corpus_lines(at("corpus_train.txt")),
              static_cast<int32_t>(cfg.get_int("tokenizer.vocab_size", 512)));
    tok.save(at("tokenizer.txt"));
  });

  stage("train", {"model.ckpt", "loss_history.csv", "privacy_ledger.json"}, [&] {
    Tokenizer tok = Tokenizer::load(at("tokenizer.txt"));
    TokenizedCorpus corpus = tokenize_corpus(tok, corpus_lines(at("corpus_train.txt")));

    ModelConfig mc = preset_config(cfg.get_str("model.preset", "tiny"));
    mc.vocab_size = tok.vocab_size();
    mc.max_seq_len = static_cast<int32_t>(cfg.get_int("model.max_seq_len", mc.max_seq_len));
    mc.dropout_rate = cfg.get_double("model.dropout", 0.0);
    mc.seed = mix_seed(seed, "model_init");
    GptParams<float> params(mc);
    params.init();

    TrainConfig tc;
    std::string mode = cfg.get_str("train.mode", "plain");
    require(mode == "plain" || mode == "dp", errc::invalid_config,
            "train.mode must be plain or dp");
    tc.mode = mode == "dp" ? train_mode::dp : train_mode::plain;
    tc.max_steps = static_cast<int32_t>(cfg.get_int("train.steps", 200));
    tc.batch_size = static_cast<int32_t>(cfg.get_int("train.batch_size", 16));
    tc.lr = cfg.get_double("train.lr", 0.3);
    tc.lr_final = cfg.get_double("train.lr_final", -1.0);
    tc.momentum = cfg.get_double("train.momentum", 0.9);
    tc.stop_at_train_loss = cfg.get_double("train.stop_at_train_loss", 0.0);
    tc.seed = mix_seed(seed, "train");
    tc.workers = workers;

    DpConfig dp;
    dp.clip_norm = cfg.get_double("train.clip_norm", 1.0);
    dp.noise_multiplier = cfg.get_double("train.noise_multiplier", 4.0);
    dp.lot_size = static_cast<int32_t>(cfg.get_int("train.lot_size", 16));
    dp.delta = cfg.get_double("train.delta", 1e-5);
    dp.target_epsilon = cfg.get_double("train.target_epsilon", 0.0);

    TrainResult tr = train(params, corpus, tc, tc.mode == train_mode::dp ? &dp : nullptr);
    save_checkpoint(params, at("model.ckpt"));
    write_loss_history_csv(tr, at("loss_history.csv"));
    write_ledger_json(tr, at("privacy_ledger.json"));
  });

  stage("generate", {"cohort.txt", "cohort_sidecar.json"}, [&] {
    GptParams<float> params = load_checkpoint(at("model.ckpt"));
    Tokenizer tok = Tokenizer::load(at("tokenizer.txt"));
    Cohort train_c = load_corpus(at("corpus_train.txt"), "train");

    GenerationSpec spec;
    spec.n_samples = static_cast<int32_t>(cfg.get_int("generate.n_samples", 50));
    spec.source = parse_prompt_source(cfg.get_str("generate.prompt_mode", "random-train"));
    spec.fixed_prompt = cfg.get_str("generate.fixed_prompt", "");
    spec.max_new_tokens = static_cast<int32_t>(cfg.get_int("generate.max_new_tokens", 160));
    spec.temperature = cfg.get_double("generate.temperature", 1.0);
    spec.top_k = static_cast<int32_t>(cfg.get_int("generate.top_k", 50));
    spec.seed = mix_seed(seed, "generate");

    SynthesisResult sr =
        generate_cohort(params, tok, build_prompts(spec, train_c), spec, workers);
    write_corpus(sr.cohort, at("cohort.txt"));
    write_cohort_sidecar(sr, at("cohort_sidecar.json"));
  });

  stage("utility",
        {"utility_report.json", "utility_metrics.csv", "benchmark_report.json",
         "benchmark_metrics.csv", "utility_compare.csv"},
        [&] {
          require(!bounds_path.empty(), errc::missing_bounds, "no bounds file configured");
          ChromosomeBounds bounds = load_bounds(bounds_path);
          Cohort train_c = load_corpus(at("corpus_train.txt"), "train");
          CohortView synth_view = view_from_sidecar(load_cohort_sidecar(at("cohort_sidecar.json")));
          CohortView bench_view = view_from_cohort(train_c);
          std::string settings =
              "bounds=" + fnv1a64_hex(read_file(bounds_path)) + ";generated-only";
          UtilityReport synth =
              utility_report(synth_view, bounds, train_c.index.full_texts, settings);
          UtilityReport bench =
              utility_report(bench_view, bounds, train_c.index.full_texts, settings);
          write_utility_report(synth, at("utility_report.json"), at("utility_metrics.csv"));
          write_utility_report(bench, at("benchmark_report.json"), at("benchmark_metrics.csv"));
          write_comparison(compare_reports(synth, bench), at("utility_compare.csv"));
        });

  stage("attack", {"attack_report.json", "attack_rounds.csv", "attack_plot.csv"}, [&] {
    GptParams<float> params = load_checkpoint(at("model.ckpt"));
    Tokenizer tok = Tokenizer::load(at("tokenizer.txt"));
    Cohort train_c = load_corpus(at("corpus_train.txt"), "train");
    Cohort holdout_c = load_corpus(at("corpus_holdout.txt"), "holdout");

    ExperimentConfig ac;
    ac.cohort_size = static_cast<int32_t>(cfg.get_int("attack.cohort_size", 20));
    ac.n_rounds = static_cast<int32_t>(cfg.get_int("attack.rounds", 5));
    std::string mode = cfg.get_str("attack.feature_mode", "both");
    if (mode == "both") {
      ac.model_only_block = true;
      ac.hybrid_block = true;
    } else if (mode == "model-only") {
      ac.model_only_block = true;
      ac.hybrid_block = false;
    } else if (mode == "hybrid") {
      ac.model_only_block = false;
      ac.hybrid_block = true;
    } else {
      raise(errc::invalid_config, "attack.feature_mode must be both, model-only or hybrid");
    }
    ac.seed = mix_seed(seed, "attack");
    ac.gen_max_new_tokens = static_cast<int32_t>(
        cfg.get_int("attack.gen_max_new_tokens", cfg.get_int("generate.max_new_tokens", 160)));
    ac.gen_temperature =
        cfg.get_double("attack.gen_temperature", cfg.get_double("generate.temperature", 1.0));
    ac.gen_top_k =
        static_cast<int32_t>(cfg.get_int("attack.gen_top_k", cfg.get_int("generate.top_k", 50)));
    ac.workers = workers;

    AttackReport report = run_experiment(params, tok, train_c, holdout_c, ac);
    write_attack_report_json(report, at("attack_report.json"));
    write_attack_rounds_csv(report, at("attack_rounds.csv"));
    write_attack_plot_csv(report, at("attack_plot.csv"));
  });

  // manifest: relative paths + content hashes, sorted, no timestamps
  std::sort(artifacts.begin(), artifacts.end());
  nlohmann::json j;
  j["schema"] = "genomesynth.manifest.v1";
  j["seed"] = seed;
  j["workers"] = workers;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& rel : artifacts) {
    std::string full = out_dir + "/" + rel;
    require(file_exists(full), errc::io_error, "expected artifact missing: " + full);
    std::string content = read_file(full);
    files.push_back(
        {{"path", rel}, {"fnv1a64", fnv1a64_hex(content)}, {"bytes", content.size()}});
  }
  j["files"] = std::move(files);
  res.manifest_path = at("manifest.json");
  write_file(res.manifest_path, j.dump(2) + "\n");
  return res;
}

}  // namespace gs
