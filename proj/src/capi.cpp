#include "genomesynth/genomesynth.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <string>

#include "core/attack.hpp"
#include "core/common.hpp"
#include "core/demo.hpp"
#include "core/dp.hpp"
#include "core/io.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/mutation.hpp"
#include "core/pipeline.hpp"
#include "core/synthesis.hpp"
#include "core/tokenizer.hpp"
#include "core/vcf.hpp"

namespace {

thread_local std::string g_last_error;

gs_status map_errc(gs::errc c) {
  using gs::errc;
  switch (c) {
    case errc::ok: return GS_OK;
    case errc::invalid_config: return GS_E_INVALID_CONFIG;
    case errc::vocab_too_small: return GS_E_VOCAB_TOO_SMALL;
    case errc::too_few_samples: return GS_E_TOO_FEW_SAMPLES;
    case errc::empty_corpus: return GS_E_EMPTY_CORPUS;
    case errc::empty_cohort: return GS_E_EMPTY_COHORT;
    case errc::empty_prompt: return GS_E_EMPTY_PROMPT;
    case errc::cohort_too_small: return GS_E_COHORT_TOO_SMALL;
    case errc::missing_bounds: return GS_E_MISSING_BOUNDS;
    case errc::settings_mismatch: return GS_E_SETTINGS_MISMATCH;
    case errc::bounds_too_tight: return GS_E_BOUNDS_TOO_TIGHT;
    case errc::class_imbalance: return GS_E_CLASS_IMBALANCE;
    case errc::single_class_eval: return GS_E_SINGLE_CLASS_EVAL;
    case errc::malformed_header: return GS_E_MALFORMED_HEADER;
    case errc::malformed_record: return GS_E_MALFORMED_RECORD;
    case errc::missing_genotype: return GS_E_MISSING_GENOTYPE;
    case errc::unknown_token_id: return GS_E_UNKNOWN_TOKEN_ID;
    case errc::token_out_of_range: return GS_E_TOKEN_OUT_OF_RANGE;
    case errc::sequence_too_long: return GS_E_SEQUENCE_TOO_LONG;
    case errc::sequence_too_short: return GS_E_SEQUENCE_TOO_SHORT;
    case errc::length_mismatch: return GS_E_LENGTH_MISMATCH;
    case errc::dimension_mismatch: return GS_E_DIMENSION_MISMATCH;
    case errc::bad_checkpoint: return GS_E_BAD_CHECKPOINT;
    case errc::bad_tokenizer_file: return GS_E_BAD_TOKENIZER_FILE;
    case errc::non_finite_gradient: return GS_E_NON_FINITE_GRADIENT;
    case errc::non_finite_loss: return GS_E_NON_FINITE_LOSS;
    case errc::io_error: return GS_E_IO;
  }
  return GS_E_INTERNAL;
}

template <typename Fn>
gs_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return GS_OK;
  } catch (const gs::Error& e) {
    g_last_error = e.what();
    return map_errc(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GS_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return GS_E_INTERNAL;
  }
}

gs_status fail_invalid(const char* msg) {
  g_last_error = msg;
  return GS_E_INVALID_CONFIG;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string opt_str(const char* s, const char* def) { return s ? s : def; }

}  // namespace

extern "C" {

struct gs_tokenizer {
  gs::Tokenizer impl;
};

struct gs_model {
  gs::GptParams<float> impl;
};

const char* gs_version(void) { return "1.0.0"; }

const char* gs_status_name(gs_status s) {
  switch (s) {
    case GS_OK: return "Ok";
    case GS_E_INVALID_CONFIG: return "InvalidConfig";
    case GS_E_VOCAB_TOO_SMALL: return "VocabTooSmall";
    case GS_E_TOO_FEW_SAMPLES: return "TooFewSamples";
    case GS_E_EMPTY_CORPUS: return "EmptyCorpus";
    case GS_E_EMPTY_COHORT: return "EmptyCohort";
    case GS_E_EMPTY_PROMPT: return "EmptyPrompt";
    case GS_E_COHORT_TOO_SMALL: return "CohortTooSmall";
    case GS_E_MISSING_BOUNDS: return "MissingBounds";
    case GS_E_SETTINGS_MISMATCH: return "SettingsMismatch";
    case GS_E_BOUNDS_TOO_TIGHT: return "BoundsTooTight";
    case GS_E_CLASS_IMBALANCE: return "ClassImbalanceFatal";
    case GS_E_SINGLE_CLASS_EVAL: return "SingleClassEval";
    case GS_E_MALFORMED_HEADER: return "MalformedHeader";
    case GS_E_MALFORMED_RECORD: return "MalformedRecord";
    case GS_E_MISSING_GENOTYPE: return "MissingGenotype";
    case GS_E_UNKNOWN_TOKEN_ID: return "UnknownTokenId";
    case GS_E_TOKEN_OUT_OF_RANGE: return "TokenOutOfRange";
    case GS_E_SEQUENCE_TOO_LONG: return "SequenceTooLong";
    case GS_E_SEQUENCE_TOO_SHORT: return "SequenceTooShort";
    case GS_E_LENGTH_MISMATCH: return "LengthMismatch";
    case GS_E_DIMENSION_MISMATCH: return "DimensionMismatch";
    case GS_E_BAD_CHECKPOINT: return "BadCheckpoint";
    case GS_E_BAD_TOKENIZER_FILE: return "BadTokenizerFile";
    case GS_E_NON_FINITE_GRADIENT: return "NonFiniteGradient";
    case GS_E_NON_FINITE_LOSS: return "NonFiniteLoss";
    case GS_E_IO: return "IoError";
    case GS_E_INTERNAL: return "Internal";
  }
  return "Unknown";
}

const char* gs_last_error(void) { return g_last_error.c_str(); }

void gs_string_free(char* s) { std::free(s); }
void gs_ids_free(int32_t* ids) { std::free(ids); }

gs_status gs_demo_data(const gs_demo_opts* opts) {
  if (!opts || !opts->out_vcf) return fail_invalid("gs_demo_data: opts and out_vcf required");
  return guarded([&] {
    gs::DemoConfig dc;
    dc.n_samples = opts->n_samples;
    dc.n_variants = opts->n_variants;
    dc.seed = opts->seed;
    dc.chrom = opt_str(opts->chrom, "22");
    if (opts->max_pos > 0) dc.max_pos = opts->max_pos;
    gs::write_demo_vcf(dc, opts->out_vcf);
    if (opts->out_bounds) gs::write_file(opts->out_bounds, gs::make_demo_bounds(dc));
  });
}

gs_status gs_ingest(const gs_ingest_opts* opts, gs_ingest_stats* stats) {
  if (!opts || !opts->vcf || !opts->out_train || !opts->out_holdout)
    return fail_invalid("gs_ingest: opts, vcf, out_train and out_holdout required");
  return guarded([&] {
    gs::VcfFile vcf = gs::parse_vcf_file(opts->vcf, opts->lenient != 0);
    gs::Cohort cohort = gs::build_profiles(vcf, opts->include_ref_genotypes != 0);
    auto [train_c, holdout_c] =
        gs::split_train_holdout(cohort, opts->holdout_fraction, opts->seed);
    gs::write_corpus(train_c, opts->out_train);
    gs::write_corpus(holdout_c, opts->out_holdout);
    if (stats) {
      stats->n_records = static_cast<int64_t>(vcf.records.size());
      stats->n_skipped = vcf.skipped;
      stats->n_samples = static_cast<int64_t>(cohort.samples.size());
      stats->n_train = static_cast<int64_t>(train_c.samples.size());
      stats->n_holdout = static_cast<int64_t>(holdout_c.samples.size());
    }
  });
}

gs_status gs_tokenizer_train(const char* corpus, int32_t vocab_size, const char* out_path,
                             int32_t* vocab_out) {
  if (!corpus || !out_path) return fail_invalid("gs_tokenizer_train: corpus and out_path required");
  return guarded([&] {
    std::vector<std::string> lines;
    gs::LineReader reader(corpus);
    std::string line;
    while (reader.next(line))
      if (!line.empty()) lines.push_back(line);
    gs::Tokenizer tok;
    tok.train(lines, vocab_size);
    tok.save(out_path);
    if (vocab_out) *vocab_out = tok.vocab_size();
  });
}

gs_status gs_tokenizer_open(const char* path, gs_tokenizer** out) {
  if (!path || !out) return fail_invalid("gs_tokenizer_open: path and out required");
  return guarded([&] { *out = new gs_tokenizer{gs::Tokenizer::load(path)}; });
}

void gs_tokenizer_close(gs_tokenizer* tok) { delete tok; }

gs_status gs_tokenizer_vocab_size(const gs_tokenizer* tok, int32_t* out) {
  if (!tok || !out) return fail_invalid("gs_tokenizer_vocab_size: tok and out required");
  *out = tok->impl.vocab_size();
  g_last_error.clear();
  return GS_OK;
}

gs_status gs_tokenizer_encode(const gs_tokenizer* tok, const char* text, int32_t** ids_out,
                              size_t* n_out) {
  if (!tok || !text || !ids_out || !n_out)
    return fail_invalid("gs_tokenizer_encode: all arguments required");
  return guarded([&] {
    std::vector<int32_t> ids = tok->impl.encode(text);
    auto* buf = static_cast<int32_t*>(std::malloc(sizeof(int32_t) * std::max<size_t>(1, ids.size())));
    std::memcpy(buf, ids.data(), sizeof(int32_t) * ids.size());
    *ids_out = buf;
    *n_out = ids.size();
  });
}

gs_status gs_tokenizer_decode(const gs_tokenizer* tok, const int32_t* ids, size_t n,
                              char** text_out) {
  if (!tok || (!ids && n > 0) || !text_out)
    return fail_invalid("gs_tokenizer_decode: all arguments required");
  return guarded([&] {
    std::vector<int32_t> v(ids, ids + n);
    *text_out = dup_string(tok->impl.decode(v));
  });
}

gs_status gs_model_open(const char* ckpt_path, gs_model** out) {
  if (!ckpt_path || !out) return fail_invalid("gs_model_open: path and out required");
  return guarded([&] { *out = new gs_model{gs::load_checkpoint(ckpt_path)}; });
}

void gs_model_close(gs_model* model) { delete model; }

gs_status gs_model_param_count(const gs_model* model, int64_t* out) {
  if (!model || !out) return fail_invalid("gs_model_param_count: model and out required");
  *out = static_cast<int64_t>(model->impl.data.size());
  g_last_error.clear();
  return GS_OK;
}

gs_status gs_train(const gs_train_opts* opts, gs_train_stats* stats) {
  if (!opts || !opts->corpus || !opts->tokenizer || !opts->out_ckpt)
    return fail_invalid("gs_train: opts, corpus, tokenizer and out_ckpt required");
  return guarded([&] {
    gs::Tokenizer tok = gs::Tokenizer::load(opts->tokenizer);
    std::vector<std::string> lines;
    gs::LineReader reader(opts->corpus);
    std::string line;
    while (reader.next(line))
      if (!line.empty()) lines.push_back(line);
    gs::TokenizedCorpus corpus = gs::tokenize_corpus(tok, lines);

    gs::ModelConfig mc = gs::preset_config(opt_str(opts->preset, "tiny"));
    mc.vocab_size = tok.vocab_size();
    if (opts->max_seq_len > 0) mc.max_seq_len = opts->max_seq_len;
    mc.dropout_rate = opts->dropout;
    mc.seed = gs::mix_seed(opts->seed, "model_init");
    gs::GptParams<float> params(mc);
    params.init();

    gs::TrainConfig tc;
    tc.mode = opts->dp_mode ? gs::train_mode::dp : gs::train_mode::plain;
    tc.max_steps = opts->steps;
    tc.batch_size = opts->batch_size;
    tc.lr = opts->lr;
    tc.lr_final = opts->lr_final;
    tc.momentum = opts->momentum;
    tc.stop_at_train_loss = opts->stop_at_train_loss;
    tc.seed = gs::mix_seed(opts->seed, "train");
    tc.workers = opts->workers;

    gs::DpConfig dp;
    dp.clip_norm = opts->clip_norm;
    dp.noise_multiplier = opts->noise_multiplier;
    dp.lot_size = opts->lot_size;
    dp.delta = opts->delta;
    dp.target_epsilon = opts->target_epsilon;

    gs::TrainResult tr = gs::train(params, corpus, tc, opts->dp_mode ? &dp : nullptr);
    gs::save_checkpoint(params, opts->out_ckpt);
    if (opts->loss_csv) gs::write_loss_history_csv(tr, opts->loss_csv);
    if (opts->ledger_json) gs::write_ledger_json(tr, opts->ledger_json);

    if (stats) {
      stats->param_count = static_cast<int64_t>(params.data.size());
      stats->steps_done = tr.steps_done;
      stats->final_loss = tr.final_loss;
      stats->epsilon = tr.ledger_valid ? tr.ledger.epsilon : 0.0;
      stats->max_postclip_norm = tr.max_postclip_norm;
    }
  });
}

gs_status gs_dp_epsilon(double q, double sigma, int64_t steps, double delta, double* eps_out) {
  if (!eps_out) return fail_invalid("gs_dp_epsilon: eps_out required");
  return guarded([&] { *eps_out = gs::account_epsilon(q, sigma, steps, delta); });
}

gs_status gs_generate(const gs_generate_opts* opts, gs_generate_stats* stats) {
  if (!opts || !opts->ckpt || !opts->tokenizer || !opts->train_corpus || !opts->out_cohort)
    return fail_invalid("gs_generate: opts, ckpt, tokenizer, train_corpus, out_cohort required");
  return guarded([&] {
    gs::GptParams<float> params = gs::load_checkpoint(opts->ckpt);
    gs::Tokenizer tok = gs::Tokenizer::load(opts->tokenizer);
    gs::Cohort train_c = gs::load_corpus(opts->train_corpus, "train");

    gs::GenerationSpec spec;
    spec.n_samples = opts->n_samples;
    std::string mode = opt_str(opts->prompt_mode, "random-train");
    if (mode == "random-train")
      spec.source = gs::prompt_source::random_train;
    else if (mode == "first-mutation")
      spec.source = gs::prompt_source::first_mutation;
    else if (mode == "fixed")
      spec.source = gs::prompt_source::fixed;
    else
      gs::raise(gs::errc::invalid_config, "unknown prompt mode: " + mode);
    spec.fixed_prompt = opt_str(opts->fixed_prompt, "");
    spec.max_new_tokens = opts->max_new_tokens;
    spec.temperature = opts->temperature;
    spec.top_k = opts->top_k;
    spec.seed = opts->seed;

    gs::SynthesisResult sr = gs::generate_cohort(params, tok, gs::build_prompts(spec, train_c),
                                                 spec, std::max(1, opts->workers));
    gs::write_corpus(sr.cohort, opts->out_cohort);
    if (opts->out_sidecar) gs::write_cohort_sidecar(sr, opts->out_sidecar);

    if (stats) {
      stats->n_profiles = static_cast<int64_t>(sr.profiles.size());
      stats->valid_chunks = 0;
      stats->invalid_chunks = 0;
      for (const auto& gp : sr.profiles) {
        stats->valid_chunks += static_cast<int64_t>(gp.valid_chunks);
        stats->invalid_chunks += static_cast<int64_t>(gp.invalid_chunks);
      }
    }
  });
}

gs_status gs_utility(const gs_utility_opts* opts, gs_utility_stats* stats) {
  if (!opts || !opts->sidecar || !opts->train_corpus || !opts->bounds || !opts->out_report ||
      !opts->out_csv)
    return fail_invalid("gs_utility: sidecar, train_corpus, bounds and outputs required");
  return guarded([&] {
    gs::ChromosomeBounds bounds = gs::load_bounds(opts->bounds);
    gs::Cohort train_c = gs::load_corpus(opts->train_corpus, "train");
    gs::CohortView synth_view =
        gs::view_from_sidecar(gs::load_cohort_sidecar(opts->sidecar));
    std::string settings =
        "bounds=" + gs::fnv1a64_hex(gs::read_file(opts->bounds)) + ";generated-only";
    gs::UtilityReport synth =
        gs::utility_report(synth_view, bounds, train_c.index.full_texts, settings);
    gs::write_utility_report(synth, opts->out_report, opts->out_csv);

    if (opts->out_benchmark_report && opts->out_benchmark_csv) {
      gs::UtilityReport bench = gs::utility_report(gs::view_from_cohort(train_c), bounds,
                                                   train_c.index.full_texts, settings);
      gs::write_utility_report(bench, opts->out_benchmark_report, opts->out_benchmark_csv);
      if (opts->out_compare_csv)
        gs::write_comparison(gs::compare_reports(synth, bench), opts->out_compare_csv);
    }

    if (stats) {
      stats->validity = synth.validity;
      stats->quality = synth.quality;
      stats->uniqueness = synth.uniqueness;
      stats->repetition = synth.repetition;
      stats->novelty = synth.novelty;
      stats->memorization = synth.memorization;
    }
  });
}

gs_status gs_attack(const gs_attack_opts* opts, gs_attack_stats* stats) {
  if (!opts || !opts->ckpt || !opts->tokenizer || !opts->train_corpus ||
      !opts->holdout_corpus || !opts->out_report)
    return fail_invalid("gs_attack: opts, model inputs, corpora and out_report required");
  return guarded([&] {
    gs::GptParams<float> params = gs::load_checkpoint(opts->ckpt);
    gs::Tokenizer tok = gs::Tokenizer::load(opts->tokenizer);
    gs::Cohort train_c = gs::load_corpus(opts->train_corpus, "train");
    gs::Cohort holdout_c = gs::load_corpus(opts->holdout_corpus, "holdout");

    gs::ExperimentConfig ac;
    std::string mode = opt_str(opts->mode, "both");
    if (mode == "mia") {
      ac.model_only_block = true;
      ac.hybrid_block = false;
    } else if (mode == "bihmia") {
      ac.model_only_block = false;
      ac.hybrid_block = true;
    } else if (mode == "both") {
      ac.model_only_block = true;
      ac.hybrid_block = true;
    } else {
      gs::raise(gs::errc::invalid_config, "attack mode must be mia, bihmia or both");
    }
    ac.n_rounds = opts->rounds;
    ac.cohort_size = opts->cohort_size;
    ac.seed = opts->seed;
    ac.workers = std::max(1, opts->workers);
    if (opts->gen_max_new_tokens > 0) ac.gen_max_new_tokens = opts->gen_max_new_tokens;
    if (opts->gen_temperature > 0) ac.gen_temperature = opts->gen_temperature;
    if (opts->gen_top_k >= 0) ac.gen_top_k = opts->gen_top_k;

    gs::AttackReport report = gs::run_experiment(params, tok, train_c, holdout_c, ac);
    gs::write_attack_report_json(report, opts->out_report);
    if (opts->out_rounds_csv) gs::write_attack_rounds_csv(report, opts->out_rounds_csv);
    if (opts->out_plot_csv) gs::write_attack_plot_csv(report, opts->out_plot_csv);

    if (stats) {
      double nan = std::numeric_limits<double>::quiet_NaN();
      const gs::AttackBlock* mo = gs::find_block(report, gs::feature_mode::model_only);
      const gs::AttackBlock* hy = gs::find_block(report, gs::feature_mode::hybrid);
      stats->mean_auc_model_only = mo ? gs::block_mean_auc(*mo) : nan;
      stats->mean_auc_hybrid = hy ? gs::block_mean_auc(*hy) : nan;
    }
  });
}

gs_status gs_pipeline_run(const gs_pipeline_opts* opts, char** summary_out,
                          char** manifest_path_out) {
  if (!opts || !opts->config) return fail_invalid("gs_pipeline_run: opts and config required");
  return guarded([&] {
    gs::PipelineOptions po;
    po.config_path = opts->config;
    po.out_dir = opt_str(opts->out_dir, "");
    if (opts->force && *opts->force)
      po.force = gs::split(opts->force, ',');
    if (opts->has_seed) po.seed_override = opts->seed;
    if (opts->workers > 0) po.workers_override = opts->workers;

    gs::PipelineResult pr = gs::run_pipeline(po);
    if (summary_out) {
      std::string summary;
      for (const auto& st : pr.stages)
        summary += st.name + "=" + (st.ran ? "ran" : "skipped") + "\n";
      *summary_out = dup_string(summary);
    }
    if (manifest_path_out) *manifest_path_out = dup_string(pr.manifest_path);
  });
}

}  // extern "C"
