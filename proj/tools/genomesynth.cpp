#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "genomesynth/genomesynth.h"

namespace {

const char* opt_cstr(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

// 0 ok, 2 config error, 1 anything else; gs_last_error already names the code
int finish(gs_status st) {
  if (st == GS_OK) return 0;
  std::fprintf(stderr, "error: %s\n", gs_last_error());
  return st == GS_E_INVALID_CONFIG ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic genomic cohorts from a small causal language model"};
  app.set_version_flag("--version", gs_version());
  app.require_subcommand(1);

  uint64_t seed = 0;
  int32_t workers = 1;
  auto* seed_opt = app.add_option("--seed", seed, "global random seed");
  auto* workers_opt = app.add_option("--workers", workers, "worker thread count");

  // demo-data
  auto* demo = app.add_subcommand("demo-data", "write a deterministic demo VCF");
  demo->fallthrough();
  gs_demo_opts dopt{};
  std::string d_vcf, d_bounds, d_chrom = "22";
  dopt.n_samples = 60;
  dopt.n_variants = 300;
  dopt.max_pos = 50000000;
  demo->add_option("--out-vcf", d_vcf, "output VCF path")->required();
  demo->add_option("--out-bounds", d_bounds, "output chromosome-bounds TSV");
  demo->add_option("--samples", dopt.n_samples, "sample count");
  demo->add_option("--variants", dopt.n_variants, "variant count");
  demo->add_option("--chrom", d_chrom, "chromosome name");
  demo->add_option("--max-pos", dopt.max_pos, "position upper bound");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "VCF to mutation-string corpora");
  ingest->fallthrough();
  gs_ingest_opts iopt{};
  std::string i_vcf, i_train, i_holdout;
  double i_fraction = 0.2;
  bool i_lenient = false, i_ref = false;
  ingest->add_option("--vcf", i_vcf, "input VCF (.vcf or .vcf.gz)")->required();
  ingest->add_option("--out-train", i_train, "training corpus path")->required();
  ingest->add_option("--out-holdout", i_holdout, "holdout corpus path")->required();
  ingest->add_option("--holdout-fraction", i_fraction, "holdout fraction in (0,1)");
  ingest->add_flag("--lenient", i_lenient, "skip malformed data lines");
  ingest->add_flag("--include-ref-gt", i_ref, "keep homozygous-reference calls");

  // tokenize
  auto* tokenize = app.add_subcommand("tokenize", "train the byte-level BPE tokenizer");
  tokenize->fallthrough();
  std::string t_corpus, t_out;
  int32_t t_vocab = 512;
  tokenize->add_option("--corpus", t_corpus, "training corpus path")->required();
  tokenize->add_option("--vocab-size", t_vocab, "target vocabulary size");
  tokenize->add_option("--out", t_out, "tokenizer output path")->required();

  // train
  auto* train = app.add_subcommand("train", "train the language model");
  train->fallthrough();
  gs_train_opts topt{};
  std::string tr_corpus, tr_tok, tr_out, tr_loss, tr_ledger, tr_preset = "tiny";
  bool tr_dp = false;
  topt.steps = 200;
  topt.batch_size = 16;
  topt.lr = 0.3;
  topt.lr_final = -1.0;
  topt.momentum = 0.9;
  topt.clip_norm = 1.0;
  topt.noise_multiplier = 4.0;
  topt.lot_size = 16;
  topt.delta = 1e-5;
  train->add_option("--corpus", tr_corpus, "training corpus path")->required();
  train->add_option("--tokenizer", tr_tok, "tokenizer path")->required();
  train->add_option("--out", tr_out, "checkpoint output path")->required();
  train->add_option("--loss-csv", tr_loss, "loss-history CSV path");
  train->add_option("--ledger", tr_ledger, "privacy-ledger JSON path");
  train->add_option("--preset", tr_preset, "model preset: tiny or mingpt12m");
  train->add_option("--max-seq-len", topt.max_seq_len, "context length override");
  train->add_option("--dropout", topt.dropout, "dropout rate (plain mode)");
  train->add_flag("--dp", tr_dp, "train with DP-SGD");
  train->add_option("--steps", topt.steps, "optimizer steps");
  train->add_option("--batch-size", topt.batch_size, "batch size (plain mode)");
  train->add_option("--lr", topt.lr, "learning rate");
  train->add_option("--lr-final", topt.lr_final, "linear-decay target, <0 constant");
  train->add_option("--momentum", topt.momentum, "momentum coefficient");
  train->add_option("--stop-at-train-loss", topt.stop_at_train_loss,
                    "plain-mode early stop on smoothed loss");
  train->add_option("--clip-norm", topt.clip_norm, "per-sample clip norm C");
  train->add_option("--noise-multiplier", topt.noise_multiplier, "Gaussian noise sigma/C");
  train->add_option("--lot-size", topt.lot_size, "expected Poisson lot size");
  train->add_option("--delta", topt.delta, "privacy delta");
  train->add_option("--epsilon", topt.target_epsilon, "privacy budget, 0 unlimited");

  // generate
  auto* generate = app.add_subcommand("generate", "sample a synthetic cohort");
  generate->fallthrough();
  gs_generate_opts gopt{};
  std::string g_ckpt, g_tok, g_train, g_out, g_sidecar, g_mode = "random-train", g_prompt;
  gopt.n_samples = 50;
  gopt.max_new_tokens = 160;
  gopt.temperature = 1.0;
  gopt.top_k = 50;
  generate->add_option("--ckpt", g_ckpt, "model checkpoint")->required();
  generate->add_option("--tokenizer", g_tok, "tokenizer path")->required();
  generate->add_option("--train-corpus", g_train, "prompt source corpus")->required();
  generate->add_option("--out", g_out, "cohort output path")->required();
  generate->add_option("--sidecar", g_sidecar, "sidecar JSON path");
  generate->add_option("--n", gopt.n_samples, "profiles to generate");
  generate->add_option("--prompt-mode", g_mode, "random-train, first-mutation or fixed");
  generate->add_option("--prompt", g_prompt, "fixed prompt mutation");
  generate->add_option("--max-new-tokens", gopt.max_new_tokens, "per-profile token budget");
  generate->add_option("--temperature", gopt.temperature, "softmax temperature, 0 greedy");
  generate->add_option("--top-k", gopt.top_k, "top-k cutoff, 0 disables");

  // utility
  auto* utility = app.add_subcommand("utility", "cohort utility metrics");
  utility->fallthrough();
  std::string u_sidecar, u_train, u_bounds, u_report, u_csv, u_brep, u_bcsv, u_cmp;
  utility->add_option("--sidecar", u_sidecar, "generation sidecar JSON")->required();
  utility->add_option("--train-corpus", u_train, "training corpus path")->required();
  utility->add_option("--bounds", u_bounds, "chromosome-bounds TSV")->required();
  utility->add_option("--out-report", u_report, "report JSON path")->required();
  utility->add_option("--out-csv", u_csv, "metric CSV path")->required();
  utility->add_option("--benchmark-report", u_brep, "benchmark report JSON path");
  utility->add_option("--benchmark-csv", u_bcsv, "benchmark metric CSV path");
  utility->add_option("--compare-csv", u_cmp, "synthetic-vs-benchmark CSV path");

  // attack
  auto* attack = app.add_subcommand("attack", "membership-inference experiment");
  attack->fallthrough();
  gs_attack_opts aopt{};
  std::string a_ckpt, a_tok, a_train, a_holdout, a_report, a_rounds, a_plot, a_mode = "both";
  aopt.rounds = 5;
  aopt.cohort_size = 20;
  aopt.gen_temperature = -1.0;
  aopt.gen_top_k = -1;
  attack->add_option("--ckpt", a_ckpt, "model checkpoint")->required();
  attack->add_option("--tokenizer", a_tok, "tokenizer path")->required();
  attack->add_option("--train-corpus", a_train, "member pool corpus")->required();
  attack->add_option("--holdout-corpus", a_holdout, "non-member pool corpus")->required();
  attack->add_option("--out", a_report, "report JSON path")->required();
  attack->add_option("--rounds-csv", a_rounds, "per-round CSV path");
  attack->add_option("--plot-csv", a_plot, "aggregate plot CSV path");
  attack->add_option("--mode", a_mode, "mia, bihmia or both");
  attack->add_option("--rounds", aopt.rounds, "randomized rounds");
  attack->add_option("--cohort-size", aopt.cohort_size, "targets per class per round");
  attack->add_option("--gen-max-new-tokens", aopt.gen_max_new_tokens,
                     "hybrid synthesis token budget");
  attack->add_option("--gen-temperature", aopt.gen_temperature, "hybrid synthesis temperature");
  attack->add_option("--gen-top-k", aopt.gen_top_k, "hybrid synthesis top-k");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "run configured stages end to end");
  pipeline->fallthrough();
  std::string p_config, p_out_dir;
  std::vector<std::string> p_force;
  pipeline->add_option("--config", p_config, "experiment config file")->required();
  pipeline->add_option("--out-dir", p_out_dir, "artifact directory override");
  pipeline->add_option("--force", p_force, "stage names to re-run, or all")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (demo->parsed()) {
    dopt.seed = seed;
    dopt.chrom = d_chrom.c_str();
    dopt.out_vcf = d_vcf.c_str();
    dopt.out_bounds = opt_cstr(d_bounds);
    int rc = finish(gs_demo_data(&dopt));
    if (rc == 0) {
      std::printf("wrote %s\n", d_vcf.c_str());
      if (!d_bounds.empty()) std::printf("wrote %s\n", d_bounds.c_str());
    }
    return rc;
  }

  if (ingest->parsed()) {
    iopt.vcf = i_vcf.c_str();
    iopt.out_train = i_train.c_str();
    iopt.out_holdout = i_holdout.c_str();
    iopt.holdout_fraction = i_fraction;
    iopt.seed = seed;
    iopt.lenient = i_lenient ? 1 : 0;
    iopt.include_ref_genotypes = i_ref ? 1 : 0;
    gs_ingest_stats st{};
    int rc = finish(gs_ingest(&iopt, &st));
    if (rc == 0)
      std::printf("records: %" PRId64 "\nskipped: %" PRId64 "\nsamples: %" PRId64
                  "\ntrain: %" PRId64 "\nholdout: %" PRId64 "\n",
                  st.n_records, st.n_skipped, st.n_samples, st.n_train, st.n_holdout);
    return rc;
  }

  if (tokenize->parsed()) {
    int32_t vocab = 0;
    int rc = finish(gs_tokenizer_train(t_corpus.c_str(), t_vocab, t_out.c_str(), &vocab));
    if (rc == 0) std::printf("vocab: %d\n", vocab);
    return rc;
  }

  if (train->parsed()) {
    topt.corpus = tr_corpus.c_str();
    topt.tokenizer = tr_tok.c_str();
    topt.out_ckpt = tr_out.c_str();
    topt.loss_csv = opt_cstr(tr_loss);
    topt.ledger_json = opt_cstr(tr_ledger);
    topt.preset = tr_preset.c_str();
    topt.dp_mode = tr_dp ? 1 : 0;
    topt.seed = seed;
    topt.workers = workers;
    gs_train_stats st{};
    int rc = finish(gs_train(&topt, &st));
    if (rc == 0) {
      std::printf("parameters: %" PRId64 "\nsteps: %d\nfinal_loss: %.6f\n", st.param_count,
                  st.steps_done, st.final_loss);
      if (tr_dp)
        std::printf("epsilon: %.6f\nmax_postclip_norm: %.6f\n", st.epsilon,
                    st.max_postclip_norm);
    }
    return rc;
  }

  if (generate->parsed()) {
    gopt.ckpt = g_ckpt.c_str();
    gopt.tokenizer = g_tok.c_str();
    gopt.train_corpus = g_train.c_str();
    gopt.out_cohort = g_out.c_str();
    gopt.out_sidecar = opt_cstr(g_sidecar);
    gopt.prompt_mode = g_mode.c_str();
    gopt.fixed_prompt = opt_cstr(g_prompt);
    gopt.seed = seed;
    gopt.workers = workers;
    gs_generate_stats st{};
    int rc = finish(gs_generate(&gopt, &st));
    if (rc == 0)
      std::printf("profiles: %" PRId64 "\nvalid_chunks: %" PRId64 "\ninvalid_chunks: %" PRId64
                  "\n",
                  st.n_profiles, st.valid_chunks, st.invalid_chunks);
    return rc;
  }

  if (utility->parsed()) {
    gs_utility_opts uopt{};
    uopt.sidecar = u_sidecar.c_str();
    uopt.train_corpus = u_train.c_str();
    uopt.bounds = u_bounds.c_str();
    uopt.out_report = u_report.c_str();
    uopt.out_csv = u_csv.c_str();
    uopt.out_benchmark_report = opt_cstr(u_brep);
    uopt.out_benchmark_csv = opt_cstr(u_bcsv);
    uopt.out_compare_csv = opt_cstr(u_cmp);
    gs_utility_stats st{};
    int rc = finish(gs_utility(&uopt, &st));
    if (rc == 0)
      std::printf("validity: %.6f\nquality: %.6f\nuniqueness: %.6f\nrepetition: %.6f\n"
                  "novelty: %.6f\nmemorization: %.6f\n",
                  st.validity, st.quality, st.uniqueness, st.repetition, st.novelty,
                  st.memorization);
    return rc;
  }

  if (attack->parsed()) {
    aopt.ckpt = a_ckpt.c_str();
    aopt.tokenizer = a_tok.c_str();
    aopt.train_corpus = a_train.c_str();
    aopt.holdout_corpus = a_holdout.c_str();
    aopt.out_report = a_report.c_str();
    aopt.out_rounds_csv = opt_cstr(a_rounds);
    aopt.out_plot_csv = opt_cstr(a_plot);
    aopt.mode = a_mode.c_str();
    aopt.seed = seed;
    aopt.workers = workers;
    gs_attack_stats st{};
    int rc = finish(gs_attack(&aopt, &st));
    if (rc == 0) {
      if (!std::isnan(st.mean_auc_model_only))
        std::printf("model_only mean_auc: %.6f\n", st.mean_auc_model_only);
      if (!std::isnan(st.mean_auc_hybrid))
        std::printf("hybrid mean_auc: %.6f\n", st.mean_auc_hybrid);
    }
    return rc;
  }

  if (pipeline->parsed()) {
    std::string force_joined;
    for (const auto& f : p_force) {
      if (!force_joined.empty()) force_joined += ',';
      force_joined += f;
    }
    gs_pipeline_opts popt{};
    popt.config = p_config.c_str();
    popt.out_dir = opt_cstr(p_out_dir);
    popt.force = opt_cstr(force_joined);
    popt.has_seed = seed_opt->count() > 0 ? 1 : 0;
    popt.seed = seed;
    popt.workers = workers_opt->count() > 0 ? workers : 0;
    char* summary = nullptr;
    char* manifest = nullptr;
    int rc = finish(gs_pipeline_run(&popt, &summary, &manifest));
    if (rc == 0) {
      std::fputs(summary, stdout);
      std::printf("manifest: %s\n", manifest);
    }
    gs_string_free(summary);
    gs_string_free(manifest);
    return rc;
  }

  return 2;
}
