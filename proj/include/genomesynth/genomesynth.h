/* genomesynth: synthetic genomic cohorts from a small causal language model,
 * with differentially private training and membership-inference evaluation.
 *
 * Every entry point returns gs_status; GS_OK is 0. On failure
 * gs_last_error() returns a thread-local human-readable message. Strings
 * returned through char** out-parameters are owned by the caller and must be
 * released with gs_string_free(). Opaque handles are released with their
 * matching *_close() function. All functions are safe to call from multiple
 * threads as long as a handle is not shared across threads concurrently.
 */
#ifndef GENOMESYNTH_H
#define GENOMESYNTH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gs_status {
  GS_OK = 0,
  GS_E_INVALID_CONFIG = 1,
  GS_E_VOCAB_TOO_SMALL = 2,
  GS_E_TOO_FEW_SAMPLES = 3,
  GS_E_EMPTY_CORPUS = 4,
  GS_E_EMPTY_COHORT = 5,
  GS_E_EMPTY_PROMPT = 6,
  GS_E_COHORT_TOO_SMALL = 7,
  GS_E_MISSING_BOUNDS = 8,
  GS_E_SETTINGS_MISMATCH = 9,
  GS_E_BOUNDS_TOO_TIGHT = 10,
  GS_E_CLASS_IMBALANCE = 11,
  GS_E_SINGLE_CLASS_EVAL = 12,
  GS_E_MALFORMED_HEADER = 13,
  GS_E_MALFORMED_RECORD = 14,
  GS_E_MISSING_GENOTYPE = 15,
  GS_E_UNKNOWN_TOKEN_ID = 16,
  GS_E_TOKEN_OUT_OF_RANGE = 17,
  GS_E_SEQUENCE_TOO_LONG = 18,
  GS_E_SEQUENCE_TOO_SHORT = 19,
  GS_E_LENGTH_MISMATCH = 20,
  GS_E_DIMENSION_MISMATCH = 21,
  GS_E_BAD_CHECKPOINT = 22,
  GS_E_BAD_TOKENIZER_FILE = 23,
  GS_E_NON_FINITE_GRADIENT = 24,
  GS_E_NON_FINITE_LOSS = 25,
  GS_E_IO = 26,
  GS_E_INTERNAL = 99
} gs_status;

const char* gs_version(void);
const char* gs_status_name(gs_status s);
const char* gs_last_error(void);
void gs_string_free(char* s);
void gs_ids_free(int32_t* ids);

/* ---- demo dataset --------------------------------------------------------- */

typedef struct gs_demo_opts {
  int32_t n_samples;   /* >= 4 */
  int32_t n_variants;  /* >= 10 */
  uint64_t seed;
  const char* chrom;      /* NULL -> "22" */
  int64_t max_pos;        /* 0 -> 50000000 */
  const char* out_vcf;    /* required */
  const char* out_bounds; /* NULL skips the bounds TSV */
} gs_demo_opts;

gs_status gs_demo_data(const gs_demo_opts* opts);

/* ---- VCF ingestion -------------------------------------------------------- */

typedef struct gs_ingest_opts {
  const char* vcf;          /* plain or .gz */
  const char* out_train;    /* corpus file, one sample per line */
  const char* out_holdout;
  double holdout_fraction;  /* (0,1) */
  uint64_t seed;
  int32_t lenient;               /* skip malformed data lines */
  int32_t include_ref_genotypes; /* keep 0|0 calls in profiles */
} gs_ingest_opts;

typedef struct gs_ingest_stats {
  int64_t n_records;
  int64_t n_skipped;
  int64_t n_samples;
  int64_t n_train;
  int64_t n_holdout;
} gs_ingest_stats;

gs_status gs_ingest(const gs_ingest_opts* opts, gs_ingest_stats* stats);

/* ---- tokenizer ------------------------------------------------------------ */

typedef struct gs_tokenizer gs_tokenizer;

gs_status gs_tokenizer_train(const char* corpus, int32_t vocab_size, const char* out_path,
                             int32_t* vocab_out);
gs_status gs_tokenizer_open(const char* path, gs_tokenizer** out);
void gs_tokenizer_close(gs_tokenizer* tok);
gs_status gs_tokenizer_vocab_size(const gs_tokenizer* tok, int32_t* out);
/* *ids_out is gs_ids_free()-owned; *n_out receives the token count */
gs_status gs_tokenizer_encode(const gs_tokenizer* tok, const char* text, int32_t** ids_out,
                              size_t* n_out);
gs_status gs_tokenizer_decode(const gs_tokenizer* tok, const int32_t* ids, size_t n,
                              char** text_out);

/* ---- model ---------------------------------------------------------------- */

typedef struct gs_model gs_model;

gs_status gs_model_open(const char* ckpt_path, gs_model** out);
void gs_model_close(gs_model* model);
gs_status gs_model_param_count(const gs_model* model, int64_t* out);

/* ---- training ------------------------------------------------------------- */

typedef struct gs_train_opts {
  const char* corpus;
  const char* tokenizer;
  const char* out_ckpt;
  const char* loss_csv;    /* NULL skips */
  const char* ledger_json; /* NULL skips */

  const char* preset;  /* "tiny" or "mingpt12m"; NULL -> "tiny" */
  int32_t max_seq_len; /* 0 keeps the preset value */
  double dropout;

  int32_t dp_mode; /* 0 plain SGD, 1 DP-SGD */
  int32_t steps;
  int32_t batch_size; /* plain mode */
  double lr;
  double lr_final; /* < 0 keeps lr constant */
  double momentum;
  double stop_at_train_loss; /* plain mode early stop; 0 disables */
  uint64_t seed;
  int32_t workers;

  /* DP-SGD */
  double clip_norm;
  double noise_multiplier;
  int32_t lot_size;
  double delta;
  double target_epsilon; /* 0 = unlimited budget */
} gs_train_opts;

typedef struct gs_train_stats {
  int64_t param_count;
  int32_t steps_done;
  double final_loss; /* smoothed; NaN when no step produced a loss */
  double epsilon;    /* DP mode; HUGE_VAL when untrackable, 0 in plain mode */
  double max_postclip_norm;
} gs_train_stats;

gs_status gs_train(const gs_train_opts* opts, gs_train_stats* stats);

/* epsilon of the Poisson-subsampled Gaussian mechanism after `steps` steps */
gs_status gs_dp_epsilon(double q, double sigma, int64_t steps, double delta, double* eps_out);

/* ---- generation ----------------------------------------------------------- */

typedef struct gs_generate_opts {
  const char* ckpt;
  const char* tokenizer;
  const char* train_corpus; /* prompt source */
  const char* out_cohort;
  const char* out_sidecar; /* NULL skips */

  int32_t n_samples;
  const char* prompt_mode;  /* "random-train", "first-mutation", "fixed" */
  const char* fixed_prompt; /* prompt_mode == "fixed" */
  int32_t max_new_tokens;
  double temperature;
  int32_t top_k;
  uint64_t seed;
  int32_t workers;
} gs_generate_opts;

typedef struct gs_generate_stats {
  int64_t n_profiles;
  int64_t valid_chunks;
  int64_t invalid_chunks;
} gs_generate_stats;

gs_status gs_generate(const gs_generate_opts* opts, gs_generate_stats* stats);

/* ---- utility metrics ------------------------------------------------------ */

typedef struct gs_utility_opts {
  const char* sidecar;      /* generation sidecar JSON */
  const char* train_corpus; /* memorization reference and benchmark cohort */
  const char* bounds;       /* chromosome bounds TSV */
  const char* out_report;   /* synthetic report JSON */
  const char* out_csv;
  const char* out_benchmark_report; /* NULL skips the benchmark block */
  const char* out_benchmark_csv;
  const char* out_compare_csv;
} gs_utility_opts;

typedef struct gs_utility_stats {
  double validity;
  double quality;
  double uniqueness;
  double repetition;
  double novelty;
  double memorization;
} gs_utility_stats;

gs_status gs_utility(const gs_utility_opts* opts, gs_utility_stats* stats);

/* ---- membership-inference attack ------------------------------------------ */

typedef struct gs_attack_opts {
  const char* ckpt;
  const char* tokenizer;
  const char* train_corpus;
  const char* holdout_corpus;
  const char* out_report;
  const char* out_rounds_csv; /* NULL skips */
  const char* out_plot_csv;   /* NULL skips */

  const char* mode; /* "mia" (model-only), "bihmia" (hybrid), "both" */
  int32_t rounds;
  int32_t cohort_size;
  uint64_t seed;
  int32_t workers;
  int32_t gen_max_new_tokens; /* hybrid synthesis; 0 -> 160 */
  double gen_temperature;     /* <= 0 -> 1.0 */
  int32_t gen_top_k;          /* < 0 -> 50 */
} gs_attack_opts;

typedef struct gs_attack_stats {
  double mean_auc_model_only; /* NaN when the block was not requested */
  double mean_auc_hybrid;
} gs_attack_stats;

gs_status gs_attack(const gs_attack_opts* opts, gs_attack_stats* stats);

/* ---- pipeline ------------------------------------------------------------- */

typedef struct gs_pipeline_opts {
  const char* config;  /* experiment config file */
  const char* out_dir; /* NULL uses the config's paths.out_dir */
  const char* force;   /* comma-separated stage names or "all"; NULL = none */
  int32_t has_seed;    /* nonzero: seed overrides config and environment */
  uint64_t seed;
  int32_t workers; /* 0 keeps the config value */
} gs_pipeline_opts;

/* summary_out lines are "stage=ran" or "stage=skipped" in execution order */
gs_status gs_pipeline_run(const gs_pipeline_opts* opts, char** summary_out,
                          char** manifest_path_out);

#ifdef __cplusplus
}
#endif

#endif /* GENOMESYNTH_H */
