#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "core/rng.hpp"
#include "core/tokenizer.hpp"

namespace gs {

// ---- privacy accounting ----------------------------------------------------

// RDP order grid 1.25, 1.50, ..., 64.0
std::vector<double> rdp_order_grid();

// Per-step RDP of the Poisson-subsampled Gaussian mechanism at one order.
// q = 1 uses the exact Gaussian value alpha / (2 sigma^2); q < 1 the standard
// integer/fractional-order upper bound. sigma = 0 yields +inf.
double rdp_subsampled_gaussian(double q, double sigma, double alpha);

// min over orders of [rdp_total(alpha) + ln(1/delta) / (alpha - 1)]
double epsilon_from_rdp(const std::vector<double>& orders, const std::vector<double>& rdp_total,
                        double delta);

// Composed guarantee after `steps` mechanism invocations; +inf when sigma 0.
double account_epsilon(double q, double sigma, int64_t steps, double delta);

struct PrivacyLedger {
  int64_t steps = 0;
  double q = 0.0;
  double sigma = 0.0;
  double delta = 0.0;
  double epsilon = 0.0;  // +inf when not trackable
};

// ---- per-sample gradient machinery ----------------------------------------

// Scales grad in place to min(1, C / ||grad||_2) over the whole flat vector
// and returns the post-clip norm. Raises NonFiniteGradient on NaN/inf input.
double clip_per_sample(std::vector<float>& grad, double clip_norm);

// (sum of grads + N(0, sigma^2 C^2 I)) / L with L = grads.size().
std::vector<float> noisy_aggregate(const std::vector<std::vector<float>>& grads, double sigma,
                                   double clip_norm, Rng& rng);

// One gradient per window (anything the model can score: >= 2 tokens).
std::vector<std::vector<float>> per_sample_gradients(
    const GptParams<float>& params, const std::vector<std::vector<int32_t>>& windows,
    int workers = 1);

// ---- training --------------------------------------------------------------

struct TokenizedCorpus {
  std::vector<std::vector<int32_t>> seqs;  // BOS + tokens + EOS per sample
};

TokenizedCorpus tokenize_corpus(const Tokenizer& tok, const std::vector<std::string>& lines);

enum class train_mode { plain, dp };

struct TrainConfig {
  train_mode mode = train_mode::plain;
  int32_t max_steps = 100;
  int32_t batch_size = 16;  // plain mode
  double lr = 0.1;
  double lr_final = -1.0;  // linear decay target; < 0 keeps lr constant
  double momentum = 0.0;
  uint64_t seed = 0;
  int32_t eval_cadence = 0;       // checkpoint every N steps; 0 disables
  std::string ckpt_pattern;       // "{step}" substituted
  double stop_at_train_loss = 0;  // plain mode early stop on smoothed loss; 0 disables
  int32_t workers = 1;
};

struct DpConfig {
  double clip_norm = 1.0;
  double noise_multiplier = 4.0;
  int32_t lot_size = 16;
  double delta = 1e-5;
  double target_epsilon = 0.0;  // 0 = unlimited budget
};

struct StepStat {
  int32_t step = 0;
  double loss = 0.0;  // NaN for an empty dp lot
  double lr = 0.0;
  int32_t lot = 0;
};

struct TrainResult {
  std::vector<StepStat> history;
  int32_t steps_done = 0;
  double final_loss = 0.0;          // smoothed over trailing window
  double max_postclip_norm = 0.0;   // dp mode
  PrivacyLedger ledger;
  bool ledger_valid = false;
  std::vector<std::vector<size_t>> lots;  // dp mode: member indices per step
};

// Trains params in place. dp must be non-null in dp mode; dropout is applied
// only in plain mode. Poisson sampling rate is lot_size / n_samples.
TrainResult train(GptParams<float>& params, const TokenizedCorpus& corpus,
                  const TrainConfig& tc, const DpConfig* dp);

void write_loss_history_csv(const TrainResult& res, const std::string& path);
void write_ledger_json(const TrainResult& res, const std::string& path);

// shared helper: strided worker map, ranges combined in worker order
void parallel_for(size_t n, int workers,
                  const std::function<void(size_t, size_t, int)>& fn);

}  // namespace gs
