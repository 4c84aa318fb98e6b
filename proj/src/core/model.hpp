#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/rng.hpp"

namespace gs {

struct ModelConfig {
  int32_t n_layers = 2;
  int32_t n_heads = 2;
  int32_t d_model = 16;
  int32_t d_ff = 64;
  int32_t max_seq_len = 64;
  int32_t vocab_size = 64;
  double dropout_rate = 0.0;
  uint64_t seed = 0;

  void validate() const;
};

// "tiny" (2 layers, d=16) and "mingpt12m" (~12M parameters). The caller
// usually overrides vocab_size with the tokenizer's.
ModelConfig preset_config(const std::string& name);

enum class param_kind { weight, bias, ln_gain, ln_bias };

struct ParamGroup {
  std::string name;
  param_kind kind;
  size_t offset = 0;
  size_t count = 0;
};

// Flat parameter layout, in checkpoint order:
//   wte [V,D], wpe [S,D],
//   per layer: ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo,
//              ln2_g, ln2_b, wfc, bfc, wproj, bproj,
//   lnf_g, lnf_b.
// Matrices are row-major [in, out]; the output head is tied to wte.
std::vector<ParamGroup> param_layout(const ModelConfig& cfg);
size_t param_count(const ModelConfig& cfg);

template <typename T>
struct GptParams {
  ModelConfig cfg;
  std::vector<T> data;

  explicit GptParams(const ModelConfig& c) : cfg(c), data(param_count(c), T(0)) {
    cfg.validate();
  }
  // weights ~ N(0, 0.02^2) from cfg.seed; biases 0; layer-norm gain 1, bias 0
  void init();
};

// Forward/backward engine bound to one parameter set; owns activation caches
// so independent runners can score samples concurrently.
template <typename T>
class GptRunner {
 public:
  explicit GptRunner(const GptParams<T>& params);

  // Fills caches, returns logits [T x V] row-major. Raises TokenOutOfRange /
  // SequenceTooLong / EmptyPrompt on bad input. Dropout only applies when
  // training is true, cfg.dropout_rate > 0 and drop_rng is given.
  const std::vector<T>& forward(const std::vector<int32_t>& ids, bool training = false,
                                Rng* drop_rng = nullptr);

  // Mean next-token cross entropy (nats) against the cached forward. Targets
  // are the inputs shifted left by one: exactly T-1 of them.
  double loss(const std::vector<int32_t>& targets) const;

  // forward + loss + gradient accumulation (+=) into grad.
  double loss_backward(const std::vector<int32_t>& ids, const std::vector<int32_t>& targets,
                       std::vector<T>& grad, bool training = false, Rng* drop_rng = nullptr);

  const GptParams<T>& params() const { return *params_; }
  const std::vector<T>& logits() const { return logits_; }
  int32_t cached_len() const { return t_; }

 private:
  void layernorm(const T* x, const T* g, const T* b, int32_t n, T* out, T* mean, T* rstd);

  const GptParams<T>* params_;
  int32_t t_ = 0;  // cached sequence length

  // caches, indexed [layer][t * dim + i]
  std::vector<std::vector<T>> xs_;        // layer inputs, n_layers+1 entries
  std::vector<std::vector<T>> ln1_out_, ln2_out_;
  std::vector<std::vector<T>> ln1_mean_, ln1_rstd_, ln2_mean_, ln2_rstd_;
  std::vector<std::vector<T>> q_, k_, v_, att_, atty_, res1_;
  std::vector<std::vector<T>> fc_out_, gelu_out_;
  std::vector<std::vector<uint8_t>> drop_att_, drop_res_att_, drop_res_mlp_;
  std::vector<uint8_t> drop_emb_;
  std::vector<T> lnf_out_, lnf_mean_, lnf_rstd_;
  std::vector<T> logits_;
  bool dropped_ = false;
};

struct GenerateOptions {
  int32_t max_new_tokens = 0;
  double temperature = 1.0;   // 0 = greedy argmax, ties to the lowest id
  int32_t top_k = 0;          // 0 = disabled
  std::vector<int32_t> stop_ids;
};

// Autoregressive sampling with a sliding context window of max_seq_len.
// Returns prompt + new tokens; a sampled stop id ends generation and is not
// appended.
std::vector<int32_t> generate(const GptParams<float>& params,
                              const std::vector<int32_t>& prompt, const GenerateOptions& opt,
                              Rng& rng);

void save_checkpoint(const GptParams<float>& params, const std::string& path);
GptParams<float> load_checkpoint(const std::string& path);

extern template struct GptParams<float>;
extern template struct GptParams<double>;
extern template class GptRunner<float>;
extern template class GptRunner<double>;

}  // namespace gs
