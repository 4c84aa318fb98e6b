#include "core/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

#include "core/common.hpp"
#include "core/io.hpp"

namespace gs {

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

void ModelConfig::validate() const {
  require(n_layers >= 1 && n_heads >= 1 && d_model >= 1 && d_ff >= 1 && max_seq_len >= 1 &&
              vocab_size >= 1,
          errc::invalid_config, "model dimensions must be positive");
  require(d_model % n_heads == 0, errc::invalid_config, "d_model must divide into n_heads");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, errc::invalid_config,
          "dropout_rate must be in [0,1)");
}

ModelConfig preset_config(const std::string& name) {
  ModelConfig cfg;
  if (name == "tiny") {
    cfg.n_layers = 2;
    cfg.n_heads = 2;
    cfg.d_model = 16;
    cfg.d_ff = 64;
    cfg.max_seq_len = 96;
    cfg.vocab_size = 64;
  } else if (name == "mingpt12m") {
    cfg.n_layers = 6;
    cfg.n_heads = 6;
    cfg.d_model = 384;
    cfg.d_ff = 1536;
    cfg.max_seq_len = 256;
    cfg.vocab_size = 2048;
  } else {
    raise(errc::invalid_config, "unknown model preset '" + name + "'");
  }
  return cfg;
}

std::vector<ParamGroup> param_layout(const ModelConfig& cfg) {
  std::vector<ParamGroup> groups;
  size_t off = 0;
  auto add = [&](const std::string& name, param_kind kind, size_t count) {
    groups.push_back({name, kind, off, count});
    off += count;
  };
  size_t D = static_cast<size_t>(cfg.d_model);
  size_t F = static_cast<size_t>(cfg.d_ff);
  add("wte", param_kind::weight, static_cast<size_t>(cfg.vocab_size) * D);
  add("wpe", param_kind::weight, static_cast<size_t>(cfg.max_seq_len) * D);
  for (int32_t l = 0; l < cfg.n_layers; ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    add(p + "ln1_g", param_kind::ln_gain, D);
    add(p + "ln1_b", param_kind::ln_bias, D);
    add(p + "wq", param_kind::weight, D * D);
    add(p + "bq", param_kind::bias, D);
    add(p + "wk", param_kind::weight, D * D);
    add(p + "bk", param_kind::bias, D);
    add(p + "wv", param_kind::weight, D * D);
    add(p + "bv", param_kind::bias, D);
    add(p + "wo", param_kind::weight, D * D);
    add(p + "bo", param_kind::bias, D);
    add(p + "ln2_g", param_kind::ln_gain, D);
    add(p + "ln2_b", param_kind::ln_bias, D);
    add(p + "wfc", param_kind::weight, D * F);
    add(p + "bfc", param_kind::bias, F);
    add(p + "wproj", param_kind::weight, F * D);
    add(p + "bproj", param_kind::bias, D);
  }
  add("lnf_g", param_kind::ln_gain, D);
  add("lnf_b", param_kind::ln_bias, D);
  return groups;
}

size_t param_count(const ModelConfig& cfg) {
  const auto groups = param_layout(cfg);
  return groups.back().offset + groups.back().count;
}

template <typename T>
void GptParams<T>::init() {
  Rng rng(cfg.seed);
  for (const auto& g : param_layout(cfg)) {
    T* p = data.data() + g.offset;
    switch (g.kind) {
      case param_kind::weight:
        for (size_t i = 0; i < g.count; ++i) p[i] = static_cast<T>(rng.normal() * 0.02);
        break;
      case param_kind::bias:
      case param_kind::ln_bias:
        for (size_t i = 0; i < g.count; ++i) p[i] = T(0);
        break;
      case param_kind::ln_gain:
        for (size_t i = 0; i < g.count; ++i) p[i] = T(1);
        break;
    }
  }
}

namespace {

// offsets resolved once per runner for direct indexing
struct LayerOff {
  size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, wfc, bfc, wproj, bproj;
};

struct Off {
  size_t wte, wpe, lnf_g, lnf_b;
  std::vector<LayerOff> layers;
};

Off compute_off(const ModelConfig& cfg) {
  Off off;
  off.layers.resize(static_cast<size_t>(cfg.n_layers));
  size_t i = 0;
  auto groups = param_layout(cfg);
  off.wte = groups[i++].offset;
  off.wpe = groups[i++].offset;
  for (int32_t l = 0; l < cfg.n_layers; ++l) {
    LayerOff& lo = off.layers[static_cast<size_t>(l)];
    lo.ln1_g = groups[i++].offset;
    lo.ln1_b = groups[i++].offset;
    lo.wq = groups[i++].offset;
    lo.bq = groups[i++].offset;
    lo.wk = groups[i++].offset;
    lo.bk = groups[i++].offset;
    lo.wv = groups[i++].offset;
    lo.bv = groups[i++].offset;
    lo.wo = groups[i++].offset;
    lo.bo = groups[i++].offset;
    lo.ln2_g = groups[i++].offset;
    lo.ln2_b = groups[i++].offset;
    lo.wfc = groups[i++].offset;
    lo.bfc = groups[i++].offset;
    lo.wproj = groups[i++].offset;
    lo.bproj = groups[i++].offset;
  }
  off.lnf_g = groups[i++].offset;
  off.lnf_b = groups[i++].offset;
  return off;
}

// y = x W + b, x:[Tn,I] W:[I,J]
template <typename T>
void matmul_fw(const T* x, const T* w, const T* b, T* y, int32_t Tn, int32_t I, int32_t J) {
  for (int32_t t = 0; t < Tn; ++t) {
    T* yr = y + static_cast<size_t>(t) * J;
    for (int32_t j = 0; j < J; ++j) yr[j] = b ? b[j] : T(0);
    const T* xr = x + static_cast<size_t>(t) * I;
    for (int32_t i = 0; i < I; ++i) {
      T xv = xr[i];
      if (xv == T(0)) continue;
      const T* wr = w + static_cast<size_t>(i) * J;
      for (int32_t j = 0; j < J; ++j) yr[j] += xv * wr[j];
    }
  }
}

// accumulates dx, dw, db
template <typename T>
void matmul_bw(const T* x, const T* w, const T* dy, T* dx, T* dw, T* db, int32_t Tn, int32_t I,
               int32_t J) {
  for (int32_t t = 0; t < Tn; ++t) {
    const T* dyr = dy + static_cast<size_t>(t) * J;
    const T* xr = x + static_cast<size_t>(t) * I;
    if (dx) {
      T* dxr = dx + static_cast<size_t>(t) * I;
      for (int32_t i = 0; i < I; ++i) {
        const T* wr = w + static_cast<size_t>(i) * J;
        T acc = T(0);
        for (int32_t j = 0; j < J; ++j) acc += dyr[j] * wr[j];
        dxr[i] += acc;
      }
    }
    for (int32_t i = 0; i < I; ++i) {
      T xv = xr[i];
      if (xv == T(0)) continue;
      T* dwr = dw + static_cast<size_t>(i) * J;
      for (int32_t j = 0; j < J; ++j) dwr[j] += xv * dyr[j];
    }
    if (db)
      for (int32_t j = 0; j < J; ++j) db[j] += dyr[j];
  }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

template <typename T>
T gelu(T x) {
  T u = static_cast<T>(kGeluC) * (x + static_cast<T>(kGeluA) * x * x * x);
  return T(0.5) * x * (T(1) + std::tanh(u));
}

template <typename T>
T gelu_grad(T x) {
  T u = static_cast<T>(kGeluC) * (x + static_cast<T>(kGeluA) * x * x * x);
  T th = std::tanh(u);
  T du = static_cast<T>(kGeluC) * (T(1) + T(3) * static_cast<T>(kGeluA) * x * x);
  return T(0.5) * (T(1) + th) + T(0.5) * x * (T(1) - th * th) * du;
}

constexpr double kLnEps = 1e-5;

}  // namespace

template <typename T>
GptRunner<T>::GptRunner(const GptParams<T>& params) : params_(&params) {
  const ModelConfig& cfg = params.cfg;
  size_t L = static_cast<size_t>(cfg.n_layers);
  xs_.resize(L + 1);
  ln1_out_.resize(L);
  ln2_out_.resize(L);
  ln1_mean_.resize(L);
  ln1_rstd_.resize(L);
  ln2_mean_.resize(L);
  ln2_rstd_.resize(L);
  q_.resize(L);
  k_.resize(L);
  v_.resize(L);
  att_.resize(L);
  atty_.resize(L);
  res1_.resize(L);
  fc_out_.resize(L);
  gelu_out_.resize(L);
  drop_att_.resize(L);
  drop_res_att_.resize(L);
  drop_res_mlp_.resize(L);
}

template <typename T>
void GptRunner<T>::layernorm(const T* x, const T* g, const T* b, int32_t n, T* out, T* mean,
                             T* rstd) {
  const int32_t D = params_->cfg.d_model;
  for (int32_t t = 0; t < n; ++t) {
    const T* xr = x + static_cast<size_t>(t) * D;
    T m = T(0);
    for (int32_t i = 0; i < D; ++i) m += xr[i];
    m /= static_cast<T>(D);
    T var = T(0);
    for (int32_t i = 0; i < D; ++i) {
      T d = xr[i] - m;
      var += d * d;
    }
    var /= static_cast<T>(D);
    T rs = T(1) / std::sqrt(var + static_cast<T>(kLnEps));
    mean[t] = m;
    rstd[t] = rs;
    T* outr = out + static_cast<size_t>(t) * D;
    for (int32_t i = 0; i < D; ++i) outr[i] = (xr[i] - m) * rs * g[i] + b[i];
  }
}

template <typename T>
const std::vector<T>& GptRunner<T>::forward(const std::vector<int32_t>& ids, bool training,
                                            Rng* drop_rng) {
  const ModelConfig& cfg = params_->cfg;
  const int32_t Tn = static_cast<int32_t>(ids.size());
  require(Tn >= 1, errc::empty_prompt, "forward needs at least one token");
  require(Tn <= cfg.max_seq_len, errc::sequence_too_long,
          "sequence length " + std::to_string(Tn) + " exceeds max_seq_len " +
              std::to_string(cfg.max_seq_len));
  for (int32_t id : ids)
    require(id >= 0 && id < cfg.vocab_size, errc::token_out_of_range,
            "token id " + std::to_string(id) + " outside vocab of " +
                std::to_string(cfg.vocab_size));

  const int32_t D = cfg.d_model, H = cfg.n_heads, F = cfg.d_ff, V = cfg.vocab_size;
  const int32_t hd = D / H;
  const size_t L = static_cast<size_t>(cfg.n_layers);
  const Off off = compute_off(cfg);
  const T* P = params_->data.data();
  t_ = Tn;

  dropped_ = training && cfg.dropout_rate > 0.0 && drop_rng != nullptr;
  const T keep_scale = dropped_ ? static_cast<T>(1.0 / (1.0 - cfg.dropout_rate)) : T(1);
  auto fill_mask = [&](std::vector<uint8_t>& mask, size_t n) {
    mask.resize(n);
    for (size_t i = 0; i < n; ++i)
      mask[i] = drop_rng->uniform() >= cfg.dropout_rate ? 1 : 0;
  };

  for (auto& x : xs_) x.assign(static_cast<size_t>(Tn) * D, T(0));
  lnf_out_.assign(static_cast<size_t>(Tn) * D, T(0));
  lnf_mean_.assign(static_cast<size_t>(Tn), T(0));
  lnf_rstd_.assign(static_cast<size_t>(Tn), T(0));
  logits_.assign(static_cast<size_t>(Tn) * V, T(0));

  // embeddings
  for (int32_t t = 0; t < Tn; ++t) {
    const T* te = P + off.wte + static_cast<size_t>(ids[t]) * D;
    const T* pe = P + off.wpe + static_cast<size_t>(t) * D;
    T* xr = xs_[0].data() + static_cast<size_t>(t) * D;
    for (int32_t i = 0; i < D; ++i) xr[i] = te[i] + pe[i];
  }
  if (dropped_) {
    fill_mask(drop_emb_, static_cast<size_t>(Tn) * D);
    for (size_t i = 0; i < xs_[0].size(); ++i)
      xs_[0][i] = drop_emb_[i] ? xs_[0][i] * keep_scale : T(0);
  }

  const T scale = T(1) / std::sqrt(static_cast<T>(hd));
  std::vector<T> tmp(static_cast<size_t>(Tn));

  for (size_t l = 0; l < L; ++l) {
    const LayerOff& lo = off.layers[l];
    const T* x = xs_[l].data();

    ln1_out_[l].assign(static_cast<size_t>(Tn) * D, T(0));
    ln1_mean_[l].assign(static_cast<size_t>(Tn), T(0));
    ln1_rstd_[l].assign(static_cast<size_t>(Tn), T(0));
    layernorm(x, P + lo.ln1_g, P + lo.ln1_b, Tn, ln1_out_[l].data(), ln1_mean_[l].data(),
              ln1_rstd_[l].data());

    q_[l].assign(static_cast<size_t>(Tn) * D, T(0));
    k_[l].assign(static_cast<size_t>(Tn) * D, T(0));
    v_[l].assign(static_cast<size_t>(Tn) * D, T(0));
    matmul_fw(ln1_out_[l].data(), P + lo.wq, P + lo.bq, q_[l].data(), Tn, D, D);
    matmul_fw(ln1_out_[l].data(), P + lo.wk, P + lo.bk, k_[l].data(), Tn, D, D);
    matmul_fw(ln1_out_[l].data(), P + lo.wv, P + lo.bv, v_[l].data(), Tn, D, D);

    att_[l].assign(static_cast<size_t>(H) * Tn * Tn, T(0));
    atty_[l].assign(static_cast<size_t>(Tn) * D, T(0));
    if (dropped_) fill_mask(drop_att_[l], static_cast<size_t>(H) * Tn * Tn);

    for (int32_t h = 0; h < H; ++h) {
      const int32_t hc = h * hd;
      T* att = att_[l].data() + static_cast<size_t>(h) * Tn * Tn;
      for (int32_t t = 0; t < Tn; ++t) {
        const T* qr = q_[l].data() + static_cast<size_t>(t) * D + hc;
        T maxv = std::numeric_limits<T>::lowest();
        for (int32_t t2 = 0; t2 <= t; ++t2) {
          const T* kr = k_[l].data() + static_cast<size_t>(t2) * D + hc;
          T s = T(0);
          for (int32_t c = 0; c < hd; ++c) s += qr[c] * kr[c];
          s *= scale;
          tmp[static_cast<size_t>(t2)] = s;
          if (s > maxv) maxv = s;
        }
        T sum = T(0);
        for (int32_t t2 = 0; t2 <= t; ++t2) {
          T e = std::exp(tmp[static_cast<size_t>(t2)] - maxv);
          tmp[static_cast<size_t>(t2)] = e;
          sum += e;
        }
        T inv = T(1) / sum;
        T* attr = att + static_cast<size_t>(t) * Tn;
        for (int32_t t2 = 0; t2 <= t; ++t2) attr[t2] = tmp[static_cast<size_t>(t2)] * inv;

        const uint8_t* mrow = dropped_
                                  ? drop_att_[l].data() + (static_cast<size_t>(h) * Tn + t) * Tn
                                  : nullptr;
        T* yr = atty_[l].data() + static_cast<size_t>(t) * D + hc;
        for (int32_t c = 0; c < hd; ++c) {
          T acc = T(0);
          for (int32_t t2 = 0; t2 <= t; ++t2) {
            T a = attr[t2];
            if (mrow) a = mrow[t2] ? a * keep_scale : T(0);
            acc += a * v_[l][static_cast<size_t>(t2) * D + hc + c];
          }
          yr[c] = acc;
        }
      }
    }

    res1_[l].assign(static_cast<size_t>(Tn) * D, T(0));
    matmul_fw(atty_[l].data(), P + lo.wo, P + lo.bo, res1_[l].data(), Tn, D, D);
    if (dropped_) {
      fill_mask(drop_res_att_[l], static_cast<size_t>(Tn) * D);
      for (size_t i = 0; i < res1_[l].size(); ++i)
        res1_[l][i] = drop_res_att_[l][i] ? res1_[l][i] * keep_scale : T(0);
    }
    for (size_t i = 0; i < res1_[l].size(); ++i) res1_[l][i] += xs_[l][i];

    ln2_out_[l].assign(static_cast<size_t>(Tn) * D, T(0));
    ln2_mean_[l].assign(static_cast<size_t>(Tn), T(0));
    ln2_rstd_[l].assign(static_cast<size_t>(Tn), T(0));
    layernorm(res1_[l].data(), P + lo.ln2_g, P + lo.ln2_b, Tn, ln2_out_[l].data(),
              ln2_mean_[l].data(), ln2_rstd_[l].data());

    fc_out_[l].assign(static_cast<size_t>(Tn) * F, T(0));
    matmul_fw(ln2_out_[l].data(), P + lo.wfc, P + lo.bfc, fc_out_[l].data(), Tn, D, F);
    gelu_out_[l].resize(static_cast<size_t>(Tn) * F);
    for (size_t i = 0; i < gelu_out_[l].size(); ++i) gelu_out_[l][i] = gelu(fc_out_[l][i]);

    std::vector<T>& xn = xs_[l + 1];
    matmul_fw(gelu_out_[l].data(), P + lo.wproj, P + lo.bproj, xn.data(), Tn, F, D);
    if (dropped_) {
      fill_mask(drop_res_mlp_[l], static_cast<size_t>(Tn) * D);
      for (size_t i = 0; i < xn.size(); ++i)
        xn[i] = drop_res_mlp_[l][i] ? xn[i] * keep_scale : T(0);
    }
    for (size_t i = 0; i < xn.size(); ++i) xn[i] += res1_[l][i];
  }

  layernorm(xs_[L].data(), P + off.lnf_g, P + off.lnf_b, Tn, lnf_out_.data(), lnf_mean_.data(),
            lnf_rstd_.data());

  // tied output head: logits = lnf_out @ wte^T
  for (int32_t t = 0; t < Tn; ++t) {
    const T* xr = lnf_out_.data() + static_cast<size_t>(t) * D;
    T* lr = logits_.data() + static_cast<size_t>(t) * V;
    for (int32_t vtok = 0; vtok < V; ++vtok) {
      const T* wr = P + off.wte + static_cast<size_t>(vtok) * D;
      T acc = T(0);
      for (int32_t i = 0; i < D; ++i) acc += xr[i] * wr[i];
      lr[vtok] = acc;
    }
  }
  return logits_;
}

template <typename T>
double GptRunner<T>::loss(const std::vector<int32_t>& targets) const {
  const ModelConfig& cfg = params_->cfg;
  const int32_t Tn = t_;
  require(Tn >= 2, errc::sequence_too_short, "loss needs at least 2 positions");
  require(static_cast<int32_t>(targets.size()) == Tn - 1, errc::length_mismatch,
          "expected " + std::to_string(Tn - 1) + " targets, got " +
              std::to_string(targets.size()));
  const int32_t V = cfg.vocab_size;
  for (int32_t id : targets)
    require(id >= 0 && id < V, errc::token_out_of_range, "target id outside vocab");

  double total = 0.0;
  for (int32_t t = 0; t < Tn - 1; ++t) {
    const T* lr = logits_.data() + static_cast<size_t>(t) * V;
    T maxv = lr[0];
    for (int32_t j = 1; j < V; ++j) maxv = std::max(maxv, lr[j]);
    double sum = 0.0;
    for (int32_t j = 0; j < V; ++j) sum += std::exp(static_cast<double>(lr[j] - maxv));
    total += std::log(sum) + static_cast<double>(maxv) -
             static_cast<double>(lr[targets[static_cast<size_t>(t)]]);
  }
  return total / static_cast<double>(Tn - 1);
}

template <typename T>
double GptRunner<T>::loss_backward(const std::vector<int32_t>& ids,
                                   const std::vector<int32_t>& targets, std::vector<T>& grad,
                                   bool training, Rng* drop_rng) {
  const ModelConfig& cfg = params_->cfg;
  require(grad.size() == param_count(cfg), errc::dimension_mismatch,
          "gradient buffer size mismatch");
  forward(ids, training, drop_rng);
  double loss_val = loss(targets);

  const int32_t Tn = t_, D = cfg.d_model, H = cfg.n_heads, F = cfg.d_ff, V = cfg.vocab_size;
  const int32_t hd = D / H;
  const size_t L = static_cast<size_t>(cfg.n_layers);
  const Off off = compute_off(cfg);
  const T* P = params_->data.data();
  T* G = grad.data();
  const T keep_scale = dropped_ ? static_cast<T>(1.0 / (1.0 - cfg.dropout_rate)) : T(1);

  // dlogits: (softmax - onehot) / (Tn-1) on scored rows
  std::vector<T> dlogits(static_cast<size_t>(Tn) * V, T(0));
  const T inv_n = T(1) / static_cast<T>(Tn - 1);
  for (int32_t t = 0; t < Tn - 1; ++t) {
    const T* lr = logits_.data() + static_cast<size_t>(t) * V;
    T* dr = dlogits.data() + static_cast<size_t>(t) * V;
    T maxv = lr[0];
    for (int32_t j = 1; j < V; ++j) maxv = std::max(maxv, lr[j]);
    T sum = T(0);
    for (int32_t j = 0; j < V; ++j) {
      dr[j] = std::exp(lr[j] - maxv);
      sum += dr[j];
    }
    T inv = T(1) / sum;
    for (int32_t j = 0; j < V; ++j) dr[j] *= inv * inv_n;
    dr[targets[static_cast<size_t>(t)]] -= inv_n;
  }

  // tied head
  std::vector<T> dlnf(static_cast<size_t>(Tn) * D, T(0));
  for (int32_t t = 0; t < Tn - 1; ++t) {
    const T* dr = dlogits.data() + static_cast<size_t>(t) * V;
    const T* xr = lnf_out_.data() + static_cast<size_t>(t) * D;
    T* dxr = dlnf.data() + static_cast<size_t>(t) * D;
    for (int32_t vtok = 0; vtok < V; ++vtok) {
      T dl = dr[vtok];
      if (dl == T(0)) continue;
      const T* wr = P + off.wte + static_cast<size_t>(vtok) * D;
      T* gw = G + off.wte + static_cast<size_t>(vtok) * D;
      for (int32_t i = 0; i < D; ++i) {
        dxr[i] += dl * wr[i];
        gw[i] += dl * xr[i];
      }
    }
  }

  auto layernorm_bw = [&](const T* x, const T* mean, const T* rstd, const T* g, const T* dy,
                          T* dx, T* dg, T* db) {
    for (int32_t t = 0; t < Tn; ++t) {
      const T* xr = x + static_cast<size_t>(t) * D;
      const T* dyr = dy + static_cast<size_t>(t) * D;
      T* dxr = dx + static_cast<size_t>(t) * D;
      T m = mean[t], rs = rstd[t];
      T m1 = T(0), m2 = T(0);
      for (int32_t i = 0; i < D; ++i) {
        T n = (xr[i] - m) * rs;
        T dn = dyr[i] * g[i];
        m1 += dn;
        m2 += dn * n;
      }
      m1 /= static_cast<T>(D);
      m2 /= static_cast<T>(D);
      for (int32_t i = 0; i < D; ++i) {
        T n = (xr[i] - m) * rs;
        T dn = dyr[i] * g[i];
        dxr[i] += rs * (dn - m1 - n * m2);
        dg[i] += dyr[i] * n;
        db[i] += dyr[i];
      }
    }
  };

  // final layernorm
  std::vector<T> dx(static_cast<size_t>(Tn) * D, T(0));
  layernorm_bw(xs_[L].data(), lnf_mean_.data(), lnf_rstd_.data(), P + off.lnf_g, dlnf.data(),
               dx.data(), G + off.lnf_g, G + off.lnf_b);

  const T scale = T(1) / std::sqrt(static_cast<T>(hd));
  std::vector<T> dres1(static_cast<size_t>(Tn) * D);
  std::vector<T> dproj(static_cast<size_t>(Tn) * D);
  std::vector<T> dgelu(static_cast<size_t>(Tn) * F);
  std::vector<T> dfc(static_cast<size_t>(Tn) * F);
  std::vector<T> dln2(static_cast<size_t>(Tn) * D);
  std::vector<T> dln1(static_cast<size_t>(Tn) * D);
  std::vector<T> datty(static_cast<size_t>(Tn) * D);
  std::vector<T> dq(static_cast<size_t>(Tn) * D);
  std::vector<T> dk(static_cast<size_t>(Tn) * D);
  std::vector<T> dv(static_cast<size_t>(Tn) * D);
  std::vector<T> datt(static_cast<size_t>(Tn));
  std::vector<T> dsc(static_cast<size_t>(Tn));

  for (size_t l = L; l-- > 0;) {
    const LayerOff& lo = off.layers[l];

    // mlp branch: xs[l+1] = res1 + drop(proj(gelu(fc(ln2(res1)))))
    std::fill(dproj.begin(), dproj.end(), T(0));
    if (dropped_) {
      for (size_t i = 0; i < dproj.size(); ++i)
        dproj[i] = drop_res_mlp_[l][i] ? dx[i] * keep_scale : T(0);
    } else {
      std::copy(dx.begin(), dx.end(), dproj.begin());
    }
    std::fill(dgelu.begin(), dgelu.end(), T(0));
    matmul_bw(gelu_out_[l].data(), P + lo.wproj, dproj.data(), dgelu.data(), G + lo.wproj,
              G + lo.bproj, Tn, F, D);
    for (size_t i = 0; i < dfc.size(); ++i) dfc[i] = dgelu[i] * gelu_grad(fc_out_[l][i]);
    std::fill(dln2.begin(), dln2.end(), T(0));
    matmul_bw(ln2_out_[l].data(), P + lo.wfc, dfc.data(), dln2.data(), G + lo.wfc, G + lo.bfc,
              Tn, D, F);

    // into res1: residual passthrough + ln2 path
    std::copy(dx.begin(), dx.end(), dres1.begin());
    layernorm_bw(res1_[l].data(), ln2_mean_[l].data(), ln2_rstd_[l].data(), P + lo.ln2_g,
                 dln2.data(), dres1.data(), G + lo.ln2_g, G + lo.ln2_b);

    // attention branch: res1 = xs[l] + drop(atty Wo + bo)
    std::fill(dproj.begin(), dproj.end(), T(0));  // reuse as d(attn proj out)
    if (dropped_) {
      for (size_t i = 0; i < dproj.size(); ++i)
        dproj[i] = drop_res_att_[l][i] ? dres1[i] * keep_scale : T(0);
    } else {
      std::copy(dres1.begin(), dres1.end(), dproj.begin());
    }
    std::fill(datty.begin(), datty.end(), T(0));
    matmul_bw(atty_[l].data(), P + lo.wo, dproj.data(), datty.data(), G + lo.wo, G + lo.bo, Tn,
              D, D);

    std::fill(dq.begin(), dq.end(), T(0));
    std::fill(dk.begin(), dk.end(), T(0));
    std::fill(dv.begin(), dv.end(), T(0));
    for (int32_t h = 0; h < H; ++h) {
      const int32_t hc = h * hd;
      const T* att = att_[l].data() + static_cast<size_t>(h) * Tn * Tn;
      for (int32_t t = 0; t < Tn; ++t) {
        const T* attr = att + static_cast<size_t>(t) * Tn;
        const T* dyr = datty.data() + static_cast<size_t>(t) * D + hc;
        const uint8_t* mrow = dropped_
                                  ? drop_att_[l].data() + (static_cast<size_t>(h) * Tn + t) * Tn
                                  : nullptr;
        for (int32_t t2 = 0; t2 <= t; ++t2) {
          const T* vr = v_[l].data() + static_cast<size_t>(t2) * D + hc;
          T a = attr[t2];
          T a_eff = mrow ? (mrow[t2] ? a * keep_scale : T(0)) : a;
          T acc = T(0);
          T* dvr = dv.data() + static_cast<size_t>(t2) * D + hc;
          for (int32_t c = 0; c < hd; ++c) {
            acc += dyr[c] * vr[c];
            dvr[c] += a_eff * dyr[c];
          }
          datt[static_cast<size_t>(t2)] = mrow ? (mrow[t2] ? acc * keep_scale : T(0)) : acc;
        }
        // softmax backward over row t
        T dot = T(0);
        for (int32_t t2 = 0; t2 <= t; ++t2)
          dot += attr[t2] * datt[static_cast<size_t>(t2)];
        for (int32_t t2 = 0; t2 <= t; ++t2)
          dsc[static_cast<size_t>(t2)] = attr[t2] * (datt[static_cast<size_t>(t2)] - dot);
        const T* qr = q_[l].data() + static_cast<size_t>(t) * D + hc;
        T* dqr = dq.data() + static_cast<size_t>(t) * D + hc;
        for (int32_t t2 = 0; t2 <= t; ++t2) {
          const T* kr = k_[l].data() + static_cast<size_t>(t2) * D + hc;
          T* dkr = dk.data() + static_cast<size_t>(t2) * D + hc;
          T ds = dsc[static_cast<size_t>(t2)] * scale;
          for (int32_t c = 0; c < hd; ++c) {
            dqr[c] += ds * kr[c];
            dkr[c] += ds * qr[c];
          }
        }
      }
    }

    std::fill(dln1.begin(), dln1.end(), T(0));
    matmul_bw(ln1_out_[l].data(), P + lo.wq, dq.data(), dln1.data(), G + lo.wq, G + lo.bq, Tn, D,
              D);
    matmul_bw(ln1_out_[l].data(), P + lo.wk, dk.data(), dln1.data(), G + lo.wk, G + lo.bk, Tn, D,
              D);
    matmul_bw(ln1_out_[l].data(), P + lo.wv, dv.data(), dln1.data(), G + lo.wv, G + lo.bv, Tn, D,
              D);

    // into xs[l]: residual passthrough + ln1 path
    std::copy(dres1.begin(), dres1.end(), dx.begin());
    layernorm_bw(xs_[l].data(), ln1_mean_[l].data(), ln1_rstd_[l].data(), P + lo.ln1_g,
                 dln1.data(), dx.data(), G + lo.ln1_g, G + lo.ln1_b);
  }

  // embeddings
  if (dropped_) {
    for (size_t i = 0; i < dx.size(); ++i) dx[i] = drop_emb_[i] ? dx[i] * keep_scale : T(0);
  }
  for (int32_t t = 0; t < Tn; ++t) {
    const T* dxr = dx.data() + static_cast<size_t>(t) * D;
    T* gte = G + off.wte + static_cast<size_t>(ids[static_cast<size_t>(t)]) * D;
    T* gpe = G + off.wpe + static_cast<size_t>(t) * D;
    for (int32_t i = 0; i < D; ++i) {
      gte[i] += dxr[i];
      gpe[i] += dxr[i];
    }
  }
  return loss_val;
}

std::vector<int32_t> generate(const GptParams<float>& params, const std::vector<int32_t>& prompt,
                              const GenerateOptions& opt, Rng& rng) {
  const ModelConfig& cfg = params.cfg;
  require(!prompt.empty(), errc::empty_prompt, "generation prompt is empty");
  require(opt.temperature >= 0.0, errc::invalid_config, "temperature must be >= 0");
  require(opt.top_k >= 0, errc::invalid_config, "top_k must be >= 0");
  for (int32_t id : prompt)
    require(id >= 0 && id < cfg.vocab_size, errc::token_out_of_range,
            "prompt token outside vocab");

  GptRunner<float> runner(params);
  std::vector<int32_t> out = prompt;
  const int32_t V = cfg.vocab_size;
  std::vector<double> probs(static_cast<size_t>(V));
  std::vector<int32_t> order(static_cast<size_t>(V));

  for (int32_t step = 0; step < opt.max_new_tokens; ++step) {
    size_t start = out.size() > static_cast<size_t>(cfg.max_seq_len)
                       ? out.size() - static_cast<size_t>(cfg.max_seq_len)
                       : 0;
    std::vector<int32_t> ctx(out.begin() + static_cast<long>(start), out.end());
    const std::vector<float>& logits = runner.forward(ctx, false, nullptr);
    const float* row = logits.data() + (ctx.size() - 1) * static_cast<size_t>(V);

    int32_t picked;
    if (opt.temperature == 0.0) {
      picked = 0;
      for (int32_t j = 1; j < V; ++j)
        if (row[j] > row[picked]) picked = j;  // ties keep the lowest id
    } else {
      int32_t cand = V;
      for (int32_t j = 0; j < V; ++j) order[static_cast<size_t>(j)] = j;
      if (opt.top_k > 0 && opt.top_k < V) {
        cand = opt.top_k;
        std::partial_sort(order.begin(), order.begin() + cand, order.end(),
                          [&](int32_t a, int32_t b) {
                            if (row[a] != row[b]) return row[a] > row[b];
                            return a < b;
                          });
      }
      double maxv = -std::numeric_limits<double>::infinity();
      for (int32_t j = 0; j < cand; ++j)
        maxv = std::max(maxv, static_cast<double>(row[order[static_cast<size_t>(j)]]));
      double sum = 0.0;
      for (int32_t j = 0; j < cand; ++j) {
        double p =
            std::exp((static_cast<double>(row[order[static_cast<size_t>(j)]]) - maxv) /
                     opt.temperature);
        probs[static_cast<size_t>(j)] = p;
        sum += p;
      }
      double r = rng.uniform() * sum;
      double acc = 0.0;
      picked = order[static_cast<size_t>(cand - 1)];
      for (int32_t j = 0; j < cand; ++j) {
        acc += probs[static_cast<size_t>(j)];
        if (r < acc) {
          picked = order[static_cast<size_t>(j)];
          break;
        }
      }
    }

    if (std::find(opt.stop_ids.begin(), opt.stop_ids.end(), picked) != opt.stop_ids.end())
      break;
    out.push_back(picked);
  }
  return out;
}

void save_checkpoint(const GptParams<float>& params, const std::string& path) {
  const ModelConfig& cfg = params.cfg;
  std::ostringstream ss;
  ss << "genomesynth.checkpoint.v1\n";
  ss << "n_layers=" << cfg.n_layers << "\n";
  ss << "n_heads=" << cfg.n_heads << "\n";
  ss << "d_model=" << cfg.d_model << "\n";
  ss << "d_ff=" << cfg.d_ff << "\n";
  ss << "max_seq_len=" << cfg.max_seq_len << "\n";
  ss << "vocab_size=" << cfg.vocab_size << "\n";
  ss << "dropout_rate=" << cfg.dropout_rate << "\n";
  ss << "seed=" << cfg.seed << "\n";
  ss << "params=" << params.data.size() << "\n";
  ss << "binary\n";
  std::string out = ss.str();
  size_t head = out.size();
  out.resize(head + params.data.size() * sizeof(float));
  std::memcpy(out.data() + head, params.data.data(), params.data.size() * sizeof(float));
  write_file(path, out);
}

GptParams<float> load_checkpoint(const std::string& path) {
  std::string blob = read_file(path);
  size_t pos = 0;
  auto next_line = [&]() -> std::string {
    size_t nl = blob.find('\n', pos);
    if (nl == std::string::npos) raise(errc::bad_checkpoint, path + ": truncated header");
    std::string line = blob.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  if (next_line() != "genomesynth.checkpoint.v1")
    raise(errc::bad_checkpoint, path + ": bad or missing version line");

  ModelConfig cfg;
  size_t n_params = 0;
  while (true) {
    std::string line = next_line();
    if (line == "binary") break;
    size_t eq = line.find('=');
    if (eq == std::string::npos) raise(errc::bad_checkpoint, path + ": bad header line " + line);
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    try {
      if (key == "n_layers")
        cfg.n_layers = std::stoi(val);
      else if (key == "n_heads")
        cfg.n_heads = std::stoi(val);
      else if (key == "d_model")
        cfg.d_model = std::stoi(val);
      else if (key == "d_ff")
        cfg.d_ff = std::stoi(val);
      else if (key == "max_seq_len")
        cfg.max_seq_len = std::stoi(val);
      else if (key == "vocab_size")
        cfg.vocab_size = std::stoi(val);
      else if (key == "dropout_rate")
        cfg.dropout_rate = std::stod(val);
      else if (key == "seed")
        cfg.seed = std::stoull(val);
      else if (key == "params")
        n_params = std::stoull(val);
      else
        raise(errc::bad_checkpoint, path + ": unknown header key " + key);
    } catch (const std::invalid_argument&) {
      raise(errc::bad_checkpoint, path + ": bad value for " + key);
    } catch (const std::out_of_range&) {
      raise(errc::bad_checkpoint, path + ": bad value for " + key);
    }
  }
  GptParams<float> params(cfg);
  if (n_params != param_count(cfg))
    raise(errc::bad_checkpoint, path + ": parameter count does not match config");
  if (blob.size() - pos != n_params * sizeof(float))
    raise(errc::bad_checkpoint, path + ": parameter payload truncated");
  std::memcpy(params.data.data(), blob.data() + pos, n_params * sizeof(float));
  for (float f : params.data)
    if (!std::isfinite(f)) raise(errc::bad_checkpoint, path + ": non-finite parameter");
  return params;
}

template struct GptParams<float>;
template struct GptParams<double>;
template class GptRunner<float>;
template class GptRunner<double>;

}  // namespace gs
