#include "core/dp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <sstream>
#include <thread>

#include "core/common.hpp"
#include "core/io.hpp"

namespace gs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

double log_sub(double a, double b) {
  if (b == -kInf) return a;
  require(a >= b, errc::invalid_config, "rdp accumulator went negative");
  if (a == b) return -kInf;
  return a + std::log1p(-std::exp(b - a));
}

double log_erfc(double x) {
  if (x <= 15.0) return std::log(std::erfc(x));
  // asymptotic: erfc(x) = exp(-x^2)/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4) - 15/(8x^6))
  double x2 = x * x;
  double s = 1.0 - 1.0 / (2.0 * x2) + 3.0 / (4.0 * x2 * x2) - 15.0 / (8.0 * x2 * x2 * x2);
  return -x2 - std::log(x * std::sqrt(M_PI)) + std::log(s);
}

// integer order: log sum_{i=0..a} C(a,i) q^i (1-q)^(a-i) exp((i^2-i)/(2 s^2))
double log_a_int(double q, double sigma, int64_t alpha) {
  double log_a = -kInf;
  double log_coef = 0.0;  // log C(alpha, i), updated incrementally
  for (int64_t i = 0; i <= alpha; ++i) {
    if (i > 0) log_coef += std::log(static_cast<double>(alpha - i + 1)) -
                           std::log(static_cast<double>(i));
    double term = log_coef + static_cast<double>(i) * std::log(q) +
                  static_cast<double>(alpha - i) * std::log1p(-q) +
                  static_cast<double>(i * i - i) / (2.0 * sigma * sigma);
    log_a = log_add(log_a, term);
  }
  return log_a;
}

// fractional order, two-sided series over the generalized binomial expansion
double log_a_frac(double q, double sigma, double alpha) {
  double log_a0 = -kInf, log_a1 = -kInf;
  double z0 = sigma * sigma * std::log(1.0 / q - 1.0) + 0.5;
  double log_coef = 0.0;
  int sign = 1;
  for (int i = 0; i <= 4000; ++i) {
    if (i > 0) {
      double f = (alpha - static_cast<double>(i) + 1.0) / static_cast<double>(i);
      log_coef += std::log(std::fabs(f));
      if (f < 0) sign = -sign;
    }
    double j = alpha - static_cast<double>(i);
    double di = static_cast<double>(i);
    double log_t0 = log_coef + di * std::log(q) + j * std::log1p(-q);
    double log_t1 = log_coef + j * std::log(q) + di * std::log1p(-q);
    double log_e0 = std::log(0.5) + log_erfc((di - z0) / (std::sqrt(2.0) * sigma));
    double log_e1 = std::log(0.5) + log_erfc((z0 - j) / (std::sqrt(2.0) * sigma));
    double log_s0 = log_t0 + (di * di - di) / (2.0 * sigma * sigma) + log_e0;
    double log_s1 = log_t1 + (j * j - j) / (2.0 * sigma * sigma) + log_e1;
    if (sign > 0) {
      log_a0 = log_add(log_a0, log_s0);
      log_a1 = log_add(log_a1, log_s1);
    } else {
      log_a0 = log_sub(log_a0, log_s0);
      log_a1 = log_sub(log_a1, log_s1);
    }
    // stop only once past the binomial hump so mid-series terms are never lost
    if (di > alpha && std::max(log_s0, log_s1) < -30.0) break;
  }
  return log_add(log_a0, log_a1);
}

}  // namespace

std::vector<double> rdp_order_grid() {
  std::vector<double> orders;
  for (int i = 5; i <= 256; ++i) orders.push_back(static_cast<double>(i) * 0.25);
  return orders;
}

double rdp_subsampled_gaussian(double q, double sigma, double alpha) {
  require(q >= 0.0 && q <= 1.0, errc::invalid_config, "sampling rate must be in [0,1]");
  require(alpha > 1.0, errc::invalid_config, "rdp order must exceed 1");
  if (q == 0.0) return 0.0;
  if (sigma == 0.0) return kInf;
  if (q == 1.0) return alpha / (2.0 * sigma * sigma);
  double rounded = std::nearbyint(alpha);
  bool integral = std::fabs(alpha - rounded) < 1e-12;
  double log_a = integral ? log_a_int(q, sigma, static_cast<int64_t>(rounded))
                          : log_a_frac(q, sigma, alpha);
  return log_a / (alpha - 1.0);
}

double epsilon_from_rdp(const std::vector<double>& orders, const std::vector<double>& rdp_total,
                        double delta) {
  require(orders.size() == rdp_total.size() && !orders.empty(), errc::dimension_mismatch,
          "orders and rdp values must align");
  require(delta > 0.0 && delta < 1.0, errc::invalid_config, "delta must be in (0,1)");
  double best = kInf;
  for (size_t i = 0; i < orders.size(); ++i) {
    if (!std::isfinite(rdp_total[i])) continue;
    double eps = rdp_total[i] + std::log(1.0 / delta) / (orders[i] - 1.0);
    best = std::min(best, eps);
  }
  return best;
}

double account_epsilon(double q, double sigma, int64_t steps, double delta) {
  require(steps >= 0, errc::invalid_config, "steps must be non-negative");
  if (steps == 0) return 0.0;
  if (sigma == 0.0) return kInf;
  auto orders = rdp_order_grid();
  std::vector<double> total(orders.size());
  for (size_t i = 0; i < orders.size(); ++i)
    total[i] = static_cast<double>(steps) * rdp_subsampled_gaussian(q, sigma, orders[i]);
  return epsilon_from_rdp(orders, total, delta);
}

// ---- gradient machinery ----------------------------------------------------

double clip_per_sample(std::vector<float>& grad, double clip_norm) {
  require(clip_norm > 0.0, errc::invalid_config, "clip norm must be positive");
  double sq = 0.0;
  for (float g : grad) {
    if (!std::isfinite(g)) raise(errc::non_finite_gradient, "non-finite per-sample gradient");
    sq += static_cast<double>(g) * static_cast<double>(g);
  }
  double norm = std::sqrt(sq);
  if (norm <= clip_norm) return norm;
  // shave a ppm so float rounding cannot push the stored norm past C
  double scale = clip_norm / norm * (1.0 - 1e-6);
  for (float& g : grad) g = static_cast<float>(g * scale);
  return norm * scale;
}

std::vector<float> noisy_aggregate(const std::vector<std::vector<float>>& grads, double sigma,
                                   double clip_norm, Rng& rng) {
  require(!grads.empty(), errc::invalid_config, "aggregate needs at least one gradient");
  size_t dim = grads[0].size();
  for (const auto& g : grads)
    require(g.size() == dim, errc::dimension_mismatch, "gradient sizes differ");
  std::vector<double> sum(dim, 0.0);
  for (const auto& g : grads)
    for (size_t j = 0; j < dim; ++j) sum[j] += g[j];
  double inv_l = 1.0 / static_cast<double>(grads.size());
  std::vector<float> out(dim);
  for (size_t j = 0; j < dim; ++j) {
    double noisy = sum[j] + (sigma > 0.0 ? sigma * clip_norm * rng.normal() : 0.0);
    out[j] = static_cast<float>(noisy * inv_l);
  }
  return out;
}

void parallel_for(size_t n, int workers, const std::function<void(size_t, size_t, int)>& fn) {
  if (workers <= 1 || n <= 1) {
    fn(0, n, 0);
    return;
  }
  size_t w = std::min<size_t>(static_cast<size_t>(workers), n);
  std::vector<std::thread> threads;
  size_t chunk = (n + w - 1) / w;
  for (size_t i = 0; i < w; ++i) {
    size_t begin = i * chunk, end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&fn, begin, end, i] { fn(begin, end, static_cast<int>(i)); });
  }
  for (auto& t : threads) t.join();
}

std::vector<std::vector<float>> per_sample_gradients(
    const GptParams<float>& params, const std::vector<std::vector<int32_t>>& windows,
    int workers) {
  size_t n = windows.size();
  size_t dim = param_count(params.cfg);
  std::vector<std::vector<float>> grads(n);
  parallel_for(n, workers, [&](size_t begin, size_t end, int) {
    GptRunner<float> runner(params);
    for (size_t i = begin; i < end; ++i) {
      const auto& w = windows[i];
      require(w.size() >= 2, errc::sequence_too_short, "window needs at least 2 tokens");
      std::vector<int32_t> targets(w.begin() + 1, w.end());
      grads[i].assign(dim, 0.0f);
      runner.loss_backward(w, targets, grads[i]);
    }
  });
  return grads;
}

// ---- training --------------------------------------------------------------

TokenizedCorpus tokenize_corpus(const Tokenizer& tok, const std::vector<std::string>& lines) {
  TokenizedCorpus out;
  for (const auto& line : lines) {
    if (line.empty()) continue;
    std::vector<int32_t> seq;
    seq.push_back(Tokenizer::kBos);
    auto ids = tok.encode(line);
    seq.insert(seq.end(), ids.begin(), ids.end());
    seq.push_back(Tokenizer::kEos);
    out.seqs.push_back(std::move(seq));
  }
  return out;
}

namespace {

// window of at most max_len tokens; random start when the sequence is longer
std::vector<int32_t> pick_window(const std::vector<int32_t>& seq, int32_t max_len, Rng& rng) {
  if (seq.size() <= static_cast<size_t>(max_len)) return seq;
  size_t span = seq.size() - static_cast<size_t>(max_len);
  size_t start = static_cast<size_t>(rng.below(span + 1));
  return {seq.begin() + static_cast<long>(start),
          seq.begin() + static_cast<long>(start) + max_len};
}

double step_lr(const TrainConfig& tc, int32_t step) {
  if (tc.lr_final < 0.0 || tc.max_steps <= 1) return tc.lr;
  double f = static_cast<double>(step) / static_cast<double>(tc.max_steps - 1);
  return tc.lr + (tc.lr_final - tc.lr) * f;
}

void maybe_checkpoint(const GptParams<float>& params, const TrainConfig& tc, int32_t step) {
  if (tc.eval_cadence <= 0 || tc.ckpt_pattern.empty()) return;
  if ((step + 1) % tc.eval_cadence != 0) return;
  std::string path = tc.ckpt_pattern;
  size_t pos = path.find("{step}");
  if (pos != std::string::npos) path.replace(pos, 6, std::to_string(step + 1));
  save_checkpoint(params, path);
}

struct GradAccumulator {
  // per-worker partial sums merged in worker order for fixed-seed,
  // fixed-worker-count reproducibility
  std::vector<std::vector<double>> partial;
  explicit GradAccumulator(size_t dim, int workers)
      : partial(static_cast<size_t>(std::max(1, workers)), std::vector<double>(dim, 0.0)) {}
  std::vector<double> merged() const {
    std::vector<double> out(partial[0].size(), 0.0);
    for (const auto& p : partial)
      for (size_t j = 0; j < out.size(); ++j) out[j] += p[j];
    return out;
  }
};

}  // namespace

TrainResult train(GptParams<float>& params, const TokenizedCorpus& corpus,
                  const TrainConfig& tc, const DpConfig* dp) {
  require(tc.mode == train_mode::plain || dp != nullptr, errc::invalid_config,
          "dp mode requires a dp config");
  require(tc.max_steps >= 0, errc::invalid_config, "max_steps must be non-negative");
  require(tc.lr > 0.0, errc::invalid_config, "learning rate must be positive");
  require(tc.momentum >= 0.0 && tc.momentum < 1.0, errc::invalid_config,
          "momentum must be in [0,1)");

  std::vector<const std::vector<int32_t>*> usable;
  for (const auto& s : corpus.seqs)
    if (s.size() >= 2) usable.push_back(&s);
  require(!usable.empty(), errc::empty_corpus, "no trainable sequences in corpus");
  const size_t n = usable.size();
  const size_t dim = param_count(params.cfg);
  const int32_t max_len = params.cfg.max_seq_len;
  const bool is_dp = tc.mode == train_mode::dp;

  double q = 0.0;
  std::vector<double> orders, rdp_step;
  if (is_dp) {
    require(dp->lot_size >= 1, errc::invalid_config, "lot_size must be >= 1");
    require(static_cast<size_t>(dp->lot_size) <= n, errc::invalid_config,
            "lot_size exceeds corpus size");
    require(dp->delta > 0.0 && dp->delta < 1.0, errc::invalid_config, "delta must be in (0,1)");
    require(dp->noise_multiplier >= 0.0, errc::invalid_config, "sigma must be >= 0");
    q = static_cast<double>(dp->lot_size) / static_cast<double>(n);
    if (dp->noise_multiplier > 0.0) {
      orders = rdp_order_grid();
      rdp_step.resize(orders.size());
      for (size_t i = 0; i < orders.size(); ++i)
        rdp_step[i] = rdp_subsampled_gaussian(q, dp->noise_multiplier, orders[i]);
    }
  }
  auto epsilon_at = [&](int64_t steps) {
    if (steps == 0) return 0.0;
    if (dp->noise_multiplier == 0.0) return kInf;
    std::vector<double> total(orders.size());
    for (size_t i = 0; i < orders.size(); ++i)
      total[i] = static_cast<double>(steps) * rdp_step[i];
    return epsilon_from_rdp(orders, total, dp->delta);
  };

  Rng data_rng(mix_seed(tc.seed, "data"));
  Rng noise_rng(mix_seed(tc.seed, "noise"));
  Rng drop_rng(mix_seed(tc.seed, "dropout"));

  TrainResult res;
  std::vector<float> velocity;
  std::deque<double> recent;
  std::vector<size_t> order_idx(n);
  for (size_t i = 0; i < n; ++i) order_idx[i] = i;
  size_t epoch_pos = n;  // forces a shuffle on first plain batch

  for (int32_t step = 0; step < tc.max_steps; ++step) {
    if (is_dp && dp->target_epsilon > 0.0) {
      if (epsilon_at(step + 1) > dp->target_epsilon) break;
    }

    // assemble the step's samples
    std::vector<size_t> chosen;
    if (is_dp) {
      for (size_t i = 0; i < n; ++i)
        if (data_rng.uniform() < q) chosen.push_back(i);
    } else {
      for (int32_t b = 0; b < tc.batch_size; ++b) {
        if (epoch_pos >= n) {
          data_rng.shuffle(order_idx);
          epoch_pos = 0;
        }
        chosen.push_back(order_idx[epoch_pos++]);
      }
    }

    std::vector<std::vector<int32_t>> windows;
    windows.reserve(chosen.size());
    for (size_t i : chosen) windows.push_back(pick_window(*usable[i], max_len, data_rng));

    double lr = step_lr(tc, step);
    double step_loss = std::numeric_limits<double>::quiet_NaN();

    if (!windows.empty()) {
      int workers = std::max(1, tc.workers);
      GradAccumulator acc(dim, workers);
      std::vector<double> losses(windows.size(), 0.0);
      std::vector<double> worker_max(static_cast<size_t>(workers), 0.0);

      if (!is_dp && params.cfg.dropout_rate > 0.0) {
        // dropout masks come from one stream; keep the batch serial so the
        // draw order stays well defined
        GptRunner<float> runner(params);
        std::vector<float> g(dim, 0.0f);
        auto& local = acc.partial[0];
        for (size_t i = 0; i < windows.size(); ++i) {
          std::fill(g.begin(), g.end(), 0.0f);
          std::vector<int32_t> targets(windows[i].begin() + 1, windows[i].end());
          losses[i] = runner.loss_backward(windows[i], targets, g, true, &drop_rng);
          for (size_t j = 0; j < dim; ++j) local[j] += g[j];
        }
      } else {
        parallel_for(windows.size(), workers, [&](size_t begin, size_t end, int w) {
          GptRunner<float> runner(params);
          std::vector<float> g(dim, 0.0f);
          auto& local = acc.partial[static_cast<size_t>(w)];
          for (size_t i = begin; i < end; ++i) {
            std::fill(g.begin(), g.end(), 0.0f);
            std::vector<int32_t> targets(windows[i].begin() + 1, windows[i].end());
            losses[i] = runner.loss_backward(windows[i], targets, g);
            if (is_dp) {
              double post = clip_per_sample(g, dp->clip_norm);
              require(post <= dp->clip_norm + 1e-9, errc::non_finite_gradient,
                      "post-clip norm exceeded the bound");
              worker_max[static_cast<size_t>(w)] =
                  std::max(worker_max[static_cast<size_t>(w)], post);
            }
            for (size_t j = 0; j < dim; ++j) local[j] += g[j];
          }
        });
      }
      for (double m : worker_max) res.max_postclip_norm = std::max(res.max_postclip_norm, m);

      double mean_loss = 0.0;
      for (double l : losses) mean_loss += l;
      mean_loss /= static_cast<double>(losses.size());
      if (!std::isfinite(mean_loss))
        raise(errc::non_finite_loss,
              "training loss became non-finite at step " + std::to_string(step));
      step_loss = mean_loss;

      std::vector<double> summed = acc.merged();
      double denom = is_dp ? static_cast<double>(dp->lot_size)
                           : static_cast<double>(windows.size());
      std::vector<float> update(dim);
      for (size_t j = 0; j < dim; ++j) {
        double u = summed[j];
        if (is_dp && dp->noise_multiplier > 0.0)
          u += dp->noise_multiplier * dp->clip_norm * noise_rng.normal();
        update[j] = static_cast<float>(u / denom);
      }

      if (tc.momentum > 0.0) {
        if (velocity.empty()) velocity.assign(dim, 0.0f);
        for (size_t j = 0; j < dim; ++j) {
          velocity[j] = static_cast<float>(tc.momentum) * velocity[j] + update[j];
          params.data[j] -= static_cast<float>(lr) * velocity[j];
        }
      } else {
        for (size_t j = 0; j < dim; ++j)
          params.data[j] -= static_cast<float>(lr * update[j]);
      }
    } else if (is_dp && dp->noise_multiplier > 0.0) {
      // empty Poisson lot: the mechanism still releases noise
      std::vector<float> update(dim);
      for (size_t j = 0; j < dim; ++j)
        update[j] = static_cast<float>(dp->noise_multiplier * dp->clip_norm *
                                       noise_rng.normal() /
                                       static_cast<double>(dp->lot_size));
      if (tc.momentum > 0.0) {
        if (velocity.empty()) velocity.assign(dim, 0.0f);
        for (size_t j = 0; j < dim; ++j) {
          velocity[j] = static_cast<float>(tc.momentum) * velocity[j] + update[j];
          params.data[j] -= static_cast<float>(lr) * velocity[j];
        }
      } else {
        for (size_t j = 0; j < dim; ++j)
          params.data[j] -= static_cast<float>(lr) * update[j];
      }
    }

    res.history.push_back({step, step_loss, lr, static_cast<int32_t>(windows.size())});
    res.steps_done = step + 1;
    if (is_dp) res.lots.push_back(chosen);

    if (std::isfinite(step_loss)) {
      recent.push_back(step_loss);
      if (recent.size() > 20) recent.pop_front();
    }
    maybe_checkpoint(params, tc, step);

    if (!is_dp && tc.stop_at_train_loss > 0.0 && recent.size() >= 10) {
      double m = 0.0;
      for (double l : recent) m += l;
      m /= static_cast<double>(recent.size());
      if (m < tc.stop_at_train_loss) break;
    }
  }

  if (!recent.empty()) {
    double m = 0.0;
    for (double l : recent) m += l;
    res.final_loss = m / static_cast<double>(recent.size());
  } else {
    res.final_loss = std::numeric_limits<double>::quiet_NaN();
  }

  if (is_dp) {
    res.ledger.steps = res.steps_done;
    res.ledger.q = q;
    res.ledger.sigma = dp->noise_multiplier;
    res.ledger.delta = dp->delta;
    res.ledger.epsilon = res.steps_done == 0
                             ? 0.0
                             : (dp->noise_multiplier == 0.0 ? kInf : epsilon_at(res.steps_done));
    res.ledger_valid = true;
  }
  return res;
}

void write_loss_history_csv(const TrainResult& res, const std::string& path) {
  std::ostringstream ss;
  ss << "step,loss,lr,batch\n";
  for (const auto& s : res.history) {
    ss << s.step << ",";
    if (std::isfinite(s.loss)) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", s.loss);
      ss << buf;
    } else {
      ss << "nan";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", s.lr);
    ss << "," << buf << "," << s.lot << "\n";
  }
  write_file(path, ss.str());
}

void write_ledger_json(const TrainResult& res, const std::string& path) {
  std::ostringstream ss;
  ss << "{\n";
  if (res.ledger_valid) {
    char buf[64];
    ss << "  \"steps\": " << res.ledger.steps << ",\n";
    std::snprintf(buf, sizeof(buf), "%.9g", res.ledger.q);
    ss << "  \"sampling_rate\": " << buf << ",\n";
    std::snprintf(buf, sizeof(buf), "%.9g", res.ledger.sigma);
    ss << "  \"noise_multiplier\": " << buf << ",\n";
    std::snprintf(buf, sizeof(buf), "%.9g", res.ledger.delta);
    ss << "  \"delta\": " << buf << ",\n";
    if (std::isfinite(res.ledger.epsilon)) {
      std::snprintf(buf, sizeof(buf), "%.9g", res.ledger.epsilon);
      ss << "  \"epsilon\": " << buf << "\n";
    } else {
      ss << "  \"epsilon\": \"infinity\"\n";
    }
  } else {
    ss << "  \"mode\": \"plain\"\n";
  }
  ss << "}\n";
  write_file(path, ss.str());
}

}  // namespace gs
