#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/model.hpp"

#include <cmath>
#include <cstring>
#include <vector>

#include "core/common.hpp"
#include "core/io.hpp"
#include "core/rng.hpp"
#include "testutil.hpp"

using namespace gs;

namespace {

ModelConfig micro_config() {
  ModelConfig cfg;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_model = 8;
  cfg.d_ff = 16;
  cfg.max_seq_len = 8;
  cfg.vocab_size = 12;
  cfg.seed = 5;
  return cfg;
}

std::vector<int32_t> random_ids(Rng& rng, int32_t len, int32_t vocab) {
  std::vector<int32_t> ids(static_cast<size_t>(len));
  for (auto& id : ids) id = static_cast<int32_t>(rng.below(static_cast<uint64_t>(vocab)));
  return ids;
}

}  // namespace

TEST_CASE("preset sizes") {
  GptParams<float> tiny(preset_config("tiny"));
  CHECK(tiny.cfg.n_layers == 2);
  CHECK(tiny.cfg.d_model == 16);
  CHECK(tiny.cfg.vocab_size == 64);
  CHECK(tiny.data.size() == 9152);

  ModelConfig big = preset_config("mingpt12m");
  size_t n = param_count(big);
  CHECK(n > 10'000'000);
  CHECK(n < 15'000'000);

  CHECK_THROWS_AS(preset_config("nope"), Error);
}

TEST_CASE("initialization draws small weights and unit layer-norm gains") {
  GptParams<float> p(preset_config("tiny"));
  p.init();
  size_t ones = 0, zeros = 0;
  double sumsq = 0.0;
  size_t small = 0;
  for (float v : p.data) {
    CHECK(std::isfinite(v));
    if (v == 1.0f) ++ones;
    if (v == 0.0f) ++zeros;
    sumsq += static_cast<double>(v) * v;
    if (std::fabs(v) < 0.1) ++small;
  }
  CHECK(ones > 0);    // layer-norm gains
  CHECK(zeros > 0);   // biases
  CHECK(small > p.data.size() * 9 / 10);
  CHECK(sumsq > 0.0);

  GptParams<float> q(preset_config("tiny"));
  q.init();
  CHECK(p.data == q.data);  // same seed, same init
}

TEST_CASE("forward emits one logit row per position") {
  GptParams<float> p(micro_config());
  p.init();
  GptRunner<float> r(p);
  const auto& logits = r.forward({1, 2, 3, 4, 5});
  CHECK(logits.size() == 5u * 12u);
  CHECK(r.cached_len() == 5);
  for (float v : logits) CHECK(std::isfinite(v));
}

TEST_CASE("forward validates its input") {
  GptParams<float> p(micro_config());
  p.init();
  GptRunner<float> r(p);
  CHECK_THROWS_AS(r.forward({}), Error);
  CHECK_THROWS_AS(r.forward({0, 12}), Error);
  CHECK_THROWS_AS(r.forward({-1}), Error);
  CHECK_THROWS_AS(r.forward(std::vector<int32_t>(9, 1)), Error);
}

TEST_CASE("loss equals the softmax cross entropy of the returned logits") {
  GptParams<float> p(micro_config());
  p.init();
  GptRunner<float> r(p);
  std::vector<int32_t> ids = {3, 1, 4, 1, 5, 9};
  const auto& logits = r.forward(ids);
  std::vector<int32_t> targets(ids.begin() + 1, ids.end());
  double got = r.loss(targets);

  const int32_t V = 12;
  double manual = 0.0;
  for (size_t t = 0; t + 1 < ids.size(); ++t) {
    const float* row = logits.data() + t * V;
    double mx = row[0];
    for (int32_t j = 1; j < V; ++j) mx = std::max(mx, static_cast<double>(row[j]));
    double z = 0.0;
    for (int32_t j = 0; j < V; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
    manual += -(static_cast<double>(row[targets[t]]) - mx - std::log(z));
  }
  manual /= static_cast<double>(targets.size());
  CHECK(got == doctest::Approx(manual).epsilon(1e-9));

  CHECK_THROWS_AS(r.loss(std::vector<int32_t>(ids.size(), 0)), Error);  // wrong length
}

TEST_CASE("loss_backward matches loss and accumulates") {
  GptParams<float> p(micro_config());
  p.init();
  GptRunner<float> r(p);
  std::vector<int32_t> ids = {2, 7, 1, 8};
  std::vector<int32_t> targets(ids.begin() + 1, ids.end());

  std::vector<float> g(p.data.size(), 0.0f);
  double l1 = r.loss_backward(ids, targets, g);
  r.forward(ids);
  CHECK(l1 == doctest::Approx(r.loss(targets)).epsilon(1e-12));

  std::vector<float> g2(p.data.size(), 0.0f);
  r.loss_backward(ids, targets, g2);
  r.loss_backward(ids, targets, g2);
  double max_diff = 0.0;
  for (size_t i = 0; i < g.size(); ++i)
    max_diff = std::max(max_diff, std::fabs(static_cast<double>(g2[i]) - 2.0 * g[i]));
  CHECK(max_diff < 1e-4);
}

TEST_CASE("analytic gradients match central finite differences in double") {
  ModelConfig cfg = micro_config();
  GptParams<double> p(cfg);
  p.init();
  std::vector<int32_t> ids = {3, 1, 4, 1, 5, 9, 2, 6};
  std::vector<int32_t> targets(ids.begin() + 1, ids.end());

  GptRunner<double> runner(p);
  std::vector<double> grad(p.data.size(), 0.0);
  runner.loss_backward(ids, targets, grad);

  double max_rel = 0.0;
  const double h = 1e-5;
  for (size_t i = 0; i < p.data.size(); ++i) {
    double keep = p.data[i];
    p.data[i] = keep + h;
    GptRunner<double> rp(p);
    rp.forward(ids);
    double up = rp.loss(targets);
    p.data[i] = keep - h;
    GptRunner<double> rm(p);
    rm.forward(ids);
    double down = rm.loss(targets);
    p.data[i] = keep;
    double numeric = (up - down) / (2.0 * h);
    double denom = std::max({std::fabs(numeric), std::fabs(grad[i]), 1e-6});
    max_rel = std::max(max_rel, std::fabs(numeric - grad[i]) / denom);
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("perturbing a token leaves earlier logits bitwise unchanged") {
  GptParams<float> p(micro_config());
  p.init();
  Rng rng(77);
  GptRunner<float> ra(p), rb(p);
  const int32_t V = 12;
  for (int c = 0; c < 30; ++c) {
    int32_t len = 2 + static_cast<int32_t>(rng.below(7));
    auto ids = random_ids(rng, len, V);
    auto mutated = ids;
    size_t t = rng.below(static_cast<uint64_t>(len));
    mutated[t] = static_cast<int32_t>((mutated[t] + 1 + rng.below(V - 1)) % V);

    std::vector<float> la = ra.forward(ids);
    std::vector<float> lb = rb.forward(mutated);
    CHECK(std::memcmp(la.data(), lb.data(), t * V * sizeof(float)) == 0);
    if (static_cast<size_t>(len) > t) {
      bool tail_differs = std::memcmp(la.data() + t * V, lb.data() + t * V,
                                      (static_cast<size_t>(len) - t) * V * sizeof(float)) != 0;
      CHECK(tail_differs);
    }
  }
}

TEST_CASE("greedy generation on a zero model picks the lowest id and honors stops") {
  GptParams<float> p(micro_config());  // all parameters zero: logits all tie
  GenerateOptions opt;
  opt.max_new_tokens = 4;
  opt.temperature = 0.0;
  Rng rng(1);
  auto out = generate(p, {5, 3}, opt, rng);
  CHECK(out == std::vector<int32_t>{5, 3, 0, 0, 0, 0});

  opt.top_k = 1;
  opt.temperature = 1.0;
  Rng rng2(1);
  CHECK(generate(p, {5, 3}, opt, rng2) == std::vector<int32_t>{5, 3, 0, 0, 0, 0});

  opt.top_k = 0;
  opt.temperature = 0.0;
  opt.stop_ids = {0};
  Rng rng3(1);
  CHECK(generate(p, {5, 3}, opt, rng3) == std::vector<int32_t>{5, 3});
}

TEST_CASE("generation slides its window and stays deterministic") {
  ModelConfig cfg = micro_config();
  GptParams<float> p(cfg);
  p.init();
  GenerateOptions opt;
  opt.max_new_tokens = 12;  // forces sliding past max_seq_len 8
  opt.temperature = 0.9;
  opt.top_k = 4;
  std::vector<int32_t> prompt = {1, 2, 3, 4, 5, 6, 7, 8};

  Rng r1(42), r2(42), r3(43);
  auto a = generate(p, prompt, opt, r1);
  auto b = generate(p, prompt, opt, r2);
  auto c = generate(p, prompt, opt, r3);
  CHECK(a.size() == prompt.size() + 12);
  CHECK(std::equal(prompt.begin(), prompt.end(), a.begin()));
  CHECK(a == b);
  CHECK(a != c);
  for (int32_t id : a) CHECK((id >= 0 && id < cfg.vocab_size));

  GenerateOptions bad;
  bad.temperature = -1.0;
  Rng r4(1);
  CHECK_THROWS_AS(generate(p, prompt, bad, r4), Error);
  CHECK_THROWS_AS(generate(p, {}, opt, r4), Error);
}

TEST_CASE("dropout only acts in training mode") {
  ModelConfig cfg = micro_config();
  cfg.dropout_rate = 0.5;
  GptParams<float> p(cfg);
  p.init();
  GptRunner<float> r(p);
  std::vector<int32_t> ids = {1, 2, 3, 4};

  std::vector<float> eval1 = r.forward(ids, false, nullptr);
  std::vector<float> eval2 = r.forward(ids, false, nullptr);
  CHECK(eval1 == eval2);

  Rng drop(9);
  std::vector<float> trained = r.forward(ids, true, &drop);
  CHECK(trained != eval1);
}

TEST_CASE("checkpoint round trip is exact") {
  tt::TmpDir tmp("model");
  GptParams<float> p(micro_config());
  p.init();
  std::string path = tmp.file("m.ckpt");
  save_checkpoint(p, path);

  GptParams<float> back = load_checkpoint(path);
  CHECK(back.cfg.n_layers == p.cfg.n_layers);
  CHECK(back.cfg.d_model == p.cfg.d_model);
  CHECK(back.cfg.max_seq_len == p.cfg.max_seq_len);
  CHECK(back.cfg.vocab_size == p.cfg.vocab_size);
  CHECK(back.data == p.data);

  gs::write_file(path, "garbage");
  CHECK_THROWS_AS(load_checkpoint(path), Error);
}
