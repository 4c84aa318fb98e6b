#include "core/attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "core/common.hpp"
#include "core/dp.hpp"
#include "core/io.hpp"
#include "core/synthesis.hpp"
#include "vendor/json.hpp"

namespace gs {

double calibrate_threshold(const std::vector<double>& scores, const std::vector<int>& labels) {
  require(scores.size() == labels.size() && !scores.empty(), errc::dimension_mismatch,
          "calibration scores must match labels");
  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  size_t pos = 0;
  for (int y : labels) pos += y ? 1u : 0u;
  size_t neg = labels.size() - pos;

  // tau = -inf predicts nobody a member
  double best_tau = -std::numeric_limits<double>::infinity();
  size_t best_correct = neg;

  size_t members_below = 0, nons_below = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    double v = scores[order[i]];
    while (j < order.size() && scores[order[j]] == v) {
      if (labels[order[j]]) ++members_below;
      else ++nons_below;
      ++j;
    }
    size_t correct = members_below + (neg - nons_below);
    if (correct > best_correct) {  // ties keep the smaller tau
      best_correct = correct;
      best_tau = v;
    }
    i = j;
  }
  return best_tau;
}

std::vector<int> threshold_predict(double tau, const std::vector<double>& scores) {
  std::vector<int> preds(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] <= tau ? 1 : 0;
  return preds;
}

const char* feature_mode_name(feature_mode m) {
  return m == feature_mode::model_only ? "model_only" : "hybrid";
}

namespace {

std::vector<size_t> sample_without_replacement(size_t n, size_t k, Rng& rng) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(idx);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

MetricsRow metrics_mean(const std::vector<MetricsRow>& rows) {
  MetricsRow m;
  double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    m.auc += r.auc;
    m.accuracy += r.accuracy;
    m.precision += r.precision;
    m.recall += r.recall;
    m.f1 += r.f1;
    m.advantage += r.advantage;
  }
  m.auc /= n;
  m.accuracy /= n;
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  m.advantage /= n;
  return m;
}

MetricsRow metrics_std(const std::vector<MetricsRow>& rows, const MetricsRow& mean) {
  MetricsRow s;
  double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    s.auc += (r.auc - mean.auc) * (r.auc - mean.auc);
    s.accuracy += (r.accuracy - mean.accuracy) * (r.accuracy - mean.accuracy);
    s.precision += (r.precision - mean.precision) * (r.precision - mean.precision);
    s.recall += (r.recall - mean.recall) * (r.recall - mean.recall);
    s.f1 += (r.f1 - mean.f1) * (r.f1 - mean.f1);
    s.advantage += (r.advantage - mean.advantage) * (r.advantage - mean.advantage);
  }
  s.auc = std::sqrt(s.auc / n);
  s.accuracy = std::sqrt(s.accuracy / n);
  s.precision = std::sqrt(s.precision / n);
  s.recall = std::sqrt(s.recall / n);
  s.f1 = std::sqrt(s.f1 / n);
  s.advantage = std::sqrt(s.advantage / n);
  return s;
}

nlohmann::json metrics_json(const MetricsRow& m) {
  return {{"auc", m.auc},       {"accuracy", m.accuracy}, {"precision", m.precision},
          {"recall", m.recall}, {"f1", m.f1},             {"advantage", m.advantage}};
}

}  // namespace

AttackReport run_experiment(const GptParams<float>& params, const Tokenizer& tok,
                            const Cohort& train, const Cohort& holdout,
                            const ExperimentConfig& cfg) {
  require(cfg.cohort_size >= 2, errc::invalid_config, "target cohort size must be >= 2");
  require(cfg.n_rounds >= 1, errc::invalid_config, "need at least one round");
  require(cfg.model_only_block || cfg.hybrid_block, errc::invalid_config,
          "no feature block requested");

  // samples without mutations can neither be prompted from nor meaningfully
  // targeted; drop them from eligibility up front
  std::vector<const SampleProfile*> pool_m, pool_n;
  for (const auto& s : train.samples)
    if (!s.mutations.empty()) pool_m.push_back(&s);
  for (const auto& s : holdout.samples)
    if (!s.mutations.empty()) pool_n.push_back(&s);
  size_t k = static_cast<size_t>(cfg.cohort_size);
  require(k <= pool_m.size() && k <= pool_n.size(), errc::cohort_too_small,
          "target cohort size exceeds an eligible cohort");

  AttackReport report;
  report.cohort_size = cfg.cohort_size;
  report.seed = cfg.seed;
  if (cfg.model_only_block) report.blocks.push_back({feature_mode::model_only, {}, {}});
  if (cfg.hybrid_block) report.blocks.push_back({feature_mode::hybrid, {}, {}});

  const std::vector<classifier_kind> kinds = {classifier_kind::knn, classifier_kind::logreg,
                                              classifier_kind::rf};

  for (int32_t r = 0; r < cfg.n_rounds; ++r) {
    uint64_t rs = static_cast<uint64_t>(r);
    Rng pick_m(mix_seed(mix_seed(cfg.seed, "members"), rs));
    Rng pick_n(mix_seed(mix_seed(cfg.seed, "nonmembers"), rs));
    auto mi = sample_without_replacement(pool_m.size(), k, pick_m);
    auto ni = sample_without_replacement(pool_n.size(), k, pick_n);

    std::vector<const SampleProfile*> targets;
    RoundInfo info;
    for (size_t i : mi) {
      targets.push_back(pool_m[i]);
      info.target_ids.push_back(pool_m[i]->sample_id);
      info.labels.push_back(1);
    }
    for (size_t i : ni) {
      targets.push_back(pool_n[i]);
      info.target_ids.push_back(pool_n[i]->sample_id);
      info.labels.push_back(0);
    }
    size_t n_targets = targets.size();

    // 50/50 stratified attacker split, train side rounded up
    Rng split_rng(mix_seed(mix_seed(cfg.seed, "attacker_split"), rs));
    for (int cls = 1; cls >= 0; --cls) {
      std::vector<size_t> idx;
      for (size_t i = 0; i < n_targets; ++i)
        if (info.labels[i] == cls) idx.push_back(i);
      split_rng.shuffle(idx);
      size_t n_tr = (idx.size() + 1) / 2;
      for (size_t i = 0; i < idx.size(); ++i)
        (i < n_tr ? info.attacker_train : info.attacker_test).push_back(idx[i]);
    }
    std::sort(info.attacker_train.begin(), info.attacker_train.end());
    std::sort(info.attacker_test.begin(), info.attacker_test.end());
    {
      std::set<size_t> tr(info.attacker_train.begin(), info.attacker_train.end());
      for (size_t i : info.attacker_test)
        require(!tr.count(i), errc::invalid_config, "attacker splits overlap");
    }

    std::vector<ModelFeatures> mf(n_targets);
    parallel_for(n_targets, cfg.workers, [&](size_t begin, size_t end, int) {
      GptRunner<float> runner(params);
      for (size_t i = begin; i < end; ++i) mf[i] = model_features(runner, tok, *targets[i]);
    });

    std::vector<GenomicFeatures> gf(n_targets);
    if (cfg.hybrid_block) {
      GenerationSpec gspec;
      gspec.max_new_tokens = cfg.gen_max_new_tokens;
      gspec.temperature = cfg.gen_temperature;
      gspec.top_k = cfg.gen_top_k;
      uint64_t gen_base = mix_seed(mix_seed(cfg.seed, "gen"), rs);
      parallel_for(n_targets, cfg.workers, [&](size_t begin, size_t end, int) {
        for (size_t i = begin; i < end; ++i) {
          auto gp = generate_profile(params, tok, targets[i]->mutations.front(), gspec,
                                     mix_seed(gen_base, i));
          gf[i] = genomic_features(gp);
        }
      });
    }

    for (auto& block : report.blocks) {
      bool hybrid = block.mode == feature_mode::hybrid;
      std::vector<std::vector<double>> rows(n_targets);
      for (size_t i = 0; i < n_targets; ++i) {
        rows[i] = mf[i].values();
        if (hybrid) {
          auto g = gf[i].values();
          rows[i].insert(rows[i].end(), g.begin(), g.end());
        }
      }

      Dataset atk_train, atk_test;
      std::vector<double> ppl_train, ppl_test;
      for (size_t i : info.attacker_train) {
        atk_train.x.push_back(rows[i]);
        atk_train.y.push_back(info.labels[i]);
        ppl_train.push_back(mf[i].perplexity);
      }
      for (size_t i : info.attacker_test) {
        atk_test.x.push_back(rows[i]);
        atk_test.y.push_back(info.labels[i]);
        ppl_test.push_back(mf[i].perplexity);
      }

      Standardizer sc;
      sc.fit(atk_train.x);
      Dataset std_train{sc.transform_all(atk_train.x), atk_train.y};
      std::vector<std::vector<double>> std_test = sc.transform_all(atk_test.x);

      double tau = calibrate_threshold(ppl_train, atk_train.y);
      auto preds = threshold_predict(tau, ppl_test);
      std::vector<double> neg_ppl(ppl_test.size());
      for (size_t i = 0; i < ppl_test.size(); ++i) neg_ppl[i] = -ppl_test[i];
      block.rows.push_back({r, "threshold", evaluate_attack(neg_ppl, preds, atk_test.y)});

      for (auto kind : kinds) {
        uint64_t cseed = mix_seed(mix_seed(cfg.seed, classifier_name(kind)), rs);
        auto clf = train_classifier(kind, std_train, cfg.hp, cseed);
        auto probs = clf->predict(std_test);
        block.rows.push_back({r, classifier_name(kind), evaluate_probs(probs, atk_test.y)});
      }
    }
    report.rounds.push_back(std::move(info));
  }

  for (auto& block : report.blocks) {
    std::vector<std::string> attacks = {"threshold", "knn", "logreg", "rf"};
    for (const auto& name : attacks) {
      std::vector<MetricsRow> rows;
      for (const auto& row : block.rows)
        if (row.attack == name) rows.push_back(row.metrics);
      AggRow agg;
      agg.attack = name;
      agg.mean = metrics_mean(rows);
      agg.stddev = metrics_std(rows, agg.mean);
      block.aggregate.push_back(std::move(agg));
    }
  }
  return report;
}

double block_mean_auc(const AttackBlock& block) {
  double s = 0.0;
  for (const auto& row : block.rows) s += row.metrics.auc;
  return s / static_cast<double>(block.rows.size());
}

const AttackBlock* find_block(const AttackReport& report, feature_mode mode) {
  for (const auto& b : report.blocks)
    if (b.mode == mode) return &b;
  return nullptr;
}

void write_attack_report_json(const AttackReport& report, const std::string& path) {
  nlohmann::json j;
  j["schema"] = "genomesynth.attack_report.v1";
  j["cohort_size"] = report.cohort_size;
  j["seed"] = report.seed;
  nlohmann::json rounds = nlohmann::json::array();
  for (size_t r = 0; r < report.rounds.size(); ++r) {
    const auto& info = report.rounds[r];
    rounds.push_back({{"round", r},
                      {"target_ids", info.target_ids},
                      {"labels", info.labels},
                      {"attacker_train", info.attacker_train},
                      {"attacker_test", info.attacker_test}});
  }
  j["rounds"] = std::move(rounds);
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& block : report.blocks) {
    nlohmann::json jb;
    jb["feature_mode"] = feature_mode_name(block.mode);
    nlohmann::json jr = nlohmann::json::array();
    for (const auto& row : block.rows)
      jr.push_back(
          {{"round", row.round}, {"attack", row.attack}, {"metrics", metrics_json(row.metrics)}});
    jb["rows"] = std::move(jr);
    nlohmann::json ja;
    for (const auto& agg : block.aggregate)
      ja[agg.attack] = {{"mean", metrics_json(agg.mean)}, {"std", metrics_json(agg.stddev)}};
    jb["aggregate"] = std::move(ja);
    jb["mean_auc"] = block_mean_auc(block);
    blocks.push_back(std::move(jb));
  }
  j["blocks"] = std::move(blocks);
  write_file(path, j.dump(2) + "\n");
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void write_attack_rounds_csv(const AttackReport& report, const std::string& path) {
  std::string csv = "feature_mode,round,attack,auc,accuracy,precision,recall,f1,advantage\n";
  for (const auto& block : report.blocks) {
    for (const auto& row : block.rows) {
      const auto& m = row.metrics;
      csv += std::string(feature_mode_name(block.mode)) + "," + std::to_string(row.round) + "," +
             row.attack + "," + fmt(m.auc) + "," + fmt(m.accuracy) + "," + fmt(m.precision) +
             "," + fmt(m.recall) + "," + fmt(m.f1) + "," + fmt(m.advantage) + "\n";
    }
  }
  write_file(path, csv);
}

void write_attack_plot_csv(const AttackReport& report, const std::string& path) {
  std::string csv = "feature_mode,attack,metric,mean,std\n";
  for (const auto& block : report.blocks) {
    for (const auto& agg : block.aggregate) {
      auto emit = [&](const char* name, double mean, double sd) {
        csv += std::string(feature_mode_name(block.mode)) + "," + agg.attack + "," + name + "," +
               fmt(mean) + "," + fmt(sd) + "\n";
      };
      emit("auc", agg.mean.auc, agg.stddev.auc);
      emit("accuracy", agg.mean.accuracy, agg.stddev.accuracy);
      emit("precision", agg.mean.precision, agg.stddev.precision);
      emit("recall", agg.mean.recall, agg.stddev.recall);
      emit("f1", agg.mean.f1, agg.stddev.f1);
      emit("advantage", agg.mean.advantage, agg.stddev.advantage);
    }
  }
  write_file(path, csv);
}

}  // namespace gs
