#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "apg/attack/attack.hpp"
#include "apg/harness/corpus.hpp"
#include "apg/harness/report.hpp"
#include "apg/metrics.hpp"
#include "apg/model_io.hpp"
#include "apg/sat/cnf.hpp"
#include "apg/training.hpp"
#include "apg/transplant/harvest.hpp"
#include "apg/transplant/io.hpp"

namespace apg {

struct ExperimentConfig {
  CorpusConfig corpus;
  double svm_c = 1.0;
  SgdConfig sgd{64, 0.05, 80, 1};  // desk-scale schedule; the type default is paper-scale
  double secsvm_loss_budget = 0.02;
  size_t feature_select_n = 1000;  // 0 disables selection
  IceboxParams icebox{100, 3};
  int max_new_caps = 1;
  int retry_rounds = 3;
  double split_fraction = 0.66;
  int workers = 4;
  uint64_t seed = 42;
  sat::PredicateParams predicate;
};

inline ExperimentConfig load_experiment_config(const std::string& path) {
  auto j = nlohmann::json::parse(read_file(path));
  ExperimentConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("corpus")) {
    const auto& c = j["corpus"];
    cfg.corpus.n_goodware = c.value("n_goodware", cfg.corpus.n_goodware);
    cfg.corpus.n_malware = c.value("n_malware", cfg.corpus.n_malware);
    cfg.corpus.goodware_signal = c.value("goodware_signal", cfg.corpus.goodware_signal);
    cfg.corpus.malware_signal = c.value("malware_signal", cfg.corpus.malware_signal);
    cfg.corpus.noise = c.value("noise", cfg.corpus.noise);
    cfg.corpus.upsilon_tests = c.value("upsilon_tests", cfg.corpus.upsilon_tests);
    cfg.corpus.fuel = c.value("fuel", cfg.corpus.fuel);
    if (c.contains("dangerous"))
      cfg.corpus.dangerous = c["dangerous"].get<std::vector<std::string>>();
    if (c.contains("universe")) {
      const auto& u = c["universe"];
      auto& uc = cfg.corpus.universe;
      uc.capabilities = u.value("capabilities", uc.capabilities);
      uc.apis = u.value("apis", uc.apis);
      uc.activities = u.value("activities", uc.activities);
      uc.services = u.value("services", uc.services);
      uc.receivers = u.value("receivers", uc.receivers);
      uc.providers = u.value("providers", uc.providers);
      uc.intents = u.value("intents", uc.intents);
      uc.endpoints = u.value("endpoints", uc.endpoints);
    }
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    cfg.svm_c = t.value("c", cfg.svm_c);
    cfg.sgd.batch = t.value("batch", cfg.sgd.batch);
    cfg.sgd.lr = t.value("lr", cfg.sgd.lr);
    cfg.sgd.epochs = t.value("epochs", cfg.sgd.epochs);
  }
  cfg.secsvm_loss_budget = j.value("secsvm_loss_budget", cfg.secsvm_loss_budget);
  cfg.feature_select_n = j.value("feature_select_n", cfg.feature_select_n);
  if (j.contains("icebox")) {
    cfg.icebox.n_f = j["icebox"].value("n_f", cfg.icebox.n_f);
    cfg.icebox.n_d = j["icebox"].value("n_d", cfg.icebox.n_d);
  }
  if (j.contains("attack")) {
    cfg.max_new_caps = j["attack"].value("max_new_capabilities_per_gadget", cfg.max_new_caps);
    cfg.retry_rounds = j["attack"].value("retry_rounds", cfg.retry_rounds);
  }
  cfg.split_fraction = j.value("split_fraction", cfg.split_fraction);
  cfg.workers = j.value("workers", cfg.workers);
  cfg.corpus.seed = cfg.seed;
  cfg.sgd.seed = Rng::mix(cfg.seed, "sgd");
  return cfg;
}

namespace harness_detail {

template <class Fn>
void parallel_for(size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace harness_detail

struct TrainArtifacts {
  FeatureVocabulary vocab;
  LinearModel svm, secsvm;
  double auroc_svm = 0.0, auroc_secsvm = 0.0;
  double secsvm_k = 0.0;
  double kappa_svm = 0.0, kappa_secsvm = 0.0;
  Split split;
  std::vector<size_t> tp_svm, tp_secsvm;  // corpus indices, test-split true positives
};

inline Corpus stage_corpus(const ExperimentConfig& cfg, const std::string& out_dir) {
  Universe u = build_universe(cfg.corpus.universe);
  Corpus corpus = generate_corpus(u, cfg.corpus);
  write_corpus(corpus, out_dir + "/corpus");
  return corpus;
}

inline TrainArtifacts stage_train(const ExperimentConfig& cfg, const Corpus& corpus,
                                  const std::string& out_dir) {
  TrainArtifacts ta;
  Universe u = build_universe(cfg.corpus.universe);
  ta.vocab = u.vocab;
  ta.split = split_corpus(corpus, cfg.split_fraction, Rng::mix(cfg.seed, "split"));

  if (cfg.feature_select_n > 0 && cfg.feature_select_n < ta.vocab.size()) {
    LabeledCorpus full = make_dataset(corpus, ta.split.train, ta.vocab);
    auto sel = feature_select_topn(full, ta.vocab, cfg.feature_select_n, cfg.svm_c, cfg.sgd);
    ta.vocab = std::move(sel.vocab);
  }

  LabeledCorpus train = make_dataset(corpus, ta.split.train, ta.vocab);
  LabeledCorpus test = make_dataset(corpus, ta.split.test, ta.vocab);

  ta.svm = train_svm(train, cfg.svm_c, cfg.sgd);
  ta.svm.vocab_hash = ta.vocab.hash();
  GridSearchResult grid = grid_search_k(train, test, cfg.secsvm_loss_budget, cfg.svm_c, cfg.sgd);
  ta.secsvm = grid.model;
  ta.secsvm.vocab_hash = ta.vocab.hash();
  ta.secsvm_k = grid.k;
  ta.auroc_svm = grid.auroc_svm;
  ta.auroc_secsvm = grid.auroc_secsvm;

  // High-confidence target: |25th percentile of benign training scores|.
  for (auto [model, kappa] : {std::pair<const LinearModel*, double*>{&ta.svm, &ta.kappa_svm},
                              {&ta.secsvm, &ta.kappa_secsvm}}) {
    std::vector<double> benign_scores;
    for (size_t k = 0; k < train.size(); ++k)
      if (train.labels[k] < 0) benign_scores.push_back(discriminant(*model, train.samples[k]));
    *kappa = std::abs(quantile(benign_scores, 0.25));
  }

  for (size_t i : ta.split.test) {
    if (corpus.entries[i].label <= 0) continue;
    FeatureVector x = lang::extract_features(corpus.programs[i], ta.vocab);
    if (discriminant(ta.svm, x) > 0) ta.tp_svm.push_back(i);
    if (discriminant(ta.secsvm, x) > 0) ta.tp_secsvm.push_back(i);
  }

  std::filesystem::create_directories(out_dir + "/models");
  save_vocab(ta.vocab, out_dir + "/models/vocab.json");
  save_model(ta.svm, out_dir + "/models/svm.json");
  save_model(ta.secsvm, out_dir + "/models/secsvm.json");
  nlohmann::json meta;
  meta["secsvm_k"] = ta.secsvm_k;
  meta["auroc_svm"] = ta.auroc_svm;
  meta["auroc_secsvm"] = ta.auroc_secsvm;
  meta["kappa_svm"] = ta.kappa_svm;
  meta["kappa_secsvm"] = ta.kappa_secsvm;
  meta["train"] = ta.split.train;
  meta["test"] = ta.split.test;
  meta["tp_svm"] = ta.tp_svm;
  meta["tp_secsvm"] = ta.tp_secsvm;
  write_file(out_dir + "/models/meta.json", meta.dump(1) + "\n");
  return ta;
}

inline TrainArtifacts load_train_artifacts(const std::string& out_dir) {
  TrainArtifacts ta;
  ta.vocab = load_vocab(out_dir + "/models/vocab.json");
  ta.svm = load_model(out_dir + "/models/svm.json");
  ta.secsvm = load_model(out_dir + "/models/secsvm.json");
  auto meta = nlohmann::json::parse(read_file(out_dir + "/models/meta.json"));
  ta.secsvm_k = meta.at("secsvm_k").get<double>();
  ta.auroc_svm = meta.at("auroc_svm").get<double>();
  ta.auroc_secsvm = meta.at("auroc_secsvm").get<double>();
  ta.kappa_svm = meta.at("kappa_svm").get<double>();
  ta.kappa_secsvm = meta.at("kappa_secsvm").get<double>();
  ta.split.train = meta.at("train").get<std::vector<size_t>>();
  ta.split.test = meta.at("test").get<std::vector<size_t>>();
  ta.tp_svm = meta.at("tp_svm").get<std::vector<size_t>>();
  ta.tp_secsvm = meta.at("tp_secsvm").get<std::vector<size_t>>();
  return ta;
}

struct Iceboxes {
  IceBox svm, secsvm;
};

inline Iceboxes stage_harvest(const ExperimentConfig& cfg, const Corpus& corpus,
                              const TrainArtifacts& ta, const std::string& out_dir) {
  std::vector<lang::Program> donors;
  for (size_t i : ta.split.train)
    if (corpus.entries[i].label < 0) donors.push_back(corpus.programs[i]);

  Iceboxes boxes;
  boxes.svm = build_icebox(donors, ta.svm, ta.vocab, cfg.icebox, Rng::mix(cfg.seed, "icebox-svm"));
  boxes.secsvm =
      build_icebox(donors, ta.secsvm, ta.vocab, cfg.icebox, Rng::mix(cfg.seed, "icebox-secsvm"));
  save_icebox(boxes.svm, ta.vocab, out_dir + "/icebox_svm");
  save_icebox(boxes.secsvm, ta.vocab, out_dir + "/icebox_secsvm");
  return boxes;
}

inline Iceboxes load_iceboxes(const std::string& out_dir, const FeatureVocabulary& vocab) {
  return {load_icebox(out_dir + "/icebox_svm", vocab),
          load_icebox(out_dir + "/icebox_secsvm", vocab)};
}

inline std::vector<SettingResult> stage_attack(const ExperimentConfig& cfg, const Corpus& corpus,
                                               const TrainArtifacts& ta, const Iceboxes& boxes,
                                               const std::string& out_dir) {
  OmegaConstraints omega;
  {
    std::vector<uint32_t> all(ta.vocab.size());
    for (uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    omega.addable = FeatureVector::from_positions(std::move(all));
  }

  struct Setting {
    const char* name;
    const char* model_name;
    const LinearModel* model;
    const IceBox* icebox;
    double kappa;
    const std::vector<size_t>* samples;
  };
  std::vector<Setting> plan = {
      {"svm_low", "svm", &ta.svm, &boxes.svm, 0.0, &ta.tp_svm},
      {"svm_high", "svm", &ta.svm, &boxes.svm, ta.kappa_svm, &ta.tp_svm},
      {"secsvm_low", "secsvm", &ta.secsvm, &boxes.secsvm, 0.0, &ta.tp_secsvm},
      {"secsvm_high", "secsvm", &ta.secsvm, &boxes.secsvm, ta.kappa_secsvm, &ta.tp_secsvm},
  };

  std::vector<SettingResult> results;
  for (const Setting& setting : plan) {
    SettingResult sr;
    sr.name = setting.name;
    sr.model = setting.model_name;
    sr.kappa = setting.kappa;
    sr.records.resize(setting.samples->size());

    std::string setting_dir = out_dir + "/results/" + setting.name;
    std::filesystem::create_directories(setting_dir + "/adv");

    std::vector<AttackResult> raw(setting.samples->size());
    harness_detail::parallel_for(setting.samples->size(), cfg.workers, [&](size_t j) {
      size_t idx = (*setting.samples)[j];
      AttackConfig acfg;
      acfg.kappa = setting.kappa;
      acfg.max_new_capabilities_per_gadget = cfg.max_new_caps;
      acfg.dangerous_capabilities.insert(cfg.corpus.dangerous.begin(),
                                         cfg.corpus.dangerous.end());
      acfg.upsilon_inputs = corpus.entries[idx].upsilon;
      acfg.fuel = cfg.corpus.fuel;
      acfg.retry_rounds = cfg.retry_rounds;
      acfg.predicate = cfg.predicate;
      uint64_t seed = Rng::mix(Rng::mix(cfg.seed, setting.name), corpus.entries[idx].file);
      raw[j] = run_attack(corpus.programs[idx], *setting.model, *setting.icebox, omega, acfg,
                          ta.vocab, seed);
    });

    std::string jsonl;
    for (size_t j = 0; j < raw.size(); ++j) {
      size_t idx = (*setting.samples)[j];
      const AttackResult& res = raw[j];
      AttackRecord rec;
      rec.sample = corpus.entries[idx].file;
      rec.outcome = res.outcome;
      rec.gamma_pass = res.gamma.pass();
      rec.violation = res.violation;
      rec.score_before = res.score_before;
      rec.score_after = res.score_after;
      rec.features_added = res.features_added;
      rec.gadgets = static_cast<int>(res.gadget_ids.size());
      rec.statements_executed = res.statements_executed;
      rec.wall_ms = res.wall_ms;
      if (res.adversarial) {
        rec.adv_stats = lang::stats(*res.adversarial);
        rec.adv_size = rec.adv_stats.size;
        std::string stem = rec.sample.substr(0, rec.sample.size() - 3);
        write_file(setting_dir + "/adv/" + stem + ".ml", lang::render(*res.adversarial));
        for (size_t k = 0; k < res.predicates.size(); ++k)
          write_file(setting_dir + "/adv/" + stem + ".g" + std::to_string(k) + ".cnf",
                     sat::to_dimacs(res.predicates[k]));
      }
      nlohmann::json line;
      line["sample"] = rec.sample;
      line["outcome"] = outcome_name(rec.outcome);
      line["violation"] = rec.violation;
      line["score_before"] = rec.score_before;
      line["score_after"] = rec.score_after;
      line["features_added"] = rec.features_added;
      line["gadgets"] = res.gadget_ids;
      line["gamma"] = {{"t", res.gamma.transformations},
                       {"upsilon", res.gamma.semantics},
                       {"pi", res.gamma.plausibility},
                       {"lambda", res.gamma.preprocessing}};
      line["statements_executed"] = rec.statements_executed;
      line["wall_ms"] = rec.wall_ms;
      jsonl += line.dump() + "\n";
      sr.records[j] = std::move(rec);
    }
    write_file(setting_dir + "/results.jsonl", jsonl);
    results.push_back(std::move(sr));
  }
  return results;
}

// Every reported success must be backed by a persisted program that
// reproduces the logged score exactly, plus a passing constraint record.
inline void verify_report_integrity(const std::vector<SettingResult>& settings,
                                    const TrainArtifacts& ta, const std::string& out_dir) {
  for (const auto& s : settings) {
    const LinearModel& model = s.model == "svm" ? ta.svm : ta.secsvm;
    for (const auto& r : s.records) {
      if (r.outcome != AttackOutcome::Success) continue;
      if (!r.gamma_pass) throw ContractViolation("success without a passing gamma record");
      std::string stem = r.sample.substr(0, r.sample.size() - 3);
      lang::Program adv =
          lang::parse(read_file(out_dir + "/results/" + s.name + "/adv/" + stem + ".ml"));
      double h = discriminant(model, lang::extract_features(adv, ta.vocab));
      if (h != r.score_after)
        throw ContractViolation("persisted adversarial program does not reproduce the score");
    }
  }
}

inline ExperimentReport stage_report(const Corpus& corpus, const TrainArtifacts& ta,
                                     const Iceboxes& boxes,
                                     std::vector<SettingResult> settings,
                                     const std::string& out_dir) {
  LabeledCorpus test = make_dataset(corpus, ta.split.test, ta.vocab);
  std::vector<double> svm_scores, secsvm_scores;
  for (const auto& x : test.samples) {
    svm_scores.push_back(discriminant(ta.svm, x));
    secsvm_scores.push_back(discriminant(ta.secsvm, x));
  }

  ExperimentReport rep;
  rep.auroc_svm = ta.auroc_svm;
  rep.auroc_secsvm = ta.auroc_secsvm;
  rep.secsvm_k = ta.secsvm_k;
  rep.kappa_svm = ta.kappa_svm;
  rep.kappa_secsvm = ta.kappa_secsvm;
  rep.roc_svm = roc_points(svm_scores, test.labels);
  rep.roc_secsvm = roc_points(secsvm_scores, test.labels);
  rep.true_positives_svm = static_cast<int>(ta.tp_svm.size());
  rep.true_positives_secsvm = static_cast<int>(ta.tp_secsvm.size());
  rep.icebox_svm_size = boxes.svm.total();
  rep.icebox_secsvm_size = boxes.secsvm.total();
  rep.bands = benign_stat_bands(corpus);
  rep.settings = std::move(settings);

  verify_report_integrity(rep.settings, ta, out_dir);
  emit_report(rep, out_dir + "/report");
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  Corpus corpus = stage_corpus(cfg, out_dir);
  TrainArtifacts ta = stage_train(cfg, corpus, out_dir);
  Iceboxes boxes = stage_harvest(cfg, corpus, ta, out_dir);
  std::vector<SettingResult> settings = stage_attack(cfg, corpus, ta, boxes, out_dir);
  return stage_report(corpus, ta, boxes, std::move(settings), out_dir);
}

}  // namespace apg
