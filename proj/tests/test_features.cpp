#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "apg/features.hpp"
#include "apg/metrics.hpp"
#include "apg/model_io.hpp"
#include "apg/training.hpp"
#include "oracles.hpp"

using namespace apg;

namespace {

LinearModel make_model(std::vector<double> w, double b) {
  LinearModel m;
  m.weights = std::move(w);
  m.bias = b;
  return m;
}

FeatureVector fv(std::initializer_list<uint32_t> pos) {
  return FeatureVector::from_positions(std::vector<uint32_t>(pos));
}

// Random instance for solver/bound checks.
struct Instance {
  LinearModel model;
  FeatureVector x;
  OmegaConstraints omega;
  double kappa;
};

Instance random_instance(Rng& rng, size_t dim, size_t max_addable) {
  Instance inst;
  std::vector<double> w(dim);
  for (auto& v : w) v = (rng.real01() - 0.5) * 4.0;
  inst.model = make_model(std::move(w), (rng.real01() - 0.5) * 2.0);

  std::vector<uint32_t> present, addable;
  for (uint32_t i = 0; i < dim; ++i) {
    if (rng.chance(0.3)) present.push_back(i);
    if (rng.chance(0.5) && addable.size() < max_addable) addable.push_back(i);
  }
  inst.x = FeatureVector::from_positions(std::move(present));
  inst.omega.addable = FeatureVector::from_positions(std::move(addable));
  inst.kappa = rng.chance(0.5) ? 0.0 : rng.real01();
  return inst;
}

}  // namespace

TEST_CASE("discriminant computes w.x + b") {
  auto m = make_model({-1.0, 2.0}, 0.0);
  CHECK(discriminant(m, fv({0, 1})) == 1.0);

  auto m2 = make_model({0.7, -3.0, 1.1}, 0.25);
  CHECK(discriminant(m2, fv({})) == 0.25);

  CHECK_THROWS_AS(discriminant(m, fv({5})), ContractViolation);
}

TEST_CASE("discriminant is affine in single-feature flips") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    auto inst = random_instance(rng, 24, 24);
    for (uint32_t i = 0; i < 24; ++i) {
      if (inst.x.test(i)) continue;
      FeatureVector x2 = inst.x;
      x2.set(i);
      CHECK(discriminant(inst.model, x2) - discriminant(inst.model, inst.x) ==
            Catch::Approx(inst.model.weights[i]).margin(1e-12));
    }
  }
}

TEST_CASE("attack objective and success threshold") {
  auto m = make_model({0.0}, -0.3);
  CHECK(attack_objective(m, fv({}), 0.0) == -0.3);
  CHECK(attack_successful(m, fv({}), 0.0));
  CHECK_FALSE(attack_successful(m, fv({}), 0.5));
  CHECK_THROWS_AS(attack_objective(m, fv({}), -1.0), ContractViolation);
}

TEST_CASE("greedy feature-space attack on hand instances") {
  auto m = make_model({-3.0, -1.0, 2.0}, 0.5);
  OmegaConstraints omega{fv({0, 1})};
  auto delta = solve_feature_space_attack(m, fv({2}), omega, 0.0);
  REQUIRE(delta.has_value());
  CHECK(*delta == fv({0}));
  CHECK(discriminant(m, fv({2}) | *delta) == -0.5);

  // All addable weights nonnegative and h(x) > 0: infeasible.
  auto m2 = make_model({1.0, 0.5, 2.0}, 0.1);
  CHECK_FALSE(solve_feature_space_attack(m2, fv({2}), omega, 0.0).has_value());
}

TEST_CASE("feasibility bound on hand instances") {
  auto m = make_model({-3.0, -1.0, 2.0}, 0.5);
  CHECK(feasibility_bound(m, fv({2}), {fv({0, 1})}) == -1.5);
  CHECK(feasibility_bound(m, fv({2}), {fv({})}) == 2.5);
}

TEST_CASE("greedy solver equals exhaustive search") {
  Rng rng(1234);
  int feasible_seen = 0, infeasible_seen = 0;
  for (int t = 0; t < 200; ++t) {
    auto inst = random_instance(rng, 30, 15);
    auto oracle = oracles::exhaustive_attack(inst.model, inst.x, inst.omega, inst.kappa);
    auto greedy = solve_feature_space_attack(inst.model, inst.x, inst.omega, inst.kappa);
    if (oracle.feasible) {
      ++feasible_seen;
      REQUIRE(greedy.has_value());
      CHECK(greedy->count() == oracle.min_cardinality);
      double score = discriminant(inst.model, inst.x | *greedy);
      CHECK(score == Catch::Approx(oracle.best_score_at_min_cardinality).margin(1e-9));
    } else {
      ++infeasible_seen;
      CHECK_FALSE(greedy.has_value());
    }
  }
  CHECK(feasible_seen > 20);
  CHECK(infeasible_seen > 20);
}

TEST_CASE("bound is sound for random admissible perturbations") {
  Rng rng(99);
  for (int t = 0; t < 100; ++t) {
    auto inst = random_instance(rng, 20, 20);
    double bound = feasibility_bound(inst.model, inst.x, inst.omega);
    FeatureVector absent = inst.omega.addable.difference(inst.x);
    for (int r = 0; r < 20; ++r) {
      std::vector<uint32_t> delta;
      for (uint32_t p : absent.positions())
        if (rng.chance(0.5)) delta.push_back(p);
      auto x2 = inst.x | FeatureVector::from_positions(std::move(delta));
      CHECK(discriminant(inst.model, x2) >= bound - 1e-9);
    }
  }
}

TEST_CASE("solver infeasible exactly when bound misses the target") {
  Rng rng(4321);
  for (int t = 0; t < 300; ++t) {
    auto inst = random_instance(rng, 25, 25);
    bool solver_infeasible = !solve_feature_space_attack(inst.model, inst.x, inst.omega, inst.kappa)
                                  .has_value();
    bool bound_misses = feasibility_bound(inst.model, inst.x, inst.omega) >= -inst.kappa;
    CHECK(solver_infeasible == bound_misses);
  }
}

TEST_CASE("svm separates a linearly separable toy set") {
  LabeledCorpus ds;
  ds.vocab_size = 2;
  for (int i = 0; i < 20; ++i) {
    ds.samples.push_back(fv({0}));
    ds.labels.push_back(+1);
    ds.samples.push_back(fv({1}));
    ds.labels.push_back(-1);
  }
  auto m = train_svm(ds, 1.0, {4, 0.1, 200, 7});
  int correct = 0;
  for (size_t i = 0; i < ds.size(); ++i)
    if ((discriminant(m, ds.samples[i]) > 0) == (ds.labels[i] > 0)) ++correct;
  CHECK(correct == static_cast<int>(ds.size()));
}

TEST_CASE("label flip negates the learned weights") {
  Rng rng(5);
  LabeledCorpus a, b;
  a.vocab_size = b.vocab_size = 10;
  for (int i = 0; i < 60; ++i) {
    std::vector<uint32_t> pos;
    for (uint32_t p = 0; p < 10; ++p)
      if (rng.chance(0.3)) pos.push_back(p);
    auto x = FeatureVector::from_positions(std::move(pos));
    int8_t y = rng.chance(0.5) ? 1 : -1;
    a.samples.push_back(x);
    a.labels.push_back(y);
    b.samples.push_back(x);
    b.labels.push_back(static_cast<int8_t>(-y));
  }
  SgdConfig cfg{8, 0.05, 40, 11};
  auto ma = train_svm(a, 1.0, cfg);
  auto mb = train_svm(b, 1.0, cfg);
  for (size_t i = 0; i < 10; ++i) CHECK(ma.weights[i] == -mb.weights[i]);
  CHECK(ma.bias == -mb.bias);
}

TEST_CASE("training rejects a single-class corpus") {
  LabeledCorpus ds;
  ds.vocab_size = 2;
  ds.samples = {fv({0}), fv({1})};
  ds.labels = {1, 1};
  CHECK_THROWS_AS(train_svm(ds), TrainingError);
}

TEST_CASE("sec-svm clip invariant holds exactly") {
  Rng rng(17);
  LabeledCorpus ds;
  ds.vocab_size = 16;
  for (int i = 0; i < 120; ++i) {
    std::vector<uint32_t> pos;
    int8_t y = rng.chance(0.5) ? 1 : -1;
    for (uint32_t p = 0; p < 16; ++p)
      if (rng.chance(y > 0 ? (p < 8 ? 0.6 : 0.1) : (p < 8 ? 0.1 : 0.6))) pos.push_back(p);
    ds.samples.push_back(FeatureVector::from_positions(std::move(pos)));
    ds.labels.push_back(y);
  }
  SecSvmConfig cfg{8, 0.05, 60, 0.03, 1.0, 3};
  auto m = train_secsvm(ds, cfg);
  CHECK(m.kind == ModelKind::SecSvm);
  for (double w : m.weights) CHECK(std::abs(w) <= 0.03);

  // A clip bound at max|w| of the plain SVM is (nearly) inactive: the
  // trajectory may brush it mid-training, but the result stays close.
  auto svm = train_svm(ds, 1.0, {8, 0.05, 60, 3});
  double k0 = 0.0;
  for (double w : svm.weights) k0 = std::max(k0, std::abs(w));
  cfg.k = k0;
  auto loose = train_secsvm(ds, cfg);
  for (size_t i = 0; i < svm.weights.size(); ++i)
    CHECK(loose.weights[i] == Catch::Approx(svm.weights[i]).margin(0.02));
  CHECK(loose.bias == Catch::Approx(svm.bias).margin(0.02));
}

TEST_CASE("paper-scale trainer defaults") {
  SgdConfig cfg;
  CHECK(cfg.batch == 1024);
  CHECK(cfg.lr == 1e-4);
  CHECK(cfg.epochs == 75);
}

TEST_CASE("grid search with unit budget returns the sweep floor") {
  LabeledCorpus ds;
  ds.vocab_size = 2;
  for (int i = 0; i < 30; ++i) {
    ds.samples.push_back(fv({0}));
    ds.labels.push_back(+1);
    ds.samples.push_back(fv({1}));
    ds.labels.push_back(-1);
  }
  // loss_budget must be in (0,1); 0.999 is effectively unconstrained.
  auto res = grid_search_k(ds, ds, 0.999, 1.0, {4, 0.1, 120, 7});
  auto svm = train_svm(ds, 1.0, {4, 0.1, 120, 7});
  double k0 = 0.0;
  for (double w : svm.weights) k0 = std::max(k0, std::abs(w));
  // Smallest k in the geometric sweep floored at k0 * 1e-3.
  double expect = k0;
  while (expect * 0.8 >= 1e-3 * k0) expect *= 0.8;
  CHECK(res.k == Catch::Approx(expect));
  CHECK_THROWS_AS(grid_search_k(ds, ds, 0.0), ContractViolation);
}

TEST_CASE("feature selection with n = vocabulary size is the identity") {
  LabeledCorpus ds;
  ds.vocab_size = 4;
  ds.samples = {fv({0, 1}), fv({2, 3})};
  ds.labels = {1, -1};
  auto vocab = FeatureVocabulary::from_entries({{"a", FeatureFamily::ApiCall},
                                                {"b", FeatureFamily::ApiCall},
                                                {"c", FeatureFamily::Component},
                                                {"d", FeatureFamily::StringEndpoint}});
  auto sel = feature_select_topn(ds, vocab, 4, 1.0, {1, 0.1, 50, 2});
  REQUIRE(sel.vocab.size() == 4);
  for (uint32_t i = 0; i < 4; ++i) {
    CHECK(sel.vocab.name(i) == vocab.name(i));
    CHECK(sel.mapping[i] == std::make_pair(i, i));
  }
  CHECK(project(fv({1, 3}), sel) == fv({1, 3}));
}

TEST_CASE("auroc on trivial score patterns") {
  CHECK(auroc({1.0, 2.0, -1.0, -2.0}, {1, 1, -1, -1}) == 1.0);
  CHECK(auroc({-1.0, -2.0, 1.0, 2.0}, {1, 1, -1, -1}) == 0.0);
  CHECK(auroc({0.5, 0.5}, {1, -1}) == 0.5);
  CHECK_THROWS_AS(auroc({1.0, 2.0}, {1, 1}), MetricError);
}

TEST_CASE("auroc near one half for label-independent scores") {
  Rng rng(2024);
  std::vector<double> scores(1000);
  std::vector<int8_t> labels(1000);
  for (int i = 0; i < 1000; ++i) {
    scores[i] = rng.real01();
    labels[i] = rng.chance(0.5) ? 1 : -1;
  }
  CHECK(std::abs(auroc(scores, labels) - 0.5) < 0.05);
}

TEST_CASE("auroc invariant under strictly monotone transforms") {
  Rng rng(77);
  std::vector<double> scores(200);
  std::vector<int8_t> labels(200);
  for (int i = 0; i < 200; ++i) {
    scores[i] = rng.real01() * 4.0 - 2.0;
    labels[i] = rng.chance(0.3) ? 1 : -1;
  }
  double base = auroc(scores, labels);
  auto t1 = scores, t2 = scores;
  for (auto& s : t1) s = std::exp(s);
  for (auto& s : t2) s = s * 3.0 + 11.0;
  CHECK(auroc(t1, labels) == Catch::Approx(base));
  CHECK(auroc(t2, labels) == Catch::Approx(base));
}

TEST_CASE("model serialization round-trips bit-exactly") {
  Rng rng(31);
  LinearModel m;
  m.weights.assign(50, 0.0);
  for (int i = 0; i < 25; ++i) m.weights[rng.below(50)] = (rng.real01() - 0.5) * 3.0;
  m.bias = -1.23456789012345;
  m.kind = ModelKind::SecSvm;
  m.clip_k = 0.2;
  m.vocab_hash = 0xdeadbeef12345678ull;

  auto dir = std::filesystem::temp_directory_path() / "apg_model_io_test";
  std::filesystem::create_directories(dir);
  auto p0 = (dir / "m0.json").string();
  auto p1 = (dir / "m1.json").string();
  save_model(m, p0);
  auto m2 = load_model(p0);
  CHECK(m2.weights == m.weights);
  CHECK(m2.bias == m.bias);
  CHECK(m2.clip_k == m.clip_k);
  CHECK(m2.kind == m.kind);
  CHECK(m2.vocab_hash == m.vocab_hash);
  save_model(m2, p1);
  CHECK(read_file(p0) == read_file(p1));
  std::filesystem::remove_all(dir);
}

TEST_CASE("vocabulary basics") {
  auto v = FeatureVocabulary::from_entries({{"cap::CAP_NET", FeatureFamily::ManifestCapability},
                                            {"api::net.open", FeatureFamily::ApiCall}});
  CHECK(v.size() == 2);
  CHECK(v.find("api::net.open") == 1u);
  CHECK_FALSE(v.find("nope").has_value());
  CHECK_THROWS_AS(FeatureVocabulary::from_entries(
                      {{"x", FeatureFamily::ApiCall}, {"x", FeatureFamily::ApiCall}}),
                  ContractViolation);
}
