#include <catch2/catch_amalgamated.hpp>

#include "apg/attack/attack.hpp"
#include "apg/attack/gamma.hpp"
#include "apg/common.hpp"
#include "apg/lang/parse.hpp"
#include "apg/lang/render.hpp"
#include "apg/transplant/harvest.hpp"

using namespace apg;
using namespace apg::lang;

namespace {

// A compact universe: benign donors exhibiting the negative-weight features,
// one malware host exhibiting the positive ones.
const char* kDonor = R"(program
manifest {
  capability CAP_NET
  capability CAP_GPS
  component activity PhotoView
  component service SyncWorker
  intent MAIN
  endpoint "https://img.example/upload"
}
class Main {
  fn main(input) {
    base = 7
    cfg = base * 2
    title = "gallery"
    call PhotoView.show(cfg, title)
    t = 3
    call Helper.ping(t)
    emit input
  }
}
class PhotoView {
  fn show(cfg, title) {
    api gfx.draw(title)
    h = call Util.fmt(cfg)
    api net.send("https://img.example/upload", h)
    emit h
  }
}
class SyncWorker {
  fn tick(v) {
    api gps.poll(v)
  }
}
class Util {
  fn fmt(v) {
    return v + 1
  }
}
class Helper {
  fn ping(v) {
    api math.abs(v)
  }
}
entry Main.main
)";

const char* kMalware = R"(program
manifest {
  capability CAP_SMS
  component activity Main
  intent MAIN
  intent LAUNCHER
}
class Main {
  fn main(input) {
    api sms.blast(input)
    api boot.hook(input)
    emit input
  }
}
entry Main.main
)";

struct Universe {
  FeatureVocabulary vocab;
  LinearModel model;
  std::vector<Program> donors;
  Program malware;
  IceBox icebox;
  OmegaConstraints omega;
  AttackConfig cfg;
};

Universe make_universe() {
  Universe u;
  u.vocab = FeatureVocabulary::from_entries({
      {"cap::CAP_NET", FeatureFamily::ManifestCapability},
      {"cap::CAP_GPS", FeatureFamily::ManifestCapability},
      {"cap::CAP_SMS", FeatureFamily::ManifestCapability},
      {"activity::PhotoView", FeatureFamily::Component},
      {"service::SyncWorker", FeatureFamily::Component},
      {"activity::Main", FeatureFamily::Component},
      {"intent::MAIN", FeatureFamily::Component},
      {"intent::LAUNCHER", FeatureFamily::Component},
      {"api::gfx.draw", FeatureFamily::ApiCall},
      {"api::net.send", FeatureFamily::ApiCall},
      {"api::gps.poll", FeatureFamily::ApiCall},
      {"api::math.abs", FeatureFamily::ApiCall},
      {"api::sms.blast", FeatureFamily::ApiCall},
      {"api::boot.hook", FeatureFamily::ApiCall},
      {"url::https://img.example/upload", FeatureFamily::StringEndpoint},
  });
  u.model.weights.assign(u.vocab.size(), 0.0);
  auto w = [&](const char* name, double v) { u.model.weights[*u.vocab.find(name)] = v; };
  w("cap::CAP_NET", -0.4);
  w("cap::CAP_GPS", -0.2);
  w("activity::PhotoView", -1.0);
  w("service::SyncWorker", -0.7);
  w("api::gfx.draw", -0.8);
  w("api::net.send", -0.6);
  w("api::gps.poll", -0.5);
  w("api::math.abs", -1.5);
  w("url::https://img.example/upload", -0.3);
  w("api::sms.blast", 2.0);
  w("cap::CAP_SMS", 1.5);
  w("api::boot.hook", 1.0);
  u.model.bias = -0.5;

  for (int i = 0; i < 3; ++i) u.donors.push_back(parse(kDonor));
  u.malware = parse(kMalware);
  u.icebox = build_icebox(u.donors, u.model, u.vocab, {32, 2}, 7);

  std::vector<uint32_t> addable;
  for (uint32_t i = 0; i < u.vocab.size(); ++i)
    if (u.vocab.name(i).rfind("intent::", 0) != 0) addable.push_back(i);
  u.omega.addable = FeatureVector::from_positions(std::move(addable));

  u.cfg.dangerous_capabilities = {"CAP_SMS"};
  u.cfg.upsilon_inputs = {{0, 1}, {3, 2}, {11, 5}};
  return u;
}

Gadget pure_gadget(const Universe& u, const char* feature, double) {
  Rng rng(1);
  auto g = extract_gadget(u.donors[0], *u.vocab.find(feature), u.vocab, rng);
  REQUIRE(g.has_value());
  estimate_side_effects(*g, minimal_program(), u.vocab, rng);
  g->id = feature;
  return *g;
}

}  // namespace

TEST_CASE("rank_gadgets orders by contribution and skips present targets") {
  Universe u = make_universe();
  FeatureVector x = lang::extract_features(u.malware, u.vocab);
  auto ranked = rank_gadgets(u.icebox, x, u.model);
  REQUIRE(ranked.size() >= 2);
  for (size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i - 1].score <= ranked[i].score);
  for (const auto& rg : ranked) {
    CHECK_FALSE(x.test(rg.gadget->target_feature));
    CHECK(rg.contribution == rg.gadget->r.difference(x));
  }

  // A gadget whose target is already present is not ranked.
  FeatureVector x2 = x;
  uint32_t math_pos = *u.vocab.find("api::math.abs");
  x2.set(math_pos);
  for (const auto& rg : rank_gadgets(u.icebox, x2, u.model))
    CHECK(rg.gadget->target_feature != math_pos);
}

TEST_CASE("rank order on a two-gadget fixture") {
  Universe u = make_universe();
  IceBox two;
  two.model_fingerprint = model_fingerprint(u.model);
  Gadget strong = pure_gadget(u, "api::math.abs", -1.5);
  Gadget weak = pure_gadget(u, "api::gps.poll", -0.5);
  two.by_feature[strong.target_feature] = {strong};
  two.by_feature[weak.target_feature] = {weak};
  auto ranked = rank_gadgets(two, FeatureVector{}, u.model);
  REQUIRE(ranked.size() == 2);
  CHECK(ranked[0].gadget->target_name == "api::math.abs");
  CHECK(ranked[1].gadget->target_name == "api::gps.poll");
}

TEST_CASE("stale ice-box is rejected") {
  Universe u = make_universe();
  LinearModel other = u.model;
  other.bias += 0.125;
  CHECK_THROWS_AS(rank_gadgets(u.icebox, FeatureVector{}, other), StaleIceboxError);
}

TEST_CASE("capability feasibility limits") {
  Universe u = make_universe();
  Gadget g;
  std::set<std::string> host_caps{"CAP_NET"};

  CHECK(check_feasibility(host_caps, g, u.cfg));  // adds nothing

  g.manifest_delta.capabilities = {"CAP_GPS", "CAP_IO"};
  CHECK_FALSE(check_feasibility(host_caps, g, u.cfg));  // two new

  g.manifest_delta.capabilities = {"CAP_GPS"};
  CHECK(check_feasibility(host_caps, g, u.cfg));  // one new

  g.manifest_delta.capabilities = {"CAP_NET", "CAP_GPS"};
  CHECK(check_feasibility(host_caps, g, u.cfg));  // one already present

  g.manifest_delta.capabilities = {"CAP_SMS"};
  CHECK_FALSE(check_feasibility(host_caps, g, u.cfg));  // dangerous
}

TEST_CASE("low-confidence attack succeeds end to end") {
  Universe u = make_universe();
  AttackResult res = run_attack(u.malware, u.model, u.icebox, u.omega, u.cfg, u.vocab, 99);
  REQUIRE(res.outcome == AttackOutcome::Success);
  CHECK(res.gamma.pass());
  CHECK(res.score_before > 0);
  CHECK(res.score_after < 0);
  CHECK(res.features_added > 0);
  CHECK_FALSE(res.gadget_ids.empty());
  CHECK(res.predicates.size() == res.gadget_ids.size());
  REQUIRE(res.adversarial.has_value());

  // Re-derive everything from the persisted program.
  FeatureVector x1 = lang::extract_features(*res.adversarial, u.vocab);
  CHECK(discriminant(u.model, x1) == res.score_after);
  CHECK(x1.contains_all(lang::extract_features(u.malware, u.vocab)));
  for (const auto& cnf : res.predicates)
    CHECK(sat::is_satisfiable(cnf).verdict == sat::SatVerdict::Unsat);
}

TEST_CASE("high-confidence attack adds at least as many features") {
  Universe u = make_universe();
  AttackResult low = run_attack(u.malware, u.model, u.icebox, u.omega, u.cfg, u.vocab, 5);
  AttackConfig high_cfg = u.cfg;
  high_cfg.kappa = 1.5;
  AttackResult high = run_attack(u.malware, u.model, u.icebox, u.omega, high_cfg, u.vocab, 5);
  REQUIRE(low.outcome == AttackOutcome::Success);
  REQUIRE(high.outcome == AttackOutcome::Success);
  CHECK(high.score_after < -1.5);
  CHECK(high.features_added >= low.features_added);
}

TEST_CASE("restricted omega gates the attack before any implantation") {
  Universe u = make_universe();
  OmegaConstraints tight;  // nothing addable
  AttackResult res = run_attack(u.malware, u.model, u.icebox, tight, u.cfg, u.vocab, 3);
  CHECK(res.outcome == AttackOutcome::Infeasible);
  CHECK(res.gadget_ids.empty());
  CHECK(res.score_after == res.score_before);

  // Addable mass exists but is insufficient for the bound.
  OmegaConstraints small;
  small.addable = FeatureVector::from_positions({*u.vocab.find("api::gps.poll")});
  AttackResult res2 = run_attack(u.malware, u.model, u.icebox, small, u.cfg, u.vocab, 3);
  CHECK(res2.outcome == AttackOutcome::Infeasible);
  CHECK(res2.gadget_ids.empty());
}

TEST_CASE("attack on an already-benign sample is a contract violation") {
  Universe u = make_universe();
  Program benign = parse(kDonor);
  CHECK_THROWS_AS(run_attack(benign, u.model, u.icebox, u.omega, u.cfg, u.vocab, 1),
                  ContractViolation);
}

TEST_CASE("scripted replay: simulated score equals the greedy sum") {
  Universe u = make_universe();
  IceBox two;
  two.model_fingerprint = model_fingerprint(u.model);
  Gadget strong = pure_gadget(u, "api::math.abs", -1.5);
  Gadget weak = pure_gadget(u, "api::gps.poll", -0.5);
  two.by_feature[strong.target_feature] = {strong};
  two.by_feature[weak.target_feature] = {weak};

  AttackConfig cfg = u.cfg;
  cfg.kappa = 0.0;
  // h0 = 4.0; math.abs contributes -1.5, the gps gadget adds its full
  // r = {gps.poll, CAP_GPS} for -0.7; still positive => infeasible overall.
  AttackResult res = run_attack(u.malware, u.model, two, u.omega, cfg, u.vocab, 9);
  CHECK(res.outcome == AttackOutcome::Infeasible);
  double expected = res.score_before - 1.5 - (0.5 + 0.2);
  CHECK(res.score_simulated == Catch::Approx(expected));
}

TEST_CASE("gamma verifier is non-vacuous") {
  Universe u = make_universe();
  GammaConfig gcfg{u.cfg.upsilon_inputs, u.cfg.fuel};

  SECTION("an if(0)-guarded gadget violates preprocessing robustness") {
    Program adv = parse(kMalware);
    adv.classes[0].functions[0].body.insert(
        adv.classes[0].functions[0].body.begin(),
        Stmt::make_if(Expr::make_int(0),
                      {Stmt::make_api("math.abs", {Expr::make_int(1)})}, {}));
    GammaResult g = verify_gamma(parse(kMalware), adv, u.vocab, gcfg);
    CHECK(g.transformations);
    CHECK(g.semantics);
    CHECK(g.plausibility);
    CHECK_FALSE(g.preprocessing);
    CHECK(g.violation() == "Lambda");
  }

  SECTION("an unused capability violates preprocessing robustness") {
    Program adv = parse(kMalware);
    adv.manifest.capabilities.insert("CAP_NET");  // no net.* statement anywhere
    GammaResult g = verify_gamma(parse(kMalware), adv, u.vocab, gcfg);
    CHECK_FALSE(g.preprocessing);
  }

  SECTION("removing a statement violates available transformations") {
    Program adv = parse(kMalware);
    adv.classes[0].functions[0].body.pop_back();
    GammaResult g = verify_gamma(parse(kMalware), adv, u.vocab, gcfg);
    CHECK_FALSE(g.transformations);
    CHECK(g.violation() == "T");
  }

  SECTION("a trace-changing edit violates preserved semantics") {
    Program adv = parse(kMalware);
    adv.classes[0].functions[0].body.push_back(Stmt::make_emit(Expr::make_int(777)));
    GammaResult g = verify_gamma(parse(kMalware), adv, u.vocab, gcfg);
    CHECK(g.transformations);
    CHECK_FALSE(g.semantics);
  }
}

namespace {

// Universe of side-effect-free gadgets: every feature has a dedicated donor
// function under a capability-free namespace.
struct PureUniverse {
  FeatureVocabulary vocab;
  std::vector<Program> donors;
  Program malware;
  std::vector<uint32_t> benign_features;
  uint32_t malware_feature = 0;
};

PureUniverse make_pure_universe() {
  PureUniverse u;
  std::vector<std::pair<std::string, FeatureFamily>> entries;
  const int k = 6;
  for (int i = 0; i < k; ++i)
    entries.emplace_back("api::u" + std::to_string(i) + ".op", FeatureFamily::ApiCall);
  entries.emplace_back("api::mal.ping", FeatureFamily::ApiCall);
  u.vocab = FeatureVocabulary::from_entries(entries);
  for (int i = 0; i < k; ++i) u.benign_features.push_back(static_cast<uint32_t>(i));
  u.malware_feature = k;

  std::string donor = "program\nmanifest {\n}\nclass Main {\n  fn main(input) {\n";
  for (int i = 0; i < k; ++i) donor += "    call G" + std::to_string(i) + ".run(1)\n";
  donor += "    emit input\n  }\n}\n";
  for (int i = 0; i < k; ++i)
    donor += "class G" + std::to_string(i) + " {\n  fn run(v) {\n    api u" + std::to_string(i) +
             ".op(v)\n  }\n}\n";
  donor += "entry Main.main\n";
  u.donors.push_back(parse(donor));

  u.malware = parse(
      "program\nmanifest {\n}\n"
      "class Main {\n  fn main(input) {\n    api mal.ping(input)\n    emit input\n  }\n}\n"
      "entry Main.main\n");
  return u;
}

}  // namespace

TEST_CASE("theorem gates: never succeed when infeasible, always when pure gadgets cover omega") {
  PureUniverse u = make_pure_universe();
  Rng meta(20250809);
  int feasible_cases = 0, infeasible_cases = 0;

  for (int trial = 0; trial < 60; ++trial) {
    LinearModel model;
    model.weights.assign(u.vocab.size(), 0.0);
    for (uint32_t f : u.benign_features) model.weights[f] = -0.1 - meta.real01() * 1.5;
    model.weights[u.malware_feature] = 0.5 + meta.real01() * 3.0;
    model.bias = -0.25;

    IceBox box = build_icebox(u.donors, model, u.vocab, {16, 1}, meta.next());
    for (const auto& [f, gs] : box.by_feature)
      for (const auto& g : gs) REQUIRE(g.r == FeatureVector::from_positions({f}));

    std::vector<uint32_t> addable;
    for (uint32_t f : u.benign_features)
      if (meta.chance(0.6)) addable.push_back(f);
    OmegaConstraints omega;
    omega.addable = FeatureVector::from_positions(std::move(addable));

    AttackConfig cfg;
    cfg.kappa = meta.chance(0.5) ? 0.0 : meta.real01();
    cfg.upsilon_inputs = {{1, 1}, {2, 2}};

    FeatureVector x0 = lang::extract_features(u.malware, u.vocab);
    bool feasible = solve_feature_space_attack(model, x0, omega, cfg.kappa).has_value();
    AttackResult res = run_attack(u.malware, model, box, omega, cfg, u.vocab, meta.next());

    if (!feasible) {
      ++infeasible_cases;
      CHECK(res.outcome != AttackOutcome::Success);
      CHECK(res.outcome == AttackOutcome::Infeasible);
    } else {
      ++feasible_cases;
      REQUIRE(res.outcome == AttackOutcome::Success);
      CHECK(res.gamma.pass());
      CHECK(omega.addable.contains_all(
          lang::extract_features(*res.adversarial, u.vocab).difference(x0)));
    }
  }
  CHECK(feasible_cases > 10);
  CHECK(infeasible_cases > 10);
}

TEST_CASE("realized score is no better than simulated when nothing is lost") {
  Universe u = make_universe();
  AttackResult res = run_attack(u.malware, u.model, u.icebox, u.omega, u.cfg, u.vocab, 4);
  REQUIRE(res.outcome == AttackOutcome::Success);
  // No collisions in this universe: the realized vector is exactly the
  // simulated one.
  CHECK(res.score_after == Catch::Approx(res.score_simulated));
}

TEST_CASE("collision losses keep the attack honest: rechecked on the realized program") {
  Universe u = make_universe();
  // Host already declares PhotoView, so that component gadget loses its
  // target feature at implant time; the attack must still end below the
  // boundary on the realized vector.
  Program host = parse(kMalware);
  Class photo;
  photo.name = "PhotoView";
  Function pf;
  pf.name = "noop";
  pf.params = {"v"};
  pf.body.push_back(Stmt::make_emit(Expr::make_var("v")));
  photo.functions.push_back(pf);
  host.classes.push_back(photo);
  host.classes[0].functions[0].body.push_back(Stmt::make_call("PhotoView", "noop",
                                                              {Expr::make_int(4)}));

  AttackResult res = run_attack(host, u.model, u.icebox, u.omega, u.cfg, u.vocab, 12);
  REQUIRE(res.outcome == AttackOutcome::Success);
  CHECK(res.score_after < 0);
  CHECK(res.gamma.pass());
  FeatureVector x1 = lang::extract_features(*res.adversarial, u.vocab);
  CHECK(discriminant(u.model, x1) == res.score_after);
}
