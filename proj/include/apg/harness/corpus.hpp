#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "apg/common.hpp"
#include "apg/features.hpp"
#include "apg/lang/analyze.hpp"
#include "apg/lang/ast.hpp"
#include "apg/lang/extract.hpp"
#include "apg/lang/interp.hpp"
#include "apg/lang/parse.hpp"
#include "apg/lang/render.hpp"
#include "apg/model_io.hpp"
#include "apg/training.hpp"

namespace apg {

struct UniverseConfig {
  int capabilities = 20;
  int apis = 480;
  int activities = 200;
  int services = 90;
  int receivers = 80;
  int providers = 50;
  int intents = 80;
  int endpoints = 280;
};

// The closed name universe: formulaic names derived purely from the config,
// so every run over the same config shares one vocabulary.
struct Universe {
  FeatureVocabulary vocab;
  std::vector<std::string> capabilities;
  std::vector<std::string> apis;   // ns.verb; first `capabilities` namespaces are capability-linked
  std::vector<std::pair<lang::ComponentKind, std::string>> components;
  std::vector<std::string> intents;
  std::vector<std::string> endpoints;
};

namespace harness_detail {

inline const std::vector<std::string>& namespace_words() {
  static const std::vector<std::string> w = {
      "net", "io",    "db",     "ui",   "fs",   "gfx",  "sms",  "gps",
      "cam", "bt",    "nfc",    "tel",  "log",  "cfg",  "sys",  "media",
      "crypto", "auth", "anim", "math", "str",  "time", "fmt",  "util"};
  return w;
}

inline std::vector<std::string> take_names(std::vector<std::string> base, const char* pad,
                                           size_t n) {
  for (size_t k = base.size(); k < n; ++k) base.push_back(pad + std::to_string(k));
  base.resize(n);
  return base;
}

inline std::vector<std::string> pair_names(const std::vector<std::string>& first,
                                           const std::vector<std::string>& second, size_t n) {
  std::vector<std::string> out;
  for (size_t i = 0; out.size() < n; ++i) {
    std::string name = first[i % first.size()] + second[(i / first.size()) % second.size()];
    size_t wrap = i / (first.size() * second.size());
    if (wrap > 0) name += std::to_string(wrap);
    out.push_back(std::move(name));
  }
  return out;
}

inline std::string upper(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace harness_detail

inline Universe build_universe(const UniverseConfig& cfg) {
  using namespace harness_detail;
  Universe u;

  auto namespaces = take_names(namespace_words(), "ns",
                               std::max<size_t>(namespace_words().size(),
                                                static_cast<size_t>(cfg.capabilities)));
  for (int i = 0; i < cfg.capabilities; ++i)
    u.capabilities.push_back(lang::capability_for_namespace(namespaces[i]));

  static const std::vector<std::string> verbs = {
      "open", "close", "read",  "write", "send", "recv", "query", "exec",  "init", "sync",
      "fetch", "push", "scan",  "bind",  "poll", "stat", "load",  "store", "trim", "hash"};
  for (int i = 0; i < cfg.apis; ++i) {
    size_t ns = static_cast<size_t>(i) % namespaces.size();
    size_t verb = (static_cast<size_t>(i) / namespaces.size()) % verbs.size();
    size_t wrap = static_cast<size_t>(i) / (namespaces.size() * verbs.size());
    std::string name = namespaces[ns] + "." + verbs[verb];
    if (wrap > 0) name += std::to_string(wrap);
    u.apis.push_back(std::move(name));
  }

  static const std::vector<std::string> act1 = {"Login", "Photo", "Map",  "Chat",  "Feed",
                                                "Setup", "Profile", "Search", "Video", "Audio",
                                                "News",  "Cart",  "Pay",  "Stats", "Game",
                                                "Note",  "Mail",  "Todo", "Scan",  "Sync"};
  static const std::vector<std::string> act2 = {"View", "Screen", "Page", "Panel", "Frame",
                                                "Board", "Tab", "Form", "Card", "Hub"};
  static const std::vector<std::string> svc1 = {"Sync", "Upload", "Backup", "Push", "Fetch",
                                                "Index", "Cache", "Audit", "Report"};
  static const std::vector<std::string> svc2 = {"Service", "Worker", "Daemon", "Job", "Task",
                                                "Agent", "Runner", "Engine", "Loop", "Unit"};
  static const std::vector<std::string> rcv1 = {"Boot", "Net", "Sms", "Alarm", "Power", "Usb",
                                                "Wifi", "Media"};
  static const std::vector<std::string> rcv2 = {"Receiver", "Listener", "Watcher", "Monitor",
                                                "Handler", "Hook", "Trap", "Relay", "Probe",
                                                "Catch"};
  static const std::vector<std::string> prv1 = {"Contact", "Files", "Photos", "Logs", "Keys"};
  static const std::vector<std::string> prv2 = {"Provider", "Store", "Source", "Depot", "Vault",
                                                "Bank", "Shelf", "Pool", "Rack", "Case"};
  auto add_components = [&](lang::ComponentKind kind, const std::vector<std::string>& a,
                            const std::vector<std::string>& b, int n) {
    for (auto& name : pair_names(a, b, static_cast<size_t>(n)))
      u.components.emplace_back(kind, std::move(name));
  };
  // The baseline activity present in every program.
  u.components.emplace_back(lang::ComponentKind::Activity, "Main");
  add_components(lang::ComponentKind::Activity, act1, act2, cfg.activities);
  add_components(lang::ComponentKind::Service, svc1, svc2, cfg.services);
  add_components(lang::ComponentKind::Receiver, rcv1, rcv2, cfg.receivers);
  add_components(lang::ComponentKind::Provider, prv1, prv2, cfg.providers);

  static const std::vector<std::string> intent_words = {"VIEW", "EDIT", "SEND", "PICK", "OPEN",
                                                        "SHARE", "PLAY", "STOP", "PING", "WAKE"};
  u.intents = {"MAIN", "LAUNCHER"};
  for (int i = 0; i < cfg.intents; ++i)
    u.intents.push_back("ACTION_" + intent_words[static_cast<size_t>(i) % intent_words.size()] +
                        "_" + std::to_string(i / static_cast<int>(intent_words.size())));

  static const std::vector<std::string> hosts = {"cdn", "img", "api", "sync", "stats", "news",
                                                 "auth", "push", "shop", "geo"};
  static const std::vector<std::string> paths = {"v1", "data", "login", "feed", "upload",
                                                 "track", "cfg", "list", "ping", "meta"};
  for (int i = 0; i < cfg.endpoints; ++i) {
    size_t h = static_cast<size_t>(i) % hosts.size();
    size_t p = (static_cast<size_t>(i) / hosts.size()) % paths.size();
    u.endpoints.push_back("https://" + hosts[h] + std::to_string(i / 100) + ".example.com/" +
                          paths[p] + std::to_string(i % 100));
  }

  std::vector<std::pair<std::string, FeatureFamily>> entries;
  auto sorted = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  for (const auto& c : sorted(u.capabilities))
    entries.emplace_back(lang::feature_capability(c), FeatureFamily::ManifestCapability);
  {
    std::vector<std::string> comp_names;
    for (const auto& [kind, name] : u.components)
      comp_names.push_back(lang::feature_component(kind, name));
    for (const auto& n : sorted(comp_names)) entries.emplace_back(n, FeatureFamily::Component);
  }
  for (const auto& i : sorted(u.intents))
    entries.emplace_back(lang::feature_intent(i), FeatureFamily::Component);
  for (const auto& a : sorted(u.apis))
    entries.emplace_back(lang::feature_api(a), FeatureFamily::ApiCall);
  for (const auto& e : sorted(u.endpoints))
    entries.emplace_back(lang::feature_endpoint(e), FeatureFamily::StringEndpoint);
  u.vocab = FeatureVocabulary::from_entries(std::move(entries));
  return u;
}

struct CorpusConfig {
  int n_goodware = 2000;
  int n_malware = 200;  // ~10% of the corpus
  UniverseConfig universe;
  int goodware_signal = 48;  // features planted predominantly in goodware
  int malware_signal = 32;
  double noise = 0.05;  // chance a signal draw crosses class
  int upsilon_tests = 8;
  uint64_t fuel = lang::kDefaultFuel;
  uint64_t seed = 42;
  std::vector<std::string> dangerous = {"CAP_SMS", "CAP_TEL", "CAP_CAM"};
};

struct CorpusEntry {
  std::string file;
  int8_t label = -1;  // +1 malware, -1 goodware
  std::vector<std::pair<int64_t, uint64_t>> upsilon;
};

struct Corpus {
  std::vector<lang::Program> programs;
  std::vector<CorpusEntry> entries;
  std::set<std::string> goodware_signal;  // feature names
  std::set<std::string> goodware_core;    // high-frequency subset of the goodware signal
  std::set<std::string> malware_signal;
};

namespace harness_detail {

// Signal pools draw from components, apis and endpoints; capabilities follow
// from apis by the naming convention, intents stay background-only because
// they are never transplantable. The goodware signal gets a small
// high-frequency core: a handful of features most goodware carries, which
// the plain SVM loads heavily and weight clipping later flattens.
inline void choose_signals(const Universe& u, const CorpusConfig& cfg, Corpus& corpus) {
  Rng rng(Rng::mix(cfg.seed, "signals"));
  std::vector<std::string> pool;
  for (const auto& [kind, name] : u.components)
    if (name != "Main") pool.push_back(lang::feature_component(kind, name));
  for (const auto& a : u.apis) pool.push_back(lang::feature_api(a));
  for (const auto& e : u.endpoints) pool.push_back(lang::feature_endpoint(e));
  rng.shuffle(pool);

  // Guarantee api presence in both signal sets: separability at zero noise
  // rides on per-program forced signal draws, which come from apis.
  auto take = [&](std::set<std::string>& dst, size_t want) {
    std::vector<std::string> taken;
    size_t api_quota = std::min(std::max<size_t>(4, want / 3), want);
    for (size_t i = 0; i < pool.size() && api_quota > 0;) {
      if (pool[i].rfind("api::", 0) == 0) {
        taken.push_back(pool[i]);
        pool.erase(pool.begin() + static_cast<long>(i));
        --api_quota;
      } else {
        ++i;
      }
    }
    while (taken.size() < want && !pool.empty()) {
      taken.push_back(pool.front());
      pool.erase(pool.begin());
    }
    dst.insert(taken.begin(), taken.end());
    return taken;
  };
  take(corpus.malware_signal, static_cast<size_t>(cfg.malware_signal));
  auto ordered = take(corpus.goodware_signal, static_cast<size_t>(cfg.goodware_signal));
  // The core is api-only (the take puts apis first) and its members never
  // co-occur in one program, so the plain SVM loads each one heavily
  // instead of splitting weight across correlated columns.
  size_t core_size = std::min<size_t>(8, ordered.size() / 3);
  for (size_t i = 0; i < core_size && ordered[i].rfind("api::", 0) == 0; ++i)
    corpus.goodware_core.insert(ordered[i]);
}

struct FamilyPools {
  std::vector<std::string> own_core, own_tail, cross, background;
};

inline FamilyPools pools_for(const std::vector<std::string>& names, const std::string& prefix,
                             const std::set<std::string>& own_signal,
                             const std::set<std::string>& own_core,
                             const std::set<std::string>& cross_signal) {
  FamilyPools p;
  for (const auto& n : names) {
    std::string feat = prefix + n;
    if (own_core.count(feat)) p.own_core.push_back(n);
    else if (own_signal.count(feat)) p.own_tail.push_back(n);
    else if (cross_signal.count(feat)) p.cross.push_back(n);
    else p.background.push_back(n);
  }
  return p;
}

inline std::string draw(const FamilyPools& p, double own_p, double noise, Rng& rng,
                        bool force_own = false) {
  double r = rng.real01();
  const std::vector<std::string>* pool = &p.background;
  if (force_own || r < own_p) pool = &p.own_tail;  // core draws are handled separately
  else if (r < own_p + noise) pool = &p.cross;
  if (pool->empty()) pool = &p.own_tail;
  if (pool->empty()) pool = &p.background;
  if (pool->empty()) pool = &p.cross;
  return rng.pick(*pool);
}

// Bounded-loop, defined-before-use statement filler. Returns int-valued
// variable names it defined.
inline std::vector<std::string> fill_body(lang::Block& body, std::vector<std::string> vars,
                                          const std::vector<std::string>& apis,
                                          const std::vector<std::string>& strings, Rng& rng,
                                          int depth, int uid) {
  int next_var = 0;
  auto fresh = [&] { return "v" + std::to_string(uid) + "_" + std::to_string(next_var++); };
  auto some_var = [&]() -> lang::Expr {
    if (vars.empty() || rng.chance(0.3)) return lang::Expr::make_int(rng.range(0, 9));
    return lang::Expr::make_var(rng.pick(vars));
  };
  auto arith = [&] {
    lang::Expr e = some_var();
    if (rng.chance(0.7))
      e = lang::Expr::make_binary(rng.chance(0.5) ? lang::BinOp::Add : lang::BinOp::Mul,
                                  std::move(e), some_var());
    return e;
  };

  size_t api_idx = 0;
  size_t str_idx = 0;
  int n = static_cast<int>(rng.range(2, 4)) + static_cast<int>(apis.size());
  for (int i = 0; i < n || api_idx < apis.size(); ++i) {
    double r = rng.real01();
    if (api_idx < apis.size() && (r < 0.35 || i >= n)) {
      std::vector<lang::Expr> args;
      if (str_idx < strings.size()) args.push_back(lang::Expr::make_str(strings[str_idx++]));
      args.push_back(some_var());
      std::string dst;
      if (rng.chance(0.4)) {
        dst = fresh();
        vars.push_back(dst);
      }
      body.push_back(lang::Stmt::make_api(apis[api_idx++], std::move(args), dst));
    } else if (r < 0.55) {
      std::string v = fresh();
      body.push_back(lang::Stmt::make_assign(v, arith()));
      vars.push_back(v);
    } else if (r < 0.70) {
      body.push_back(lang::Stmt::make_emit(arith()));
    } else if (r < 0.85 && depth > 0) {
      lang::Block then_b, else_b;
      then_b.push_back(lang::Stmt::make_emit(arith()));
      if (rng.chance(0.5)) else_b.push_back(lang::Stmt::make_emit(arith()));
      body.push_back(lang::Stmt::make_if(
          lang::Expr::make_binary(lang::BinOp::Gt, some_var(), some_var()), std::move(then_b),
          std::move(else_b)));
    } else if (depth > 0) {
      // while i < K { i = i + 1; ... } with literal K: always terminates.
      std::string i_var = fresh();
      vars.push_back(i_var);
      body.push_back(lang::Stmt::make_assign(i_var, lang::Expr::make_int(0)));
      lang::Block loop;
      loop.push_back(lang::Stmt::make_assign(
          i_var, lang::Expr::make_binary(lang::BinOp::Add, lang::Expr::make_var(i_var),
                                         lang::Expr::make_int(1))));
      if (rng.chance(0.6)) loop.push_back(lang::Stmt::make_emit(arith()));
      body.push_back(lang::Stmt::make_while(
          lang::Expr::make_binary(lang::BinOp::Lt, lang::Expr::make_var(i_var),
                                  lang::Expr::make_int(rng.range(1, 4))),
          std::move(loop)));
    } else {
      body.push_back(lang::Stmt::make_emit(arith()));
    }
  }
  return vars;
}

inline lang::Program generate_program(const Universe& u, const Corpus& corpus,
                                      const CorpusConfig& cfg, int8_t label, Rng& rng) {
  const auto& own = label > 0 ? corpus.malware_signal : corpus.goodware_signal;
  const auto& cross = label > 0 ? corpus.goodware_signal : corpus.malware_signal;
  static const std::set<std::string> no_core;
  const auto& core = label > 0 ? no_core : corpus.goodware_core;

  // Per-kind component name lists.
  std::map<lang::ComponentKind, std::vector<std::string>> comp_names;
  for (const auto& [kind, name] : u.components)
    if (name != "Main") comp_names[kind].push_back(name);

  lang::Program p;
  p.entry_class = "Main";
  p.entry_fn = "main";
  p.manifest.components.emplace(lang::ComponentKind::Activity, "Main");
  p.manifest.intents.insert("MAIN");
  p.manifest.intents.insert("LAUNCHER");

  // Draw the feature plan. Malware apps are api-dense and signal-heavy:
  // many mildly indicative features rather than a few strong ones. Each
  // goodware app carries exactly one core api and only occasionally any
  // tail signal, so the separating weight concentrates on the core and
  // leaves a long tail of weakly benign features for the clipped model.
  double own_p = label > 0 ? 0.80 : 0.25;
  auto api_pools = pools_for(u.apis, "api::", own, core, cross);
  auto url_pools = pools_for(u.endpoints, "url::", own, core, cross);
  std::set<std::string> apis, urls;
  if (label < 0 && !api_pools.own_core.empty()) apis.insert(rng.pick(api_pools.own_core));
  int n_api = label > 0 ? static_cast<int>(rng.range(9, 15)) : static_cast<int>(rng.range(3, 7));
  for (int i = 0; i < n_api; ++i) apis.insert(draw(api_pools, own_p, cfg.noise, rng, i == 0));
  int n_url = static_cast<int>(rng.range(0, 3));
  for (int i = 0; i < n_url; ++i) urls.insert(draw(url_pools, own_p, cfg.noise, rng));

  std::vector<std::pair<lang::ComponentKind, std::string>> chosen_components;
  auto draw_components = [&](lang::ComponentKind kind, const char* prefix, int lo, int hi) {
    auto pools = pools_for(comp_names[kind], prefix, own, core, cross);
    int k = static_cast<int>(rng.range(lo, hi));
    std::set<std::string> seen;
    for (int i = 0; i < k; ++i) {
      std::string name = draw(pools, own_p, cfg.noise, rng);
      if (seen.insert(name).second) chosen_components.emplace_back(kind, name);
    }
  };
  draw_components(lang::ComponentKind::Activity, "activity::", 1, 3);
  draw_components(lang::ComponentKind::Service, "service::", 0, 1);
  draw_components(lang::ComponentKind::Receiver, "receiver::", 0, 1);
  draw_components(lang::ComponentKind::Provider, "provider::", 0, 1);

  int n_intents = static_cast<int>(rng.range(0, 2));
  for (int i = 0; i < n_intents; ++i) {
    const std::string& name = rng.pick(u.intents);
    if (name != "MAIN" && name != "LAUNCHER") p.manifest.intents.insert(name);
  }

  for (const auto& url : urls) p.manifest.endpoints.insert(url);
  std::set<std::string> cap_universe(u.capabilities.begin(), u.capabilities.end());
  for (const auto& api : apis) {
    std::string cap = lang::capability_for_api(api);
    if (cap_universe.count(cap)) p.manifest.capabilities.insert(cap);
  }

  // Distribute apis and endpoint strings over components, helpers and main.
  std::vector<std::string> api_list(apis.begin(), apis.end());
  std::vector<std::string> url_list(urls.begin(), urls.end());
  rng.shuffle(api_list);
  size_t n_units = chosen_components.size() + 1;  // each component + main
  std::vector<std::vector<std::string>> unit_apis(n_units);
  std::vector<std::vector<std::string>> unit_urls(n_units);
  for (size_t i = 0; i < api_list.size(); ++i)
    unit_apis[rng.below(n_units)].push_back(api_list[i]);
  for (size_t i = 0; i < url_list.size(); ++i)
    unit_urls[rng.below(n_units)].push_back(url_list[i]);

  int uid = 0;
  lang::Class main_cls;
  main_cls.name = "Main";
  lang::Function main_fn;
  main_fn.name = "main";
  main_fn.params = {"input"};
  main_fn.body.push_back(lang::Stmt::make_emit(lang::Expr::make_binary(
      lang::BinOp::Add, lang::Expr::make_var("input"), lang::Expr::make_int(rng.range(1, 9)))));

  for (size_t ci = 0; ci < chosen_components.size(); ++ci) {
    const auto& [kind, name] = chosen_components[ci];
    p.manifest.components.emplace(kind, name);
    lang::Class cls;
    cls.name = name;
    lang::Function handler;
    handler.name = "run";
    handler.params = {"arg"};
    handler.body = {};
    fill_body(handler.body, {"arg"}, unit_apis[ci], unit_urls[ci], rng, 1, ++uid);
    handler.body.push_back(lang::Stmt::make_return(
        lang::Expr::make_binary(lang::BinOp::Add, lang::Expr::make_var("arg"),
                                lang::Expr::make_int(1))));
    cls.functions.push_back(std::move(handler));
    p.classes.push_back(std::move(cls));

    // Construct-and-invoke from main: a literal-rooted vein, then the call.
    std::string arg_var = "a" + std::to_string(ci);
    main_fn.body.push_back(
        lang::Stmt::make_assign(arg_var, lang::Expr::make_int(rng.range(0, 19))));
    if (rng.chance(0.5)) {
      std::string arg2 = arg_var + "b";
      main_fn.body.push_back(lang::Stmt::make_assign(
          arg2, lang::Expr::make_binary(lang::BinOp::Mul, lang::Expr::make_var(arg_var),
                                        lang::Expr::make_int(rng.range(2, 5)))));
      arg_var = arg2;
    }
    std::string dst = rng.chance(0.5) ? "r" + std::to_string(ci) : "";
    main_fn.body.push_back(
        lang::Stmt::make_call(name, "run", {lang::Expr::make_var(arg_var)}, dst));
    if (!dst.empty()) main_fn.body.push_back(lang::Stmt::make_emit(lang::Expr::make_var(dst)));
  }

  // Main's own share of apis and some trailing arithmetic.
  fill_body(main_fn.body, {"input"}, unit_apis[n_units - 1], unit_urls[n_units - 1], rng, 1,
            ++uid);
  main_fn.body.push_back(lang::Stmt::make_return(lang::Expr::make_var("input")));
  main_cls.functions.push_back(std::move(main_fn));
  p.classes.insert(p.classes.begin(), std::move(main_cls));
  return p;
}

}  // namespace harness_detail

// Seeded synthetic corpus: goodware exhibits the goodware-signal features,
// malware the malware-signal ones, everything else is shared background.
// Labels hold by construction; every program is well-formed and runs clean
// on its semantics-test inputs.
inline Corpus generate_corpus(const Universe& u, const CorpusConfig& cfg) {
  Corpus corpus;
  harness_detail::choose_signals(u, cfg, corpus);

  auto emit_program = [&](int8_t label, int idx) {
    Rng rng(Rng::mix(cfg.seed, (label > 0 ? 1000000u : 0u) + static_cast<uint64_t>(idx)));
    lang::Program p = harness_detail::generate_program(u, corpus, cfg, label, rng);
    CorpusEntry entry;
    entry.label = label;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%04d.ml", label > 0 ? "malware" : "goodware", idx);
    entry.file = buf;
    for (int t = 0; t < cfg.upsilon_tests; ++t)
      entry.upsilon.emplace_back(rng.range(0, 99), rng.next());

    if (!lang::is_well_formed(p))
      throw ContractViolation("generated program is ill-formed: " + entry.file);
    for (const auto& [input, seed] : entry.upsilon)
      lang::interpret(p, input, seed, cfg.fuel);  // must not throw

    corpus.programs.push_back(std::move(p));
    corpus.entries.push_back(std::move(entry));
  };

  for (int i = 0; i < cfg.n_goodware; ++i) emit_program(-1, i);
  for (int i = 0; i < cfg.n_malware; ++i) emit_program(+1, i);
  return corpus;
}

inline void write_corpus(const Corpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json index;
  nlohmann::json entries = nlohmann::json::array();
  for (size_t i = 0; i < corpus.programs.size(); ++i) {
    const CorpusEntry& e = corpus.entries[i];
    write_file(dir + "/" + e.file, lang::render(corpus.programs[i]));
    nlohmann::json je;
    je["file"] = e.file;
    je["label"] = e.label > 0 ? "malware" : "goodware";
    nlohmann::json ups = nlohmann::json::array();
    for (const auto& [input, seed] : e.upsilon) ups.push_back({input, seed});
    je["upsilon"] = ups;
    entries.push_back(je);
  }
  index["entries"] = entries;
  nlohmann::json gs = nlohmann::json::array(), gc = nlohmann::json::array(),
                 ms = nlohmann::json::array();
  for (const auto& n : corpus.goodware_signal) gs.push_back(n);
  for (const auto& n : corpus.goodware_core) gc.push_back(n);
  for (const auto& n : corpus.malware_signal) ms.push_back(n);
  index["goodware_signal"] = gs;
  index["goodware_core"] = gc;
  index["malware_signal"] = ms;
  write_file(dir + "/index.json", index.dump(1) + "\n");
}

inline Corpus load_corpus(const std::string& dir) {
  Corpus corpus;
  auto index = nlohmann::json::parse(read_file(dir + "/index.json"));
  for (const auto& je : index.at("entries")) {
    CorpusEntry e;
    e.file = je.at("file").get<std::string>();
    e.label = je.at("label").get<std::string>() == "malware" ? 1 : -1;
    for (const auto& up : je.at("upsilon"))
      e.upsilon.emplace_back(up.at(0).get<int64_t>(), up.at(1).get<uint64_t>());
    corpus.programs.push_back(lang::parse(read_file(dir + "/" + e.file)));
    corpus.entries.push_back(std::move(e));
  }
  for (const auto& n : index.at("goodware_signal")) corpus.goodware_signal.insert(n.get<std::string>());
  for (const auto& n : index.at("goodware_core")) corpus.goodware_core.insert(n.get<std::string>());
  for (const auto& n : index.at("malware_signal")) corpus.malware_signal.insert(n.get<std::string>());
  return corpus;
}

struct Split {
  std::vector<size_t> train, test;
};

// Stratified random split, seeded.
inline Split split_corpus(const Corpus& corpus, double train_fraction, uint64_t seed) {
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw ContractViolation("train fraction must lie in (0,1)");
  Split s;
  for (int8_t cls : {int8_t{-1}, int8_t{1}}) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < corpus.entries.size(); ++i)
      if (corpus.entries[i].label == cls) idx.push_back(i);
    Rng rng(Rng::mix(seed, cls > 0 ? "split-malware" : "split-goodware"));
    rng.shuffle(idx);
    size_t n_train = static_cast<size_t>(train_fraction * static_cast<double>(idx.size()) + 0.5);
    for (size_t i = 0; i < idx.size(); ++i)
      (i < n_train ? s.train : s.test).push_back(idx[i]);
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

inline LabeledCorpus make_dataset(const Corpus& corpus, const std::vector<size_t>& idx,
                                  const FeatureVocabulary& vocab) {
  LabeledCorpus ds;
  ds.vocab_size = vocab.size();
  for (size_t i : idx) {
    ds.samples.push_back(lang::extract_features(corpus.programs[i], vocab));
    ds.labels.push_back(corpus.entries[i].label);
  }
  return ds;
}

}  // namespace apg
