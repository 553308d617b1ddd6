#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "apg/lang/parse.hpp"
#include "apg/lang/render.hpp"
#include "apg/model_io.hpp"
#include "apg/transplant/gadget.hpp"

namespace apg {

inline std::string render_gadget_text(const Gadget& g) {
  std::string out = "gadget\n";
  lang::detail::render_manifest(out, g.manifest_delta);
  for (const auto& c : g.organ) lang::detail::render_class(out, c);
  out += "vein {\n";
  lang::Block payload = g.vein;
  payload.push_back(g.entry);
  out += lang::render_block(payload, 1);
  out += "}\n";
  return out;
}

inline nlohmann::json stats_to_json(const lang::SoftwareStats& s) {
  return {{"size", s.size},
          {"avg_cc", s.avg_cc},
          {"capabilities", s.capabilities},
          {"api_calls", s.api_calls},
          {"endpoints", s.endpoints},
          {"activities", s.activities},
          {"services_receivers", s.services_receivers},
          {"intents", s.intents},
          {"providers", s.providers}};
}

inline lang::SoftwareStats stats_from_json(const nlohmann::json& j) {
  lang::SoftwareStats s;
  s.size = j.at("size").get<int>();
  s.avg_cc = j.at("avg_cc").get<double>();
  s.capabilities = j.at("capabilities").get<int>();
  s.api_calls = j.at("api_calls").get<int>();
  s.endpoints = j.at("endpoints").get<int>();
  s.activities = j.at("activities").get<int>();
  s.services_receivers = j.at("services_receivers").get<int>();
  s.intents = j.at("intents").get<int>();
  s.providers = j.at("providers").get<int>();
  return s;
}

// Directory layout: index.json plus, per gadget, <id>.ml (manifest delta,
// organ classes, vein block ending in the entry call), <id>.features.json
// and <id>.stats.json.
inline void save_icebox(const IceBox& box, const FeatureVocabulary& vocab,
                        const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json index;
  index["model_fingerprint"] = box.model_fingerprint;
  index["vocab_hash"] = to_hex(vocab.hash());
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [feature, gadgets] : box.by_feature) {
    nlohmann::json fe;
    fe["feature"] = vocab.name(feature);
    nlohmann::json ids = nlohmann::json::array();
    for (const Gadget& g : gadgets) {
      ids.push_back({{"id", g.id}, {"adapted_vein", g.adapted_vein}});
      write_file(dir + "/" + g.id + ".ml", render_gadget_text(g));
      nlohmann::json names = nlohmann::json::array();
      for (uint32_t p : g.r.positions()) names.push_back(vocab.name(p));
      write_file(dir + "/" + g.id + ".features.json", names.dump(1) + "\n");
      write_file(dir + "/" + g.id + ".stats.json", stats_to_json(g.stats).dump(1) + "\n");
    }
    fe["gadgets"] = ids;
    entries.push_back(fe);
  }
  index["features"] = entries;
  write_file(dir + "/index.json", index.dump(1) + "\n");
}

inline IceBox load_icebox(const std::string& dir, const FeatureVocabulary& vocab) {
  auto index = nlohmann::json::parse(read_file(dir + "/index.json"));
  if (index.at("vocab_hash").get<std::string>() != to_hex(vocab.hash()))
    throw IoError("ice-box was built against a different vocabulary");
  IceBox box;
  box.model_fingerprint = index.at("model_fingerprint").get<std::string>();
  for (const auto& fe : index.at("features")) {
    auto pos = vocab.find(fe.at("feature").get<std::string>());
    if (!pos) throw IoError("ice-box feature not in vocabulary");
    auto& list = box.by_feature[*pos];
    for (const auto& ge : fe.at("gadgets")) {
      Gadget g;
      g.id = ge.at("id").get<std::string>();
      g.adapted_vein = ge.at("adapted_vein").get<bool>();
      g.target_feature = *pos;
      g.target_name = fe.at("feature").get<std::string>();
      lang::GadgetText text = lang::parse_gadget_text(read_file(dir + "/" + g.id + ".ml"));
      g.manifest_delta = std::move(text.manifest_delta);
      g.organ = std::move(text.organ);
      if (text.vein_and_entry.empty()) throw IoError("gadget file has an empty vein block");
      g.entry = text.vein_and_entry.back();
      text.vein_and_entry.pop_back();
      g.vein = std::move(text.vein_and_entry);
      auto names = nlohmann::json::parse(read_file(dir + "/" + g.id + ".features.json"));
      std::vector<uint32_t> rpos;
      for (const auto& n : names) {
        auto p = vocab.find(n.get<std::string>());
        if (!p) throw IoError("gadget feature not in vocabulary");
        rpos.push_back(*p);
      }
      g.r = FeatureVector::from_positions(std::move(rpos));
      g.stats = stats_from_json(nlohmann::json::parse(read_file(dir + "/" + g.id + ".stats.json")));
      list.push_back(std::move(g));
    }
  }
  return box;
}

}  // namespace apg
