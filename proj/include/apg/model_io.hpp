#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "apg/common.hpp"
#include "apg/features.hpp"

namespace apg {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
}

inline nlohmann::json vocab_to_json(const FeatureVocabulary& v) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [name, fam] : v.entries())
    entries.push_back({name, family_name(fam)});
  return {{"hash", to_hex(v.hash())}, {"entries", entries}};
}

inline FeatureVocabulary vocab_from_json(const nlohmann::json& j) {
  std::vector<std::pair<std::string, FeatureFamily>> entries;
  for (const auto& e : j.at("entries")) {
    auto fam = family_from_name(e.at(1).get<std::string>());
    if (!fam) throw IoError("unknown feature family in vocabulary file");
    entries.emplace_back(e.at(0).get<std::string>(), *fam);
  }
  auto v = FeatureVocabulary::from_entries(std::move(entries));
  if (j.contains("hash") && j.at("hash").get<std::string>() != to_hex(v.hash()))
    throw IoError("vocabulary hash mismatch");
  return v;
}

inline void save_vocab(const FeatureVocabulary& v, const std::string& path) {
  write_file(path, vocab_to_json(v).dump(1) + "\n");
}

inline FeatureVocabulary load_vocab(const std::string& path) {
  return vocab_from_json(nlohmann::json::parse(read_file(path)));
}

// Flat JSON model file: vocabulary hash, kind, clip bound, bias and the
// nonzero (index, weight) pairs. nlohmann prints the shortest decimal that
// round-trips, so load/save cycles are byte-stable after the first write.
inline nlohmann::json model_to_json(const LinearModel& m) {
  nlohmann::json weights = nlohmann::json::array();
  for (uint32_t i = 0; i < m.weights.size(); ++i)
    if (m.weights[i] != 0.0) weights.push_back({i, m.weights[i]});
  return {{"kind", m.kind == ModelKind::SecSvm ? "sec-svm" : "plain-svm"},
          {"clip_k", m.clip_k},
          {"bias", m.bias},
          {"n", m.weights.size()},
          {"vocab_hash", to_hex(m.vocab_hash)},
          {"weights", weights}};
}

inline LinearModel model_from_json(const nlohmann::json& j) {
  LinearModel m;
  m.kind = j.at("kind").get<std::string>() == "sec-svm" ? ModelKind::SecSvm : ModelKind::PlainSvm;
  m.clip_k = j.at("clip_k").get<double>();
  m.bias = j.at("bias").get<double>();
  m.weights.assign(j.at("n").get<size_t>(), 0.0);
  m.vocab_hash = std::stoull(j.at("vocab_hash").get<std::string>(), nullptr, 16);
  for (const auto& p : j.at("weights")) {
    uint32_t i = p.at(0).get<uint32_t>();
    if (i >= m.weights.size()) throw IoError("weight index out of range in model file");
    m.weights[i] = p.at(1).get<double>();
  }
  return m;
}

inline void save_model(const LinearModel& m, const std::string& path) {
  write_file(path, model_to_json(m).dump(1) + "\n");
}

inline LinearModel load_model(const std::string& path) {
  return model_from_json(nlohmann::json::parse(read_file(path)));
}

}  // namespace apg
