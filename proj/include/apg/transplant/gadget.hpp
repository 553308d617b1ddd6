#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "apg/features.hpp"
#include "apg/lang/ast.hpp"
#include "apg/lang/extract.hpp"

namespace apg {

// A harvested slice: the organ (callee closure of classes/functions), the
// vein (argument-construction statements), and the entry call that invokes
// the organ. Implantation inserts [vein; entry] under a fresh opaque guard
// and merges the organ classes and the manifest delta into the host.
struct Gadget {
  std::string id;
  uint32_t target_feature = 0;
  std::string target_name;
  bool adapted_vein = false;       // vein synthesized, no donor call site
  lang::Block vein;                // excludes the entry statement
  lang::Stmt entry;                // always a call statement
  std::vector<lang::Class> organ;
  lang::Manifest manifest_delta;   // never carries intents
  FeatureVector r;                 // estimated contribution vs the minimal host
  lang::SoftwareStats stats;
};

struct IceBox {
  std::map<uint32_t, std::vector<Gadget>> by_feature;
  std::string model_fingerprint;

  size_t total() const {
    size_t n = 0;
    for (const auto& [f, v] : by_feature) n += v.size();
    return n;
  }
};

}  // namespace apg
