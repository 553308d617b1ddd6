#pragma once

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "apg/attack/attack.hpp"
#include "apg/harness/corpus.hpp"
#include "apg/metrics.hpp"
#include "apg/model_io.hpp"

namespace apg {

struct AttackRecord {
  std::string sample;  // corpus file name
  AttackOutcome outcome = AttackOutcome::Infeasible;
  bool gamma_pass = false;
  std::string violation;
  double score_before = 0.0;
  double score_after = 0.0;
  int features_added = 0;
  int gadgets = 0;
  uint64_t statements_executed = 0;
  int adv_size = 0;  // statement count of the adversarial program
  lang::SoftwareStats adv_stats;
  double wall_ms = 0.0;
};

struct SettingResult {
  std::string name;      // svm_low, svm_high, secsvm_low, secsvm_high
  std::string model;     // svm | secsvm
  double kappa = 0.0;
  std::vector<AttackRecord> records;

  int count(AttackOutcome o) const {
    int n = 0;
    for (const auto& r : records) n += r.outcome == o;
    return n;
  }
};

struct StatBands {
  // Per stat family: q1, q3 and the 0.15%/99.85% band over benign programs.
  std::map<std::string, std::array<double, 4>> bands;  // q1, q3, lo3, hi3
};

struct ExperimentReport {
  double auroc_svm = 0.0, auroc_secsvm = 0.0;
  double secsvm_k = 0.0;
  double kappa_svm = 0.0, kappa_secsvm = 0.0;
  std::vector<RocPoint> roc_svm, roc_secsvm;
  int true_positives_svm = 0, true_positives_secsvm = 0;
  size_t icebox_svm_size = 0, icebox_secsvm_size = 0;
  StatBands bands;
  std::vector<SettingResult> settings;
};

namespace harness_detail {

inline std::vector<std::pair<std::string, double>> stat_values(const lang::SoftwareStats& s) {
  return {{"size", static_cast<double>(s.size)},
          {"avg_cc", s.avg_cc},
          {"capabilities", static_cast<double>(s.capabilities)},
          {"api_calls", static_cast<double>(s.api_calls)},
          {"endpoints", static_cast<double>(s.endpoints)},
          {"activities", static_cast<double>(s.activities)},
          {"services_receivers", static_cast<double>(s.services_receivers)},
          {"intents", static_cast<double>(s.intents)},
          {"providers", static_cast<double>(s.providers)}};
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace harness_detail

inline StatBands benign_stat_bands(const Corpus& corpus) {
  std::map<std::string, std::vector<double>> values;
  for (size_t i = 0; i < corpus.programs.size(); ++i) {
    if (corpus.entries[i].label > 0) continue;
    for (const auto& [family, v] : harness_detail::stat_values(lang::stats(corpus.programs[i])))
      values[family].push_back(v);
  }
  StatBands out;
  for (auto& [family, v] : values)
    out.bands[family] = {quantile(v, 0.25), quantile(v, 0.75), quantile(v, 0.0015),
                         quantile(v, 0.9985)};
  return out;
}

// Machine-readable artifacts. Wall-clock never enters the CSVs so reruns at
// the same seed are byte-identical; timings live in timings.txt.
inline void emit_report(const ExperimentReport& rep, const std::string& dir) {
  namespace hd = harness_detail;
  std::filesystem::create_directories(dir);

  std::string roc = "model,fpr,tpr\n";
  for (const auto& pt : rep.roc_svm)
    roc += "svm," + hd::fmt(pt.fpr) + "," + hd::fmt(pt.tpr) + "\n";
  for (const auto& pt : rep.roc_secsvm)
    roc += "secsvm," + hd::fmt(pt.fpr) + "," + hd::fmt(pt.tpr) + "\n";
  write_file(dir + "/roc.csv", roc);

  std::string fa = "setting,sample,outcome,features_added\n";
  for (const auto& s : rep.settings)
    for (const auto& r : s.records)
      fa += s.name + "," + r.sample + "," + outcome_name(r.outcome) + "," +
            std::to_string(r.features_added) + "\n";
  write_file(dir + "/features_added.csv", fa);

  std::string sc = "setting,family,sample,value\n";
  for (const auto& [family, b] : rep.bands.bands) {
    sc += "benign," + family + ",q1," + hd::fmt(b[0]) + "\n";
    sc += "benign," + family + ",q3," + hd::fmt(b[1]) + "\n";
    sc += "benign," + family + ",lo3sigma," + hd::fmt(b[2]) + "\n";
    sc += "benign," + family + ",hi3sigma," + hd::fmt(b[3]) + "\n";
  }
  for (const auto& s : rep.settings)
    for (const auto& r : s.records) {
      if (r.outcome != AttackOutcome::Success) continue;
      for (const auto& [family, v] : hd::stat_values(r.adv_stats))
        sc += s.name + "," + family + "," + r.sample + "," + hd::fmt(v) + "\n";
    }
  write_file(dir + "/stats_cdf.csv", sc);

  std::string rt = "setting,sample,outcome,gadgets,statements_executed,adv_size\n";
  for (const auto& s : rep.settings)
    for (const auto& r : s.records)
      rt += s.name + "," + r.sample + "," + outcome_name(r.outcome) + "," +
            std::to_string(r.gadgets) + "," + std::to_string(r.statements_executed) + "," +
            std::to_string(r.adv_size) + "\n";
  write_file(dir + "/runtimes.csv", rt);

  std::string tm = "setting,sample,wall_ms\n";
  for (const auto& s : rep.settings)
    for (const auto& r : s.records)
      tm += s.name + "," + r.sample + "," + hd::fmt(r.wall_ms) + "\n";
  write_file(dir + "/timings.txt", tm);

  // Human-readable summary.
  std::string md = "# Experiment report\n\n";
  md += "## Detection (no attack)\n\n";
  md += "| model | AUROC | clip k | high-confidence kappa | true positives |\n";
  md += "|---|---|---|---|---|\n";
  md += "| svm | " + hd::fmt(rep.auroc_svm) + " | - | " + hd::fmt(rep.kappa_svm) + " | " +
        std::to_string(rep.true_positives_svm) + " |\n";
  md += "| secsvm | " + hd::fmt(rep.auroc_secsvm) + " | " + hd::fmt(rep.secsvm_k) + " | " +
        hd::fmt(rep.kappa_secsvm) + " | " + std::to_string(rep.true_positives_secsvm) + " |\n\n";
  md += "Ice-box sizes: svm " + std::to_string(rep.icebox_svm_size) + ", secsvm " +
        std::to_string(rep.icebox_secsvm_size) + " gadgets.\n\n";
  md += "## Attack outcomes\n\n";
  md += "| setting | samples | success | infeasible | implant_error | constraint_violation | "
        "success rate (non-implant-error) | median features added |\n";
  md += "|---|---|---|---|---|---|---|---|\n";
  for (const auto& s : rep.settings) {
    int succ = s.count(AttackOutcome::Success);
    int inf = s.count(AttackOutcome::Infeasible);
    int imp = s.count(AttackOutcome::ImplantFailed);
    int cv = s.count(AttackOutcome::ConstraintViolation);
    int base = static_cast<int>(s.records.size()) - imp;
    std::vector<double> added;
    for (const auto& r : s.records)
      if (r.outcome == AttackOutcome::Success) added.push_back(r.features_added);
    md += "| " + s.name + " | " + std::to_string(s.records.size()) + " | " +
          std::to_string(succ) + " | " + std::to_string(inf) + " | " + std::to_string(imp) +
          " | " + std::to_string(cv) + " | " +
          (base > 0 ? hd::fmt(100.0 * succ / base) + "%" : "-") + " | " +
          (added.empty() ? "-" : hd::fmt(quantile(added, 0.5))) + " |\n";
  }
  md += "\n## Benign statistic bands\n\n";
  md += "| family | q1 | q3 | 0.15% | 99.85% |\n|---|---|---|---|---|\n";
  for (const auto& [family, b] : rep.bands.bands)
    md += "| " + family + " | " + hd::fmt(b[0]) + " | " + hd::fmt(b[1]) + " | " + hd::fmt(b[2]) +
          " | " + hd::fmt(b[3]) + " |\n";
  md += "\nCSV columns are documented in the repository README.\n";
  write_file(dir + "/report.md", md);
}

}  // namespace apg
