#pragma once

#include "amc/attacks.hpp"
#include "amc/features.hpp"
#include "amc/zoo.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

namespace amc {

struct SplitFractions {
  double train = 0.70, val = 0.15, test = 0.15;

  void validate() const {
    if (train <= 0 || val <= 0 || test <= 0)
      throw UsageError("split fractions must all be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9)
      throw UsageError("split fractions must sum to 1");
  }
};

/// Disjoint per-class stratified index sets. One SplitIndex is shared by
/// the time- and frequency-domain datasets so their partitions correspond
/// frame-for-frame.
struct SplitIndex {
  std::vector<int> train, val, test;
  SplitFractions fractions;
  std::uint64_t seed = 0;
};

inline SplitIndex split(const Dataset& ds, SplitFractions fractions,
                        std::uint64_t seed) {
  fractions.validate();
  const int C = ds.num_classes();
  std::vector<std::vector<int>> by_class(C);
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    by_class[ds.labels[i]].push_back(static_cast<int>(i));

  SplitIndex out;
  out.fractions = fractions;
  out.seed = seed;
  for (int c = 0; c < C; ++c) {
    auto& idx = by_class[c];
    if (idx.size() < 3)
      throw DataError("split: class " + std::to_string(c) +
                      " has fewer than 3 samples");
    Rng rng = Rng::substream(seed, 0x5b711, static_cast<std::uint64_t>(c));
    rng.shuffle(idx.begin(), idx.end());
    const auto n = idx.size();
    auto ntr = static_cast<std::size_t>(std::floor(fractions.train * n));
    auto nva = static_cast<std::size_t>(std::floor(fractions.val * n));
    if (ntr == 0 || nva == 0 || ntr + nva >= n)
      throw DataError("split: fractions leave an empty partition");
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + ntr);
    out.val.insert(out.val.end(), idx.begin() + ntr, idx.begin() + ntr + nva);
    out.test.insert(out.test.end(), idx.begin() + ntr + nva, idx.end());
  }
  return out;
}

inline Dataset subset(const Dataset& ds, const std::vector<int>& indices) {
  Dataset out;
  out.class_names = ds.class_names;
  out.domain = ds.domain;
  out.snr_db = ds.snr_db;
  out.seed = ds.seed;
  out.attack = ds.attack;
  out.frames.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (int i : indices) {
    out.frames.push_back(ds.frames[i]);
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

struct EvalReport {
  double accuracy = 0.0;
  Eigen::MatrixXi confusion;  // rows = truth, cols = prediction
  nlohmann::json metadata = nlohmann::json::object();
};

inline EvalReport evaluate(Model& model, const Dataset& ds) {
  if (ds.domain != model.domain)
    throw DataError("evaluate: dataset domain does not match model domain");
  if (ds.frames.empty()) throw DataError("evaluate: empty dataset");
  const int C = model.num_classes;
  EvalReport r;
  r.confusion = Eigen::MatrixXi::Zero(C, C);
  for (std::size_t i = 0; i < ds.frames.size(); ++i)
    r.confusion(ds.labels[i], classify(model, ds.frames[i])) += 1;
  r.accuracy =
      static_cast<double>(r.confusion.trace()) / static_cast<double>(ds.size());
  r.metadata["model"] = arch_name(model.arch);
  r.metadata["domain"] = domain_name(model.domain);
  r.metadata["num_frames"] = ds.size();
  if (ds.attack) {
    r.metadata["attack"] = {{"method", ds.attack->method},
                            {"budget", ds.attack->budget},
                            {"alpha", ds.attack->alpha},
                            {"iterations", ds.attack->iterations},
                            {"convention", ds.attack->convention},
                            {"surrogate_checksum", ds.attack->surrogate_checksum}};
  }
  return r;
}

struct TransferResult {
  EvalReport surrogate_report;  // f on perturbed time frames
  EvalReport target_report;     // g on the DFT of the same perturbed frames
  double gap = 0.0;             // target accuracy - surrogate accuracy
};

/// Crafts the attack once against the time-domain surrogate, then scores
/// both models on the same underlying perturbed signals (the target sees
/// their DFT, never a re-crafted attack).
inline TransferResult transfer_experiment(Model& surrogate, Model& target,
                                          const Dataset& time_test,
                                          const AttackConfig& cfg) {
  if (surrogate.domain != Domain::Time)
    throw DataError("transfer_experiment: surrogate must be time-domain");
  if (target.domain != Domain::Freq)
    throw DataError("transfer_experiment: target must be frequency-domain");
  if (time_test.domain != Domain::Time)
    throw DataError("transfer_experiment: test set must be time-domain");

  Dataset perturbed = perturb_dataset(surrogate, time_test, cfg);
  TransferResult res;
  res.surrogate_report = evaluate(surrogate, perturbed);
  Dataset freq = transform_dataset(perturbed);
  res.target_report = evaluate(target, freq);
  res.gap = res.target_report.accuracy - res.surrogate_report.accuracy;
  return res;
}

struct SweepRow {
  std::string method;
  std::string surrogate;
  std::string target;
  std::string domain;  // which model this accuracy belongs to
  double budget_or_alpha = 0.0;
  double accuracy = 0.0;
};

/// One transfer experiment per grid point. For FGSM the grid is the budget
/// P_T; for BIM it is the per-iteration alpha at fixed P_T. A zero grid
/// point short-circuits to the clean evaluation.
inline std::vector<SweepRow> budget_sweep(Model& surrogate, Model& target,
                                          const Dataset& time_test,
                                          const std::vector<double>& grid,
                                          AttackConfig base) {
  if (grid.empty()) throw UsageError("sweep grid must be nonempty");
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw UsageError("sweep grid must be ascending");

  std::vector<SweepRow> rows;
  for (double g : grid) {
    double surrogate_acc, target_acc;
    if (g <= 0.0) {
      surrogate_acc = evaluate(surrogate, time_test).accuracy;
      Dataset freq = transform_dataset(time_test);
      target_acc = evaluate(target, freq).accuracy;
    } else {
      AttackConfig cfg = base;
      if (cfg.method == AttackMethod::FGSM)
        cfg.power_budget = g;
      else
        cfg.alpha = std::min(g, cfg.effective_radius());
      TransferResult t = transfer_experiment(surrogate, target, time_test, cfg);
      surrogate_acc = t.surrogate_report.accuracy;
      target_acc = t.target_report.accuracy;
    }
    const char* method = attack_method_name(base.method);
    rows.push_back({method, arch_name(surrogate.arch), arch_name(target.arch),
                    "time", g, surrogate_acc});
    rows.push_back({method, arch_name(surrogate.arch), arch_name(target.arch),
                    "freq", g, target_acc});
  }
  return rows;
}

// ---- plot-ready emitters ----

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["accuracy"] = r.accuracy;
  nlohmann::json conf = nlohmann::json::array();
  for (int i = 0; i < r.confusion.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < r.confusion.cols(); ++k) row.push_back(r.confusion(i, k));
    conf.push_back(row);
  }
  j["confusion"] = conf;
  j["metadata"] = r.metadata;
  return j;
}

inline void save_report_json(const EvalReport& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path);
  os << report_to_json(r).dump(2) << "\n";
}

inline void save_confusion_csv(const EvalReport& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path);
  os << "truth_label,predicted_label,count\n";
  for (int i = 0; i < r.confusion.rows(); ++i)
    for (int k = 0; k < r.confusion.cols(); ++k)
      os << i << "," << k << "," << r.confusion(i, k) << "\n";
}

inline void save_sweep_csv(const std::vector<SweepRow>& rows,
                           const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path);
  os << "method,surrogate,target,domain,budget_or_alpha,accuracy\n";
  char buf[200];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%s,%.6f,%.6f\n",
                  r.method.c_str(), r.surrogate.c_str(), r.target.c_str(),
                  r.domain.c_str(), r.budget_or_alpha, r.accuracy);
    os << buf;
  }
}

}  // namespace amc
