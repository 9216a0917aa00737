#include "hinclus/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "hinclus/errors.hpp"
#include <json.hpp>

namespace hinclus {

namespace {

// Relabels by first occurrence so any relabeling of the same partition
// canonicalizes to the same vector.
std::vector<int> canonical(std::span<const int> labels) {
  std::vector<int> out(labels.size());
  std::map<int, int> remap;
  for (size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = remap.emplace(labels[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  return out;
}

}  // namespace

double nmi(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size())
    throw std::invalid_argument("nmi: label vectors differ in length");
  if (predicted.empty()) throw std::invalid_argument("nmi: empty label vectors");

  std::vector<int> p = canonical(predicted);
  std::vector<int> t = canonical(truth);
  int kp = *std::max_element(p.begin(), p.end()) + 1;
  int kt = *std::max_element(t.begin(), t.end()) + 1;
  if (kp == 1 || kt == 1) return 0.0;  // zero-entropy degenerate
  if (p == t) return 1.0;              // identical partitions, exact by definition

  const double n = static_cast<double>(p.size());
  std::vector<long long> joint(static_cast<size_t>(kp) * static_cast<size_t>(kt), 0);
  std::vector<long long> np(static_cast<size_t>(kp), 0);
  std::vector<long long> nt(static_cast<size_t>(kt), 0);
  for (size_t i = 0; i < p.size(); ++i) {
    joint[static_cast<size_t>(p[i]) * kt + static_cast<size_t>(t[i])] += 1;
    np[static_cast<size_t>(p[i])] += 1;
    nt[static_cast<size_t>(t[i])] += 1;
  }

  double mi = 0;
  for (int a = 0; a < kp; ++a)
    for (int b = 0; b < kt; ++b) {
      long long c = joint[static_cast<size_t>(a) * kt + static_cast<size_t>(b)];
      if (c == 0) continue;
      double ratio = (n * static_cast<double>(c)) /
                     (static_cast<double>(np[static_cast<size_t>(a)]) *
                      static_cast<double>(nt[static_cast<size_t>(b)]));
      mi += static_cast<double>(c) / n * std::log(ratio);
    }
  double hp = 0, ht = 0;
  for (long long c : np) hp -= static_cast<double>(c) / n * std::log(static_cast<double>(c) / n);
  for (long long c : nt) ht -= static_cast<double>(c) / n * std::log(static_cast<double>(c) / n);
  if (hp <= 0 || ht <= 0) return 0.0;
  return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

EvalReport report(const ClusterState& state, const Hin& hin, const RunResult& run,
                  long long runtime_ms) {
  if (!hin.has_truth())
    throw IntegrityError("report: the network carries no ground-truth labels");
  EvalReport rep;
  rep.nmi_score = nmi(state.labels_doc, hin.truth_labels);
  int kp = state.K_d;
  int kt = static_cast<int>(hin.truth_classes.size());
  rep.contingency.assign(static_cast<size_t>(kp),
                         std::vector<long long>(static_cast<size_t>(kt), 0));
  for (size_t i = 0; i < hin.truth_labels.size(); ++i)
    rep.contingency[static_cast<size_t>(state.labels_doc[i])]
                   [static_cast<size_t>(hin.truth_labels[i])] += 1;
  rep.objective = run.trace;
  rep.iterations = run.iterations;
  rep.converged = run.converged;
  rep.runtime_ms = runtime_ms;
  return rep;
}

void write_metrics_json(const EvalReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["nmi"] = report.nmi_score;
  j["objective"] = report.objective;
  j["iterations"] = report.iterations;
  j["runtime_ms"] = report.runtime_ms;
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write metrics file: " + path.string());
  out << j.dump(2) << "\n";
}

void write_trace_json(const RunResult& run, const std::filesystem::path& path) {
  nlohmann::json j;
  j["objective"] = run.trace;
  j["iterations"] = run.iterations;
  j["converged"] = run.converged;
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write trace file: " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace hinclus
