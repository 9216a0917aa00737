#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "hinclus/cluster.hpp"
#include "hinclus/hin.hpp"

namespace hinclus {

/// Normalized mutual information I(P;T)/sqrt(H(P) H(T)) in natural log,
/// computed from the contingency table. Returns 0 when either side has a
/// single cluster (zero entropy) and exactly 1.0 when the partitions are
/// identical up to relabeling.
double nmi(std::span<const int> predicted, std::span<const int> truth);

struct EvalReport {
  double nmi_score = 0.0;
  std::vector<std::vector<long long>> contingency;  // predicted x truth
  std::vector<double> objective;
  int iterations = 0;
  bool converged = false;
  long long runtime_ms = 0;
};

/// Document-side evaluation against the network's ground-truth labels
/// (word and entity labels never enter the score).
EvalReport report(const ClusterState& state, const Hin& hin,
                  const RunResult& run, long long runtime_ms = 0);

void write_metrics_json(const EvalReport& report, const std::filesystem::path& path);
void write_trace_json(const RunResult& run, const std::filesystem::path& path);

}  // namespace hinclus
