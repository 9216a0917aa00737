#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hinclus/cluster.hpp"
#include "hinclus/constraints.hpp"
#include "hinclus/eval.hpp"
#include "hinclus/hin.hpp"
#include "hinclus/synth.hpp"

namespace hinclus {

/// Everything the staged pipeline needs; loaded from a JSON config file and
/// overridable by command-line flags (flags win).
struct PipelineConfig {
  std::filesystem::path workdir = "work";
  std::filesystem::path corpus;  // default: workdir/corpus.jsonl
  std::filesystem::path kb;      // default: workdir/kb.json

  std::string filter = "cbsf";  // fbsf | dfbsf | cbsf
  int filter_threshold = 1;
  int cbsf_k = 0;  // 0: min(total sub-types, entities in the document)
  std::string cbsf_evidence = "deterministic";

  int k_docs = 0;  // 0: number of ground-truth classes when available
  int k_words = 0;
  std::vector<int> k_entities;
  int max_iter = 20;
  double max_delta = 1e-6;
  int icm_max_sweeps = 10;
  std::uint64_t seed = 0;
  double epsilon = 1e-10;
  std::optional<double> w_must, w_cannot;
  long long constraints = -1;  // sample size; -1 keeps all

  int min_word_df = 2;
  bool remove_stopwords = true;

  SynthParams synth;

  std::filesystem::path corpus_path() const {
    return corpus.empty() ? workdir / "corpus.jsonl" : corpus;
  }
  std::filesystem::path kb_path() const {
    return kb.empty() ? workdir / "kb.json" : kb;
  }

  OptimizerConfig optimizer(int resolved_k_docs) const;
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Number of worker threads for parallel per-document stages: the
/// HINCLUS_THREADS environment variable, 0 or unset meaning all cores.
int thread_budget();

// Stage plumbing formats.
void write_raw_mentions_tsv(std::span<const Mention> mentions,
                            const KnowledgeBase& kb,
                            const std::filesystem::path& path);
std::vector<Mention> read_raw_mentions_tsv(const std::filesystem::path& path,
                                           const KnowledgeBase& kb);

void write_assignments_tsv(const ClusterState& state, const Hin& hin,
                           const std::filesystem::path& path);
/// Reads back the document labels (and cluster count) of an assignments file.
std::pair<std::vector<int>, int> read_doc_assignments_tsv(
    const std::filesystem::path& path, const Hin& hin);

RunResult read_trace_json(const std::filesystem::path& path);

/// Pipeline stages; each reads its inputs from and writes its outputs into
/// the workdir, so every stage can also run standalone.
namespace stages {
void synth(const PipelineConfig& config);
void ground(const PipelineConfig& config);
void filter(const PipelineConfig& config);
void build(const PipelineConfig& config);
void constrain(const PipelineConfig& config);
void cluster(const PipelineConfig& config);
void evaluate(const PipelineConfig& config);
}  // namespace stages

/// ingest -> ground -> filter -> build -> constrain -> cluster -> evaluate.
void run_pipeline(const PipelineConfig& config);

}  // namespace hinclus
