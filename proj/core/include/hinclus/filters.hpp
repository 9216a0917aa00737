#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hinclus/kb.hpp"

namespace hinclus {

/// A mention with one selected type after semantic filtering.
struct TypedMention {
  std::string doc_id;
  int begin = 0;
  int end = 0;
  int entity = -1;
  std::string entity_id;  // kept so downstream stages never need the KB
  TypePair selected;
  double score = 0.0;
  std::string filter;  // "fbsf" | "dfbsf" | "cbsf" (fallbacks recorded as "fbsf")
};

/// Per-(doc, entity, sub-type) in-document frequencies and per-(entity,
/// sub-type) document frequencies over a mention list.
struct TypeStats {
  // (doc_id, entity, sub) -> mention count in that document
  std::map<std::tuple<std::string, int, std::string>, int> in_doc;
  // (entity, sub) -> number of documents where the pair occurs
  std::map<std::pair<int, std::string>, int> doc_freq;

  int in_doc_count(const std::string& doc, int entity, const std::string& sub) const;
  int doc_freq_count(int entity, const std::string& sub) const;
};

TypeStats compute_type_stats(std::span<const Mention> mentions);

/// Frequency based semantic filter: per (document, entity), keeps types whose
/// in-document frequency reaches the threshold and selects the most frequent
/// survivor (ties by sub-type name).
std::vector<TypedMention> fbsf(std::span<const Mention> mentions,
                               const KnowledgeBase& kb, int threshold);

/// Document-frequency based semantic filter: one type per entity corpus-wide,
/// scored by the number of documents carrying the (entity, type) pair.
std::vector<TypedMention> dfbsf(std::span<const Mention> mentions,
                                const KnowledgeBase& kb, int threshold);

/// Lloyd k-means with Euclidean distance; initial centers drawn uniformly
/// without replacement from the points. Runs until the assignment is fixed
/// or 100 iterations. Deterministic given the seed.
std::vector<int> kmeans(const std::vector<std::vector<double>>& points, int k,
                        std::uint64_t seed);

enum class CbsfEvidence { deterministic, doc_freq, corpus_doc_freq };

struct CbsfOptions {
  int k = 0;  // 0: min(total sub-types, entities in the document)
  std::uint64_t seed = 0;
  CbsfEvidence evidence = CbsfEvidence::deterministic;
};

/// Naive-Bayes conceptualization scores for one entity cluster:
/// log P(t_k | cluster) up to the shared normalizer, i.e.
/// log P(t_k) + sum_i log P(e_i | t_k). Only sub-types carried by at least
/// one cluster member are scored; evidence(entity, sub) supplies the count
/// that replaces n(e_i, t_k). Types with zero probability get -infinity.
std::map<std::string, double> conceptualization_log_scores(
    const KnowledgeBase& kb, std::span<const int> cluster_entities,
    const std::function<double(int, const std::string&)>& evidence);

/// Conceptualization based semantic filter: clusters each document's entities
/// by their type vectors, scores types per cluster, and lets every entity
/// pick its best-scoring candidate. Entities whose candidates all score zero
/// fall back to fbsf selection (threshold 1) and are tagged "fbsf".
std::vector<TypedMention> cbsf(std::span<const Mention> mentions,
                               const KnowledgeBase& kb, const CbsfOptions& opts);

void write_mentions_tsv(std::span<const TypedMention> mentions,
                        const std::filesystem::path& path);
std::vector<TypedMention> read_mentions_tsv(const std::filesystem::path& path);

}  // namespace hinclus
