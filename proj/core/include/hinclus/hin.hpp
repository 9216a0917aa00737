#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hinclus/filters.hpp"
#include "hinclus/sparse.hpp"

namespace hinclus {

/// One corpus record.
struct Document {
  std::string id;
  std::optional<std::string> label;  // ground-truth class, evaluation only
  std::string text;
  bool operator==(const Document&) const = default;
};

std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path);
void save_corpus_jsonl(std::span<const Document> corpus,
                       const std::filesystem::path& path);

/// One extracted relation triple occurrence, by surface ids.
struct TripleOccurrence {
  std::string subject, relation, object;
  bool kb_confirmed = false;
  bool operator==(const TripleOccurrence&) const = default;
};

void write_triples_tsv(std::span<const TripleOccurrence> triples,
                       const std::filesystem::path& path);
std::vector<TripleOccurrence> read_triples_tsv(const std::filesystem::path& path);

struct BuildConfig {
  int min_word_df = 2;
  bool remove_stopwords = true;
};

/// The heterogeneous information network: document, word and per-type entity
/// node sets plus one sparse joint distribution per schema edge. Immutable
/// once built; safe for concurrent reads.
struct Hin {
  std::vector<std::string> doc_ids;                    // size M
  std::vector<std::string> words;                      // size N
  std::vector<std::string> type_names;                 // size T, sorted
  std::vector<std::vector<std::string>> entity_names;  // per type, size V_t

  SparseJoint p_dw;                // docs x words
  std::vector<SparseJoint> p_de;   // per type t: docs x entities of t

  struct EntityEdge {
    int t = -1, s = -1;  // type indices, t <= s
    SparseJoint joint;   // entities of t x entities of s
    bool operator==(const EntityEdge&) const = default;
  };
  std::vector<EntityEdge> p_ee;  // observed unordered type pairs only

  std::vector<int> truth_labels;          // size M when present, else empty
  std::vector<std::string> truth_classes; // class id per truth label value
  std::vector<std::string> dropped_docs;  // docs removed by word pruning

  int num_docs() const { return static_cast<int>(doc_ids.size()); }
  int num_words() const { return static_cast<int>(words.size()); }
  int num_types() const { return static_cast<int>(type_names.size()); }
  int num_entities(int t) const {
    return static_cast<int>(entity_names[static_cast<size_t>(t)].size());
  }
  bool has_truth() const { return !truth_labels.empty(); }

  bool operator==(const Hin&) const = default;
};

/// Builds the network from a corpus, its filtered typed mentions and the
/// extracted relation triples. Word counts run through stopword removal and
/// min-document-frequency pruning; every count matrix is independently
/// normalized to sum 1; empty rows/columns are compacted away.
Hin build_hin(const std::vector<Document>& corpus,
              std::span<const TypedMention> typed_mentions,
              std::span<const TripleOccurrence> triples,
              const BuildConfig& config);

/// Type-level summary graph of the network.
struct NetworkSchema {
  std::vector<std::string> node_types;
  std::vector<std::pair<std::string, std::string>> edge_types;
  bool operator==(const NetworkSchema&) const = default;
};

NetworkSchema schema(const Hin& hin);

/// Checks the Hin invariants (normalization, positive marginals, shapes);
/// throws IntegrityError on violation.
void validate_hin(const Hin& hin, double tol = 1e-12);

/// Persists the network as a directory: nodes.tsv, edges.tsv manifest, one
/// coordinate-format matrix file per edge, optional truth.tsv.
void save_hin(const Hin& hin, const std::filesystem::path& dir);
Hin load_hin(const std::filesystem::path& dir);

/// Uniform handle over the network's edges, in deterministic order:
/// doc-word, then doc-entity per type, then entity-entity pairs.
struct EdgeId {
  enum class Kind { DocWord, DocEntity, EntityEntity };
  Kind kind = Kind::DocWord;
  int t = -1, s = -1;  // DocEntity: t; EntityEntity: (t, s) with t <= s
};

std::vector<EdgeId> edge_list(const Hin& hin);
const SparseJoint& joint_of(const Hin& hin, const EdgeId& edge);
std::string edge_name(const Hin& hin, const EdgeId& edge);

}  // namespace hinclus
