#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace hinclus {

/// A (top-level type, sub-type) pair from the two-level type hierarchy.
struct TypePair {
  std::string top;
  std::string sub;
  auto operator<=>(const TypePair&) const = default;
};

struct Relation {
  std::string id;
  std::vector<std::string> triggers;  // normalized token phrases
};

struct Triple {
  int subject = -1;   // entity index
  int relation = -1;  // relation index
  int object = -1;    // entity index
  auto operator<=>(const Triple&) const = default;
};

/// Immutable typed-entity knowledge base. Safe for shared concurrent reads
/// once loaded.
class KnowledgeBase {
 public:
  std::vector<std::string> entity_ids;
  std::unordered_map<std::string, int> entity_index;
  std::vector<std::vector<TypePair>> entity_types;  // per entity, sorted

  std::map<std::string, std::string> sub_to_top;  // type hierarchy, root "Object"

  // normalized surface phrase -> candidate entity indices (file order)
  std::unordered_map<std::string, std::vector<int>> lexicon;
  int max_surface_tokens = 0;

  std::vector<Relation> relations;
  std::unordered_map<std::string, int> relation_index;

  std::vector<Triple> triples;
  std::set<Triple> triple_set;

  // n(t_k): number of entities carrying sub-type t_k; derived at load.
  std::map<std::string, int> type_counts;
  long long type_count_total = 0;  // sum over all n(t_k)

  int total_types() const { return static_cast<int>(sub_to_top.size()); }

  // n(e_i, t_k) in {0,1}
  bool entity_has_sub(int entity, const std::string& sub) const;

  int find_entity(const std::string& id) const;  // -1 if unknown
};

/// Loads and validates a KB from the JSON format described in the README.
/// Throws ParseError for malformed files and IntegrityError for dangling
/// references; both name the offending record.
KnowledgeBase load_kb(const std::filesystem::path& path);

void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path);

/// A grounded occurrence of a candidate entity in one document.
struct Mention {
  std::string doc_id;
  int begin = 0;  // token span [begin, end)
  int end = 0;
  int entity = -1;
  std::vector<TypePair> candidates;  // subset of the entity's KB types, sorted
};

/// Greedy left-to-right longest-match grounding of a token list against the
/// lexicon. Matched spans never overlap; one Mention per candidate entity.
std::vector<Mention> ground_mentions(std::span<const std::string> tokens,
                                     const KnowledgeBase& kb,
                                     const std::string& doc_id);

/// Simplified lambda-DCS logic form: unaries, binaries, joins, intersections.
struct LogicalForm {
  enum class Kind { Unary, Binary, Join, Intersection };
  Kind kind = Kind::Unary;
  int entity = -1;    // Unary
  int relation = -1;  // Binary
  std::vector<LogicalForm> parts;  // Join: {binary, unary}; Intersection: {unary, unary}

  static LogicalForm unary(int entity);
  static LogicalForm binary(int relation);
  static LogicalForm join(LogicalForm binary, LogicalForm unary);
  static LogicalForm intersection(LogicalForm a, LogicalForm b);

  /// True when every referenced entity/relation exists in the KB and the
  /// constructor arity rules hold.
  bool resolves_against(const KnowledgeBase& kb) const;

  std::string str(const KnowledgeBase& kb) const;
};

/// A relation hit between two adjacent mentions.
struct RelationMatch {
  std::string doc_id;
  LogicalForm form;  // Join(Binary(r), Unary(object))
  Triple triple;
  bool kb_confirmed = false;
};

/// Matches relation trigger phrases against the token gap between adjacent
/// mention spans. Mentions must be sorted by span start with distinct spans
/// non-overlapping; gaps longer than 10 tokens are skipped.
std::vector<RelationMatch> extract_relations(std::span<const Mention> mentions,
                                             std::span<const std::string> tokens,
                                             const KnowledgeBase& kb);

}  // namespace hinclus
