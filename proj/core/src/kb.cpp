#include "hinclus/kb.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hinclus/errors.hpp"
#include "hinclus/text.hpp"
#include <json.hpp>

namespace hinclus {

using nlohmann::json;

bool KnowledgeBase::entity_has_sub(int entity, const std::string& sub) const {
  for (const TypePair& tp : entity_types[static_cast<size_t>(entity)])
    if (tp.sub == sub) return true;
  return false;
}

int KnowledgeBase::find_entity(const std::string& id) const {
  auto it = entity_index.find(id);
  return it == entity_index.end() ? -1 : it->second;
}

namespace {

json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open KB file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

const json& require_array(const json& j, const char* key, const std::filesystem::path& path) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array())
    throw ParseError("KB file " + path.string() + ": missing or non-array \"" +
                     key + "\"");
  return *it;
}

std::string require_string(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw ParseError("KB record " + where + ": missing or non-string \"" + key + "\"");
  return it->get<std::string>();
}

}  // namespace

KnowledgeBase load_kb(const std::filesystem::path& path) {
  json j = parse_json_file(path);
  if (!j.is_object()) throw ParseError("KB file " + path.string() + ": root is not an object");

  KnowledgeBase kb;

  for (const json& t : require_array(j, "types", path)) {
    std::string sub = require_string(t, "sub", "types[]");
    std::string top = require_string(t, "top", "types[]");
    auto [it, inserted] = kb.sub_to_top.emplace(sub, top);
    if (!inserted && it->second != top)
      throw IntegrityError("sub-type \"" + sub + "\" mapped to two top types: \"" +
                           it->second + "\" and \"" + top + "\"");
  }

  for (const json& e : require_array(j, "entities", path)) {
    std::string id = require_string(e, "id", "entities[]");
    if (kb.entity_index.contains(id))
      throw IntegrityError("duplicate entity id \"" + id + "\"");
    int idx = static_cast<int>(kb.entity_ids.size());
    kb.entity_index.emplace(id, idx);
    kb.entity_ids.push_back(id);

    std::vector<TypePair> types;
    auto ts = e.find("types");
    if (ts == e.end() || !ts->is_array())
      throw ParseError("entity \"" + id + "\": missing or non-array \"types\"");
    for (const json& tn : *ts) {
      if (!tn.is_string())
        throw ParseError("entity \"" + id + "\": non-string type name");
      std::string sub = tn.get<std::string>();
      auto it = kb.sub_to_top.find(sub);
      if (it == kb.sub_to_top.end())
        throw IntegrityError("entity \"" + id + "\" references unknown sub-type \"" +
                             sub + "\"");
      types.push_back({it->second, sub});
    }
    std::sort(types.begin(), types.end());
    types.erase(std::unique(types.begin(), types.end()), types.end());
    kb.entity_types.push_back(std::move(types));
  }

  for (const json& lx : require_array(j, "lexicon", path)) {
    std::string surface = require_string(lx, "surface", "lexicon[]");
    std::string entity = require_string(lx, "entity", "lexicon[]");
    int idx = kb.find_entity(entity);
    if (idx < 0)
      throw IntegrityError("lexicon surface \"" + surface +
                           "\" references unknown entity \"" + entity + "\"");
    std::string norm = normalize_surface(surface);
    if (norm.empty())
      throw IntegrityError("lexicon surface \"" + surface +
                           "\" is empty after normalization");
    auto& cands = kb.lexicon[norm];
    if (std::find(cands.begin(), cands.end(), idx) == cands.end())
      cands.push_back(idx);
    int ntok = static_cast<int>(std::count(norm.begin(), norm.end(), ' ')) + 1;
    kb.max_surface_tokens = std::max(kb.max_surface_tokens, ntok);
  }

  for (const json& r : require_array(j, "relations", path)) {
    std::string id = require_string(r, "id", "relations[]");
    if (kb.relation_index.contains(id))
      throw IntegrityError("duplicate relation id \"" + id + "\"");
    Relation rel;
    rel.id = id;
    auto trig = r.find("triggers");
    if (trig == r.end() || !trig->is_array())
      throw ParseError("relation \"" + id + "\": missing or non-array \"triggers\"");
    for (const json& t : *trig) {
      if (!t.is_string())
        throw ParseError("relation \"" + id + "\": non-string trigger");
      std::string norm = normalize_surface(t.get<std::string>());
      if (!norm.empty()) rel.triggers.push_back(norm);
    }
    kb.relation_index.emplace(id, static_cast<int>(kb.relations.size()));
    kb.relations.push_back(std::move(rel));
  }

  for (const json& t : require_array(j, "triples", path)) {
    if (!t.is_array() || t.size() != 3 || !t[0].is_string() || !t[1].is_string() ||
        !t[2].is_string())
      throw ParseError("triples[]: each triple must be [entity, relation, entity]");
    std::string e1 = t[0].get<std::string>();
    std::string rel = t[1].get<std::string>();
    std::string e2 = t[2].get<std::string>();
    Triple triple;
    triple.subject = kb.find_entity(e1);
    if (triple.subject < 0)
      throw IntegrityError("triple references unknown entity \"" + e1 + "\"");
    auto rit = kb.relation_index.find(rel);
    if (rit == kb.relation_index.end())
      throw IntegrityError("triple references unknown relation \"" + rel + "\"");
    triple.relation = rit->second;
    triple.object = kb.find_entity(e2);
    if (triple.object < 0)
      throw IntegrityError("triple references unknown entity \"" + e2 + "\"");
    kb.triples.push_back(triple);
    kb.triple_set.insert(triple);
  }

  // Derived counts: n(t_k) = number of entities carrying t_k, n(e,t) in {0,1}.
  for (const auto& [sub, top] : kb.sub_to_top) kb.type_counts[sub] = 0;
  for (const auto& types : kb.entity_types)
    for (const TypePair& tp : types) kb.type_counts[tp.sub] += 1;
  kb.type_count_total = 0;
  for (const auto& [sub, n] : kb.type_counts) kb.type_count_total += n;

  return kb;
}

void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path) {
  json j;
  j["types"] = json::array();
  for (const auto& [sub, top] : kb.sub_to_top)
    j["types"].push_back({{"sub", sub}, {"top", top}});
  j["entities"] = json::array();
  for (size_t i = 0; i < kb.entity_ids.size(); ++i) {
    json types = json::array();
    for (const TypePair& tp : kb.entity_types[i]) types.push_back(tp.sub);
    j["entities"].push_back({{"id", kb.entity_ids[i]}, {"types", types}});
  }
  j["lexicon"] = json::array();
  {
    // deterministic order: sort by (surface, entity file order)
    std::vector<std::pair<std::string, int>> rows;
    for (const auto& [surface, ents] : kb.lexicon)
      for (int e : ents) rows.emplace_back(surface, e);
    std::sort(rows.begin(), rows.end());
    for (const auto& [surface, e] : rows)
      j["lexicon"].push_back({{"surface", surface}, {"entity", kb.entity_ids[static_cast<size_t>(e)]}});
  }
  j["relations"] = json::array();
  for (const Relation& r : kb.relations)
    j["relations"].push_back({{"id", r.id}, {"triggers", r.triggers}});
  j["triples"] = json::array();
  for (const Triple& t : kb.triples)
    j["triples"].push_back({kb.entity_ids[static_cast<size_t>(t.subject)],
                            kb.relations[static_cast<size_t>(t.relation)].id,
                            kb.entity_ids[static_cast<size_t>(t.object)]});
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write KB file: " + path.string());
  out << j.dump(2) << "\n";
}

std::vector<Mention> ground_mentions(std::span<const std::string> tokens,
                                     const KnowledgeBase& kb,
                                     const std::string& doc_id) {
  std::vector<Mention> mentions;
  const int n = static_cast<int>(tokens.size());
  int pos = 0;
  while (pos < n) {
    int best_len = 0;
    const std::vector<int>* best_cands = nullptr;
    int max_len = std::min(kb.max_surface_tokens, n - pos);
    std::string phrase;
    for (int len = 1; len <= max_len; ++len) {
      if (len > 1) phrase += ' ';
      phrase += tokens[static_cast<size_t>(pos + len - 1)];
      auto it = kb.lexicon.find(phrase);
      if (it != kb.lexicon.end()) {
        best_len = len;
        best_cands = &it->second;
      }
    }
    if (best_cands == nullptr) {
      ++pos;
      continue;
    }
    for (int entity : *best_cands) {
      Mention m;
      m.doc_id = doc_id;
      m.begin = pos;
      m.end = pos + best_len;
      m.entity = entity;
      m.candidates = kb.entity_types[static_cast<size_t>(entity)];
      mentions.push_back(std::move(m));
    }
    pos += best_len;
  }
  return mentions;
}

LogicalForm LogicalForm::unary(int entity) {
  LogicalForm f;
  f.kind = Kind::Unary;
  f.entity = entity;
  return f;
}

LogicalForm LogicalForm::binary(int relation) {
  LogicalForm f;
  f.kind = Kind::Binary;
  f.relation = relation;
  return f;
}

LogicalForm LogicalForm::join(LogicalForm binary, LogicalForm unary) {
  LogicalForm f;
  f.kind = Kind::Join;
  f.parts.push_back(std::move(binary));
  f.parts.push_back(std::move(unary));
  return f;
}

LogicalForm LogicalForm::intersection(LogicalForm a, LogicalForm b) {
  LogicalForm f;
  f.kind = Kind::Intersection;
  f.parts.push_back(std::move(a));
  f.parts.push_back(std::move(b));
  return f;
}

bool LogicalForm::resolves_against(const KnowledgeBase& kb) const {
  switch (kind) {
    case Kind::Unary:
      return entity >= 0 && entity < static_cast<int>(kb.entity_ids.size());
    case Kind::Binary:
      return relation >= 0 && relation < static_cast<int>(kb.relations.size());
    case Kind::Join:
      return parts.size() == 2 && parts[0].kind == Kind::Binary &&
             parts[1].kind != Kind::Binary && parts[0].resolves_against(kb) &&
             parts[1].resolves_against(kb);
    case Kind::Intersection:
      return parts.size() == 2 && parts[0].kind != Kind::Binary &&
             parts[1].kind != Kind::Binary && parts[0].resolves_against(kb) &&
             parts[1].resolves_against(kb);
  }
  return false;
}

std::string LogicalForm::str(const KnowledgeBase& kb) const {
  switch (kind) {
    case Kind::Unary:
      return kb.entity_ids[static_cast<size_t>(entity)];
    case Kind::Binary:
      return kb.relations[static_cast<size_t>(relation)].id;
    case Kind::Join:
      return parts[0].str(kb) + "." + parts[1].str(kb);
    case Kind::Intersection:
      return "(" + parts[0].str(kb) + " & " + parts[1].str(kb) + ")";
  }
  return "";
}

namespace {

constexpr int kMaxGapTokens = 10;

struct SpanGroup {
  int begin = 0, end = 0;
  std::vector<int> entities;
};

}  // namespace

std::vector<RelationMatch> extract_relations(std::span<const Mention> mentions,
                                             std::span<const std::string> tokens,
                                             const KnowledgeBase& kb) {
  std::vector<RelationMatch> out;
  if (mentions.size() < 2) return out;

  // Collapse same-span candidate mentions into one group per span.
  std::vector<SpanGroup> spans;
  for (const Mention& m : mentions) {
    if (!spans.empty() && spans.back().begin == m.begin && spans.back().end == m.end) {
      spans.back().entities.push_back(m.entity);
    } else {
      spans.push_back({m.begin, m.end, {m.entity}});
    }
  }

  for (size_t i = 0; i + 1 < spans.size(); ++i) {
    const SpanGroup& a = spans[i];
    const SpanGroup& b = spans[i + 1];
    int gap_len = b.begin - a.end;
    if (gap_len <= 0 || gap_len > kMaxGapTokens) continue;
    std::string gap = join_tokens(tokens.subspan(static_cast<size_t>(a.end),
                                                 static_cast<size_t>(gap_len)));

    // Longest trigger contained in the gap wins; ties broken by
    // (trigger, relation id) to stay deterministic.
    int best_rel = -1;
    std::string best_trigger;
    for (size_t r = 0; r < kb.relations.size(); ++r) {
      for (const std::string& trig : kb.relations[r].triggers) {
        if (gap.find(trig) == std::string::npos) continue;
        bool better = trig.size() > best_trigger.size() ||
                      (trig.size() == best_trigger.size() &&
                       (best_rel < 0 || trig < best_trigger ||
                        (trig == best_trigger &&
                         kb.relations[r].id < kb.relations[static_cast<size_t>(best_rel)].id)));
        if (better) {
          best_rel = static_cast<int>(r);
          best_trigger = trig;
        }
      }
    }
    if (best_rel < 0) continue;

    for (int e1 : a.entities) {
      for (int e2 : b.entities) {
        RelationMatch match;
        match.doc_id = mentions.front().doc_id;
        match.form = LogicalForm::join(LogicalForm::binary(best_rel),
                                       LogicalForm::unary(e2));
        match.triple = Triple{e1, best_rel, e2};
        match.kb_confirmed = kb.triple_set.contains(match.triple);
        out.push_back(std::move(match));
      }
    }
  }
  return out;
}

}  // namespace hinclus
