#include "hinclus/hin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hinclus/errors.hpp"
#include "hinclus/text.hpp"
#include <json.hpp>

namespace hinclus {

using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_tsv(const std::string& line) {
  std::vector<std::string> cols;
  std::stringstream ss(line);
  std::string col;
  while (std::getline(ss, col, '\t')) cols.push_back(col);
  return cols;
}

}  // namespace

std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file: " + path.string());
  std::vector<Document> corpus;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("corpus file " + path.string() + " line " +
                       std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
        !j.contains("text") || !j["text"].is_string())
      throw ParseError("corpus file " + path.string() + " line " +
                       std::to_string(lineno) + ": expected {id, label, text}");
    Document d;
    d.id = j["id"].get<std::string>();
    d.text = j["text"].get<std::string>();
    if (j.contains("label") && j["label"].is_string())
      d.label = j["label"].get<std::string>();
    corpus.push_back(std::move(d));
  }
  return corpus;
}

void save_corpus_jsonl(std::span<const Document> corpus,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write corpus file: " + path.string());
  for (const Document& d : corpus) {
    json j;
    j["id"] = d.id;
    j["label"] = d.label ? json(*d.label) : json(nullptr);
    j["text"] = d.text;
    out << j.dump() << "\n";
  }
}

void write_triples_tsv(std::span<const TripleOccurrence> triples,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write triples file: " + path.string());
  for (const TripleOccurrence& t : triples)
    out << t.subject << '\t' << t.relation << '\t' << t.object << '\t'
        << (t.kb_confirmed ? 1 : 0) << '\n';
}

std::vector<TripleOccurrence> read_triples_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open triples file: " + path.string());
  std::vector<TripleOccurrence> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split_tsv(line);
    if (cols.size() != 4)
      throw ParseError("triples file " + path.string() + " line " +
                       std::to_string(lineno) + ": expected 4 columns");
    out.push_back({cols[0], cols[1], cols[2], cols[3] == "1"});
  }
  return out;
}

Hin build_hin(const std::vector<Document>& corpus,
              std::span<const TypedMention> typed_mentions,
              std::span<const TripleOccurrence> triples,
              const BuildConfig& config) {
  if (corpus.empty()) throw std::invalid_argument("build_hin: empty corpus");

  std::map<std::string, int> corpus_index;
  for (size_t i = 0; i < corpus.size(); ++i) {
    auto [it, inserted] = corpus_index.emplace(corpus[i].id, static_cast<int>(i));
    if (!inserted)
      throw IntegrityError("duplicate document id \"" + corpus[i].id + "\"");
  }
  for (const TypedMention& m : typed_mentions)
    if (!corpus_index.contains(m.doc_id))
      throw IntegrityError("mention references unknown document \"" + m.doc_id + "\"");

  // Word pipeline: tokenize, optional stopword removal, min-df pruning.
  std::vector<std::vector<std::string>> doc_tokens(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    auto tokens = tokenize(corpus[i].text);
    if (config.remove_stopwords) {
      std::erase_if(tokens, [](const std::string& t) { return is_stopword(t); });
    }
    doc_tokens[i] = std::move(tokens);
  }

  std::map<std::string, int> df;
  for (const auto& tokens : doc_tokens) {
    std::set<std::string> distinct(tokens.begin(), tokens.end());
    for (const auto& t : distinct) df[t] += 1;
  }

  Hin hin;
  std::map<std::string, int> word_index;  // first-occurrence order
  for (const auto& tokens : doc_tokens) {
    for (const auto& t : tokens) {
      if (df[t] < config.min_word_df) continue;
      if (word_index.emplace(t, static_cast<int>(hin.words.size())).second)
        hin.words.push_back(t);
    }
  }
  if (hin.words.empty())
    throw IntegrityError("build_hin: no word survives stopword/min-df pruning");

  // Surviving documents and their new indices.
  std::map<std::string, int> doc_new_index;
  std::vector<int> kept_original;
  for (size_t i = 0; i < corpus.size(); ++i) {
    bool any = false;
    for (const auto& t : doc_tokens[i])
      if (word_index.contains(t)) {
        any = true;
        break;
      }
    if (any) {
      doc_new_index.emplace(corpus[i].id, static_cast<int>(hin.doc_ids.size()));
      hin.doc_ids.push_back(corpus[i].id);
      kept_original.push_back(static_cast<int>(i));
    } else {
      hin.dropped_docs.push_back(corpus[i].id);
    }
  }

  // Entity registry: node key is (top type, entity id); order of types is
  // sorted, order of entities within a type is first mention occurrence.
  std::set<std::string> tops;
  for (const TypedMention& m : typed_mentions) {
    if (!doc_new_index.contains(m.doc_id)) continue;
    tops.insert(m.selected.top);
  }
  hin.type_names.assign(tops.begin(), tops.end());
  for (const std::string& t : hin.type_names)
    if (t == "doc" || t == "word")
      throw IntegrityError("top type name \"" + t + "\" collides with a reserved node kind");
  std::map<std::string, int> type_index;
  for (size_t t = 0; t < hin.type_names.size(); ++t)
    type_index[hin.type_names[t]] = static_cast<int>(t);
  hin.entity_names.resize(hin.type_names.size());
  std::map<std::pair<int, std::string>, int> entity_local;
  for (const TypedMention& m : typed_mentions) {
    if (!doc_new_index.contains(m.doc_id)) continue;
    int t = type_index.at(m.selected.top);
    auto key = std::make_pair(t, m.entity_id);
    if (entity_local.contains(key)) continue;
    entity_local[key] = static_cast<int>(hin.entity_names[static_cast<size_t>(t)].size());
    hin.entity_names[static_cast<size_t>(t)].push_back(m.entity_id);
  }

  // Document-word counts.
  CooBuilder dw;
  for (size_t k = 0; k < kept_original.size(); ++k) {
    for (const auto& tok : doc_tokens[static_cast<size_t>(kept_original[k])]) {
      auto it = word_index.find(tok);
      if (it != word_index.end()) dw.add(static_cast<int>(k), it->second, 1.0);
    }
  }
  hin.p_dw = dw.build(hin.num_docs(), hin.num_words());

  // Document-entity counts, one per typed mention occurrence.
  std::vector<CooBuilder> de(hin.type_names.size());
  for (const TypedMention& m : typed_mentions) {
    auto dit = doc_new_index.find(m.doc_id);
    if (dit == doc_new_index.end()) continue;
    int t = type_index.at(m.selected.top);
    int e = entity_local.at({t, m.entity_id});
    de[static_cast<size_t>(t)].add(dit->second, e, 1.0);
  }
  hin.p_de.resize(hin.type_names.size());
  for (size_t t = 0; t < de.size(); ++t)
    hin.p_de[t] = de[t].build(hin.num_docs(), hin.num_entities(static_cast<int>(t)));

  // Entity-entity counts from triple occurrences, grouped by the unordered
  // top-type pair of the endpoints. An entity mentioned under several top
  // types resolves to its dominant one (max mention count, ties by name).
  std::map<std::string, std::map<int, int>> mention_counts;  // id -> type -> n
  for (const TypedMention& m : typed_mentions) {
    if (!doc_new_index.contains(m.doc_id)) continue;
    mention_counts[m.entity_id][type_index.at(m.selected.top)] += 1;
  }
  std::map<std::string, std::pair<int, int>> dominant;  // id -> (type, local)
  for (const auto& [id, per_type] : mention_counts) {
    int best_t = -1, best_n = 0;
    for (const auto& [t, n] : per_type)
      if (n > best_n) {
        best_n = n;
        best_t = t;
      }
    dominant[id] = {best_t, entity_local.at({best_t, id})};
  }

  std::map<std::pair<int, int>, CooBuilder> ee;
  for (const TripleOccurrence& tr : triples) {
    auto s_it = dominant.find(tr.subject);
    auto o_it = dominant.find(tr.object);
    if (s_it == dominant.end() || o_it == dominant.end()) continue;
    auto [ts, ls] = s_it->second;
    auto [to, lo] = o_it->second;
    if (ts <= to)
      ee[{ts, to}].add(ls, lo, 1.0);
    else
      ee[{to, ts}].add(lo, ls, 1.0);
  }
  for (const auto& [pair, builder] : ee) {
    if (builder.empty()) continue;
    Hin::EntityEdge edge;
    edge.t = pair.first;
    edge.s = pair.second;
    edge.joint = builder.build(hin.num_entities(pair.first), hin.num_entities(pair.second));
    hin.p_ee.push_back(std::move(edge));
  }

  // Truth labels, present only when every surviving document is labeled.
  bool all_labeled = true;
  for (int orig : kept_original)
    if (!corpus[static_cast<size_t>(orig)].label) {
      all_labeled = false;
      break;
    }
  if (all_labeled) {
    std::map<std::string, int> class_index;
    for (int orig : kept_original) {
      const std::string& cls = *corpus[static_cast<size_t>(orig)].label;
      auto [it, inserted] =
          class_index.emplace(cls, static_cast<int>(hin.truth_classes.size()));
      if (inserted) hin.truth_classes.push_back(cls);
      hin.truth_labels.push_back(it->second);
    }
  }

  return hin;
}

NetworkSchema schema(const Hin& hin) {
  NetworkSchema s;
  s.node_types.push_back("doc");
  s.node_types.push_back("word");
  for (const std::string& t : hin.type_names) s.node_types.push_back(t);
  s.edge_types.emplace_back("doc", "word");
  for (const std::string& t : hin.type_names) s.edge_types.emplace_back("doc", t);
  for (const Hin::EntityEdge& e : hin.p_ee)
    s.edge_types.emplace_back(hin.type_names[static_cast<size_t>(e.t)],
                              hin.type_names[static_cast<size_t>(e.s)]);
  return s;
}

std::vector<EdgeId> edge_list(const Hin& hin) {
  std::vector<EdgeId> edges;
  edges.push_back({EdgeId::Kind::DocWord, -1, -1});
  for (int t = 0; t < hin.num_types(); ++t)
    edges.push_back({EdgeId::Kind::DocEntity, t, -1});
  for (const Hin::EntityEdge& e : hin.p_ee)
    edges.push_back({EdgeId::Kind::EntityEntity, e.t, e.s});
  return edges;
}

const SparseJoint& joint_of(const Hin& hin, const EdgeId& edge) {
  switch (edge.kind) {
    case EdgeId::Kind::DocWord:
      return hin.p_dw;
    case EdgeId::Kind::DocEntity:
      return hin.p_de[static_cast<size_t>(edge.t)];
    case EdgeId::Kind::EntityEntity:
      for (const Hin::EntityEdge& e : hin.p_ee)
        if (e.t == edge.t && e.s == edge.s) return e.joint;
      break;
  }
  throw std::out_of_range("joint_of: unknown edge");
}

std::string edge_name(const Hin& hin, const EdgeId& edge) {
  switch (edge.kind) {
    case EdgeId::Kind::DocWord:
      return "doc~word";
    case EdgeId::Kind::DocEntity:
      return "doc~" + hin.type_names[static_cast<size_t>(edge.t)];
    case EdgeId::Kind::EntityEntity:
      return hin.type_names[static_cast<size_t>(edge.t)] + "~" +
             hin.type_names[static_cast<size_t>(edge.s)];
  }
  return "?";
}

namespace {

void validate_matrix(const SparseJoint& m, const std::string& name, double tol) {
  double sum = 0;
  for (double v : m.val) {
    if (v < 0) throw IntegrityError("matrix " + name + ": negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol)
    throw IntegrityError("matrix " + name + ": entries sum to " +
                         format_double(sum) + ", not 1");
  for (double v : m.row_marg)
    if (v <= 0) throw IntegrityError("matrix " + name + ": zero row marginal");
  for (double v : m.col_marg)
    if (v <= 0) throw IntegrityError("matrix " + name + ": zero column marginal");
}

}  // namespace

void validate_hin(const Hin& hin, double tol) {
  validate_matrix(hin.p_dw, "doc~word", tol);
  if (hin.p_de.size() != hin.type_names.size())
    throw IntegrityError("p_de size does not match the number of entity types");
  for (int t = 0; t < hin.num_types(); ++t)
    validate_matrix(hin.p_de[static_cast<size_t>(t)],
                    edge_name(hin, {EdgeId::Kind::DocEntity, t, -1}), tol);
  for (const Hin::EntityEdge& e : hin.p_ee) {
    if (e.t > e.s) throw IntegrityError("entity edge with t > s");
    validate_matrix(e.joint, edge_name(hin, {EdgeId::Kind::EntityEntity, e.t, e.s}),
                    tol);
  }
  if (!hin.truth_labels.empty() &&
      hin.truth_labels.size() != hin.doc_ids.size())
    throw IntegrityError("truth labels do not cover every document");
}

namespace {

void write_matrix(const SparseJoint& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write matrix file: " + path.string());
  for (int r = 0; r < m.rows; ++r) {
    int global_r = m.row_ids[static_cast<size_t>(r)];
    for (std::int64_t k = m.row_ptr[static_cast<size_t>(r)];
         k < m.row_ptr[static_cast<size_t>(r) + 1]; ++k) {
      out << global_r << '\t' << m.col_ids[static_cast<size_t>(m.col_ind[static_cast<size_t>(k)])]
          << '\t' << format_double(m.val[static_cast<size_t>(k)]) << '\n';
    }
  }
}

SparseJoint read_matrix(const std::filesystem::path& path, int n_rows, int n_cols) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open matrix file: " + path.string());
  // Raw load without renormalization so persisted values round-trip exactly.
  std::map<std::pair<int, int>, double> cells;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split_tsv(line);
    if (cols.size() != 3)
      throw ParseError("matrix file " + path.string() + " line " +
                       std::to_string(lineno) + ": expected 3 columns");
    try {
      cells[{std::stoi(cols[0]), std::stoi(cols[1])}] = std::stod(cols[2]);
    } catch (const std::exception&) {
      throw ParseError("matrix file " + path.string() + " line " +
                       std::to_string(lineno) + ": bad value");
    }
  }
  CooBuilder builder;
  for (const auto& [rc, v] : cells) builder.add(rc.first, rc.second, v);
  SparseJoint m = builder.build(n_rows, n_cols);
  // build() divides by the total; undo it to restore the written values.
  double total = 0;
  for (const auto& [rc, v] : cells) total += v;
  for (auto& v : m.val) v *= total;
  for (auto& v : m.val_csc) v *= total;
  m.row_marg.assign(static_cast<size_t>(m.rows), 0.0);
  m.col_marg.assign(static_cast<size_t>(m.cols), 0.0);
  for (int r = 0; r < m.rows; ++r)
    for (std::int64_t k = m.row_ptr[static_cast<size_t>(r)];
         k < m.row_ptr[static_cast<size_t>(r) + 1]; ++k) {
      m.row_marg[static_cast<size_t>(r)] += m.val[static_cast<size_t>(k)];
      m.col_marg[static_cast<size_t>(m.col_ind[static_cast<size_t>(k)])] +=
          m.val[static_cast<size_t>(k)];
    }
  return m;
}

}  // namespace

void save_hin(const Hin& hin, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream nodes(dir / "nodes.tsv");
    if (!nodes) throw ParseError("cannot write " + (dir / "nodes.tsv").string());
    for (size_t i = 0; i < hin.doc_ids.size(); ++i)
      nodes << "doc\t" << i << '\t' << hin.doc_ids[i] << '\n';
    for (size_t i = 0; i < hin.words.size(); ++i)
      nodes << "word\t" << i << '\t' << hin.words[i] << '\n';
    for (size_t t = 0; t < hin.type_names.size(); ++t)
      for (size_t i = 0; i < hin.entity_names[t].size(); ++i)
        nodes << hin.type_names[t] << '\t' << i << '\t' << hin.entity_names[t][i]
              << '\n';
  }
  {
    std::ofstream edges(dir / "edges.tsv");
    if (!edges) throw ParseError("cannot write " + (dir / "edges.tsv").string());
    int idx = 0;
    auto emit = [&](const std::string& row_kind, const std::string& col_kind,
                    const SparseJoint& m) {
      std::string file = "m" + std::to_string(idx++) + ".tsv";
      edges << file << '\t' << row_kind << '\t' << col_kind << '\n';
      write_matrix(m, dir / file);
    };
    emit("doc", "word", hin.p_dw);
    for (int t = 0; t < hin.num_types(); ++t)
      emit("doc", hin.type_names[static_cast<size_t>(t)],
           hin.p_de[static_cast<size_t>(t)]);
    for (const Hin::EntityEdge& e : hin.p_ee)
      emit(hin.type_names[static_cast<size_t>(e.t)],
           hin.type_names[static_cast<size_t>(e.s)], e.joint);
  }
  if (hin.has_truth()) {
    std::ofstream truth(dir / "truth.tsv");
    if (!truth) throw ParseError("cannot write " + (dir / "truth.tsv").string());
    for (size_t i = 0; i < hin.truth_labels.size(); ++i)
      truth << i << '\t'
            << hin.truth_classes[static_cast<size_t>(hin.truth_labels[i])] << '\n';
  }
  if (!hin.dropped_docs.empty()) {
    std::ofstream dropped(dir / "dropped.tsv");
    for (const std::string& d : hin.dropped_docs) dropped << d << '\n';
  }
}

Hin load_hin(const std::filesystem::path& dir) {
  Hin hin;
  {
    std::ifstream nodes(dir / "nodes.tsv");
    if (!nodes) throw ParseError("cannot open " + (dir / "nodes.tsv").string());
    std::string line;
    int lineno = 0;
    std::map<std::string, int> type_index;
    while (std::getline(nodes, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto cols = split_tsv(line);
      if (cols.size() != 3)
        throw ParseError("nodes.tsv line " + std::to_string(lineno) +
                         ": expected 3 columns");
      const std::string& kind = cols[0];
      const std::string& name = cols[2];
      if (kind == "doc") {
        hin.doc_ids.push_back(name);
      } else if (kind == "word") {
        hin.words.push_back(name);
      } else {
        auto [it, inserted] =
            type_index.emplace(kind, static_cast<int>(hin.type_names.size()));
        if (inserted) {
          hin.type_names.push_back(kind);
          hin.entity_names.emplace_back();
        }
        hin.entity_names[static_cast<size_t>(it->second)].push_back(name);
      }
    }
  }
  std::map<std::string, int> type_index;
  for (size_t t = 0; t < hin.type_names.size(); ++t)
    type_index[hin.type_names[t]] = static_cast<int>(t);
  hin.p_de.resize(hin.type_names.size());

  {
    std::ifstream edges(dir / "edges.tsv");
    if (!edges) throw ParseError("cannot open " + (dir / "edges.tsv").string());
    std::string line;
    int lineno = 0;
    while (std::getline(edges, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto cols = split_tsv(line);
      if (cols.size() != 3)
        throw ParseError("edges.tsv line " + std::to_string(lineno) +
                         ": expected 3 columns");
      const std::string& file = cols[0];
      const std::string& row_kind = cols[1];
      const std::string& col_kind = cols[2];
      auto side_size = [&](const std::string& kind) -> int {
        if (kind == "doc") return hin.num_docs();
        if (kind == "word") return hin.num_words();
        auto it = type_index.find(kind);
        if (it == type_index.end())
          throw IntegrityError("edges.tsv references unknown node kind \"" + kind +
                               "\"");
        return hin.num_entities(it->second);
      };
      SparseJoint m = read_matrix(dir / file, side_size(row_kind), side_size(col_kind));
      if (row_kind == "doc" && col_kind == "word") {
        hin.p_dw = std::move(m);
      } else if (row_kind == "doc") {
        hin.p_de[static_cast<size_t>(type_index.at(col_kind))] = std::move(m);
      } else {
        Hin::EntityEdge e;
        e.t = type_index.at(row_kind);
        e.s = type_index.at(col_kind);
        e.joint = std::move(m);
        hin.p_ee.push_back(std::move(e));
      }
    }
  }

  if (std::filesystem::exists(dir / "truth.tsv")) {
    std::ifstream truth(dir / "truth.tsv");
    std::string line;
    std::map<std::string, int> class_index;
    std::vector<std::pair<int, std::string>> rows;
    while (std::getline(truth, line)) {
      if (line.empty()) continue;
      auto cols = split_tsv(line);
      if (cols.size() != 2) throw ParseError("truth.tsv: expected 2 columns");
      rows.emplace_back(std::stoi(cols[0]), cols[1]);
    }
    hin.truth_labels.assign(hin.doc_ids.size(), -1);
    for (const auto& [idx, cls] : rows) {
      auto [it, inserted] =
          class_index.emplace(cls, static_cast<int>(hin.truth_classes.size()));
      if (inserted) hin.truth_classes.push_back(cls);
      if (idx < 0 || idx >= hin.num_docs())
        throw IntegrityError("truth.tsv references unknown document index " +
                             std::to_string(idx));
      hin.truth_labels[static_cast<size_t>(idx)] = it->second;
    }
    for (int l : hin.truth_labels)
      if (l < 0) throw IntegrityError("truth.tsv does not cover every document");
  }

  if (std::filesystem::exists(dir / "dropped.tsv")) {
    std::ifstream dropped(dir / "dropped.tsv");
    std::string line;
    while (std::getline(dropped, line))
      if (!line.empty()) hin.dropped_docs.push_back(line);
  }

  validate_hin(hin, 1e-9);
  return hin;
}

}  // namespace hinclus
