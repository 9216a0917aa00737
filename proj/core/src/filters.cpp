#include "hinclus/filters.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "hinclus/errors.hpp"

namespace hinclus {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Documents in first-appearance order, mention indices per document.
std::vector<std::pair<std::string, std::vector<size_t>>> group_by_doc(
    std::span<const Mention> mentions) {
  std::vector<std::pair<std::string, std::vector<size_t>>> groups;
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < mentions.size(); ++i) {
    auto [it, inserted] = index.emplace(mentions[i].doc_id, groups.size());
    if (inserted) groups.push_back({mentions[i].doc_id, {}});
    groups[it->second].second.push_back(i);
  }
  return groups;
}

const TypePair* find_candidate(const Mention& m, const std::string& sub) {
  for (const TypePair& tp : m.candidates)
    if (tp.sub == sub) return &tp;
  return nullptr;
}

// Max-count sub-type among candidates of (doc, entity) mentions, counting a
// mention toward every sub it carries. Ties go to the smaller sub name.
// Returns empty string when nothing reaches the threshold.
std::pair<std::string, int> select_by_count(const std::map<std::string, int>& counts,
                                            int threshold) {
  std::string best;
  int best_count = 0;
  for (const auto& [sub, count] : counts) {
    if (count < threshold) continue;
    if (count > best_count) {
      best = sub;
      best_count = count;
    }
  }
  return {best, best_count};
}

TypedMention make_typed(const Mention& m, const KnowledgeBase& kb,
                        const TypePair& selected, double score,
                        const std::string& filter) {
  TypedMention t;
  t.doc_id = m.doc_id;
  t.begin = m.begin;
  t.end = m.end;
  t.entity = m.entity;
  t.entity_id = kb.entity_ids[static_cast<size_t>(m.entity)];
  t.selected = selected;
  t.score = score;
  t.filter = filter;
  return t;
}

}  // namespace

int TypeStats::in_doc_count(const std::string& doc, int entity,
                            const std::string& sub) const {
  auto it = in_doc.find({doc, entity, sub});
  return it == in_doc.end() ? 0 : it->second;
}

int TypeStats::doc_freq_count(int entity, const std::string& sub) const {
  auto it = doc_freq.find({entity, sub});
  return it == doc_freq.end() ? 0 : it->second;
}

TypeStats compute_type_stats(std::span<const Mention> mentions) {
  TypeStats stats;
  for (const Mention& m : mentions)
    for (const TypePair& tp : m.candidates)
      stats.in_doc[{m.doc_id, m.entity, tp.sub}] += 1;
  for (const auto& [key, count] : stats.in_doc) {
    (void)count;
    stats.doc_freq[{std::get<1>(key), std::get<2>(key)}] += 1;
  }
  return stats;
}

std::vector<TypedMention> fbsf(std::span<const Mention> mentions,
                               const KnowledgeBase& kb, int threshold) {
  if (threshold < 1) throw std::invalid_argument("fbsf: threshold must be >= 1");

  // (doc, entity) -> selected sub and its count
  std::map<std::pair<std::string, int>, std::pair<std::string, int>> selection;
  std::map<std::pair<std::string, int>, std::map<std::string, int>> counts;
  for (const Mention& m : mentions)
    for (const TypePair& tp : m.candidates)
      counts[{m.doc_id, m.entity}][tp.sub] += 1;
  for (const auto& [key, per_sub] : counts) {
    auto [sub, count] = select_by_count(per_sub, threshold);
    if (!sub.empty()) selection[key] = {sub, count};
  }

  std::vector<TypedMention> out;
  for (const Mention& m : mentions) {
    auto it = selection.find({m.doc_id, m.entity});
    if (it == selection.end()) continue;
    const TypePair* tp = find_candidate(m, it->second.first);
    if (tp == nullptr) continue;
    out.push_back(make_typed(m, kb, *tp, it->second.second, "fbsf"));
  }
  return out;
}

std::vector<TypedMention> dfbsf(std::span<const Mention> mentions,
                                const KnowledgeBase& kb, int threshold) {
  if (threshold < 1) throw std::invalid_argument("dfbsf: threshold must be >= 1");

  TypeStats stats = compute_type_stats(mentions);
  std::map<int, std::map<std::string, int>> per_entity;
  for (const auto& [key, df] : stats.doc_freq) per_entity[key.first][key.second] = df;

  std::map<int, std::pair<std::string, int>> selection;  // entity -> (sub, df)
  for (const auto& [entity, per_sub] : per_entity) {
    auto [sub, df] = select_by_count(per_sub, threshold);
    if (!sub.empty()) selection[entity] = {sub, df};
  }

  std::vector<TypedMention> out;
  for (const Mention& m : mentions) {
    auto it = selection.find(m.entity);
    if (it == selection.end()) continue;
    const TypePair* tp = find_candidate(m, it->second.first);
    if (tp == nullptr) continue;
    out.push_back(make_typed(m, kb, *tp, it->second.second, "dfbsf"));
  }
  return out;
}

std::vector<int> kmeans(const std::vector<std::vector<double>>& points, int k,
                        std::uint64_t seed) {
  const int n = static_cast<int>(points.size());
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (k > n) throw std::invalid_argument("kmeans: k exceeds the number of points");
  const size_t dim = points.empty() ? 0 : points[0].size();
  for (const auto& p : points)
    if (p.size() != dim) throw std::invalid_argument("kmeans: inconsistent dimensions");

  // Initial centers: uniform sample of k distinct points.
  std::mt19937_64 rng(seed);
  std::vector<int> pool(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
  std::vector<std::vector<double>> centers;
  centers.reserve(static_cast<size_t>(k));
  for (int c = 0; c < k; ++c) {
    std::uniform_int_distribution<int> pick(c, n - 1);
    std::swap(pool[static_cast<size_t>(c)], pool[static_cast<size_t>(pick(rng))]);
    centers.push_back(points[static_cast<size_t>(pool[static_cast<size_t>(c)])]);
  }

  auto sqdist = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t d = 0; d < a.size(); ++d) {
      double diff = a[d] - b[d];
      s += diff * diff;
    }
    return s;
  };

  std::vector<int> assign(static_cast<size_t>(n), 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sqdist(points[static_cast<size_t>(i)], centers[0]);
      for (int c = 1; c < k; ++c) {
        double d = sqdist(points[static_cast<size_t>(i)], centers[static_cast<size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[static_cast<size_t>(i)] != best) {
        assign[static_cast<size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    std::vector<std::vector<double>> sums(static_cast<size_t>(k),
                                          std::vector<double>(dim, 0.0));
    std::vector<int> sizes(static_cast<size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      int c = assign[static_cast<size_t>(i)];
      sizes[static_cast<size_t>(c)] += 1;
      for (size_t d = 0; d < dim; ++d)
        sums[static_cast<size_t>(c)][d] += points[static_cast<size_t>(i)][d];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<size_t>(c)] == 0) continue;  // keep previous center
      for (size_t d = 0; d < dim; ++d)
        centers[static_cast<size_t>(c)][d] =
            sums[static_cast<size_t>(c)][d] / sizes[static_cast<size_t>(c)];
    }
  }
  return assign;
}

std::map<std::string, double> conceptualization_log_scores(
    const KnowledgeBase& kb, std::span<const int> cluster_entities,
    const std::function<double(int, const std::string&)>& evidence) {
  // Score only sub-types with evidence on at least one member.
  std::map<std::string, double> scores;
  for (int e : cluster_entities)
    for (const TypePair& tp : kb.entity_types[static_cast<size_t>(e)])
      if (evidence(e, tp.sub) > 0) scores.emplace(tp.sub, 0.0);

  for (auto& [sub, log_score] : scores) {
    auto nt_it = kb.type_counts.find(sub);
    double nt = nt_it == kb.type_counts.end() ? 0.0 : nt_it->second;
    if (nt <= 0 || kb.type_count_total <= 0) {
      log_score = kNegInf;
      continue;
    }
    double acc = std::log(nt / static_cast<double>(kb.type_count_total));
    for (int e : cluster_entities) {
      double n_et = evidence(e, sub);
      if (n_et <= 0) {
        acc = kNegInf;
        break;
      }
      acc += std::log(n_et / nt);
    }
    log_score = acc;
  }
  return scores;
}

std::vector<TypedMention> cbsf(std::span<const Mention> mentions,
                               const KnowledgeBase& kb, const CbsfOptions& opts) {
  for (const Mention& m : mentions)
    if (m.candidates.empty())
      throw std::invalid_argument("cbsf: mention without candidate types");

  const int total_types = kb.total_types();
  std::map<std::string, int> sub_index;
  {
    int i = 0;
    for (const auto& [sub, top] : kb.sub_to_top) sub_index[sub] = i++;
  }

  TypeStats stats = compute_type_stats(mentions);

  // (doc, entity) -> (selected sub, score, filter)
  std::map<std::pair<std::string, int>, std::tuple<std::string, double, std::string>>
      selection;

  for (const auto& [doc_id, mention_idx] : group_by_doc(mentions)) {
    // Entities in first-mention order, with their candidate unions.
    std::vector<int> entities;
    std::map<int, std::vector<TypePair>> candidates;
    for (size_t mi : mention_idx) {
      const Mention& m = mentions[mi];
      auto [it, inserted] = candidates.emplace(m.entity, m.candidates);
      if (inserted) {
        entities.push_back(m.entity);
      } else {
        for (const TypePair& tp : m.candidates)
          if (std::find(it->second.begin(), it->second.end(), tp) == it->second.end())
            it->second.push_back(tp);
      }
    }

    std::vector<std::vector<double>> vectors;
    vectors.reserve(entities.size());
    for (int e : entities) {
      std::vector<double> v(static_cast<size_t>(total_types), 0.0);
      for (const TypePair& tp : candidates[e])
        v[static_cast<size_t>(sub_index.at(tp.sub))] = 1.0;
      vectors.push_back(std::move(v));
    }

    int k = opts.k > 0 ? opts.k : total_types;
    k = std::min(k, static_cast<int>(entities.size()));
    std::vector<int> assign = kmeans(vectors, k, opts.seed);

    auto evidence = [&](int e, const std::string& sub) -> double {
      switch (opts.evidence) {
        case CbsfEvidence::deterministic:
          return kb.entity_has_sub(e, sub) ? 1.0 : 0.0;
        case CbsfEvidence::doc_freq:
          return stats.in_doc_count(doc_id, e, sub);
        case CbsfEvidence::corpus_doc_freq:
          return stats.doc_freq_count(e, sub);
      }
      return 0.0;
    };

    for (int c = 0; c < k; ++c) {
      std::vector<int> members;
      for (size_t i = 0; i < entities.size(); ++i)
        if (assign[i] == c) members.push_back(entities[i]);
      if (members.empty()) continue;

      auto scores = conceptualization_log_scores(kb, members, evidence);

      for (int e : members) {
        std::string best;
        double best_score = kNegInf;
        for (const TypePair& tp : candidates[e]) {
          auto it = scores.find(tp.sub);
          if (it == scores.end() || !std::isfinite(it->second)) continue;
          if (it->second > best_score) {
            best_score = it->second;
            best = tp.sub;
          }
        }
        if (!best.empty()) {
          selection[{doc_id, e}] = {best, std::exp(best_score), "cbsf"};
          continue;
        }
        // No candidate scored: fall back to in-document frequency selection.
        std::map<std::string, int> counts;
        for (size_t mi : mention_idx) {
          const Mention& m = mentions[mi];
          if (m.entity != e) continue;
          for (const TypePair& tp : m.candidates) counts[tp.sub] += 1;
        }
        auto [sub, count] = select_by_count(counts, 1);
        if (!sub.empty())
          selection[{doc_id, e}] = {sub, static_cast<double>(count), "fbsf"};
      }
    }
  }

  std::vector<TypedMention> out;
  for (const Mention& m : mentions) {
    auto it = selection.find({m.doc_id, m.entity});
    if (it == selection.end()) continue;
    const auto& [sub, score, filter] = it->second;
    const TypePair* tp = find_candidate(m, sub);
    if (tp == nullptr) continue;
    out.push_back(make_typed(m, kb, *tp, score, filter));
  }
  return out;
}

void write_mentions_tsv(std::span<const TypedMention> mentions,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write mentions file: " + path.string());
  for (const TypedMention& m : mentions) {
    out << m.doc_id << '\t' << m.begin << '\t' << m.end << '\t' << m.entity_id
        << '\t' << m.selected.top << '\t' << m.selected.sub << '\t'
        << format_double(m.score) << '\t' << m.filter << '\n';
  }
}

std::vector<TypedMention> read_mentions_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mentions file: " + path.string());
  std::vector<TypedMention> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 8)
      throw ParseError("mentions file " + path.string() + " line " +
                       std::to_string(lineno) + ": expected 8 columns");
    TypedMention m;
    m.doc_id = cols[0];
    try {
      m.begin = std::stoi(cols[1]);
      m.end = std::stoi(cols[2]);
      m.score = std::stod(cols[6]);
    } catch (const std::exception&) {
      throw ParseError("mentions file " + path.string() + " line " +
                       std::to_string(lineno) + ": bad numeric column");
    }
    m.entity_id = cols[3];
    m.selected = {cols[4], cols[5]};
    m.filter = cols[7];
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace hinclus
