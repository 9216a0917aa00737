#include "hinclus/constraints.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "hinclus/errors.hpp"
#include "hinclus/kl.hpp"

namespace hinclus {

std::size_t ConstraintSet::total_pairs() const {
  std::size_t n = 0;
  for (const auto& v : must) n += v.size();
  for (const auto& v : cannot) n += v.size();
  return n;
}

ConstraintSet ConstraintSet::empty_for(const Hin& hin) {
  ConstraintSet cs;
  cs.type_names = hin.type_names;
  cs.must.resize(cs.type_names.size());
  cs.cannot.resize(cs.type_names.size());
  cs.d_max.assign(cs.type_names.size(), 0.0);
  cs.d_max_valid.assign(cs.type_names.size(), false);
  return cs;
}

ConstraintSet generate_constraints(std::span<const TypedMention> typed_mentions,
                                   const Hin& hin) {
  ConstraintSet cs = ConstraintSet::empty_for(hin);

  std::map<std::string, int> type_index;
  for (size_t t = 0; t < hin.type_names.size(); ++t)
    type_index[hin.type_names[t]] = static_cast<int>(t);
  std::vector<std::map<std::string, int>> entity_index(hin.type_names.size());
  for (int t = 0; t < hin.num_types(); ++t)
    for (int e = 0; e < hin.num_entities(t); ++e)
      entity_index[static_cast<size_t>(t)]
                  [hin.entity_names[static_cast<size_t>(t)][static_cast<size_t>(e)]] = e;

  // The sub-type a typed mention majority assigns to each entity node.
  std::vector<std::map<int, std::map<std::string, int>>> sub_counts(
      hin.type_names.size());
  for (const TypedMention& m : typed_mentions) {
    auto tit = type_index.find(m.selected.top);
    if (tit == type_index.end()) continue;
    int t = tit->second;
    auto eit = entity_index[static_cast<size_t>(t)].find(m.entity_id);
    if (eit == entity_index[static_cast<size_t>(t)].end())
      throw IntegrityError("constraint generation: entity \"" + m.entity_id +
                           "\" missing from the network's type \"" + m.selected.top +
                           "\"");
    sub_counts[static_cast<size_t>(t)][eit->second][m.selected.sub] += 1;
  }

  long long total_entities = 0;
  for (int t = 0; t < hin.num_types(); ++t) total_entities += hin.num_entities(t);
  cs.w_must = cs.w_cannot = total_entities > 0 ? 1.0 / static_cast<double>(total_entities) : 0.0;

  for (int t = 0; t < hin.num_types(); ++t) {
    std::vector<std::string> sub_of(static_cast<size_t>(hin.num_entities(t)));
    for (const auto& [e, counts] : sub_counts[static_cast<size_t>(t)]) {
      std::string best;
      int best_n = 0;
      for (const auto& [sub, n] : counts)
        if (n > best_n) {
          best = sub;
          best_n = n;
        }
      sub_of[static_cast<size_t>(e)] = best;
    }
    for (int a = 0; a < hin.num_entities(t); ++a) {
      if (sub_of[static_cast<size_t>(a)].empty()) continue;
      for (int b = a + 1; b < hin.num_entities(t); ++b) {
        if (sub_of[static_cast<size_t>(b)].empty()) continue;
        if (sub_of[static_cast<size_t>(a)] == sub_of[static_cast<size_t>(b)])
          cs.must[static_cast<size_t>(t)].push_back({a, b});
        else
          cs.cannot[static_cast<size_t>(t)].push_back({a, b});
      }
    }
  }
  return cs;
}

ConstraintSet sample_constraints(const ConstraintSet& cs, std::size_t n,
                                 std::uint64_t seed) {
  struct Entry {
    int t;
    bool is_must;
    ConstraintPair pair;
  };
  std::vector<Entry> entries;
  entries.reserve(cs.total_pairs());
  for (int t = 0; t < cs.num_types(); ++t) {
    for (const ConstraintPair& p : cs.must[static_cast<size_t>(t)])
      entries.push_back({t, true, p});
    for (const ConstraintPair& p : cs.cannot[static_cast<size_t>(t)])
      entries.push_back({t, false, p});
  }

  std::size_t keep = std::min(n, entries.size());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < keep; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, entries.size() - 1);
    std::swap(entries[i], entries[pick(rng)]);
  }
  entries.resize(keep);
  std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
    return std::tie(x.t, x.is_must, x.pair) < std::tie(y.t, y.is_must, y.pair);
  });

  ConstraintSet out;
  out.type_names = cs.type_names;
  out.must.resize(cs.type_names.size());
  out.cannot.resize(cs.type_names.size());
  out.w_must = cs.w_must;
  out.w_cannot = cs.w_cannot;
  out.d_max.assign(cs.type_names.size(), 0.0);
  out.d_max_valid.assign(cs.type_names.size(), false);
  for (const Entry& e : entries) {
    if (e.is_must)
      out.must[static_cast<size_t>(e.t)].push_back(e.pair);
    else
      out.cannot[static_cast<size_t>(e.t)].push_back(e.pair);
  }
  return out;
}

DMaxResult compute_d_max(const Hin& hin, ConstraintSet& cs, int t, double eps) {
  if (t < 0 || t >= cs.num_types())
    throw std::out_of_range("compute_d_max: bad type index");
  const auto& pairs = cs.cannot[static_cast<size_t>(t)];
  DMaxResult result;
  if (pairs.empty()) {
    cs.d_max[static_cast<size_t>(t)] = 0.0;
    cs.d_max_valid[static_cast<size_t>(t)] = true;
    return result;  // flagged: no cannot pairs
  }
  const SparseJoint& de = hin.p_de[static_cast<size_t>(t)];
  double best = 0.0;
  for (const ConstraintPair& p : pairs) {
    int ca = de.col_of[static_cast<size_t>(p.a)];
    int cb = de.col_of[static_cast<size_t>(p.b)];
    if (ca < 0 || cb < 0)
      throw IntegrityError("compute_d_max: constrained entity missing from the doc edge");
    best = std::max(best, kl_between_columns(de, ca, cb, eps));
  }
  result.value = best;
  result.from_pairs = true;
  cs.d_max[static_cast<size_t>(t)] = best;
  cs.d_max_valid[static_cast<size_t>(t)] = true;
  return result;
}

void write_constraints_tsv(const ConstraintSet& cs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write constraints file: " + path.string());
  for (int t = 0; t < cs.num_types(); ++t) {
    for (const ConstraintPair& p : cs.must[static_cast<size_t>(t)])
      out << cs.type_names[static_cast<size_t>(t)] << '\t' << p.a << '\t' << p.b
          << "\tmust\n";
    for (const ConstraintPair& p : cs.cannot[static_cast<size_t>(t)])
      out << cs.type_names[static_cast<size_t>(t)] << '\t' << p.a << '\t' << p.b
          << "\tcannot\n";
  }
}

ConstraintSet read_constraints_tsv(const std::filesystem::path& path, const Hin& hin) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open constraints file: " + path.string());
  ConstraintSet cs = ConstraintSet::empty_for(hin);
  long long total_entities = 0;
  for (int t = 0; t < hin.num_types(); ++t) total_entities += hin.num_entities(t);
  cs.w_must = cs.w_cannot = total_entities > 0 ? 1.0 / static_cast<double>(total_entities) : 0.0;

  std::map<std::string, int> type_index;
  for (size_t t = 0; t < hin.type_names.size(); ++t)
    type_index[hin.type_names[t]] = static_cast<int>(t);

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string type, a, b, kind;
    if (!std::getline(ss, type, '\t') || !std::getline(ss, a, '\t') ||
        !std::getline(ss, b, '\t') || !std::getline(ss, kind, '\t'))
      throw ParseError("constraints file " + path.string() + " line " +
                       std::to_string(lineno) + ": expected 4 columns");
    auto tit = type_index.find(type);
    if (tit == type_index.end())
      throw IntegrityError("constraints file references unknown type \"" + type + "\"");
    ConstraintPair p{std::stoi(a), std::stoi(b)};
    if (p.a > p.b) std::swap(p.a, p.b);
    if (p.a < 0 || p.b >= hin.num_entities(tit->second) || p.a == p.b)
      throw IntegrityError("constraints file " + path.string() + " line " +
                           std::to_string(lineno) + ": bad entity pair");
    if (kind == "must")
      cs.must[static_cast<size_t>(tit->second)].push_back(p);
    else if (kind == "cannot")
      cs.cannot[static_cast<size_t>(tit->second)].push_back(p);
    else
      throw ParseError("constraints file " + path.string() + " line " +
                       std::to_string(lineno) + ": kind must be must|cannot");
  }
  return cs;
}

}  // namespace hinclus
