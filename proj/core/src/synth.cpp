#include "hinclus/synth.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace hinclus {

namespace {

std::string block_word(int block, int j) {
  return "w" + std::to_string(block) + "n" + std::to_string(j);
}

}  // namespace

SynthData synth_generate(const SynthParams& params) {
  if (params.blocks < 1 || params.docs_per_block < 1 || params.words_per_block < 1 ||
      params.entities_per_block < 1 || params.words_per_doc < 1)
    throw std::invalid_argument("synth_generate: all counts must be >= 1");
  if (params.noise < 0.0 || params.noise >= 1.0)
    throw std::invalid_argument("synth_generate: noise must lie in [0, 1)");
  if (params.mention_pairs_per_doc < 0)
    throw std::invalid_argument("synth_generate: mention_pairs_per_doc must be >= 0");

  const int B = params.blocks;
  SynthData data;
  KnowledgeBase& kb = data.kb;

  // Two top types with one block-aligned sub-type each.
  for (int b = 0; b < B; ++b) {
    kb.sub_to_top["person_b" + std::to_string(b)] = "person";
    kb.sub_to_top["org_b" + std::to_string(b)] = "org";
  }

  const int persons = (params.entities_per_block + 1) / 2;
  const int orgs = params.entities_per_block - persons;
  std::vector<std::vector<std::string>> person_surface(static_cast<size_t>(B));
  std::vector<std::vector<std::string>> org_surface(static_cast<size_t>(B));

  auto add_entity = [&kb](const std::string& id, const std::string& sub,
                          const std::string& top, const std::string& surface) {
    int idx = static_cast<int>(kb.entity_ids.size());
    kb.entity_index.emplace(id, idx);
    kb.entity_ids.push_back(id);
    kb.entity_types.push_back({{top, sub}});
    kb.lexicon[surface].push_back(idx);
    kb.max_surface_tokens = std::max(kb.max_surface_tokens, 1);
  };

  for (int b = 0; b < B; ++b) {
    for (int i = 0; i < persons; ++i) {
      std::string surface = "perb" + std::to_string(b) + "n" + std::to_string(i);
      add_entity(surface, "person_b" + std::to_string(b), "person", surface);
      person_surface[static_cast<size_t>(b)].push_back(surface);
    }
    for (int i = 0; i < orgs; ++i) {
      std::string surface = "orgb" + std::to_string(b) + "n" + std::to_string(i);
      add_entity(surface, "org_b" + std::to_string(b), "org", surface);
      org_surface[static_cast<size_t>(b)].push_back(surface);
    }
  }

  // One relation; its trigger "with" is a stopword, so relation text never
  // leaks shared vocabulary into the word set.
  kb.relations.push_back({"related_to", {"with"}});
  kb.relation_index.emplace("related_to", 0);
  for (int b = 0; b < B; ++b)
    for (const std::string& p : person_surface[static_cast<size_t>(b)])
      for (const std::string& o : org_surface[static_cast<size_t>(b)]) {
        Triple t{kb.find_entity(p), 0, kb.find_entity(o)};
        kb.triples.push_back(t);
        kb.triple_set.insert(t);
      }

  for (const auto& [sub, top] : kb.sub_to_top) kb.type_counts[sub] = 0;
  for (const auto& types : kb.entity_types)
    for (const TypePair& tp : types) kb.type_counts[tp.sub] += 1;
  kb.type_count_total = 0;
  for (const auto& [sub, n] : kb.type_counts) kb.type_count_total += n;

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  auto pick_block = [&](int home) {
    if (B == 1 || coin(rng) >= params.noise) return home;
    std::uniform_int_distribution<int> other(0, B - 2);
    int b = other(rng);
    return b >= home ? b + 1 : b;
  };

  for (int b = 0; b < B; ++b) {
    for (int d = 0; d < params.docs_per_block; ++d) {
      std::string text;
      for (int w = 0; w < params.words_per_doc; ++w) {
        int src = pick_block(b);
        std::uniform_int_distribution<int> pick(0, params.words_per_block - 1);
        if (!text.empty()) text += ' ';
        text += block_word(src, pick(rng));
      }
      for (int m = 0; m < params.mention_pairs_per_doc; ++m) {
        int src_p = pick_block(b);
        int src_o = orgs > 0 ? pick_block(b) : -1;
        std::uniform_int_distribution<int> pick_p(0, persons - 1);
        text += ' ';
        text += person_surface[static_cast<size_t>(src_p)][static_cast<size_t>(pick_p(rng))];
        if (src_o >= 0) {
          std::uniform_int_distribution<int> pick_o(0, orgs - 1);
          text += " with ";
          text += org_surface[static_cast<size_t>(src_o)][static_cast<size_t>(pick_o(rng))];
        }
      }
      Document doc;
      doc.id = "d" + std::to_string(b) + "_" + std::to_string(d);
      doc.label = "b" + std::to_string(b);
      doc.text = std::move(text);
      data.corpus.push_back(std::move(doc));
    }
  }
  return data;
}

}  // namespace hinclus
