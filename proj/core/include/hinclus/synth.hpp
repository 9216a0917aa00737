#pragma once

#include <cstdint>
#include <vector>

#include "hinclus/hin.hpp"
#include "hinclus/kb.hpp"

namespace hinclus {

/// Planted block-structure generator. Each block owns a private vocabulary
/// and private entities of two top types (person, org); documents draw their
/// tokens from the home block with probability 1 - noise. Entity sub-types
/// follow the blocks, so the generated constraints are informative, and
/// every document carries its block as the ground-truth label.
struct SynthParams {
  int blocks = 2;
  int docs_per_block = 50;
  int words_per_block = 100;
  int entities_per_block = 20;
  double noise = 0.0;  // in [0, 1)
  std::uint64_t seed = 0;

  int words_per_doc = 60;
  int mention_pairs_per_doc = 3;  // "X with Y" person-org fragments per doc
};

struct SynthData {
  std::vector<Document> corpus;
  KnowledgeBase kb;
};

SynthData synth_generate(const SynthParams& params);

}  // namespace hinclus
