#pragma once

#include <cstdint>
#include <vector>

#include "intent/dataset.hpp"
#include "intent/hashtags.hpp"
#include "intent/saliency.hpp"

namespace intent::synth {

// Square images with a planted rectangular "object" patch. Four classes:
//   0: red patch        1: green patch      (object classes)
//   2: blue background  3: striped background (context classes)
// Each label is an independent coin flip. Masks use complement mode: the
// patch is the object mask, everything else the context mask.
struct PlantedConfig {
  int images = 200;
  int size = 32;
  int patch_min = 10;
  int patch_max = 16;
  double noise = 0.05;
  // Faint copy of the object-class colour spread over the background. Gives
  // an unconstrained model a context shortcut for object classes.
  double leak = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr int kPlantedClasses = 4;

Dataset planted_dataset(const PlantedConfig& cfg);
ClassSets planted_class_sets();

// Retrieval corpus where every query owns a private cluster of posts placed
// at increasing distance. The post at rank r carries the query's class tag
// with probability relevance * exp(-r / decay), otherwise a random noise tag.
struct NeighborCorpusConfig {
  int queries = 480;
  int classes = 4;
  int posts_per_query = 300;
  int visual_dim = 4;
  int embed_dim = 8;
  int noise_tags = 400;
  double relevance = 0.6;
  double decay = 100.0;
  double noise_scale = 3.0;
  double train_fraction = 0.5;
  std::uint64_t seed = 0;
};

struct NeighborCorpus {
  std::vector<IndexEntry> index;
  NeighborTags tags;
  EmbeddingTable embeddings{0};
  SegDictionary dictionary;
  std::vector<IndexEntry> queries;
  std::vector<std::vector<std::uint8_t>> labels;  // one-hot per query
  std::vector<bool> is_train;
};

NeighborCorpus neighbor_corpus(const NeighborCorpusConfig& cfg);

}  // namespace intent::synth
