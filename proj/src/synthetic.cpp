#include "intent/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "intent/error.hpp"
#include "intent/nn.hpp"

namespace intent::synth {

Dataset planted_dataset(const PlantedConfig& cfg) {
  if (cfg.images < 1 || cfg.size < 4) throw ConfigError("planted dataset needs images >= 1 and size >= 4");
  if (cfg.patch_min < 1 || cfg.patch_max < cfg.patch_min || cfg.patch_max >= cfg.size) {
    throw ConfigError("planted patch sizes must satisfy 1 <= min <= max < size");
  }
  nn::Rng rng(cfg.seed);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> side(cfg.patch_min, cfg.patch_max);
  std::normal_distribution<double> noise(0.0, cfg.noise);
  const int n = cfg.size;

  Dataset data;
  data.reserve(cfg.images);
  for (int i = 0; i < cfg.images; ++i) {
    Sample s;
    s.id = "planted" + std::to_string(i);
    s.labels.resize(kPlantedClasses);
    for (auto& l : s.labels) l = coin(rng) ? 1 : 0;
    const int ph = side(rng);
    const int pw = side(rng);
    const int top = std::uniform_int_distribution<int>(0, n - ph)(rng);
    const int left = std::uniform_int_distribution<int>(0, n - pw)(rng);

    Raster object(n, n, 0);
    Raster context(n, n, 1);
    s.image = Image(3, n, n);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const bool inside = y >= top && y < top + ph && x >= left && x < left + pw;
        double rgb[3];
        if (inside) {
          object(y, x) = 1;
          context(y, x) = 0;
          rgb[0] = s.labels[0] ? 0.9 : 0.3;
          rgb[1] = s.labels[1] ? 0.9 : 0.3;
          rgb[2] = 0.3;
        } else {
          const double stripe = s.labels[3] && ((y / 2) % 2 == 0) ? 0.35 : 0.0;
          rgb[0] = 0.15 + stripe + cfg.leak * s.labels[0];
          rgb[1] = 0.15 + stripe + cfg.leak * s.labels[1];
          rgb[2] = (s.labels[2] ? 0.6 : 0.15) + stripe;
        }
        for (int c = 0; c < 3; ++c) s.image.at(c, y, x) = std::clamp(rgb[c] + noise(rng), 0.0, 1.0);
      }
    }
    s.masks = MaskPair{std::move(object), std::move(context), MaskMode::Complement};
    data.push_back(std::move(s));
  }
  return data;
}

ClassSets planted_class_sets() { return ClassSets{{0, 1}, {2, 3}}; }

namespace {

std::vector<double> gaussian_vector(int dim, double scale, nn::Rng& rng) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(dim);
  for (double& x : v) x = g(rng);
  return v;
}

}  // namespace

NeighborCorpus neighbor_corpus(const NeighborCorpusConfig& cfg) {
  if (cfg.queries < 2 || cfg.classes < 2 || cfg.posts_per_query < 1 || cfg.visual_dim < 1 || cfg.embed_dim < 1 ||
      cfg.noise_tags < 1) {
    throw ConfigError("neighbor corpus sizes must be positive");
  }
  nn::Rng rng(cfg.seed);
  NeighborCorpus out;
  out.embeddings = EmbeddingTable(cfg.embed_dim);

  std::string dict_text;
  for (int c = 0; c < cfg.classes; ++c) {
    const std::string word = "intent" + std::to_string(c);
    out.embeddings.insert(word, gaussian_vector(cfg.embed_dim, 1.0, rng));
    dict_text += word + "\n";
  }
  for (int t = 0; t < cfg.noise_tags; ++t) {
    const std::string word = "noise" + std::to_string(t);
    out.embeddings.insert(word, gaussian_vector(cfg.embed_dim, cfg.noise_scale, rng));
    dict_text += word + "\n";
  }
  out.dictionary = SegDictionary::parse(dict_text);

  std::uniform_int_distribution<int> pick_noise(0, cfg.noise_tags - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const int train_count = std::max(1, static_cast<int>(std::lround(cfg.train_fraction * cfg.queries)));

  long long next_post = 0;
  for (int q = 0; q < cfg.queries; ++q) {
    // Clusters sit far apart along the first axis so each query only ever
    // retrieves its own posts.
    std::vector<double> centre(cfg.visual_dim, 0.0);
    centre[0] = 1e4 * (q + 1);
    const int cls = q % cfg.classes;
    out.queries.push_back({q, centre});
    std::vector<std::uint8_t> onehot(cfg.classes, 0);
    onehot[cls] = 1;
    out.labels.push_back(std::move(onehot));
    out.is_train.push_back(q < train_count);

    for (int r = 0; r < cfg.posts_per_query; ++r) {
      std::vector<double> dir(cfg.visual_dim);
      double norm = 0.0;
      for (double& d : dir) {
        d = g(rng);
        norm += d * d;
      }
      norm = std::sqrt(norm);
      std::vector<double> pos = centre;
      for (int d = 0; d < cfg.visual_dim; ++d) pos[d] += (1.0 + r) * dir[d] / norm;
      const long long id = next_post++;
      out.index.push_back({id, std::move(pos)});
      const bool relevant = unit(rng) < cfg.relevance * std::exp(-r / cfg.decay);
      const std::string tag = relevant ? "intent" + std::to_string(cls) : "noise" + std::to_string(pick_noise(rng));
      out.tags[id] = {Hashtag(tag)};
    }
  }
  std::shuffle(out.is_train.begin(), out.is_train.end(), rng);
  return out;
}

}  // namespace intent::synth
