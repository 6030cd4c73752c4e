#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace intent {

// Lowercase alphanumeric tag without the leading '#'.
class Hashtag {
 public:
  // Strips one leading '#', lowercases, and rejects empty or
  // non-alphanumeric input with InputError.
  explicit Hashtag(std::string_view raw);
  const std::string& str() const { return raw_; }
  friend auto operator<=>(const Hashtag&, const Hashtag&) = default;

 private:
  std::string raw_;
};

// Word -> rank score, higher meaning more frequent.
class SegDictionary {
 public:
  SegDictionary() = default;
  explicit SegDictionary(std::unordered_map<std::string, double> entries);

  // One word per line with an optional whitespace-separated rank column.
  // Lines without a rank get a Zipf log-probability from their line order,
  // -log((i + 1) * log(N)), so earlier (more frequent) words score higher.
  static SegDictionary load(const std::filesystem::path& path);
  static SegDictionary parse(std::string_view text);

  std::optional<double> score(std::string_view word) const;
  int max_word_len() const { return max_word_len_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::unordered_map<std::string, double> entries_;
  int max_word_len_ = 0;
};

struct WordBreakResult {
  std::vector<std::string> tokens;
  bool complete = true;  // false when the greedy fallback was used
};

// Dictionary segmentation maximising the summed rank score; ties prefer
// fewer tokens, then the lexicographically smaller token sequence. When no
// full segmentation exists the tag is split greedily by longest dictionary
// prefix and unmatched runs are passed through as single tokens.
WordBreakResult word_break_detailed(const Hashtag& tag, const SegDictionary& dict);
std::vector<std::string> word_break(const Hashtag& tag, const SegDictionary& dict);

// Greedy longest-prefix split used as the fallback above.
std::vector<std::string> greedy_split(std::string_view s, const SegDictionary& dict);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual int dim() const = 0;
  // nullptr signals out-of-vocabulary.
  virtual const std::vector<double>* lookup(std::string_view word) const = 0;
};

// Table loaded from the plain "word v1 v2 ... vd" text format. A leading
// "<count> <dim>" line is accepted and skipped.
class EmbeddingTable final : public EmbeddingProvider {
 public:
  explicit EmbeddingTable(int dim) : dim_(dim) {}

  static EmbeddingTable load(const std::filesystem::path& path);
  static EmbeddingTable parse(std::string_view text);

  void insert(std::string word, std::vector<double> vec);
  int dim() const override { return dim_; }
  const std::vector<double>* lookup(std::string_view word) const override;
  std::size_t size() const { return table_.size(); }

 private:
  int dim_;
  std::unordered_map<std::string, std::vector<double>> table_;
};

// Mean of the in-vocabulary token vectors; zero vector when all are OOV.
std::vector<double> embed_hashtag(const std::vector<std::string>& tokens, const EmbeddingProvider& provider);

enum class Metric { Cosine, Euclidean };

struct IndexEntry {
  long long id = 0;
  std::vector<double> vec;
};

// Exact k nearest neighbours: smallest Euclidean distance or largest cosine
// similarity, ties broken by ascending id.
std::vector<long long> knn_retrieve(std::span<const double> query, std::span<const IndexEntry> index, int k,
                                    Metric metric);

struct HashtagFeature {
  std::vector<double> vector;
  int source_count = 0;
};

enum class Pooling { Mean, FrequencyWeighted };

struct HashtagFeatureConfig {
  int k = 150;
  Metric metric = Metric::Cosine;
  bool use_word_break = true;  // false embeds each hashtag as one token
  bool deduplicate = false;    // drop repeated hashtags across neighbours
  // Mean: every pooled hashtag counts once. FrequencyWeighted: distinct
  // hashtags weighted by their occurrence count across the neighbours.
  Pooling pooling = Pooling::Mean;
};

using NeighborTags = std::map<long long, std::vector<Hashtag>>;

// Retrieves k neighbours, pools their hashtags, segments and embeds each, and
// averages. Hashtags whose tokens are all out of vocabulary are not counted.
HashtagFeature build_hashtag_feature(std::span<const double> image_feature, std::span<const IndexEntry> index,
                                     const NeighborTags& neighbor_tags, const SegDictionary& dict,
                                     const EmbeddingProvider& provider, const HashtagFeatureConfig& cfg = {});

// Hashtag file: "image_id<TAB>tag1,tag2,..." per line.
NeighborTags load_neighbor_tags(const std::filesystem::path& path);
NeighborTags parse_neighbor_tags(std::string_view text);

// Vector file: "id<TAB>v1 v2 ... vd" per line.
std::vector<IndexEntry> load_vectors(const std::filesystem::path& path);
std::vector<IndexEntry> parse_vectors(std::string_view text);
std::string serialize_vectors(std::span<const IndexEntry> entries);

// "# hashtag-feature v1" then "source_count<TAB>v1 v2 ... vd".
std::string serialize_feature(const HashtagFeature& f);
HashtagFeature parse_feature(std::string_view text);
HashtagFeature load_feature(const std::filesystem::path& path);

}  // namespace intent
