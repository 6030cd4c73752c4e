#include "intent/hashtags.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include "intent/error.hpp"
#include "intent/text_io.hpp"

namespace intent {

Hashtag::Hashtag(std::string_view raw) {
  if (!raw.empty() && raw.front() == '#') raw.remove_prefix(1);
  if (raw.empty()) throw InputError("empty hashtag");
  raw_.reserve(raw.size());
  for (char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (!std::isalnum(c)) throw InputError("hashtag '" + std::string(raw) + "' is not alphanumeric");
    raw_.push_back(static_cast<char>(std::tolower(c)));
  }
}

SegDictionary::SegDictionary(std::unordered_map<std::string, double> entries) : entries_(std::move(entries)) {
  for (const auto& [w, _] : entries_) {
    if (w.empty()) throw InputError("empty dictionary word");
    for (char ch : w) {
      if (std::isupper(static_cast<unsigned char>(ch))) throw InputError("dictionary word '" + w + "' not lowercase");
    }
    max_word_len_ = std::max(max_word_len_, static_cast<int>(w.size()));
  }
}

SegDictionary SegDictionary::parse(std::string_view text) {
  std::vector<std::pair<std::string, std::optional<double>>> rows;
  for (const auto& line : text::split_lines(text)) {
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word)) continue;
    std::string rank;
    std::optional<double> score;
    if (ss >> rank) score = text::parse_double(rank, "dictionary rank");
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    rows.emplace_back(std::move(word), score);
  }
  const double log_n = std::log(std::max<double>(2.0, static_cast<double>(rows.size())));
  std::unordered_map<std::string, double> entries;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double s = rows[i].second ? *rows[i].second : -std::log((i + 1.0) * log_n);
    entries.try_emplace(rows[i].first, s);
  }
  return SegDictionary(std::move(entries));
}

SegDictionary SegDictionary::load(const std::filesystem::path& path) { return parse(text::read_file(path)); }

std::optional<double> SegDictionary::score(std::string_view word) const {
  const auto it = entries_.find(std::string(word));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

namespace {

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

struct Segmentation {
  bool ok = false;
  double score = 0.0;
  std::vector<std::string> tokens;
};

// Strict "a is a better segmentation than b".
bool better(const Segmentation& a, const Segmentation& b) {
  if (!b.ok) return a.ok;
  if (!a.ok) return false;
  if (!nearly_equal(a.score, b.score)) return a.score > b.score;
  if (a.tokens.size() != b.tokens.size()) return a.tokens.size() < b.tokens.size();
  return a.tokens < b.tokens;
}

}  // namespace

std::vector<std::string> greedy_split(std::string_view s, const SegDictionary& dict) {
  std::vector<std::string> out;
  std::string residue;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t take = 0;
    const std::size_t max_len = std::min<std::size_t>(dict.max_word_len(), s.size() - i);
    for (std::size_t len = max_len; len > 0; --len) {
      if (dict.score(s.substr(i, len))) {
        take = len;
        break;
      }
    }
    if (take == 0) {
      residue.push_back(s[i++]);
      continue;
    }
    if (!residue.empty()) out.push_back(std::exchange(residue, {}));
    out.emplace_back(s.substr(i, take));
    i += take;
  }
  if (!residue.empty()) out.push_back(std::move(residue));
  return out;
}

WordBreakResult word_break_detailed(const Hashtag& tag, const SegDictionary& dict) {
  if (dict.empty()) throw InputError("word_break needs a nonempty dictionary");
  const std::string& s = tag.str();
  const std::size_t n = s.size();
  // best[i] is the best segmentation of the suffix s[i..).
  std::vector<Segmentation> best(n + 1);
  best[n].ok = true;
  for (std::size_t i = n; i-- > 0;) {
    const std::size_t max_len = std::min<std::size_t>(dict.max_word_len(), n - i);
    for (std::size_t len = 1; len <= max_len; ++len) {
      const auto& tail = best[i + len];
      if (!tail.ok) continue;
      const auto sc = dict.score(std::string_view(s).substr(i, len));
      if (!sc) continue;
      Segmentation cand;
      cand.ok = true;
      cand.score = *sc + tail.score;
      cand.tokens.reserve(tail.tokens.size() + 1);
      cand.tokens.emplace_back(s.substr(i, len));
      cand.tokens.insert(cand.tokens.end(), tail.tokens.begin(), tail.tokens.end());
      if (better(cand, best[i])) best[i] = std::move(cand);
    }
  }
  if (best[0].ok) return {std::move(best[0].tokens), true};
  return {greedy_split(s, dict), false};
}

std::vector<std::string> word_break(const Hashtag& tag, const SegDictionary& dict) {
  return word_break_detailed(tag, dict).tokens;
}

EmbeddingTable EmbeddingTable::parse(std::string_view text) {
  const auto lines = text::split_lines(text);
  int dim = -1;
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    std::istringstream ss(lines[li]);
    std::vector<std::string> fields;
    for (std::string f; ss >> f;) fields.push_back(std::move(f));
    if (fields.empty()) continue;
    if (li == 0 && fields.size() == 2) {
      // fastText-style "<count> <dim>" header
      bool numeric = true;
      try {
        text::parse_int(fields[0]);
        text::parse_int(fields[1]);
      } catch (const InputError&) {
        numeric = false;
      }
      if (numeric) continue;
    }
    std::vector<double> v;
    v.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) v.push_back(text::parse_double(fields[i], "embedding value"));
    if (dim < 0) dim = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != dim || dim == 0) {
      throw InputError("embedding line " + std::to_string(li + 1) + " has dimension " + std::to_string(v.size()));
    }
    rows.emplace_back(std::move(fields[0]), std::move(v));
  }
  if (dim <= 0) throw InputError("embedding table is empty");
  EmbeddingTable t(dim);
  for (auto& [w, v] : rows) t.insert(std::move(w), std::move(v));
  return t;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) { return parse(text::read_file(path)); }

void EmbeddingTable::insert(std::string word, std::vector<double> vec) {
  if (static_cast<int>(vec.size()) != dim_) throw InputError("embedding for '" + word + "' has wrong dimension");
  table_.insert_or_assign(std::move(word), std::move(vec));
}

const std::vector<double>* EmbeddingTable::lookup(std::string_view word) const {
  const auto it = table_.find(std::string(word));
  return it == table_.end() ? nullptr : &it->second;
}

std::vector<double> embed_hashtag(const std::vector<std::string>& tokens, const EmbeddingProvider& provider) {
  std::vector<double> out(provider.dim(), 0.0);
  int found = 0;
  for (const auto& t : tokens) {
    const auto* v = provider.lookup(t);
    if (v == nullptr) continue;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*v)[i];
    ++found;
  }
  if (found > 0) {
    for (double& x : out) x /= found;
  }
  return out;
}

std::vector<long long> knn_retrieve(std::span<const double> query, std::span<const IndexEntry> index, int k,
                                    Metric metric) {
  if (k < 0 || static_cast<std::size_t>(k) > index.size()) {
    throw InputError("k=" + std::to_string(k) + " exceeds index size " + std::to_string(index.size()));
  }
  const double qnorm = std::sqrt(std::inner_product(query.begin(), query.end(), query.begin(), 0.0));
  struct Scored {
    double key;  // smaller is closer
    long long id;
  };
  std::vector<Scored> scored;
  scored.reserve(index.size());
  for (const auto& e : index) {
    if (e.vec.size() != query.size()) throw InputError("index vector dimension mismatch");
    double key = 0.0;
    if (metric == Metric::Euclidean) {
      for (std::size_t i = 0; i < query.size(); ++i) {
        const double d = query[i] - e.vec[i];
        key += d * d;
      }
    } else {
      double dot = 0.0;
      double nn = 0.0;
      for (std::size_t i = 0; i < query.size(); ++i) {
        dot += query[i] * e.vec[i];
        nn += e.vec[i] * e.vec[i];
      }
      const double denom = qnorm * std::sqrt(nn);
      key = denom > 0.0 ? -dot / denom : 0.0;
    }
    scored.push_back({key, e.id});
  }
  const auto closer = [](const Scored& a, const Scored& b) {
    return a.key != b.key ? a.key < b.key : a.id < b.id;
  };
  std::partial_sort(scored.begin(), scored.begin() + k, scored.end(), closer);
  std::vector<long long> ids(k);
  for (int i = 0; i < k; ++i) ids[i] = scored[i].id;
  return ids;
}

HashtagFeature build_hashtag_feature(std::span<const double> image_feature, std::span<const IndexEntry> index,
                                     const NeighborTags& neighbor_tags, const SegDictionary& dict,
                                     const EmbeddingProvider& provider, const HashtagFeatureConfig& cfg) {
  const auto ids = knn_retrieve(image_feature, index, cfg.k, cfg.metric);
  std::vector<Hashtag> pooled;
  for (long long id : ids) {
    const auto it = neighbor_tags.find(id);
    if (it == neighbor_tags.end()) continue;
    pooled.insert(pooled.end(), it->second.begin(), it->second.end());
  }
  // Pooling is order-free: canonicalise so neighbour order cannot leak into
  // floating-point summation order.
  std::sort(pooled.begin(), pooled.end());

  std::vector<std::pair<Hashtag, int>> weighted;
  for (const auto& tag : pooled) {
    if (!weighted.empty() && weighted.back().first == tag) {
      if (cfg.deduplicate) continue;
      if (cfg.pooling == Pooling::FrequencyWeighted) {
        ++weighted.back().second;
        continue;
      }
    }
    weighted.emplace_back(tag, 1);
  }

  HashtagFeature out{std::vector<double>(provider.dim(), 0.0), 0};
  double total_weight = 0.0;
  for (const auto& [tag, w] : weighted) {
    const auto tokens = cfg.use_word_break ? word_break(tag, dict) : std::vector<std::string>{tag.str()};
    bool any = false;
    for (const auto& t : tokens) any = any || provider.lookup(t) != nullptr;
    if (!any) continue;
    const auto v = embed_hashtag(tokens, provider);
    for (std::size_t i = 0; i < v.size(); ++i) out.vector[i] += w * v[i];
    total_weight += w;
    out.source_count += w;
  }
  if (total_weight > 0.0) {
    for (double& x : out.vector) x /= total_weight;
  }
  return out;
}

NeighborTags parse_neighbor_tags(std::string_view text) {
  NeighborTags out;
  const auto lines = text::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty() || lines[i][0] == '#') continue;
    const auto f = text::split(lines[i], '\t');
    if (f.size() != 2) throw InputError("hashtag line " + std::to_string(i + 1) + ": expected 2 fields");
    auto& tags = out[text::parse_int(f[0], "image id")];
    for (const auto& t : text::split(f[1], ',')) {
      const auto tt = text::trim(t);
      if (!tt.empty()) tags.emplace_back(tt);
    }
  }
  return out;
}

NeighborTags load_neighbor_tags(const std::filesystem::path& path) {
  return parse_neighbor_tags(text::read_file(path));
}

std::vector<IndexEntry> parse_vectors(std::string_view text) {
  std::vector<IndexEntry> out;
  const auto lines = text::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty() || lines[i][0] == '#') continue;
    const auto f = text::split(lines[i], '\t');
    if (f.size() != 2) throw InputError("vector line " + std::to_string(i + 1) + ": expected 2 fields");
    IndexEntry e;
    e.id = text::parse_int(f[0], "vector id");
    std::istringstream ss(f[1]);
    for (std::string v; ss >> v;) e.vec.push_back(text::parse_double(v, "vector value"));
    if (!out.empty() && out.front().vec.size() != e.vec.size()) {
      throw InputError("vector line " + std::to_string(i + 1) + ": dimension mismatch");
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<IndexEntry> load_vectors(const std::filesystem::path& path) { return parse_vectors(text::read_file(path)); }

std::string serialize_vectors(std::span<const IndexEntry> entries) {
  std::string out;
  for (const auto& e : entries) {
    out += std::to_string(e.id);
    out += '\t';
    for (std::size_t i = 0; i < e.vec.size(); ++i) {
      if (i) out += ' ';
      out += text::format_double(e.vec[i]);
    }
    out += '\n';
  }
  return out;
}

std::string serialize_feature(const HashtagFeature& f) {
  std::string out = "# hashtag-feature v1\n" + std::to_string(f.source_count) + '\t';
  for (std::size_t i = 0; i < f.vector.size(); ++i) {
    if (i) out += ' ';
    out += text::format_double(f.vector[i]);
  }
  return out + '\n';
}

HashtagFeature parse_feature(std::string_view text) {
  const auto lines = text::split_lines(text);
  if (lines.size() < 2 || text::trim(lines[0]) != "# hashtag-feature v1") {
    throw InputError("hashtag feature file must start with '# hashtag-feature v1'");
  }
  const auto f = text::split(lines[1], '\t');
  if (f.size() != 2) throw InputError("hashtag feature record needs 2 fields");
  HashtagFeature out;
  out.source_count = static_cast<int>(text::parse_int(f[0], "source count"));
  std::istringstream ss(f[1]);
  for (std::string v; ss >> v;) out.vector.push_back(text::parse_double(v, "feature value"));
  return out;
}

HashtagFeature load_feature(const std::filesystem::path& path) { return parse_feature(text::read_file(path)); }

}  // namespace intent
