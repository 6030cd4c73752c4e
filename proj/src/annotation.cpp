#include "intent/annotation.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "intent/error.hpp"
#include "intent/text_io.hpp"

namespace intent {

void RatingsMatrix::validate() const {
  if (counts.rows() < 1) throw InputError("ratings matrix has no items");
  if (counts.cols() < 1) throw InputError("ratings matrix has no categories");
  if (n_raters < 2) throw InputError("kappa needs at least 2 raters per item");
  for (int i = 0; i < counts.rows(); ++i) {
    int sum = 0;
    for (int j = 0; j < counts.cols(); ++j) {
      if (counts(i, j) < 0) throw InputError("negative rating count");
      sum += counts(i, j);
    }
    if (sum != n_raters) {
      throw InputError("item " + std::to_string(i) + " has " + std::to_string(sum) + " ratings, expected " +
                       std::to_string(n_raters));
    }
  }
}

std::vector<Rating> parse_ratings_csv(std::string_view text) {
  const auto lines = text::split_lines(text);
  if (lines.empty()) throw InputError("ratings CSV is empty");
  const auto header = text::split(lines[0], ',');
  int item = -1;
  int rater = -1;
  int category = -1;
  int task = -1;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    const auto h = text::trim(header[i]);
    if (h == "item_id") item = i;
    else if (h == "rater_id") rater = i;
    else if (h == "category") category = i;
    else if (h == "task_id") task = i;
  }
  if (item < 0 || rater < 0 || category < 0) throw InputError("ratings CSV needs item_id, rater_id and category");
  std::vector<Rating> out;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (text::trim(lines[n]).empty()) continue;
    const auto f = text::split(lines[n], ',');
    if (f.size() != header.size()) throw InputError("ratings CSV line " + std::to_string(n + 1) + ": wrong field count");
    Rating r{std::string(text::trim(f[item])), std::string(text::trim(f[rater])),
             std::string(text::trim(f[category])), task >= 0 ? std::string(text::trim(f[task])) : std::string()};
    out.push_back(std::move(r));
  }
  return out;
}

RatingsMatrix ratings_matrix(const std::vector<Rating>& ratings, const std::vector<std::string>& categories) {
  std::vector<std::string> cats = categories;
  if (cats.empty()) {
    std::set<std::string> seen;
    for (const auto& r : ratings) seen.insert(r.category);
    cats.assign(seen.begin(), seen.end());
  }
  std::map<std::string, int> cat_index;
  for (std::size_t j = 0; j < cats.size(); ++j) cat_index[cats[j]] = static_cast<int>(j);
  std::map<std::string, std::vector<int>> per_item;
  for (const auto& r : ratings) {
    const auto it = cat_index.find(r.category);
    if (it == cat_index.end()) throw InputError("unknown category '" + r.category + "'");
    auto& row = per_item[r.item_id];
    if (row.empty()) row.assign(cats.size(), 0);
    ++row[it->second];
  }
  RatingsMatrix m;
  m.counts = Grid<int>(static_cast<int>(per_item.size()), static_cast<int>(cats.size()));
  int i = 0;
  for (const auto& [id, row] : per_item) {
    const int sum = std::accumulate(row.begin(), row.end(), 0);
    if (i == 0) m.n_raters = sum;
    if (sum != m.n_raters) throw InputError("item '" + id + "' has a different number of raters");
    for (std::size_t j = 0; j < row.size(); ++j) m.counts(i, static_cast<int>(j)) = row[j];
    ++i;
  }
  m.validate();
  return m;
}

KappaResult fleiss_kappa(const RatingsMatrix& m) {
  m.validate();
  const int items = m.counts.rows();
  const int cats = m.counts.cols();
  const double n = m.n_raters;
  std::vector<double> col(cats, 0.0);
  double p_sum = 0.0;
  for (int i = 0; i < items; ++i) {
    double agree = 0.0;
    for (int j = 0; j < cats; ++j) {
      const double c = m.counts(i, j);
      agree += c * (c - 1.0);
      col[j] += c;
    }
    p_sum += agree / (n * (n - 1.0));
  }
  KappaResult r;
  r.p_bar = p_sum / items;
  for (double c : col) {
    const double p = c / (items * n);
    r.p_expected += p * p;
  }
  if (r.p_expected >= 1.0 - 1e-15) {
    r.degenerate = true;
    r.kappa = 1.0;
    return r;
  }
  r.kappa = (r.p_bar - r.p_expected) / (1.0 - r.p_expected);
  return r;
}

MeanKappa mean_task_kappa(const std::vector<Rating>& ratings) {
  std::set<std::string> cat_set;
  std::map<std::string, std::vector<Rating>> tasks;
  for (const auto& r : ratings) {
    cat_set.insert(r.category);
    tasks[r.task_id].push_back(r);
  }
  if (tasks.empty()) throw InputError("no ratings");
  const std::vector<std::string> cats(cat_set.begin(), cat_set.end());
  MeanKappa out;
  for (const auto& [task, rs] : tasks) {
    out.per_task[task] = fleiss_kappa(ratings_matrix(rs, cats));
    out.mean += out.per_task[task].kappa;
  }
  out.mean /= static_cast<double>(out.per_task.size());
  return out;
}

std::vector<HitResult> filter_catch_trials(const std::vector<HitResult>& hits, const CatchKey& key) {
  std::vector<HitResult> out;
  for (const auto& hit : hits) {
    const GridResponse* catch_grid = nullptr;
    for (const auto& g : hit.grids) {
      if (!key.count(g.grid_id)) continue;
      if (catch_grid) throw InputError("HIT " + hit.hit_id + " has more than one catch grid");
      catch_grid = &g;
    }
    if (!catch_grid) throw InputError("HIT " + hit.hit_id + " has no catch grid");
    auto expected = key.at(catch_grid->grid_id);
    auto given = catch_grid->selected;
    std::sort(expected.begin(), expected.end());
    std::sort(given.begin(), given.end());
    given.erase(std::unique(given.begin(), given.end()), given.end());
    if (given == expected) out.push_back(hit);
  }
  return out;
}

std::string_view to_string(LabelConfidence c) {
  switch (c) {
    case LabelConfidence::DefiniteYes: return "definite_yes";
    case LabelConfidence::PossibleYes: return "possible_yes";
    case LabelConfidence::PossibleNo: return "possible_no";
    case LabelConfidence::No: return "no";
  }
  return "no";
}

LabelConfidence aggregate_labels(const std::vector<bool>& votes) {
  if (votes.size() != 3) throw InputError("label aggregation needs exactly 3 votes, got " + std::to_string(votes.size()));
  switch (std::count(votes.begin(), votes.end(), true)) {
    case 3: return LabelConfidence::DefiniteYes;
    case 2: return LabelConfidence::PossibleYes;
    case 1: return LabelConfidence::PossibleNo;
    default: return LabelConfidence::No;
  }
}

std::map<int, std::vector<std::string>> hitl_select(const std::map<std::string, std::vector<double>>& scores,
                                                    double tau) {
  std::map<int, std::vector<std::string>> queues;
  for (const auto& [image, row] : scores) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      auto& q = queues[static_cast<int>(k)];
      if (row[k] > tau) q.push_back(image);
    }
  }
  return queues;
}

}  // namespace intent
