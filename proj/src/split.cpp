#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "forge/datasets.hpp"
#include "forge/error.hpp"
#include "forge/rng.hpp"

namespace forge::datasets {

namespace {

std::string class_label_name(int label) {
  if (label >= 0 && label < static_cast<int>(kNumClasses)) {
    return std::string(kClassNames[static_cast<std::size_t>(label)]);
  }
  return std::to_string(label);
}

// Splits `total` into integer group sizes proportional to `ratios` by
// largest remainder; ties go to the lower group index.
std::vector<std::size_t> apportion(std::size_t total,
                                   std::span<const double> ratios) {
  const std::size_t groups = ratios.size();
  std::vector<std::size_t> sizes(groups);
  std::vector<double> remainder(groups);
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < groups; ++s) {
    const double exact = ratios[s] * static_cast<double>(total);
    // Guard against 0.1 * 10 = 0.99999... style underflow of the floor.
    const double floored = std::floor(exact + 1e-9);
    sizes[s] = static_cast<std::size_t>(floored);
    remainder[s] = exact - floored;
    assigned += sizes[s];
  }
  std::vector<std::size_t> order(groups);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  for (std::size_t r = 0; assigned < total; r = (r + 1) % groups) {
    if (ratios[order[r]] > 0.0) {
      ++sizes[order[r]];
      ++assigned;
    }
  }
  while (assigned > total) {
    // Only reachable through the epsilon guard; take back from the largest.
    auto it = std::max_element(sizes.begin(), sizes.end());
    --*it;
    --assigned;
  }
  return sizes;
}

// Rounds the class x group target matrix n_c * S_s / N to integers so that
// every row sums to n_c and every column to S_s, each cell being the floor or
// ceiling of its target. The fractional cells form a bipartite graph; the
// unit increments are found as a maximum flow from classes to groups.
class ControlledRounding {
 public:
  ControlledRounding(const std::vector<std::size_t>& class_counts,
                     const std::vector<std::size_t>& group_sizes)
      : classes_(class_counts.size()), groups_(group_sizes.size()) {
    const std::size_t total =
        std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
    counts_.assign(classes_, std::vector<std::size_t>(groups_, 0));
    remainder_.assign(classes_, std::vector<std::size_t>(groups_, 0));
    row_deficit_.assign(classes_, 0);
    col_deficit_.assign(groups_, 0);
    if (total == 0) return;
    for (std::size_t c = 0; c < classes_; ++c) {
      std::size_t row = 0;
      for (std::size_t s = 0; s < groups_; ++s) {
        const std::size_t scaled = class_counts[c] * group_sizes[s];
        counts_[c][s] = scaled / total;
        remainder_[c][s] = scaled % total;
        row += counts_[c][s];
      }
      row_deficit_[c] = class_counts[c] - row;
    }
    for (std::size_t s = 0; s < groups_; ++s) {
      std::size_t col = 0;
      for (std::size_t c = 0; c < classes_; ++c) col += counts_[c][s];
      col_deficit_[s] = group_sizes[s] - col;
    }
    solve();
  }

  const std::vector<std::vector<std::size_t>>& counts() const { return counts_; }

 private:
  void solve() {
    raised_.assign(classes_, std::vector<bool>(groups_, false));
    for (std::size_t c = 0; c < classes_; ++c) {
      while (row_deficit_[c] > 0) {
        std::vector<bool> visited_group(groups_, false);
        if (!augment(c, visited_group)) {
          throw Error(ErrorKind::Precondition,
                      "stratified rounding failed to converge");
        }
        --row_deficit_[c];
      }
    }
    for (std::size_t c = 0; c < classes_; ++c) {
      for (std::size_t s = 0; s < groups_; ++s) {
        if (raised_[c][s]) ++counts_[c][s];
      }
    }
  }

  // Finds an alternating path from class `c` to a group with spare deficit.
  bool augment(std::size_t c, std::vector<bool>& visited_group) {
    std::vector<std::size_t> order(groups_);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return remainder_[c][a] > remainder_[c][b];
    });
    for (std::size_t s : order) {
      if (remainder_[c][s] == 0 || raised_[c][s] || visited_group[s]) continue;
      visited_group[s] = true;
      if (col_deficit_[s] > 0) {
        raised_[c][s] = true;
        --col_deficit_[s];
        return true;
      }
      // Group s is full: try to move one of its raises to another group.
      for (std::size_t other = 0; other < classes_; ++other) {
        if (other == c || !raised_[other][s]) continue;
        raised_[other][s] = false;
        if (augment(other, visited_group)) {
          raised_[c][s] = true;
          return true;
        }
        raised_[other][s] = true;
      }
    }
    return false;
  }

  std::size_t classes_;
  std::size_t groups_;
  std::vector<std::vector<std::size_t>> counts_;
  std::vector<std::vector<std::size_t>> remainder_;
  std::vector<std::vector<bool>> raised_;
  std::vector<std::size_t> row_deficit_;
  std::vector<std::size_t> col_deficit_;
};

void check_ratios(std::span<const double> ratios) {
  if (ratios.empty()) {
    throw Error(ErrorKind::Precondition, "at least one split ratio is required");
  }
  double sum = 0.0;
  for (double r : ratios) {
    if (!std::isfinite(r) || r < 0.0) {
      throw Error(ErrorKind::Precondition, "split ratios must be non-negative");
    }
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorKind::Precondition, "split ratios must sum to 1");
  }
}

}  // namespace

std::vector<std::vector<std::size_t>> stratified_partition(
    std::span<const int> labels, std::span<const double> ratios,
    std::uint64_t seed, bool require_every_class) {
  check_ratios(ratios);
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  std::vector<int> classes;
  std::vector<std::size_t> class_counts;
  for (const auto& [label, members] : by_class) {
    classes.push_back(label);
    class_counts.push_back(members.size());
  }
  const auto group_sizes = apportion(labels.size(), ratios);
  const ControlledRounding rounding(class_counts, group_sizes);

  std::vector<std::vector<std::size_t>> groups(ratios.size());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    auto members = by_class[classes[c]];
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(classes[c])));
    rng.shuffle(members);
    std::size_t offset = 0;
    for (std::size_t s = 0; s < ratios.size(); ++s) {
      const std::size_t take = rounding.counts()[c][s];
      if (require_every_class && take == 0 && ratios[s] > 0.0) {
        throw Error(ErrorKind::Precondition,
                    "class '" + class_label_name(classes[c]) + "' with " +
                        std::to_string(members.size()) +
                        " examples is too small for stratification");
      }
      groups[s].insert(groups[s].end(), members.begin() + offset,
                       members.begin() + offset + take);
      offset += take;
    }
  }
  for (auto& g : groups) std::sort(g.begin(), g.end());
  return groups;
}

SplitPlan stratified_split(std::span<const int> labels,
                           const std::array<double, 3>& ratios,
                           std::uint64_t seed) {
  auto groups = stratified_partition(labels, ratios, seed, true);
  SplitPlan plan;
  plan.train = std::move(groups[0]);
  plan.validation = std::move(groups[1]);
  plan.test = std::move(groups[2]);
  plan.seed = seed;
  plan.ratios = ratios;
  plan.corpus_size = labels.size();
  return plan;
}

SplitPlan stratified_split(const Corpus& corpus,
                           const std::array<double, 3>& ratios,
                           std::uint64_t seed) {
  const auto labels = corpus.labels();
  return stratified_split(labels, ratios, seed);
}

nlohmann::json SplitPlan::to_json() const {
  return nlohmann::json{{"seed", seed},
                        {"ratios", ratios},
                        {"corpus_size", corpus_size},
                        {"train", train},
                        {"validation", validation},
                        {"test", test}};
}

SplitPlan SplitPlan::from_json(const nlohmann::json& j) {
  try {
    SplitPlan plan;
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.ratios = j.at("ratios").get<std::array<double, 3>>();
    plan.corpus_size = j.at("corpus_size").get<std::size_t>();
    plan.train = j.at("train").get<std::vector<std::size_t>>();
    plan.validation = j.at("validation").get<std::vector<std::size_t>>();
    plan.test = j.at("test").get<std::vector<std::size_t>>();
    std::vector<bool> seen(plan.corpus_size, false);
    for (const auto* part : {&plan.train, &plan.validation, &plan.test}) {
      for (std::size_t i : *part) {
        if (i >= plan.corpus_size || seen[i]) {
          throw Error(ErrorKind::Schema,
                      "split plan: index " + std::to_string(i) +
                          " out of range or repeated");
        }
        seen[i] = true;
      }
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("split plan: ") + e.what());
  }
}

void SplitPlan::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << to_json().dump() << '\n';
}

SplitPlan SplitPlan::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace forge::datasets
