#include "forge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "forge/error.hpp"

namespace forge::metrics {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

ClassScores class_scores(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassScores s;
  s.precision = ratio(tp, tp + fp);
  s.recall = ratio(tp, tp + fn);
  const double denom = s.precision + s.recall;
  s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
  s.support = tp + fn;
  return s;
}

void check_labels(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorKind::Precondition,
                "y_true has " + std::to_string(y_true.size()) + " labels but y_pred has " +
                    std::to_string(y_pred.size()));
  }
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    for (int v : {y_true[i], y_pred[i]}) {
      if (v < 0 || v >= static_cast<int>(kNumClasses)) {
        throw Error(ErrorKind::Precondition, "label " + std::to_string(v) +
                                                 " at position " + std::to_string(i) +
                                                 " is outside 0..2");
      }
    }
  }
}

std::string fixed(double v, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::size_t ConfusionMatrix::total() const {
  std::size_t sum = 0;
  for (const auto& row : counts) {
    for (std::size_t v : row) sum += v;
  }
  return sum;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t sum = 0;
  for (std::size_t k = 0; k < kNumClasses; ++k) sum += counts[k][k];
  return sum;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  check_labels(y_true, y_pred);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ++cm.counts[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
  }
  return cm;
}

Scores macro_scores(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) {
    throw Error(ErrorKind::Precondition, "cannot score an empty confusion matrix");
  }
  Scores s;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const std::size_t tp = cm.counts[k][k];
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (std::size_t o = 0; o < kNumClasses; ++o) {
      if (o == k) continue;
      fp += cm.counts[o][k];
      fn += cm.counts[k][o];
    }
    s.per_class[k] = class_scores(tp, fp, fn);
  }
  for (const auto& c : s.per_class) {
    s.macro_precision += c.precision;
    s.macro_recall += c.recall;
    s.macro_f1 += c.f1;
  }
  s.macro_precision /= kNumClasses;
  s.macro_recall /= kNumClasses;
  s.macro_f1 /= kNumClasses;
  s.accuracy = ratio(cm.trace(), total);
  return s;
}

double macro_f1(std::span<const int> y_true, std::span<const int> y_pred) {
  check_labels(y_true, y_pred);
  if (y_true.empty()) {
    throw Error(ErrorKind::Precondition, "cannot score an empty prediction set");
  }
  std::array<std::size_t, kNumClasses> tp{}, fp{}, fn{};
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const auto t = static_cast<std::size_t>(y_true[i]);
    const auto p = static_cast<std::size_t>(y_pred[i]);
    if (t == p) {
      ++tp[t];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) sum += class_scores(tp[k], fp[k], fn[k]).f1;
  return sum / kNumClasses;
}

// ---------------------------------------------------------------------------

void Timings::record(std::string name, double seconds) {
  for (auto& [n, s] : entries_) {
    if (n == name) {
      s += seconds;
      return;
    }
  }
  entries_.emplace_back(std::move(name), seconds);
}

bool Timings::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == name; });
}

double Timings::seconds(std::string_view name) const {
  for (const auto& [n, s] : entries_) {
    if (n == name) return s;
  }
  return 0.0;
}

double round_report(double value) {
  const double scale = std::pow(10.0, kReportDecimals);
  return std::round(value * scale) / scale;
}

MetricsReport MetricsReport::evaluate(std::string model, std::string dataset,
                                      std::span<const int> y_true,
                                      std::span<const int> y_pred) {
  MetricsReport r;
  r.model = std::move(model);
  r.dataset = std::move(dataset);
  r.confusion = metrics::confusion(y_true, y_pred);
  r.scores = macro_scores(r.confusion);
  return r;
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["dataset"] = dataset;
  j["accuracy"] = round_report(scores.accuracy);
  j["macro_f1"] = round_report(scores.macro_f1);
  j["macro_precision"] = round_report(scores.macro_precision);
  j["macro_recall"] = round_report(scores.macro_recall);
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const auto& c = scores.per_class[k];
    per_class[std::string(kClassNames[k])] = {{"precision", round_report(c.precision)},
                                              {"recall", round_report(c.recall)},
                                              {"f1", round_report(c.f1)},
                                              {"support", c.support}};
  }
  j["per_class"] = per_class;
  j["confusion"] = confusion.counts;
  nlohmann::ordered_json t = nlohmann::ordered_json::object();
  for (const auto& [name, s] : timings.entries()) t[name] = round_report(s);
  j["timings_s"] = t;
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport r;
  try {
    r.model = j.at("model").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    const auto rows = j.at("confusion");
    if (!rows.is_array() || rows.size() != kNumClasses) {
      throw Error(ErrorKind::Schema, "confusion must be a 3x3 array");
    }
    for (std::size_t t = 0; t < kNumClasses; ++t) {
      if (!rows[t].is_array() || rows[t].size() != kNumClasses) {
        throw Error(ErrorKind::Schema, "confusion must be a 3x3 array");
      }
      for (std::size_t p = 0; p < kNumClasses; ++p) {
        r.confusion.counts[t][p] = rows[t][p].get<std::size_t>();
      }
    }
    if (j.contains("timings_s")) {
      for (const auto& [name, s] : j.at("timings_s").items()) {
        r.timings.record(name, s.get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed metrics report: ") + e.what());
  }
  // Scores are recomputed from the counts rather than trusted from the file.
  r.scores = macro_scores(r.confusion);
  return r;
}

std::vector<MetricsReport> load_reports(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  std::vector<MetricsReport> out;
  if (j.is_object() && j.contains("reports")) {
    if (!j["reports"].is_array()) {
      throw Error(ErrorKind::Schema, path.string() + ": 'reports' must be an array");
    }
    for (const auto& r : j["reports"]) out.push_back(MetricsReport::from_json(r));
  } else {
    out.push_back(MetricsReport::from_json(j));
  }
  return out;
}

void save_reports(const std::filesystem::path& path,
                  std::span<const MetricsReport> reports) {
  nlohmann::ordered_json j;
  j["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) j["reports"].push_back(r.to_json());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

std::vector<MetricsReport> merge_reports(std::vector<MetricsReport> reports) {
  std::stable_sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
    return std::tie(a.model, a.dataset) < std::tie(b.model, b.dataset);
  });
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].model == reports[i - 1].model &&
        reports[i].dataset == reports[i - 1].dataset) {
      throw Error(ErrorKind::DuplicateId, "two reports for model '" + reports[i].model +
                                              "' on dataset '" + reports[i].dataset + "'");
    }
  }
  return reports;
}

std::string render_table(std::span<const MetricsReport> reports) {
  const std::vector<std::string> head{"model", "dataset", "accuracy", "precision",
                                      "recall", "f1"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : reports) {
    rows.push_back({r.model, r.dataset, fixed(r.scores.accuracy),
                    fixed(r.scores.macro_precision), fixed(r.scores.macro_recall),
                    fixed(r.scores.macro_f1)});
  }
  std::vector<std::size_t> width(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) {
    width[c] = head[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << "  ";
      // Text columns left-aligned, numbers right-aligned.
      if (c < 2) {
        out << row[c] << std::string(width[c] - row[c].size(), ' ');
      } else {
        out << std::string(width[c] - row[c].size(), ' ') << row[c];
      }
    }
    out << '\n';
  };
  emit(head);
  std::vector<std::string> rule;
  for (std::size_t w : width) rule.emplace_back(w, '-');
  emit(rule);
  for (const auto& row : rows) emit(row);
  return out.str();
}

std::string render_confusion(const ConfusionMatrix& cm) {
  std::size_t width = std::string_view("true\\pred").size();
  for (auto name : kClassNames) width = std::max(width, name.size());
  for (const auto& row : cm.counts) {
    for (std::size_t v : row) width = std::max(width, std::to_string(v).size());
  }
  auto cell = [&](std::string_view s, bool right) {
    const std::string pad(width - s.size(), ' ');
    return right ? pad + std::string(s) : std::string(s) + pad;
  };
  std::ostringstream out;
  out << cell("true\\pred", false);
  for (auto name : kClassNames) out << "  " << cell(name, true);
  out << '\n';
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    out << cell(kClassNames[t], false);
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      out << "  " << cell(std::to_string(cm.counts[t][p]), true);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace forge::metrics
