#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "forge/labels.hpp"

namespace forge::metrics {

/// Counts indexed [true class][predicted class].
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

  std::size_t operator()(std::size_t t, std::size_t p) const { return counts[t][p]; }
  std::size_t total() const;
  std::size_t trace() const;
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws Error(Precondition) on a length mismatch or a label outside 0..2.
ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct Scores {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::array<ClassScores, kNumClasses> per_class{};
};

/// Per-class precision, recall and F1 with 0/0 taken as 0, their unweighted
/// means, and accuracy = trace / total. An empty matrix is an error.
Scores macro_scores(const ConfusionMatrix& cm);

/// Macro F1 tallied straight from label pairs, without a confusion matrix.
double macro_f1(std::span<const int> y_true, std::span<const int> y_pred);

/// Named wall-clock durations in completion order.
class Timings {
 public:
  void record(std::string name, double seconds);
  const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }
  bool contains(std::string_view name) const;
  double seconds(std::string_view name) const;  // 0 when absent

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

/// Runs `computation`, records its monotonic wall time under `name`, and
/// returns {result, seconds} (just the seconds for void computations).
template <typename F>
auto time_stage(Timings& timings, std::string name, F&& computation) {
  using Clock = std::chrono::steady_clock;
  using R = std::invoke_result_t<F>;
  const auto start = Clock::now();
  if constexpr (std::is_void_v<R>) {
    std::forward<F>(computation)();
    const double s = std::chrono::duration<double>(Clock::now() - start).count();
    timings.record(std::move(name), s);
    return s;
  } else {
    R result = std::forward<F>(computation)();
    const double s = std::chrono::duration<double>(Clock::now() - start).count();
    timings.record(std::move(name), s);
    return std::pair<R, double>(std::move(result), s);
  }
}

/// Decimal places kept when a report is serialized.
inline constexpr int kReportDecimals = 6;

struct MetricsReport {
  std::string model;    // base learner or ensemble, e.g. "EM4-soft"
  std::string dataset;  // evaluation set name
  ConfusionMatrix confusion;
  Scores scores;
  Timings timings;

  static MetricsReport evaluate(std::string model, std::string dataset,
                                std::span<const int> y_true,
                                std::span<const int> y_pred);

  nlohmann::ordered_json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

/// A report file holds either one report object or {"reports": [...]}.
std::vector<MetricsReport> load_reports(const std::filesystem::path& path);
void save_reports(const std::filesystem::path& path,
                  std::span<const MetricsReport> reports);

/// Reports sorted by (model, dataset); a repeated key is an error.
std::vector<MetricsReport> merge_reports(std::vector<MetricsReport> reports);

/// Aligned plain-text comparison table: one row per report with accuracy and
/// macro precision, recall and F1.
std::string render_table(std::span<const MetricsReport> reports);

/// Aligned plain-text confusion matrix with class-name row and column labels.
std::string render_confusion(const ConfusionMatrix& cm);

/// Rounds to kReportDecimals places, as written to report files.
double round_report(double value);

}  // namespace forge::metrics
