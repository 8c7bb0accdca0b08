#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "forge/datasets.hpp"
#include "forge/ensemble.hpp"
#include "forge/error.hpp"
#include "forge/metrics.hpp"
#include "forge/predformat.hpp"
#include "forge/preprocess.hpp"
#include "forge/synthetic.hpp"

#ifdef FORGE_WITH_CLI
#include "cli.hpp"
#endif

namespace py = pybind11;
using forge::ProbabilityMatrix;

namespace {

// Members arrive as a list of n x 3 arrays; they are named m0, m1, ... so
// validation errors point at the offending list position.
std::vector<ProbabilityMatrix> to_members(
    const std::vector<ProbabilityMatrix::Storage>& arrays) {
  std::vector<ProbabilityMatrix> members;
  members.reserve(arrays.size());
  for (std::size_t j = 0; j < arrays.size(); ++j) {
    members.push_back(
        ProbabilityMatrix::checked(arrays[j], "m" + std::to_string(j)));
  }
  return members;
}

py::dict scores_dict(const forge::metrics::Scores& s) {
  py::dict d;
  d["accuracy"] = s.accuracy;
  d["macro_precision"] = s.macro_precision;
  d["macro_recall"] = s.macro_recall;
  d["macro_f1"] = s.macro_f1;
  py::list per_class;
  for (const auto& c : s.per_class) {
    py::dict row;
    row["precision"] = c.precision;
    row["recall"] = c.recall;
    row["f1"] = c.f1;
    row["support"] = c.support;
    per_class.append(row);
  }
  d["per_class"] = per_class;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Text-classification ensemble harness: preprocessing, splits, "
            "combiners, metrics and prediction files.";

  static py::exception<forge::Error> forge_error(m, "ForgeError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const forge::Error& e) {
      const std::string prefix(forge::error_prefix(e.kind()));
      py::set_error(forge_error, (prefix + ": " + e.what()).c_str());
    }
  });

  // Preprocessing ---------------------------------------------------------

  m.def(
      "normalize",
      [](const std::string& text, std::size_t min_tokens) -> py::object {
        forge::preprocess::PreprocessConfig config;
        config.min_tokens = min_tokens;
        auto out = forge::preprocess::normalize(text, config);
        if (!out) return py::none();
        return py::str(out->text);
      },
      py::arg("text"), py::arg("min_tokens") = 2,
      "Cleaned text, or None when the tweet is dropped by the length filter.");

  m.def(
      "collapse_elongation",
      [](const std::string& token) {
        return forge::preprocess::collapse_elongation(
            token, *forge::preprocess::Lexicon::builtin());
      },
      py::arg("token"));

  m.def(
      "segment_hashtag",
      [](const std::string& tag) {
        return forge::preprocess::segment_hashtag(
            tag, *forge::preprocess::Lexicon::builtin());
      },
      py::arg("tag"));

  // Data ------------------------------------------------------------------

  m.def(
      "generate_synthetic",
      [](std::size_t size, std::uint64_t seed) {
        forge::synthetic::SyntheticConfig config;
        config.size = size;
        config.seed = seed;
        const auto corpus = forge::synthetic::generate(config);
        std::vector<std::tuple<std::string, std::string, int>> rows;
        rows.reserve(corpus.size());
        for (const auto& ex : corpus.examples()) {
          rows.emplace_back(ex.id, ex.text, forge::to_int(ex.label));
        }
        return rows;
      },
      py::arg("size") = 300, py::arg("seed") = 7,
      "List of (id, raw_text, label) tuples.");

  m.def(
      "stratified_split",
      [](const std::vector<int>& labels, std::array<double, 3> ratios,
         std::uint64_t seed) {
        const auto plan = forge::datasets::stratified_split(labels, ratios, seed);
        py::dict d;
        d["train"] = plan.train;
        d["validation"] = plan.validation;
        d["test"] = plan.test;
        return d;
      },
      py::arg("labels"), py::arg("ratios") = std::array<double, 3>{0.8, 0.1, 0.1},
      py::arg("seed") = 0);

  m.def(
      "class_weights",
      [](const std::vector<int>& labels) {
        return forge::datasets::class_weights(labels).values();
      },
      py::arg("labels"));

  // Combiners -------------------------------------------------------------

  m.def(
      "soft_vote",
      [](const std::vector<ProbabilityMatrix::Storage>& arrays,
         const std::vector<double>& weights) {
        const auto members = to_members(arrays);
        auto result = forge::ensemble::soft_vote(members, weights);
        return std::make_pair(result.labels, result.averaged.values());
      },
      py::arg("members"), py::arg("weights") = std::vector<double>{},
      "Returns (labels, averaged_probabilities).");

  m.def(
      "max_value",
      [](const std::vector<ProbabilityMatrix::Storage>& arrays) {
        return forge::ensemble::max_value(to_members(arrays));
      },
      py::arg("members"));

  m.def(
      "hard_vote",
      [](const std::vector<ProbabilityMatrix::Storage>& arrays) {
        return forge::ensemble::hard_vote(to_members(arrays));
      },
      py::arg("members"));

  m.def(
      "stack_features",
      [](const std::vector<ProbabilityMatrix::Storage>& arrays) {
        return forge::ensemble::stack_features(to_members(arrays));
      },
      py::arg("members"));

  // Metrics ---------------------------------------------------------------

  m.def(
      "confusion",
      [](const std::vector<int>& y_true, const std::vector<int>& y_pred) {
        const auto cm = forge::metrics::confusion(y_true, y_pred);
        std::vector<std::vector<std::size_t>> out;
        for (const auto& row : cm.counts) out.emplace_back(row.begin(), row.end());
        return out;
      },
      py::arg("y_true"), py::arg("y_pred"),
      "3 x 3 counts indexed [true][predicted].");

  m.def(
      "macro_scores",
      [](const std::vector<int>& y_true, const std::vector<int>& y_pred) {
        return scores_dict(
            forge::metrics::macro_scores(forge::metrics::confusion(y_true, y_pred)));
      },
      py::arg("y_true"), py::arg("y_pred"));

  // Prediction files ------------------------------------------------------

  m.def(
      "format_predictions",
      [](const ProbabilityMatrix::Storage& probs, const std::vector<std::string>& ids,
         const std::string& producer) {
        return forge::predformat::format_predictions(ProbabilityMatrix(probs, producer),
                                                     ids, producer);
      },
      py::arg("probabilities"), py::arg("ids"), py::arg("producer"));

  m.def(
      "parse_predictions",
      [](const std::string& text, const std::string& source) {
        std::istringstream in(text);
        auto preds = forge::predformat::parse_predictions(in, source);
        return std::make_tuple(preds.matrix.producer(), preds.ids,
                               preds.matrix.values());
      },
      py::arg("text"), py::arg("source") = "<string>",
      "Returns (producer_id, ids, probabilities).");

  // Command line ----------------------------------------------------------

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
#ifdef FORGE_WITH_CLI
        std::ostringstream out;
        std::ostringstream err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = forge::cli::run(args, out, err);
        }
        return std::make_tuple(code, out.str(), err.str());
#else
        (void)args;
        throw forge::Error(forge::ErrorKind::Precondition,
                           "module was built without the command-line tool");
        return std::make_tuple(0, std::string(), std::string());
#endif
      },
      py::arg("args"),
      "Runs one `forge` invocation; returns (exit_code, stdout, stderr).");
}
