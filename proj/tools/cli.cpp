#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "forge/baselines.hpp"
#include "forge/datasets.hpp"
#include "forge/ensemble.hpp"
#include "forge/error.hpp"
#include "forge/experiment.hpp"
#include "forge/metrics.hpp"
#include "forge/predformat.hpp"
#include "forge/preprocess.hpp"
#include "forge/synthetic.hpp"

namespace forge::cli {

namespace fs = std::filesystem;
using datasets::Corpus;
using datasets::SplitPlan;
using ensemble::Rule;
using ensemble::Topology;

namespace {

// ---------------------------------------------------------------------------
// Shared helpers

std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

void ensure_parent(const fs::path& path) {
  const auto parent = path.parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + parent.string() + ": " + ec.message());
  }
}

void require_file(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::Io, "no such file: " + path.string());
}

preprocess::PreprocessConfig preprocess_config(const std::string& config_path,
                                               const std::string& lexicon_path) {
  preprocess::PreprocessConfig config;
  if (!config_path.empty()) config = preprocess::PreprocessConfig::from_file(config_path);
  if (!lexicon_path.empty()) {
    config.lexicon = preprocess::Lexicon::from_file(lexicon_path);
  } else if (const char* env = std::getenv("FORGE_LEXICON"); env != nullptr && *env != '\0') {
    config.lexicon = preprocess::Lexicon::from_file(env);
  }
  return config;
}

std::array<double, 3> parse_ratios(const std::string& text) {
  std::array<double, 3> ratios{};
  std::stringstream in(text);
  std::string item;
  std::size_t count = 0;
  while (std::getline(in, item, ',')) {
    if (count == 3) break;
    try {
      std::size_t used = 0;
      ratios[count] = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Usage, "bad ratio '" + item + "'");
    }
    ++count;
  }
  if (count != 3 || in.rdbuf()->in_avail() > 0) {
    throw Error(ErrorKind::Usage, "--ratios needs three comma-separated numbers");
  }
  return ratios;
}

std::map<std::string, fs::path> parse_assignments(const std::vector<std::string>& items,
                                                  const char* flag) {
  std::map<std::string, fs::path> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      throw Error(ErrorKind::Usage, std::string(flag) + " expects role=path, got '" + item + "'");
    }
    if (!out.emplace(item.substr(0, eq), item.substr(eq + 1)).second) {
      throw Error(ErrorKind::Usage, std::string(flag) + " repeats role '" + item.substr(0, eq) + "'");
    }
  }
  return out;
}

std::vector<std::size_t> split_part(const SplitPlan& plan, const std::string& part) {
  if (part == "train") return plan.train;
  if (part == "validation") return plan.validation;
  if (part == "test") return plan.test;
  throw Error(ErrorKind::Usage, "unknown split part '" + part + "' (train, validation, test, all)");
}

// The rows of `corpus` named by --split/--part, or all rows without a plan.
Corpus select_part(const Corpus& corpus, const std::string& split_path,
                   const std::string& part) {
  if (split_path.empty() || part == "all") return corpus;
  const auto plan = SplitPlan::load(split_path);
  if (plan.corpus_size != corpus.size()) {
    throw Error(ErrorKind::Schema, "split plan covers " + std::to_string(plan.corpus_size) +
                                       " examples but the corpus has " +
                                       std::to_string(corpus.size()));
  }
  const auto rows = split_part(plan, part);
  return corpus.subset(rows);
}

baselines::FeatureSpec head_features(const std::string& head) {
  for (const auto& h : experiment::default_heads()) {
    if (h.role == head) return h.features;
  }
  return baselines::FeatureSpec::from_name(head);
}

struct TrainFlags {
  std::size_t batch_size = baselines::TrainConfig{}.batch_size;
  std::size_t epochs = baselines::TrainConfig{}.max_epochs;
  double lr = baselines::TrainConfig{}.learning_rate;
  std::size_t patience = baselines::TrainConfig{}.patience;

  void add(CLI::App* cmd) {
    cmd->add_option("--batch-size", batch_size, "Mini-batch size")->capture_default_str();
    cmd->add_option("--epochs", epochs, "Maximum training epochs")->capture_default_str();
    cmd->add_option("--lr", lr, "Learning rate")->capture_default_str();
    cmd->add_option("--patience", patience, "Early-stopping patience (epochs)")
        ->capture_default_str();
  }
  baselines::TrainConfig config(std::uint64_t seed) const {
    baselines::TrainConfig c;
    c.batch_size = batch_size;
    c.max_epochs = epochs;
    c.learning_rate = lr;
    c.patience = patience;
    c.seed = seed;
    c.validate();
    return c;
  }
};

ProbabilityMatrix one_hot(const std::vector<int>& labels, std::string producer) {
  ProbabilityMatrix::Storage m =
      ProbabilityMatrix::Storage::Zero(static_cast<Eigen::Index>(labels.size()),
                                       static_cast<Eigen::Index>(kNumClasses));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    m(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return ProbabilityMatrix(std::move(m), std::move(producer));
}

nlohmann::json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

// ---------------------------------------------------------------------------
// ensemble

struct EnsembleJob {
  Topology topology = Topology::EM4;
  Rule rule = Rule::Soft;
  std::map<std::string, fs::path> members;
  std::map<std::string, fs::path> oof;
  fs::path truth;
  std::uint64_t seed = 23;
  fs::path output;
  std::string producer;
};

EnsembleJob job_from_manifest(const fs::path& manifest_path) {
  const auto j = load_json(manifest_path);
  const auto base = manifest_path.parent_path();
  EnsembleJob job;
  try {
    job.topology = ensemble::topology_from_name(j.at("topology").get<std::string>());
    job.rule = ensemble::rule_from_name(j.at("rule").get<std::string>());
    for (const auto& [role, path] : j.at("members").items()) {
      job.members[role] = resolve(base, path.get<std::string>());
    }
    if (j.contains("stacking")) {
      const auto& s = j.at("stacking");
      for (const auto& [role, path] : s.at("oof").items()) {
        job.oof[role] = resolve(base, path.get<std::string>());
      }
      job.truth = resolve(base, s.at("truth").get<std::string>());
    }
    if (j.contains("seed")) job.seed = j.at("seed").get<std::uint64_t>();
    job.output = resolve(base, j.at("output").get<std::string>());
    if (j.contains("producer")) job.producer = j.at("producer").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, manifest_path.string() + ": " + e.what());
  }
  return job;
}

// Loads one prediction file per topology role; every file must list the same
// example ids in the same order.
std::pair<ensemble::MatrixRegistry, std::vector<std::string>> load_members(
    Topology topology, const std::map<std::string, fs::path>& files, const char* what) {
  const auto roles = ensemble::topology_roles(topology);
  for (const auto& [role, path] : files) {
    if (std::find(roles.begin(), roles.end(), role) == roles.end()) {
      throw Error(ErrorKind::Usage, std::string(what) + " role '" + role + "' is not part of " +
                                        std::string(ensemble::topology_name(topology)));
    }
  }
  ensemble::MatrixRegistry registry;
  std::vector<std::string> ids;
  bool first = true;
  for (auto role : roles) {
    const auto it = files.find(std::string(role));
    if (it == files.end()) continue;
    auto preds = predformat::read_predictions(it->second);
    if (first) {
      ids = preds.ids;
      first = false;
    } else if (preds.ids != ids) {
      throw Error(ErrorKind::Schema, std::string(what) + " file " + it->second.string() +
                                         " lists different example ids than the other members");
    }
    registry.emplace(std::string(role), std::move(preds.matrix));
  }
  return {std::move(registry), std::move(ids)};
}

void run_ensemble(const EnsembleJob& job, std::ostream& out) {
  const auto roles = ensemble::topology_roles(job.topology);
  if (job.rule == Rule::Hard && roles.size() % 2 == 0) {
    throw Error(ErrorKind::Precondition,
                "hard voting requires an odd number of members; " +
                    std::string(ensemble::topology_name(job.topology)) + " has " +
                    std::to_string(roles.size()));
  }
  if (job.output.empty()) throw Error(ErrorKind::Usage, "an output path is required");

  auto [registry, ids] = load_members(job.topology, job.members, "member");
  const auto spec = ensemble::build_em(job.topology, job.rule, registry);
  const auto members = ensemble::select_members(spec, registry);
  const std::string producer =
      job.producer.empty() ? std::string(ensemble::topology_name(job.topology)) + "-" +
                                 std::string(ensemble::rule_name(job.rule))
                           : job.producer;

  ProbabilityMatrix result;
  switch (job.rule) {
    case Rule::Soft:
      result = ensemble::soft_vote(members, spec.member_weights).averaged;
      break;
    case Rule::Max:
      result = one_hot(ensemble::max_value(members), producer);
      break;
    case Rule::Hard:
      result = one_hot(ensemble::hard_vote(members), producer);
      break;
    case Rule::Stack: {
      if (job.truth.empty()) {
        throw Error(ErrorKind::Usage, "stacking needs --truth with the out-of-fold labels");
      }
      auto [oof_registry, oof_ids] = load_members(job.topology, job.oof, "oof");
      const auto oof_spec = ensemble::build_em(job.topology, Rule::Stack, oof_registry);
      const auto oof_members = ensemble::select_members(oof_spec, oof_registry);
      const auto truth = datasets::read_corpus(job.truth);
      std::unordered_map<std::string, int> label_of;
      for (const auto& ex : truth.examples()) label_of.emplace(ex.id, to_int(ex.label));
      std::vector<int> labels;
      labels.reserve(oof_ids.size());
      for (const auto& id : oof_ids) {
        const auto it = label_of.find(id);
        if (it == label_of.end()) {
          throw Error(ErrorKind::Schema, "oof id '" + id + "' is missing from " + job.truth.string());
        }
        labels.push_back(it->second);
      }
      ensemble::MetaConfig meta;
      meta.train.seed = job.seed;
      const auto learner = ensemble::MetaLearner::fit(ensemble::stack_features(oof_members),
                                                      labels, meta, oof_members.size());
      result = learner.predict_proba(members, producer);
      break;
    }
  }
  result.set_producer(producer);
  ensure_parent(job.output);
  predformat::write_predictions(result, ids, producer, job.output);
  out << producer << ": " << ids.size() << " rows -> " << job.output.string() << '\n';
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentJob {
  fs::path corpus;
  fs::path split;
  std::array<double, 3> ratios{0.675, 0.075, 0.25};
  std::uint64_t seed = 17;
  fs::path output;
  fs::path predictions_dir;
  std::string dataset;
  bool normalize = false;
  fs::path preprocess_config;
};

ExperimentJob experiment_from_manifest(const fs::path& manifest_path) {
  const auto j = load_json(manifest_path);
  const auto base = manifest_path.parent_path();
  ExperimentJob job;
  try {
    job.corpus = resolve(base, j.at("corpus").get<std::string>());
    if (j.contains("split")) job.split = resolve(base, j.at("split").get<std::string>());
    if (j.contains("ratios")) job.ratios = j.at("ratios").get<std::array<double, 3>>();
    if (j.contains("seed")) job.seed = j.at("seed").get<std::uint64_t>();
    job.output = resolve(base, j.at("output").get<std::string>());
    if (j.contains("predictions_dir")) {
      job.predictions_dir = resolve(base, j.at("predictions_dir").get<std::string>());
    }
    if (j.contains("dataset")) job.dataset = j.at("dataset").get<std::string>();
    if (j.contains("preprocess")) {
      const auto& p = j.at("preprocess");
      if (p.is_boolean()) {
        job.normalize = p.get<bool>();
      } else {
        job.normalize = true;
        job.preprocess_config = resolve(base, p.get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, manifest_path.string() + ": " + e.what());
  }
  return job;
}

void run_experiment(const ExperimentJob& job, const TrainFlags& flags, std::ostream& out) {
  if (job.output.empty()) throw Error(ErrorKind::Usage, "an output path is required");
  Corpus corpus = datasets::read_corpus(job.corpus);
  if (job.normalize) {
    std::size_t dropped = 0;
    corpus = datasets::normalize_corpus(
        corpus, preprocess_config(job.preprocess_config.string(), ""), &dropped);
    out << "preprocess: dropped " << dropped << " examples\n";
  }
  const SplitPlan plan = job.split.empty()
                             ? datasets::stratified_split(corpus, job.ratios, job.seed)
                             : SplitPlan::load(job.split);
  if (plan.corpus_size != corpus.size()) {
    throw Error(ErrorKind::Schema, "split plan does not match the corpus size");
  }
  const auto train = corpus.subset(plan.train);
  const auto validation = corpus.subset(plan.validation);
  const auto test = corpus.subset(plan.test);

  experiment::ExperimentConfig config;
  config.seed = job.seed;
  config.train = flags.config(job.seed);
  const std::string dataset = job.dataset.empty() ? job.corpus.stem().string() : job.dataset;
  const auto result = experiment::run(train, validation, test, config, dataset);
  if (!result.stack_audit.ok) {
    throw Error(ErrorKind::Precondition, "stacking leakage audit failed: " +
                                             result.stack_audit.violations.front());
  }

  ensure_parent(job.output);
  metrics::save_reports(job.output, result.reports);
  if (!job.predictions_dir.empty()) {
    fs::create_directories(job.predictions_dir);
    const auto ids = test.ids();
    for (const auto& [role, matrix] : result.test_predictions) {
      predformat::write_predictions(matrix, ids, role, job.predictions_dir / (role + ".csv"));
    }
  }
  out << metrics::render_table(result.reports);
}

}  // namespace

// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Text-classification ensemble harness", "forge"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Normalize a canonical corpus file or one text");
  std::string pre_in, pre_out, pre_text, pre_config, pre_lexicon;
  auto* pre_in_opt = pre->add_option("--in", pre_in, "Canonical corpus file");
  pre->add_option("--out", pre_out, "Normalized corpus file");
  auto* pre_text_opt = pre->add_option("--text", pre_text, "Normalize one text and print it");
  pre->add_option("--config", pre_config, "Preprocessing config (key = value lines)");
  pre->add_option("--lexicon", pre_lexicon, "Word list overriding the built-in lexicon");
  pre_in_opt->excludes(pre_text_opt);

  // fuse
  auto* fuse = app.add_subcommand("fuse", "Load, normalize and merge the three corpora");
  std::string fuse_d, fuse_h, fuse_o, fuse_out, fuse_hist, fuse_config, fuse_lexicon;
  fuse->add_option("--davidson", fuse_d, "Davidson CSV");
  fuse->add_option("--hateval", fuse_h, "HatEval 2019 CSV/TSV");
  fuse->add_option("--olid", fuse_o, "OLID TSV");
  fuse->add_option("--out", fuse_out, "Fused canonical corpus")->required();
  fuse->add_option("--histogram", fuse_hist, "Write the class histogram JSON here");
  fuse->add_option("--config", fuse_config, "Preprocessing config");
  fuse->add_option("--lexicon", fuse_lexicon, "Word list overriding the built-in lexicon");

  // split
  auto* split = app.add_subcommand("split", "Stratified train/validation/test split");
  std::string split_corpus, split_out, split_ratios = "0.8,0.1,0.1";
  std::uint64_t split_seed = 17;
  split->add_option("--corpus", split_corpus, "Canonical corpus")->required();
  split->add_option("--out", split_out, "Split plan JSON")->required();
  split->add_option("--ratios", split_ratios, "train,validation,test")->capture_default_str();
  split->add_option("--seed", split_seed, "Shuffle seed")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train one base learner");
  std::string train_corpus, train_split, train_head, train_out;
  std::uint64_t train_seed = 17;
  TrainFlags train_flags;
  train->add_option("--corpus", train_corpus, "Canonical corpus")->required();
  train->add_option("--split", train_split, "Split plan JSON")->required();
  train->add_option("--head", train_head, "mlp, cnn, lstm or a feature name (ngram33, ...)")
      ->required();
  train->add_option("--out", train_out, "Model checkpoint")->required();
  train->add_option("--seed", train_seed, "Training seed")->capture_default_str();
  train_flags.add(train);

  // predict
  auto* predict = app.add_subcommand("predict", "Write a model's prediction file");
  std::string pred_model, pred_corpus, pred_split, pred_part = "test", pred_out, pred_producer;
  predict->add_option("--model", pred_model, "Model checkpoint")->required();
  predict->add_option("--corpus", pred_corpus, "Canonical corpus")->required();
  predict->add_option("--split", pred_split, "Split plan JSON");
  predict->add_option("--part", pred_part, "train, validation, test or all")
      ->capture_default_str();
  predict->add_option("--out", pred_out, "Prediction file")->required();
  predict->add_option("--producer", pred_producer, "Producer id (default: checkpoint name)");

  // oof
  auto* oof = app.add_subcommand("oof", "Out-of-fold predictions over the training split");
  std::string oof_corpus, oof_split, oof_head, oof_out, oof_producer;
  std::uint64_t oof_seed = 17, oof_train_seed = 17;
  std::size_t oof_folds = 3;
  TrainFlags oof_flags;
  oof->add_option("--corpus", oof_corpus, "Canonical corpus")->required();
  oof->add_option("--split", oof_split, "Split plan JSON")->required();
  oof->add_option("--head", oof_head, "mlp, cnn, lstm or a feature name")->required();
  oof->add_option("--out", oof_out, "Prediction file")->required();
  oof->add_option("--folds", oof_folds, "Number of folds")->capture_default_str();
  oof->add_option("--seed", oof_seed, "Fold assignment seed")->capture_default_str();
  oof->add_option("--train-seed", oof_train_seed, "Training seed")->capture_default_str();
  oof->add_option("--producer", oof_producer, "Producer id (default: head)");
  oof_flags.add(oof);

  // ensemble
  auto* ens = app.add_subcommand("ensemble", "Combine member prediction files");
  std::string ens_topology = "EM4", ens_rule = "soft", ens_out, ens_manifest, ens_truth,
              ens_producer;
  std::vector<std::string> ens_members, ens_oof;
  std::uint64_t ens_seed = 23;
  ens->add_option("--topology", ens_topology, "EM1, EM2, EM3 or EM4")->capture_default_str();
  ens->add_option("--rule", ens_rule, "soft, max, hard or stack")->capture_default_str();
  ens->add_option("--member", ens_members, "role=predictions.csv (mlp, cnn, lstm)");
  ens->add_option("--oof", ens_oof, "role=oof.csv, stacking training inputs");
  ens->add_option("--truth", ens_truth, "Corpus holding the labels of the oof ids");
  ens->add_option("--seed", ens_seed, "Meta-learner seed")->capture_default_str();
  ens->add_option("--out", ens_out, "Output prediction file");
  ens->add_option("--producer", ens_producer, "Producer id of the output");
  ens->add_option("--manifest", ens_manifest, "JSON run manifest instead of flags");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score a prediction file against labels");
  std::string eval_pred, eval_truth, eval_out, eval_model, eval_dataset;
  eval->add_option("--pred", eval_pred, "Prediction file")->required();
  eval->add_option("--truth", eval_truth, "Canonical corpus with the true labels")->required();
  eval->add_option("--out", eval_out, "Metrics report JSON");
  eval->add_option("--model", eval_model, "Row name (default: producer id)");
  eval->add_option("--dataset", eval_dataset, "Dataset name (default: truth file stem)");

  // report
  auto* report = app.add_subcommand("report", "Merge metrics reports into one table");
  std::vector<std::string> report_in;
  std::string report_out;
  report->add_option("--in", report_in, "Report JSON files")->required();
  report->add_option("--out", report_out, "Merged report JSON");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the synthetic three-class corpus");
  std::size_t synth_n = 300;
  std::uint64_t synth_seed = 7;
  std::string synth_out;
  synth->add_option("--n", synth_n, "Number of examples")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Canonical corpus file")->required();

  // experiment
  auto* exp = app.add_subcommand("experiment", "Train heads, run every ensemble, report");
  ExperimentJob exp_job;
  std::string exp_corpus, exp_split, exp_out, exp_pred_dir, exp_ratios, exp_manifest,
      exp_dataset;
  TrainFlags exp_flags;
  exp->add_option("--corpus", exp_corpus, "Normalized canonical corpus");
  exp->add_option("--split", exp_split, "Split plan JSON (default: split with --ratios)");
  exp->add_option("--ratios", exp_ratios, "train,validation,test when no plan is given");
  exp->add_option("--seed", exp_job.seed, "Seed for the split, training and folds")
      ->capture_default_str();
  exp->add_option("--out", exp_out, "Report JSON");
  exp->add_option("--predictions", exp_pred_dir, "Directory for per-head test predictions");
  exp->add_option("--dataset", exp_dataset, "Dataset name in the report");
  exp->add_option("--manifest", exp_manifest, "JSON run manifest instead of flags");
  exp_flags.add(exp);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      throw Error(ErrorKind::Usage, e.what());
    }

    if (pre->parsed()) {
      const auto config = preprocess_config(pre_config, pre_lexicon);
      if (pre_text_opt->count() > 0) {
        const auto clean = preprocess::normalize(pre_text, config);
        out << (clean ? clean->text : std::string("(dropped)")) << '\n';
        return 0;
      }
      if (pre_in.empty()) throw Error(ErrorKind::Usage, "preprocess needs --in or --text");
      if (pre_out.empty()) throw Error(ErrorKind::Usage, "preprocess --in needs --out");
      const auto corpus = datasets::read_corpus(pre_in);
      std::size_t dropped = 0;
      const auto clean = datasets::normalize_corpus(corpus, config, &dropped);
      ensure_parent(pre_out);
      datasets::write_corpus(clean, pre_out);
      out << "kept " << clean.size() << ", dropped " << dropped << '\n';
    } else if (fuse->parsed()) {
      if (fuse_d.empty() && fuse_h.empty() && fuse_o.empty()) {
        throw Error(ErrorKind::Usage, "fuse needs at least one of --davidson, --hateval, --olid");
      }
      const auto config = preprocess_config(fuse_config, fuse_lexicon);
      auto load = [&](const std::string& path, auto loader) {
        if (path.empty()) return Corpus{};
        std::size_t dropped = 0;
        auto c = datasets::normalize_corpus(loader(path), config, &dropped);
        out << path << ": kept " << c.size() << ", dropped " << dropped << '\n';
        return c;
      };
      const auto fused = datasets::fuse_dho(load(fuse_d, datasets::load_davidson),
                                            load(fuse_h, datasets::load_hateval),
                                            load(fuse_o, datasets::load_olid));
      ensure_parent(fuse_out);
      datasets::write_corpus(fused, fuse_out);
      const auto hist = datasets::histogram_json(fused).dump(2);
      if (!fuse_hist.empty()) {
        ensure_parent(fuse_hist);
        std::ofstream h(fuse_hist, std::ios::binary | std::ios::trunc);
        if (!h) throw Error(ErrorKind::Io, "cannot write " + fuse_hist);
        h << hist << '\n';
      }
      out << hist << '\n';
    } else if (split->parsed()) {
      const auto corpus = datasets::read_corpus(split_corpus);
      const auto plan = datasets::stratified_split(corpus, parse_ratios(split_ratios), split_seed);
      ensure_parent(split_out);
      plan.save(split_out);
      out << "train " << plan.train.size() << ", validation " << plan.validation.size()
          << ", test " << plan.test.size() << '\n';
    } else if (train->parsed()) {
      const auto corpus = datasets::read_corpus(train_corpus);
      const auto tr = select_part(corpus, train_split, "train");
      const auto va = select_part(corpus, train_split, "validation");
      const auto spec = head_features(train_head);
      const auto model = baselines::train_text(tr.texts(), tr.labels(), va.texts(), va.labels(),
                                               spec, train_flags.config(train_seed),
                                               datasets::class_weights(tr));
      ensure_parent(train_out);
      model.save(train_out);
      out << spec.name() << ": best epoch " << model.best_epoch << " of "
          << model.validation_accuracy.size() << '\n';
    } else if (predict->parsed()) {
      const auto model = baselines::SoftmaxModel::load(pred_model);
      const auto corpus = select_part(datasets::read_corpus(pred_corpus), pred_split, pred_part);
      const std::string producer =
          pred_producer.empty() ? fs::path(pred_model).stem().string() : pred_producer;
      const auto proba = model.predict_proba(corpus.texts(), producer);
      ensure_parent(pred_out);
      predformat::write_predictions(proba, corpus.ids(), producer, pred_out);
      out << producer << ": " << corpus.size() << " rows -> " << pred_out << '\n';
    } else if (oof->parsed()) {
      const auto train_part = select_part(datasets::read_corpus(oof_corpus), oof_split, "train");
      const auto labels = train_part.labels();
      const auto folds = ensemble::stratified_folds(labels, oof_folds, oof_seed);
      const ensemble::BaseLearner learner{oof_producer.empty() ? oof_head : oof_producer,
                                          head_features(oof_head),
                                          oof_flags.config(oof_train_seed)};
      const auto proba = ensemble::out_of_fold(learner, train_part.texts(), labels, folds);
      ensure_parent(oof_out);
      predformat::write_predictions(proba, train_part.ids(), learner.name, oof_out);
      out << learner.name << ": " << train_part.size() << " out-of-fold rows -> " << oof_out
          << '\n';
    } else if (ens->parsed()) {
      EnsembleJob job;
      if (!ens_manifest.empty()) {
        require_file(ens_manifest);
        job = job_from_manifest(ens_manifest);
      } else {
        job.topology = ensemble::topology_from_name(ens_topology);
        job.rule = ensemble::rule_from_name(ens_rule);
        job.members = parse_assignments(ens_members, "--member");
        job.oof = parse_assignments(ens_oof, "--oof");
        job.truth = ens_truth;
        job.seed = ens_seed;
        job.output = ens_out;
        job.producer = ens_producer;
      }
      run_ensemble(job, out);
    } else if (eval->parsed()) {
      const auto preds = predformat::read_predictions(eval_pred);
      const auto truth = datasets::read_corpus(eval_truth);
      std::unordered_map<std::string, int> label_of;
      for (const auto& ex : truth.examples()) label_of.emplace(ex.id, to_int(ex.label));
      std::vector<int> y_true;
      y_true.reserve(preds.size());
      for (const auto& id : preds.ids) {
        const auto it = label_of.find(id);
        if (it == label_of.end()) {
          throw Error(ErrorKind::Schema, "predicted id '" + id + "' is missing from " + eval_truth);
        }
        y_true.push_back(it->second);
      }
      const std::string model = eval_model.empty() ? preds.matrix.producer() : eval_model;
      const std::string dataset =
          eval_dataset.empty() ? fs::path(eval_truth).stem().string() : eval_dataset;
      metrics::Timings timings;
      auto [report, s] = metrics::time_stage(timings, "evaluate", [&] {
        return metrics::MetricsReport::evaluate(model, dataset, y_true,
                                                preds.matrix.argmax_labels());
      });
      report.timings = timings;
      if (!eval_out.empty()) {
        ensure_parent(eval_out);
        std::ofstream f(eval_out, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorKind::Io, "cannot write " + eval_out);
        f << report.to_json().dump(2) << '\n';
      }
      const std::vector<metrics::MetricsReport> one{report};
      out << metrics::render_table(one) << '\n' << metrics::render_confusion(report.confusion);
    } else if (report->parsed()) {
      std::vector<metrics::MetricsReport> all;
      for (const auto& path : report_in) {
        auto part = metrics::load_reports(path);
        all.insert(all.end(), part.begin(), part.end());
      }
      const auto merged = metrics::merge_reports(std::move(all));
      if (!report_out.empty()) {
        ensure_parent(report_out);
        metrics::save_reports(report_out, merged);
      }
      out << metrics::render_table(merged);
    } else if (synth->parsed()) {
      synthetic::SyntheticConfig config;
      config.size = synth_n;
      config.seed = synth_seed;
      const auto corpus = synthetic::generate(config);
      ensure_parent(synth_out);
      datasets::write_corpus(corpus, synth_out);
      out << datasets::histogram_json(corpus).dump(2) << '\n';
    } else if (exp->parsed()) {
      ExperimentJob job = exp_job;
      if (!exp_manifest.empty()) {
        require_file(exp_manifest);
        job = experiment_from_manifest(exp_manifest);
      } else {
        if (exp_corpus.empty() || exp_out.empty()) {
          throw Error(ErrorKind::Usage, "experiment needs --corpus and --out (or --manifest)");
        }
        job.corpus = exp_corpus;
        job.split = exp_split;
        if (!exp_ratios.empty()) job.ratios = parse_ratios(exp_ratios);
        job.output = exp_out;
        job.predictions_dir = exp_pred_dir;
        job.dataset = exp_dataset;
      }
      run_experiment(job, exp_flags, out);
    }
    return 0;
  } catch (const Error& e) {
    err << error_prefix(e.kind()) << ": " << one_line(e.what()) << std::endl;
  } catch (const fs::filesystem_error& e) {
    err << error_prefix(ErrorKind::Io) << ": " << one_line(e.what()) << std::endl;
  } catch (const std::exception& e) {
    err << "internal-error: " << one_line(e.what()) << std::endl;
  }
  return 1;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("forge");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace forge::cli
