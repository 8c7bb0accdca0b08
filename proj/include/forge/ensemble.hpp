#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "forge/baselines.hpp"
#include "forge/probability_matrix.hpp"

namespace forge::ensemble {

enum class Rule { Soft, Max, Hard, Stack };
enum class Topology { EM1, EM2, EM3, EM4 };

std::string_view rule_name(Rule rule);
Rule rule_from_name(std::string_view name);
std::string_view topology_name(Topology topology);
Topology topology_from_name(std::string_view name);

// Member roles of the topologies: the three base-learner heads.
inline constexpr std::string_view kRoleMlp = "mlp";
inline constexpr std::string_view kRoleCnn = "cnn";
inline constexpr std::string_view kRoleLstm = "lstm";

// Roles taking part in a topology, in member order:
//   EM1: mlp + cnn, EM2: mlp + lstm, EM3: cnn + lstm, EM4: mlp + cnn + lstm.
std::vector<std::string_view> topology_roles(Topology topology);

struct EnsembleSpec {
  Topology topology = Topology::EM4;
  Rule rule = Rule::Soft;
  std::vector<std::string> roles;    // registry keys, in topology order
  std::vector<std::string> members;  // producer tags, in topology order
  std::vector<double> member_weights;

  std::size_t size() const { return members.size(); }
};

using MatrixRegistry = std::map<std::string, ProbabilityMatrix, std::less<>>;

// Resolves a topology against a role -> matrix registry. Throws
// Error(Precondition) naming a missing role, and for Hard on an even-sized
// topology.
EnsembleSpec build_em(Topology topology, Rule rule, const MatrixRegistry& registry);

// The registry matrices referenced by `spec`, in member order.
std::vector<ProbabilityMatrix> select_members(const EnsembleSpec& spec,
                                              const MatrixRegistry& registry);

struct SoftVoteResult {
  std::vector<int> labels;
  ProbabilityMatrix averaged;
};

// Weighted average of member rows, sum_j w_j p_j / sum_j w_j, and its argmax
// (ties to the lowest class). Empty `weights` means all ones. Requires at
// least two members of identical shape; rows are validated on entry.
SoftVoteResult soft_vote(std::span<const ProbabilityMatrix> members,
                         std::span<const double> weights = {});

// Per row, the class holding the single largest entry across all members
// (ties: lowest class, then earliest member).
std::vector<int> max_value(std::span<const ProbabilityMatrix> members);

// Per row, the unique most frequent member vote. When no class holds a
// unique maximum count (for three members: all votes differ) the row falls
// back to the unweighted soft vote of `fallback`. Requires an odd member
// count of at least three.
std::vector<int> hard_vote(std::span<const std::vector<int>> member_votes,
                           std::span<const ProbabilityMatrix> fallback);
std::vector<int> hard_vote(std::span<const ProbabilityMatrix> members);

// Stacked-generalization inputs: row i is the concatenation of the members'
// rows i (member-major), giving n x (m * c).
Eigen::MatrixXd stack_features(std::span<const ProbabilityMatrix> members);

// ---------------------------------------------------------------------------
// Stacking

// k stratified folds over a training index range.
struct FoldAssignment {
  std::vector<std::vector<std::size_t>> folds;
  std::uint64_t seed = 0;

  std::size_t k() const { return folds.size(); }
  // fold_of()[i] is the fold holding example i.
  std::vector<std::size_t> fold_of(std::size_t n) const;
};

// Throws Error(Precondition) if some class cannot be spread over k folds.
FoldAssignment stratified_folds(std::span<const int> labels, std::size_t k,
                                std::uint64_t seed);

struct BaseLearner {
  std::string name;  // producer tag
  baselines::FeatureSpec features;
  baselines::TrainConfig config;
};

struct MetaConfig {
  baselines::TrainConfig train{32, 200, 0.5, 20, 23};
  double validation_ratio = 0.10;
};

// Softmax regression over stacked member probabilities.
class MetaLearner {
 public:
  MetaLearner() = default;

  // Trains on z (n x m*c) with the true labels; a stratified slice of
  // `config.validation_ratio` drives early stopping.
  static MetaLearner fit(const Eigen::MatrixXd& z, std::span<const int> labels,
                         const MetaConfig& config, std::size_t members);

  std::size_t members() const { return members_; }
  std::size_t input_dim() const { return members_ * num_classes_; }
  const baselines::SoftmaxModel& model() const { return model_; }
  baselines::SoftmaxModel& model() { return model_; }

  // Throws Error(Precondition) on a member-count or class-count mismatch.
  ProbabilityMatrix predict_proba(std::span<const ProbabilityMatrix> members,
                                  std::string producer = "stack") const;
  ProbabilityMatrix predict_proba(const Eigen::MatrixXd& z,
                                  std::string producer = "stack") const;

  static baselines::FeatureVector row_features(const Eigen::MatrixXd& z,
                                               Eigen::Index row);

  // Builds a meta-learner from explicit weights (num_classes x (m*c + 1),
  // column 0 the bias).
  static MetaLearner from_weights(const Eigen::MatrixXd& weights,
                                  std::size_t members);

 private:
  baselines::SoftmaxModel model_;
  std::size_t members_ = 0;
  std::size_t num_classes_ = kNumClasses;
};

// One member fit made while building z.
struct FoldRecord {
  std::size_t fold = 0;
  std::size_t member = 0;
  std::vector<std::size_t> trained_on;  // sorted, includes its validation slice
  std::vector<std::size_t> predicted;   // rows of z written by this fit
};

class StackedModel {
 public:
  std::vector<BaseLearner> learners;
  std::vector<baselines::SoftmaxModel> members;  // refit on the full training set
  MetaLearner meta;
  FoldAssignment folds;
  std::vector<FoldRecord> records;
  Eigen::MatrixXd z;  // out-of-fold meta training matrix

  std::size_t size() const { return learners.size(); }
};

// Out-of-fold stacking: for every fold j and member t, the member is fit on
// the other folds and predicts fold j; the collected predictions z train the
// meta-learner; members are then refit on all training examples. With
// `refit_members` false the refit is skipped and `members` stays empty, for
// callers that already hold full-data fits of the same learners.
StackedModel stack_train(std::span<const BaseLearner> learners,
                         std::span<const std::string> texts,
                         std::span<const int> labels,
                         const FoldAssignment& folds,
                         const MetaConfig& meta_config = {},
                         bool refit_members = true);

// Out-of-fold probabilities of a single learner: row i comes from the fit
// that excluded i's fold. Matches the corresponding block of
// StackedModel::z for the same folds, learner and validation ratio.
ProbabilityMatrix out_of_fold(const BaseLearner& learner,
                              std::span<const std::string> texts,
                              std::span<const int> labels, const FoldAssignment& folds,
                              double validation_ratio = 0.10,
                              std::vector<FoldRecord>* records = nullptr);

std::vector<ProbabilityMatrix> member_predictions(
    const StackedModel& model, std::span<const std::string> texts);
ProbabilityMatrix stack_predict_proba(const StackedModel& model,
                                      std::span<const std::string> texts);
std::vector<int> stack_predict(const StackedModel& model,
                               std::span<const std::string> texts);

struct LeakageAudit {
  bool ok = true;
  std::vector<std::string> violations;
};

// Proves from the fold bookkeeping that every z row was written exactly once
// per member, by a fit whose training indices exclude that row.
LeakageAudit audit_out_of_fold(const StackedModel& model, std::size_t n);
LeakageAudit audit_out_of_fold(std::span<const FoldRecord> records,
                               std::size_t members, std::size_t n);

}  // namespace forge::ensemble
