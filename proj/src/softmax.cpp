#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "forge/baselines.hpp"
#include "forge/error.hpp"
#include "forge/rng.hpp"

namespace forge::baselines {

namespace {

Eigen::VectorXd scores(const Eigen::MatrixXd& weights, const FeatureVector& x) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(weights.rows());
  for (const auto& [j, v] : x.entries()) z.noalias() += v * weights.col(j);
  return z;
}

double log_sum_exp(const Eigen::VectorXd& z) {
  const double top = z.maxCoeff();
  return top + std::log((z.array() - top).exp().sum());
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  Eigen::VectorXd p = (z.array() - z.maxCoeff()).exp();
  return p / p.sum();
}

// Sparse gradient buffer: only columns touched by the current batch are
// non-zero, and only those are cleared between batches.
class GradientAccumulator {
 public:
  GradientAccumulator(Eigen::Index classes, std::uint32_t dim)
      : grad_(Eigen::MatrixXd::Zero(classes, dim)), marked_(dim, false) {}

  // Adds scale * w_y * d(CE)/dW for one example; returns w_y * CE.
  double add(const Eigen::MatrixXd& weights, const FeatureVector& x, int y,
             double class_weight, double scale) {
    const Eigen::VectorXd z = scores(weights, x);
    const double loss = class_weight * (log_sum_exp(z) - z(y));
    Eigen::VectorXd residual = softmax(z);
    residual(y) -= 1.0;
    residual *= class_weight * scale;
    for (const auto& [j, v] : x.entries()) {
      if (!marked_[j]) {
        marked_[j] = true;
        touched_.push_back(j);
      }
      grad_.col(j).noalias() += v * residual;
    }
    return loss;
  }

  // W -= rate * grad, then clears the touched columns.
  void apply(Eigen::MatrixXd& weights, double rate) {
    for (std::uint32_t j : touched_) {
      weights.col(j).noalias() -= rate * grad_.col(j);
      grad_.col(j).setZero();
      marked_[j] = false;
    }
    touched_.clear();
  }

  const Eigen::MatrixXd& gradient() const { return grad_; }

 private:
  Eigen::MatrixXd grad_;
  std::vector<bool> marked_;
  std::vector<std::uint32_t> touched_;
};

void check_data(const LabeledFeatures& data, std::uint32_t dim,
                std::size_t num_classes, const char* what) {
  if (data.x.size() != data.y.size()) {
    throw Error(ErrorKind::Precondition,
                std::string(what) + ": features and labels differ in length");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.y[i] < 0 || static_cast<std::size_t>(data.y[i]) >= num_classes) {
      throw Error(ErrorKind::Precondition, std::string(what) + " example " +
                                               std::to_string(i) +
                                               ": label out of range");
    }
    if (data.x[i].entries().back().first >= dim) {
      throw Error(ErrorKind::Precondition, std::string(what) + " example " +
                                               std::to_string(i) +
                                               ": feature index exceeds dimension");
    }
  }
}

void check_batch(const Eigen::MatrixXd& weights, std::span<const FeatureVector> xs,
                 std::span<const int> ys) {
  if (xs.size() != ys.size() || xs.empty()) {
    throw Error(ErrorKind::Precondition,
                "loss needs a non-empty batch with one label per example");
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (ys[i] < 0 || ys[i] >= weights.rows() ||
        xs[i].entries().back().first >= weights.cols()) {
      throw Error(ErrorKind::Precondition,
                  "batch example " + std::to_string(i) + " out of range");
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) {
    throw Error(ErrorKind::Precondition, "batch_size must be at least 1");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::Precondition, "learning_rate must be positive");
  }
}

SoftmaxModel::SoftmaxModel(std::size_t num_classes, std::uint32_t dim,
                           FeatureSpec spec)
    : weights_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(num_classes), dim)),
      features_(spec) {}

Eigen::VectorXd SoftmaxModel::probabilities(const FeatureVector& x) const {
  return softmax(scores(weights_, x));
}

int SoftmaxModel::predict(const FeatureVector& x) const {
  const Eigen::VectorXd z = scores(weights_, x);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < z.size(); ++k) {
    if (z(k) > z(best)) best = k;
  }
  return static_cast<int>(best);
}

ProbabilityMatrix SoftmaxModel::predict_proba(std::span<const FeatureVector> xs,
                                              std::string producer) const {
  ProbabilityMatrix::Storage out(static_cast<Eigen::Index>(xs.size()),
                                 weights_.rows());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].entries().back().first >= dim()) {
      throw Error(ErrorKind::Precondition,
                  "feature index exceeds model dimension");
    }
    out.row(static_cast<Eigen::Index>(i)) = probabilities(xs[i]).transpose();
  }
  return ProbabilityMatrix(std::move(out), std::move(producer));
}

ProbabilityMatrix SoftmaxModel::predict_proba(std::span<const std::string> texts,
                                              std::string producer) const {
  std::vector<FeatureVector> xs;
  xs.reserve(texts.size());
  for (const auto& t : texts) xs.push_back(featurize(t, features_, dim()));
  return predict_proba(xs, std::move(producer));
}

double SoftmaxModel::accuracy(const LabeledFeatures& data) const {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict(data.x[i]) == data.y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double weighted_cross_entropy(const Eigen::MatrixXd& weights,
                              std::span<const FeatureVector> xs,
                              std::span<const int> ys,
                              const datasets::ClassWeights& class_weights) {
  check_batch(weights, xs, ys);
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Eigen::VectorXd z = scores(weights, xs[i]);
    total += class_weights[static_cast<std::size_t>(ys[i])] *
             (log_sum_exp(z) - z(ys[i]));
  }
  return total / static_cast<double>(xs.size());
}

Eigen::MatrixXd weighted_cross_entropy_gradient(
    const Eigen::MatrixXd& weights, std::span<const FeatureVector> xs,
    std::span<const int> ys, const datasets::ClassWeights& class_weights) {
  check_batch(weights, xs, ys);
  GradientAccumulator acc(weights.rows(), static_cast<std::uint32_t>(weights.cols()));
  const double scale = 1.0 / static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    acc.add(weights, xs[i], ys[i],
            class_weights[static_cast<std::size_t>(ys[i])], scale);
  }
  return acc.gradient();
}

SoftmaxModel train(const LabeledFeatures& train_set,
                   const LabeledFeatures& validation_set,
                   const TrainConfig& config,
                   const datasets::ClassWeights& class_weights,
                   std::uint32_t dim, const FeatureSpec& spec,
                   std::size_t num_classes) {
  config.validate();
  if (train_set.size() == 0 || validation_set.size() == 0) {
    throw Error(ErrorKind::Precondition,
                "training needs non-empty train and validation sets");
  }
  check_data(train_set, dim, num_classes, "train");
  check_data(validation_set, dim, num_classes, "validation");

  SoftmaxModel model(num_classes, dim, spec);
  model.config = config;
  if (config.max_epochs == 0) return model;

  Eigen::MatrixXd& weights = model.weights();
  Eigen::MatrixXd best_weights = weights;
  double best_accuracy = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t epochs_without_gain = 0;

  GradientAccumulator acc(weights.rows(), dim);
  Rng rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0, batch = 0; start < order.size();
         start += config.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      double loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const int y = train_set.y[i];
        loss += acc.add(weights, train_set.x[i], y,
                        class_weights[static_cast<std::size_t>(y)], scale);
      }
      loss *= scale;
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss " << loss << " at epoch " << epoch
            << ", batch " << batch << " (learning rate " << config.learning_rate
            << ", batch size " << config.batch_size << ")";
        throw Error(ErrorKind::Numeric, msg.str());
      }
      acc.apply(weights, config.learning_rate);
    }

    const double val_accuracy = model.accuracy(validation_set);
    model.validation_accuracy.push_back(val_accuracy);
    // Patience counts epochs without a strict accuracy gain. Among epochs tied
    // at the best accuracy, the checkpoint with the lower validation loss wins.
    const bool gain = val_accuracy > best_accuracy;
    if (gain || val_accuracy == best_accuracy) {
      const double val_loss = weighted_cross_entropy(weights, validation_set.x,
                                                     validation_set.y, class_weights);
      if (gain || val_loss < best_loss) {
        best_accuracy = val_accuracy;
        best_loss = val_loss;
        best_weights = weights;
        model.best_epoch = epoch;
      }
    }
    if (gain) {
      epochs_without_gain = 0;
    } else if (++epochs_without_gain >= config.patience) {
      break;
    }
  }
  weights = std::move(best_weights);
  if (!weights.allFinite()) {
    throw Error(ErrorKind::Numeric, "trained weights are not finite");
  }
  return model;
}

SoftmaxModel train_text(std::span<const std::string> train_texts,
                        std::span<const int> train_labels,
                        std::span<const std::string> validation_texts,
                        std::span<const int> validation_labels,
                        const FeatureSpec& spec, const TrainConfig& config,
                        const datasets::ClassWeights& class_weights) {
  const auto train_set = featurize_all(train_texts, train_labels, spec);
  const auto validation_set =
      featurize_all(validation_texts, validation_labels, spec);
  return train(train_set, validation_set, config, class_weights, kHashDim, spec);
}

}  // namespace forge::baselines
