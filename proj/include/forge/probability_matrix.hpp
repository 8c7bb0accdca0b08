#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace forge {

// Row-sum tolerance applied when probabilities enter the harness.
inline constexpr double kRowSumTolerance = 1e-6;

// n x c matrix of per-class probabilities produced by one classifier.
// Entry (i, k) is the probability of class k for example i.
class ProbabilityMatrix {
 public:
  using Storage =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  ProbabilityMatrix() = default;

  // Unchecked construction; call validate() before trusting external data.
  ProbabilityMatrix(Storage values, std::string producer)
      : values_(std::move(values)), producer_(std::move(producer)) {}

  // Construction that throws Error(RowSum) on the first invalid row.
  static ProbabilityMatrix checked(Storage values, std::string producer,
                                   double tolerance = kRowSumTolerance);

  // Throws Error(RowSum) naming the producer and the offending row if an
  // entry falls outside [0, 1] or a row sum deviates from 1 by more than
  // `tolerance`.
  void validate(double tolerance = kRowSumTolerance) const;

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
  double operator()(std::size_t i, std::size_t k) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  }

  const Storage& values() const { return values_; }
  const std::string& producer() const { return producer_; }
  void set_producer(std::string producer) { producer_ = std::move(producer); }

  // Index of the largest entry in row i; ties go to the lowest class index.
  int argmax(std::size_t i) const;
  std::vector<int> argmax_labels() const;

  // Rows selected by index, in the given order.
  ProbabilityMatrix select_rows(const std::vector<std::size_t>& rows) const;

 private:
  Storage values_;
  std::string producer_;
};

}  // namespace forge
