#include "forge/probability_matrix.hpp"

#include <cmath>
#include <sstream>

#include "forge/error.hpp"

namespace forge {

ProbabilityMatrix ProbabilityMatrix::checked(Storage values,
                                             std::string producer,
                                             double tolerance) {
  ProbabilityMatrix matrix(std::move(values), std::move(producer));
  matrix.validate(tolerance);
  return matrix;
}

void ProbabilityMatrix::validate(double tolerance) const {
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < values_.cols(); ++k) {
      const double p = values_(i, k);
      if (!(p >= 0.0 && p <= 1.0)) {
        std::ostringstream msg;
        msg << "producer '" << producer_ << "' row " << i << ": entry " << k
            << " = " << p << " outside [0, 1]";
        throw Error(ErrorKind::RowSum, msg.str());
      }
      sum += p;
    }
    if (!(std::abs(sum - 1.0) <= tolerance)) {
      std::ostringstream msg;
      msg.precision(12);
      msg << "producer '" << producer_ << "' row " << i << ": sums to " << sum;
      throw Error(ErrorKind::RowSum, msg.str());
    }
  }
}

int ProbabilityMatrix::argmax(std::size_t i) const {
  const auto row = values_.row(static_cast<Eigen::Index>(i));
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < row.size(); ++k) {
    if (row(k) > row(best)) best = k;
  }
  return static_cast<int>(best);
}

std::vector<int> ProbabilityMatrix::argmax_labels() const {
  std::vector<int> labels(rows());
  for (std::size_t i = 0; i < rows(); ++i) labels[i] = argmax(i);
  return labels;
}

ProbabilityMatrix ProbabilityMatrix::select_rows(
    const std::vector<std::size_t>& rows) const {
  Storage out(static_cast<Eigen::Index>(rows.size()), values_.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) =
        values_.row(static_cast<Eigen::Index>(rows[r]));
  }
  return ProbabilityMatrix(std::move(out), producer_);
}

}  // namespace forge
