#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cepstra {

using Matrix = std::vector<std::vector<double>>;

/// Rows are samples. Class ids are dense, starting at 0, and index class_names.
struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dims() const noexcept { return features.empty() ? 0 : features.front().size(); }
  std::size_t class_count() const noexcept { return class_names.size(); }
  std::vector<std::size_t> class_sizes() const;

  /// Shape, finiteness and label-range checks; throws DomainError.
  void validate() const;
  LabeledDataset subset(std::span<const std::size_t> rows) const;
};

struct SvmParams {
  double C = 1.0;
  double gamma = 1.0;
  /// Maximal KKT violation (gap between the extreme gradients) at which SMO stops.
  double tol = 1e-3;
  std::size_t max_iterations = 10'000'000;
};

/// Dual solution of one two-class problem with labels +1 / -1.
struct BinarySolution {
  std::vector<double> alpha;  // one per training row, 0 <= alpha <= C
  double bias = 0.0;          // f(x) = sum alpha_i y_i K(x_i, x) + bias
  double kkt_gap = 0.0;       // max violating-pair gap at exit
  std::size_t iterations = 0;
  bool converged = false;
};

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

/// Sequential minimal optimization with second-order working-set selection.
/// Deterministic: ties in the selection resolve to the highest index.
BinarySolution solve_binary_svm(const Matrix& x, std::span<const int> y, const SvmParams& params);

struct BinaryMachine {
  int positive_class = 0;  // decision > 0 votes for this class
  int negative_class = 1;
  std::vector<std::size_t> support;  // rows of SvmModel::support_vectors
  std::vector<double> dual_coeffs;   // alpha_i * y_i, aligned with support
  double bias = 0.0;
  std::size_t iterations = 0;
  double kkt_gap = 0.0;
  bool converged = false;
};

struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;  // population std, 1 where a dimension is constant

  static Standardization fit(const Matrix& x);
  std::vector<double> apply(std::span<const double> row) const;
};

/// One-vs-one RBF kernel machine. Support vectors are stored standardized.
struct SvmModel {
  Matrix support_vectors;
  std::vector<BinaryMachine> machines;
  Standardization standardization;
  double C = 1.0;
  double gamma = 1.0;
  std::vector<std::string> class_names;
  std::string fingerprint;  // identifies the feature extraction the model expects

  std::size_t dims() const noexcept { return standardization.mean.size(); }
  std::size_t class_count() const noexcept { return class_names.size(); }
  double decision(const BinaryMachine& machine, std::span<const double> standardized) const;
};

SvmModel svm_train(const LabeledDataset& dataset, const SvmParams& params);

struct Prediction {
  int class_id = 0;
  std::vector<int> votes;                // per class
  std::vector<double> decision_values;   // per machine, in model order
};

/// Majority vote; ties go to the larger summed |decision| over won duels,
/// then to the lowest class id.
Prediction svm_predict(const SvmModel& model, std::span<const double> features);

}  // namespace cepstra
