#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cepstra/stats.hpp"
#include "cepstra/svm.hpp"

namespace cepstra {

struct SvmGrid {
  std::vector<double> C{0.1, 1.0, 10.0, 100.0};
  std::vector<double> gamma{0.01, 0.1, 1.0, 10.0};
};

/// Stratified k-fold assignment from a seeded shuffle of each class.
/// Returns the validation rows of every fold, each sorted ascending.
std::vector<std::vector<std::size_t>> stratified_folds(const LabeledDataset& dataset, std::size_t k,
                                                       std::uint64_t seed);

struct GridScore {
  double C = 0.0;
  double gamma = 0.0;
  double mean_accuracy = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population std across folds
};

struct CvReport {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> folds;
  std::vector<ClassificationMetrics> per_fold;  // at the best grid point
  MeanStd accuracy, macro_precision, macro_recall, macro_f1;
  ClassificationMetrics pooled;                 // out-of-fold predictions pooled over folds
  std::vector<int> out_of_fold;                 // prediction per dataset row
  double best_C = 0.0;
  double best_gamma = 0.0;
  std::vector<GridScore> grid;                  // C-major order
};

struct CvResult {
  CvReport report;
  SvmModel model;  // best grid point retrained on every row
};

struct CvOptions {
  SvmGrid grid;
  std::size_t k = 5;
  std::uint64_t seed = 0;
  double tol = 1e-3;
  /// 0 uses the hardware concurrency.
  std::size_t threads = 0;
};

/// Ties on mean accuracy keep the earliest grid point (C-major).
CvResult grid_search_cv(const LabeledDataset& dataset, const CvOptions& options);

}  // namespace cepstra
