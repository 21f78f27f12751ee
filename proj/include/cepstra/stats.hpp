#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cepstra {

struct Correlation {
  double r = 0.0;
  /// False when either series is constant; r is then reported as 0.
  bool defined = true;
};

/// Sample Pearson correlation (two-pass), clamped to [-1, 1].
Correlation pearson(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> v);
/// Population standard deviation (divides by n).
double stddev(std::span<const double> v);

/// Regularized upper incomplete gamma Q(a, x), series / continued fraction.
double gamma_q(double a, double x);

/// Upper tail P(X > x) of a chi-squared variable with dof degrees of freedom.
double chi_squared_sf(double x, double dof);

struct KruskalWallisResult {
  double h = 0.0;
  double p = 1.0;
};

/// Rank-based H with tie correction; p from chi-squared with groups-1 dof.
KruskalWallisResult kruskal_wallis(std::span<const std::vector<double>> groups);

struct ClassificationMetrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> precision;  // per class
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<std::size_t> absent_classes;          // classes with no true samples
};

ClassificationMetrics classification_metrics(std::span<const int> y_true, std::span<const int> y_pred,
                                             std::size_t num_classes);

}  // namespace cepstra
