#include "cepstra/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cepstra/error.hpp"

namespace cepstra {

double mean(std::span<const double> v) {
  if (v.empty()) throw DomainError("mean: empty input");
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  const double mu = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

Correlation pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("pearson: series lengths differ");
  if (a.size() < 2) throw DomainError("pearson: need at least 2 paired values");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return {0.0, false};
  const double r = sab / std::sqrt(saa * sbb);
  return {std::clamp(r, -1.0, 1.0), true};
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) throw DomainError("gamma_q: need a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  constexpr double eps = 1e-16;
  if (x < a + 1.0) {
    // P(a, x) by its power series; Q = 1 - P.
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 100000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * eps) break;
    }
    return std::clamp(1.0 - sum * std::exp(log_prefix), 0.0, 1.0);
  }
  // Continued fraction for Q (modified Lentz).
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return std::clamp(std::exp(log_prefix) * h, 0.0, 1.0);
}

double chi_squared_sf(double x, double dof) {
  if (!(dof > 0.0)) throw DomainError("chi_squared_sf: degrees of freedom must be positive");
  if (x <= 0.0) return 1.0;
  return gamma_q(dof / 2.0, x / 2.0);
}

KruskalWallisResult kruskal_wallis(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw DomainError("kruskal_wallis: need at least 2 groups");
  struct Obs {
    double value;
    std::size_t group;
  };
  std::vector<Obs> all;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw DomainError("kruskal_wallis: group " + std::to_string(g) + " is empty");
    for (double v : groups[g]) {
      if (!std::isfinite(v)) throw DomainError("kruskal_wallis: non-finite observation");
      all.push_back({v, g});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Obs& l, const Obs& r) { return l.value < r.value; });

  const auto n = static_cast<double>(all.size());
  std::vector<double> rank_sum(groups.size(), 0.0);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].value == all[i].value) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) rank_sum[all[k].group] += avg_rank;
    const auto t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double correction = 1.0 - tie_term / (n * n * n - n);
  if (!(correction > 0.0)) return {0.0, 1.0};  // every observation tied

  double h = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    h += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
  }
  h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
  h = std::max(0.0, h / correction);
  return {h, chi_squared_sf(h, static_cast<double>(groups.size() - 1))};
}

ClassificationMetrics classification_metrics(std::span<const int> y_true, std::span<const int> y_pred,
                                             std::size_t num_classes) {
  if (y_true.empty()) throw DomainError("classification_metrics: empty input");
  if (y_true.size() != y_pred.size()) throw DomainError("classification_metrics: label vectors differ in length");
  if (num_classes == 0) throw DomainError("classification_metrics: no classes");
  ClassificationMetrics m;
  m.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes || static_cast<std::size_t>(p) >= num_classes) {
      throw DomainError("classification_metrics: label out of range at index " + std::to_string(i));
    }
    ++m.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    if (t == p) ++correct;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(y_true.size());
  m.precision.assign(num_classes, 0.0);
  m.recall.assign(num_classes, 0.0);
  m.f1.assign(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t tp = m.confusion[c][c];
    std::size_t actual = 0, predicted = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      actual += m.confusion[c][k];
      predicted += m.confusion[k][c];
    }
    if (actual == 0) {
      m.absent_classes.push_back(c);
      continue;
    }
    m.recall[c] = static_cast<double>(tp) / static_cast<double>(actual);
    m.precision[c] = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    const double denom = m.precision[c] + m.recall[c];
    m.f1[c] = denom > 0.0 ? 2.0 * m.precision[c] * m.recall[c] / denom : 0.0;
  }
  const auto nc = static_cast<double>(num_classes);
  m.macro_precision = std::accumulate(m.precision.begin(), m.precision.end(), 0.0) / nc;
  m.macro_recall = std::accumulate(m.recall.begin(), m.recall.end(), 0.0) / nc;
  m.macro_f1 = std::accumulate(m.f1.begin(), m.f1.end(), 0.0) / nc;
  return m;
}

}  // namespace cepstra
