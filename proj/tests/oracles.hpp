#pragma once

// Independent brute-force references used by the tests.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace oracle {

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

inline std::vector<std::complex<double>> dft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(a), std::sin(a));
    }
    out[k] = acc;
  }
  return out;
}

// Orthonormal DCT-II by direct cosine summation.
inline std::vector<double> dct2(std::span<const double> v) {
  const std::size_t m = v.size();
  std::vector<double> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    double acc = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
      acc += v[n] * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(n) + 1.0) /
                             (2.0 * static_cast<double>(m)));
    }
    out[k] = acc * (k == 0 ? std::sqrt(1.0 / static_cast<double>(m)) : std::sqrt(2.0 / static_cast<double>(m)));
  }
  return out;
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// max |a - b| / max |b|, the error measure used throughout.
inline double rel_error(std::span<const double> a, std::span<const double> b) {
  double err = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(a[i] - b[i]));
  const double scale = max_abs(b);
  return scale > 0.0 ? err / scale : err;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Textbook two-pass Pearson r.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Kruskal-Wallis H from explicit average ranks and the tie correction.
inline double kruskal_h(const std::vector<std::vector<double>>& groups) {
  std::vector<double> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  const double n = static_cast<double>(all.size());
  auto rank_of = [&](double v) {
    double less = 0.0, equal = 0.0;
    for (double x : all) {
      if (x < v) less += 1.0;
      else if (x == v) equal += 1.0;
    }
    return less + (equal + 1.0) / 2.0;
  };
  double h = 0.0;
  for (const auto& g : groups) {
    double rs = 0.0;
    for (double v : g) rs += rank_of(v);
    h += rs * rs / static_cast<double>(g.size());
  }
  h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
  double ties = 0.0;
  std::vector<bool> seen(all.size(), false);
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (seen[i]) continue;
    double t = 0.0;
    for (std::size_t j = i; j < all.size(); ++j) {
      if (all[j] == all[i]) {
        seen[j] = true;
        t += 1.0;
      }
    }
    ties += t * t * t - t;
  }
  const double corr = 1.0 - ties / (n * n * n - n);
  return corr > 0.0 ? h / corr : 0.0;
}

// Largest KKT violation of a two-class soft-margin dual solution, evaluated
// from scratch: f(x_i) = sum_j alpha_j y_j exp(-gamma |x_i - x_j|^2) + b and
//   alpha = 0      needs y f >= 1
//   0 < alpha < C  needs y f == 1
//   alpha = C      needs y f <= 1
struct KktAudit {
  double max_violation = 0.0;
  double sum_alpha_y = 0.0;
  bool box_ok = true;
};

inline KktAudit kkt_audit(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                          const std::vector<double>& alpha, double bias, double c, double gamma) {
  KktAudit out;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] < 0.0 || alpha[i] > c) out.box_ok = false;
    out.sum_alpha_y += alpha[i] * y[i];
    double f = bias;
    for (std::size_t j = 0; j < n; ++j) {
      if (alpha[j] == 0.0) continue;
      double d2 = 0.0;
      for (std::size_t k = 0; k < x[i].size(); ++k) d2 += (x[i][k] - x[j][k]) * (x[i][k] - x[j][k]);
      f += alpha[j] * y[j] * std::exp(-gamma * d2);
    }
    const double margin = y[i] * f;
    double v = 0.0;
    if (alpha[i] <= 0.0) v = std::max(0.0, 1.0 - margin);
    else if (alpha[i] >= c) v = std::max(0.0, margin - 1.0);
    else v = std::abs(margin - 1.0);
    out.max_violation = std::max(out.max_violation, v);
  }
  return out;
}

}  // namespace oracle
