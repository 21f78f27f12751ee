#include "cepstra/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "cepstra/error.hpp"

namespace cepstra {

std::vector<std::size_t> LabeledDataset::class_sizes() const {
  std::vector<std::size_t> sizes(class_names.size(), 0);
  for (int l : labels) {
    if (l >= 0 && static_cast<std::size_t>(l) < sizes.size()) ++sizes[static_cast<std::size_t>(l)];
  }
  return sizes;
}

void LabeledDataset::validate() const {
  if (features.size() != labels.size()) {
    throw DomainError("dataset: " + std::to_string(features.size()) + " feature rows but " +
                      std::to_string(labels.size()) + " labels");
  }
  const std::size_t d = dims();
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != d) throw DomainError("dataset: row " + std::to_string(i) + " has a different width");
    for (double v : features[i]) {
      if (!std::isfinite(v)) throw DomainError("dataset: non-finite feature in row " + std::to_string(i));
    }
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_names.size()) {
      throw DomainError("dataset: label " + std::to_string(labels[i]) + " in row " + std::to_string(i) +
                        " outside the class list");
    }
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.class_names = class_names;
  out.features.reserve(rows.size());
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) {
    out.features.push_back(features.at(r));
    out.labels.push_back(labels.at(r));
  }
  return out;
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

namespace {

// Kernel rows of Q_ij = y_i y_j K(x_i, x_j). Small problems keep the whole
// matrix; larger ones recompute rows on demand.
class KernelRows {
 public:
  KernelRows(const Matrix& x, std::span<const int> y, double gamma) : x_(x), y_(y), gamma_(gamma), n_(x.size()) {
    diag_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) diag_[i] = 1.0;  // K(x, x) = 1 for the RBF kernel
    if (n_ <= kFullMatrixLimit) {
      full_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i) {
        full_[i * n_ + i] = 1.0;
        for (std::size_t j = i + 1; j < n_; ++j) {
          const double q = y_[i] * y_[j] * rbf_kernel(x_[i], x_[j], gamma_);
          full_[i * n_ + j] = q;
          full_[j * n_ + i] = q;
        }
      }
    }
  }

  std::span<const double> row(std::size_t i) {
    if (!full_.empty()) return {full_.data() + i * n_, n_};
    std::vector<double>& buf = i == slot_a_index_ ? slot_a_ : (i == slot_b_index_ ? slot_b_ : next_slot(i));
    return buf;
  }

  double diag(std::size_t i) const { return diag_[i]; }

 private:
  static constexpr std::size_t kFullMatrixLimit = 3000;

  std::vector<double>& next_slot(std::size_t i) {
    // Two-row cache: SMO touches two rows per step.
    std::swap(slot_a_, slot_b_);
    std::swap(slot_a_index_, slot_b_index_);
    slot_a_index_ = i;
    slot_a_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) slot_a_[j] = y_[i] * y_[j] * rbf_kernel(x_[i], x_[j], gamma_);
    return slot_a_;
  }

  const Matrix& x_;
  std::span<const int> y_;
  double gamma_;
  std::size_t n_;
  std::vector<double> diag_;
  std::vector<double> full_;
  std::vector<double> slot_a_, slot_b_;
  std::size_t slot_a_index_ = std::numeric_limits<std::size_t>::max();
  std::size_t slot_b_index_ = std::numeric_limits<std::size_t>::max();
};

}  // namespace

BinarySolution solve_binary_svm(const Matrix& x, std::span<const int> y, const SvmParams& params) {
  const std::size_t n = x.size();
  if (n != y.size()) throw DomainError("svm: feature rows and labels differ in count");
  if (!(params.C > 0.0) || !std::isfinite(params.C)) throw DomainError("svm: C must be positive");
  if (!(params.gamma > 0.0) || !std::isfinite(params.gamma)) throw DomainError("svm: gamma must be positive");
  if (!(params.tol > 0.0)) throw DomainError("svm: tolerance must be positive");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1) has_pos = true;
    else if (v == -1) has_neg = true;
    else throw DomainError("svm: binary labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw TrainingError("svm: binary problem needs samples of both signs");

  constexpr double tau = 1e-12;
  const double c = params.C;
  KernelRows q(x, y, params.gamma);
  BinarySolution sol;
  sol.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto& alpha = sol.alpha;
  const auto upper = [&](std::size_t t) { return alpha[t] >= c; };
  const auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  std::size_t iter = 0;
  for (;; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (!upper(t) && -grad[t] >= gmax) { gmax = -grad[t]; i = t; }
      } else {
        if (!lower(t) && grad[t] >= gmax) { gmax = grad[t]; i = t; }
      }
    }
    double obj_min = std::numeric_limits<double>::infinity();
    if (i < n) {
      const auto qi = q.row(i);
      for (std::size_t t = 0; t < n; ++t) {
        double grad_diff;
        double quad;
        if (y[t] == 1) {
          if (lower(t)) continue;
          gmax2 = std::max(gmax2, grad[t]);
          grad_diff = gmax + grad[t];
          quad = q.diag(i) + q.diag(t) - 2.0 * y[i] * qi[t];
        } else {
          if (upper(t)) continue;
          gmax2 = std::max(gmax2, -grad[t]);
          grad_diff = gmax - grad[t];
          quad = q.diag(i) + q.diag(t) + 2.0 * y[i] * qi[t];
        }
        if (grad_diff > 0.0) {
          const double obj = -(grad_diff * grad_diff) / (quad > 0.0 ? quad : tau);
          if (obj <= obj_min) { obj_min = obj; j = t; }
        }
      }
    }
    sol.kkt_gap = gmax + gmax2;
    if (sol.kkt_gap < params.tol || j == n) {
      sol.converged = true;
      break;
    }
    if (iter >= params.max_iterations) break;

    const auto qi = q.row(i);
    std::vector<double> qi_copy(qi.begin(), qi.end());
    const auto qj = q.row(j);
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = q.diag(i) + q.diag(j) + 2.0 * qi_copy[j];
      if (quad <= 0.0) quad = tau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
      }
      if (diff > 0.0) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
      } else {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = c + diff; }
      }
    } else {
      double quad = q.diag(i) + q.diag(j) - 2.0 * qi_copy[j];
      if (quad <= 0.0) quad = tau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
      } else {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
      }
      if (sum > c) {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
      }
    }
    const double d_i = alpha[i] - old_i;
    const double d_j = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += qi_copy[t] * d_i + qj[t] * d_j;
  }
  sol.iterations = iter;

  // Bias: average over free vectors, else the midpoint of the feasible range.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      sum_free += yg;
    }
  }
  const double rho = free_count > 0 ? sum_free / static_cast<double>(free_count) : (ub + lb) / 2.0;
  sol.bias = -rho;
  return sol;
}

Standardization Standardization::fit(const Matrix& x) {
  if (x.empty()) throw DomainError("standardization: no rows");
  const std::size_t d = x.front().size();
  Standardization s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 0.0);
  for (const auto& row : x) {
    for (std::size_t k = 0; k < d; ++k) s.mean[k] += row[k];
  }
  for (double& m : s.mean) m /= static_cast<double>(x.size());
  for (const auto& row : x) {
    for (std::size_t k = 0; k < d; ++k) s.scale[k] += (row[k] - s.mean[k]) * (row[k] - s.mean[k]);
  }
  for (double& v : s.scale) {
    v = std::sqrt(v / static_cast<double>(x.size()));
    if (!(v > 1e-12)) v = 1.0;
  }
  return s;
}

std::vector<double> Standardization::apply(std::span<const double> row) const {
  if (row.size() != mean.size()) {
    throw DomainError("svm: feature length " + std::to_string(row.size()) + " does not match model dimension " +
                      std::to_string(mean.size()));
  }
  std::vector<double> out(row.size());
  for (std::size_t k = 0; k < row.size(); ++k) out[k] = (row[k] - mean[k]) / scale[k];
  return out;
}

double SvmModel::decision(const BinaryMachine& machine, std::span<const double> standardized) const {
  double f = machine.bias;
  for (std::size_t s = 0; s < machine.support.size(); ++s) {
    f += machine.dual_coeffs[s] * rbf_kernel(support_vectors[machine.support[s]], standardized, gamma);
  }
  return f;
}

SvmModel svm_train(const LabeledDataset& dataset, const SvmParams& params) {
  dataset.validate();
  if (dataset.class_count() < 2) throw TrainingError("svm: training needs at least 2 classes");
  const auto sizes = dataset.class_sizes();
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] < 2) {
      throw TrainingError("svm: class '" + dataset.class_names[c] + "' has " + std::to_string(sizes[c]) +
                          " samples; at least 2 are required");
    }
  }

  SvmModel model;
  model.C = params.C;
  model.gamma = params.gamma;
  model.class_names = dataset.class_names;
  model.standardization = Standardization::fit(dataset.features);
  Matrix z;
  z.reserve(dataset.size());
  for (const auto& row : dataset.features) z.push_back(model.standardization.apply(row));

  std::map<std::size_t, std::size_t> sv_slot;  // training row -> support_vectors index
  const int classes = static_cast<int>(dataset.class_count());
  for (int a = 0; a < classes; ++a) {
    for (int b = a + 1; b < classes; ++b) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset.labels[i] == a || dataset.labels[i] == b) rows.push_back(i);
      }
      Matrix sub;
      std::vector<int> y;
      sub.reserve(rows.size());
      for (std::size_t r : rows) {
        sub.push_back(z[r]);
        y.push_back(dataset.labels[r] == a ? 1 : -1);
      }
      const BinarySolution sol = solve_binary_svm(sub, y, params);

      BinaryMachine m;
      m.positive_class = a;
      m.negative_class = b;
      m.bias = sol.bias;
      m.iterations = sol.iterations;
      m.kkt_gap = sol.kkt_gap;
      m.converged = sol.converged;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        if (sol.alpha[k] <= 0.0) continue;
        auto [it, inserted] = sv_slot.emplace(rows[k], model.support_vectors.size());
        if (inserted) model.support_vectors.push_back(z[rows[k]]);
        m.support.push_back(it->second);
        m.dual_coeffs.push_back(sol.alpha[k] * y[k]);
      }
      model.machines.push_back(std::move(m));
    }
  }
  return model;
}

Prediction svm_predict(const SvmModel& model, std::span<const double> features) {
  const auto z = model.standardization.apply(features);
  Prediction p;
  p.votes.assign(model.class_count(), 0);
  std::vector<double> strength(model.class_count(), 0.0);
  for (const auto& m : model.machines) {
    const double f = model.decision(m, z);
    p.decision_values.push_back(f);
    const int winner = f > 0.0 ? m.positive_class : m.negative_class;
    ++p.votes[static_cast<std::size_t>(winner)];
    strength[static_cast<std::size_t>(winner)] += std::abs(f);
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < p.votes.size(); ++c) {
    if (p.votes[c] > p.votes[best] || (p.votes[c] == p.votes[best] && strength[c] > strength[best])) best = c;
  }
  p.class_id = static_cast<int>(best);
  return p;
}

}  // namespace cepstra
