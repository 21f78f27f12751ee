#include "cepstra/cv.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "cepstra/error.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace cepstra {

std::vector<std::vector<std::size_t>> stratified_folds(const LabeledDataset& dataset, std::size_t k,
                                                       std::uint64_t seed) {
  if (k < 2) throw ConfigError("cross-validation: k must be >= 2");
  const auto sizes = dataset.class_sizes();
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] < k) {
      throw ConfigError("cross-validation: class '" + dataset.class_names[c] + "' has " + std::to_string(sizes[c]) +
                        " samples, fewer than k = " + std::to_string(k));
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;  // continue the round robin across classes to balance fold sizes
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (static_cast<std::size_t>(dataset.labels[i]) == c) rows.push_back(i);
    }
    detail::seeded_shuffle(rows, rng);
    for (std::size_t r : rows) {
      folds[next].push_back(r);
      next = (next + 1) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

namespace {

MeanStd summarize(const std::vector<double>& v) {
  MeanStd out;
  out.mean = mean(v);
  out.std = stddev(v);
  return out;
}

struct PointOutcome {
  std::vector<int> predictions;  // out-of-fold, per row
  std::vector<ClassificationMetrics> per_fold;
  double mean_accuracy = 0.0;
};

PointOutcome evaluate_point(const LabeledDataset& dataset, const std::vector<std::vector<std::size_t>>& folds,
                            const SvmParams& params) {
  PointOutcome out;
  out.predictions.assign(dataset.size(), -1);
  double acc_sum = 0.0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train_rows;
    std::size_t v = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (v < folds[f].size() && folds[f][v] == i) {
        ++v;
        continue;
      }
      train_rows.push_back(i);
    }
    const SvmModel model = svm_train(dataset.subset(train_rows), params);
    std::vector<int> truth, pred;
    for (std::size_t r : folds[f]) {
      const int p = svm_predict(model, dataset.features[r]).class_id;
      out.predictions[r] = p;
      truth.push_back(dataset.labels[r]);
      pred.push_back(p);
    }
    out.per_fold.push_back(classification_metrics(truth, pred, dataset.class_count()));
    acc_sum += out.per_fold.back().accuracy;
  }
  out.mean_accuracy = acc_sum / static_cast<double>(folds.size());
  return out;
}

}  // namespace

CvResult grid_search_cv(const LabeledDataset& dataset, const CvOptions& options) {
  dataset.validate();
  if (dataset.class_count() < 2) throw TrainingError("cross-validation: at least 2 classes are required");
  if (options.grid.C.empty() || options.grid.gamma.empty()) throw ConfigError("cross-validation: empty grid");
  const auto folds = stratified_folds(dataset, options.k, options.seed);

  std::vector<SvmParams> points;
  for (double c : options.grid.C) {
    for (double g : options.grid.gamma) {
      SvmParams p;
      p.C = c;
      p.gamma = g;
      p.tol = options.tol;
      points.push_back(p);
    }
  }

  std::vector<PointOutcome> outcomes(points.size());
  detail::parallel_for(points.size(), options.threads,
                       [&](std::size_t i) { outcomes[i] = evaluate_point(dataset, folds, points[i]); });

  std::size_t best = 0;
  for (std::size_t i = 1; i < outcomes.size(); ++i) {
    if (outcomes[i].mean_accuracy > outcomes[best].mean_accuracy) best = i;
  }

  CvResult result;
  CvReport& rep = result.report;
  rep.k = options.k;
  rep.seed = options.seed;
  rep.folds = folds;
  for (std::size_t i = 0; i < points.size(); ++i) {
    rep.grid.push_back({points[i].C, points[i].gamma, outcomes[i].mean_accuracy});
  }
  rep.best_C = points[best].C;
  rep.best_gamma = points[best].gamma;
  rep.per_fold = outcomes[best].per_fold;
  rep.out_of_fold = outcomes[best].predictions;
  std::vector<double> acc, prec, rec, f1;
  for (const auto& m : rep.per_fold) {
    acc.push_back(m.accuracy);
    prec.push_back(m.macro_precision);
    rec.push_back(m.macro_recall);
    f1.push_back(m.macro_f1);
  }
  rep.accuracy = summarize(acc);
  rep.macro_precision = summarize(prec);
  rep.macro_recall = summarize(rec);
  rep.macro_f1 = summarize(f1);
  rep.pooled = classification_metrics(dataset.labels, rep.out_of_fold, dataset.class_count());
  result.model = svm_train(dataset, points[best]);
  return result;
}

}  // namespace cepstra
