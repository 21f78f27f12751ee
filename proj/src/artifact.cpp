#include "cepstra/artifact.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cepstra/error.hpp"
#include "cepstra/stats.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace cepstra {

std::vector<std::string> recognition_class_names() {
  std::vector<std::string> names;
  for (ClassLabel l : kAllClassLabels) names.emplace_back(to_string(l));
  return names;
}

namespace {

void check_fingerprint(const FeatureVector& features, const std::string& expected, const char* who) {
  if (!expected.empty() && !features.fingerprint.empty() && features.fingerprint != expected) {
    throw ConfigError(std::string(who) + ": features were extracted with configuration " + features.fingerprint +
                      " but the model expects " + expected + "; re-extract with the model's configuration");
  }
}

}  // namespace

Detection detect(const FeatureVector& features, const SvmModel& model) {
  if (model.class_names != kDetectionClasses) {
    throw ConfigError("detect: model must have exactly the classes {clean, artifact}, found " +
                      std::to_string(model.class_count()));
  }
  check_fingerprint(features, model.fingerprint, "detect");
  const Prediction p = svm_predict(model, features.coeffs);
  // The single machine votes class 0 (clean) for positive decisions.
  return {p.class_id == 1, -p.decision_values.front()};
}

ClassLabel recognize(const FeatureVector& features, const SvmModel& model) {
  if (model.class_names != recognition_class_names()) {
    throw ConfigError("recognize: model classes do not match the six recognition labels");
  }
  check_fingerprint(features, model.fingerprint, "recognize");
  return static_cast<ClassLabel>(svm_predict(model, features.coeffs).class_id);
}

namespace {

std::size_t per_channel(const FeatureVector& f) {
  if (f.channel_count == 0 || f.size() % f.channel_count != 0) {
    throw DomainError("feature vector of length " + std::to_string(f.size()) + " does not split into " +
                      std::to_string(f.channel_count) + " channels");
  }
  return f.size() / f.channel_count;
}

void column_stats(std::span<const FeatureVector> rows, std::vector<double>& mean_out, std::vector<double>& std_out) {
  const std::size_t width = rows.front().size();
  mean_out.assign(width, 0.0);
  std_out.assign(width, 0.0);
  std::vector<double> column(rows.size());
  for (std::size_t j = 0; j < width; ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) column[i] = rows[i].coeffs[j];
    mean_out[j] = mean(column);
    std_out[j] = stddev(column);
  }
}

}  // namespace

RemovalProfile build_removal_profile(std::span<const FeatureVector> artifact, std::span<const FeatureVector> clean,
                                     const ProfileOptions& options) {
  if (artifact.empty() || clean.empty()) throw DomainError("removal profile: both populations must be non-empty");
  const std::size_t width = artifact.front().size();
  const std::size_t channels = artifact.front().channel_count;
  for (const auto* pop : {&artifact, &clean}) {
    for (const auto& f : *pop) {
      if (f.size() != width || f.channel_count != channels) {
        throw DomainError("removal profile: feature vectors differ in layout");
      }
      if (f.fingerprint != artifact.front().fingerprint) {
        throw ConfigError("removal profile: populations were extracted with different configurations");
      }
    }
  }
  const std::size_t dims = per_channel(artifact.front());
  if (options.k == 0 || options.k > dims) {
    throw ConfigError("removal profile: k must lie in [1, " + std::to_string(dims) + "]");
  }
  const std::size_t paired = std::min(artifact.size(), clean.size());
  if (paired < 2) throw DomainError("removal profile: fewer than 2 paired samples");

  RemovalProfile prof;
  prof.first_label = options.first_label;
  prof.dims_per_channel = dims;
  prof.channel_count = channels;
  prof.seed = options.seed;
  prof.paired_count = paired;
  prof.fingerprint = artifact.front().fingerprint;

  // Equal-length populations share one permutation and so keep their pairing.
  const auto perm_a = detail::seeded_permutation(artifact.size(), options.seed);
  const auto perm_r = detail::seeded_permutation(clean.size(), options.seed);

  prof.correlations.assign(dims, 0.0);
  prof.undefined.assign(dims, false);
  std::vector<double> a(paired), r(paired);
  for (std::size_t d = 0; d < dims; ++d) {
    double sum = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t col = c * dims + d;
      for (std::size_t i = 0; i < paired; ++i) {
        a[i] = artifact[perm_a[i]].coeffs[col];
        r[i] = clean[perm_r[i]].coeffs[col];
      }
      const Correlation cor = pearson(a, r);
      if (!cor.defined) prof.undefined[d] = true;
      sum += cor.defined ? cor.r : 0.0;
    }
    prof.correlations[d] = sum / static_cast<double>(channels);
  }

  std::vector<std::size_t> order(dims);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const double ax = std::abs(prof.correlations[x]);
    const double ay = std::abs(prof.correlations[y]);
    if (ax != ay) return ax < ay;
    return x > y;
  });
  for (std::size_t i = 0; i < options.k; ++i) prof.artifact_dims.push_back(order[i] + options.first_label);
  std::sort(prof.artifact_dims.begin(), prof.artifact_dims.end());

  const auto [lo, hi] = std::minmax_element(prof.correlations.begin(), prof.correlations.end());
  if (*hi - *lo <= 1e-12) {
    prof.degenerate = true;
    prof.warnings.push_back("all dimension correlations are equal (" + std::to_string(*lo) +
                            "); selection fell back to the highest dimensions");
  }
  for (std::size_t d = 0; d < dims; ++d) {
    if (prof.undefined[d]) {
      prof.warnings.push_back("dimension " + std::to_string(d + options.first_label) +
                              " is constant on some channel; its correlation counts as 0 there");
    }
  }

  column_stats(clean, prof.clean_mean, prof.clean_std);
  column_stats(artifact, prof.artifact_mean, prof.artifact_std);
  return prof;
}

namespace {

void check_profile_layout(const FeatureVector& features, const RemovalProfile& profile) {
  if (features.channel_count != profile.channel_count ||
      features.size() != profile.channel_count * profile.dims_per_channel) {
    throw DomainError("removal: feature layout does not match the profile (" + std::to_string(features.size()) +
                      " values, profile expects " +
                      std::to_string(profile.channel_count * profile.dims_per_channel) + ")");
  }
  check_fingerprint(features, profile.fingerprint, "removal");
}

void check_selected_std(const RemovalProfile& profile, std::size_t col, std::size_t label) {
  if (!(profile.artifact_std[col] > 0.0)) {
    throw DomainError("removal: artifact standard deviation is zero on dimension " + std::to_string(label) +
                      " (column " + std::to_string(col) +
                      "); rebuild the profile from an artifact population in which this dimension varies");
  }
}

}  // namespace

FeatureVector remove_labeled(const FeatureVector& features, const RemovalProfile& profile) {
  check_profile_layout(features, profile);
  FeatureVector out = features;
  for (std::size_t label : profile.artifact_dims) {
    for (std::size_t c = 0; c < profile.channel_count; ++c) {
      const std::size_t col = profile.column(c, label);
      check_selected_std(profile, col, label);
      out.coeffs[col] = (features.coeffs[col] - profile.artifact_mean[col]) / profile.artifact_std[col] *
                            profile.clean_std[col] +
                        profile.clean_mean[col];
    }
  }
  return out;
}

CepstralEdit labeled_edit(const RemovalProfile& profile) {
  CepstralEdit edit;
  for (std::size_t label : profile.artifact_dims) {
    for (std::size_t c = 0; c < profile.channel_count; ++c) {
      const std::size_t col = profile.column(c, label);
      check_selected_std(profile, col, label);
      DimEdit e;
      e.dim = label;
      e.kind = DimEdit::Kind::affine;
      e.scale = profile.clean_std[col] / profile.artifact_std[col];
      e.offset = profile.clean_mean[col] - e.scale * profile.artifact_mean[col];
      e.channel = c;
      edit.edits.push_back(e);
    }
  }
  return edit;
}

FeatureVector remove_unlabeled(const FeatureVector& features, std::span<const std::size_t> dims,
                               std::size_t first_label) {
  const std::size_t width = per_channel(features);
  FeatureVector out = features;
  for (std::size_t label : dims) {
    if (label < first_label || label >= first_label + width) {
      throw DomainError("remove_unlabeled: dimension " + std::to_string(label) + " outside [" +
                        std::to_string(first_label) + ", " + std::to_string(first_label + width - 1) + "]");
    }
    for (std::size_t c = 0; c < features.channel_count; ++c) out.coeffs[c * width + (label - first_label)] = 0.0;
  }
  return out;
}

ReconstructionResult remove_unlabeled(const EegSegment& segment, std::span<const std::size_t> dims,
                                      const CepstralAnalyzer& analyzer, const ReconstructionOptions& options) {
  const auto& cfg = analyzer.config();
  for (std::size_t label : dims) {
    if (label < cfg.coeff_lo || label > cfg.coeff_hi) {
      throw DomainError("remove_unlabeled: dimension " + std::to_string(label) + " outside [" +
                        std::to_string(cfg.coeff_lo) + ", " + std::to_string(cfg.coeff_hi) + "]");
    }
  }
  return reconstruct_segment(segment, CepstralEdit::zero_dims(dims), analyzer, options);
}

double residual_artifact_rate(std::span<const FeatureVector> denoised, const SvmModel& detector) {
  if (denoised.empty()) throw DomainError("residual_artifact_rate: no samples");
  std::size_t flagged = 0;
  for (const auto& f : denoised) {
    if (detect(f, detector).is_artifact) ++flagged;
  }
  return static_cast<double>(flagged) / static_cast<double>(denoised.size());
}

std::string_view to_string(RemovalBranch branch) {
  switch (branch) {
    case RemovalBranch::passthrough:
      return "passthrough";
    case RemovalBranch::labeled:
      return "labeled";
    case RemovalBranch::unlabeled:
      return "unlabeled";
  }
  return "unknown";
}

Algorithm1Result run_algorithm1(std::span<const LabeledSegment> source, std::span<const LabeledSegment> target,
                                const CepstralAnalyzer& analyzer, const Algorithm1Options& options) {
  std::vector<std::size_t> clean_rows, artifact_rows;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (!source[i].label) throw DomainError("removal: source segment '" + source[i].name + "' has no label");
    (is_artifact(*source[i].label) ? artifact_rows : clean_rows).push_back(i);
  }
  if (clean_rows.empty() || artifact_rows.empty()) {
    throw DomainError("removal: the source set needs both clean and artifact segments");
  }
  if (options.profile.first_label != analyzer.config().coeff_lo) {
    throw ConfigError("removal: profile labels must start at the configured first coefficient");
  }

  std::vector<FeatureVector> source_feats(source.size());
  detail::parallel_for(source.size(), options.threads,
                       [&](std::size_t i) { source_feats[i] = mfcc_segment(source[i].segment, analyzer); });
  std::vector<FeatureVector> clean_feats, artifact_feats;
  for (std::size_t i : clean_rows) clean_feats.push_back(source_feats[i]);
  for (std::size_t i : artifact_rows) artifact_feats.push_back(source_feats[i]);

  Algorithm1Result result;
  result.profile = build_removal_profile(artifact_feats, clean_feats, options.profile);
  const RemovalProfile& prof = result.profile;
  const CepstralEdit eq_edit = labeled_edit(prof);
  const CepstralEdit zero_edit = CepstralEdit::zero_dims(prof.artifact_dims);

  if (options.has_target_labels) {
    for (const auto& t : target) {
      if (!t.label) throw DomainError("removal: target segment '" + t.name + "' has no label");
    }
  }

  result.segments.resize(target.size());
  result.denoised.resize(target.size());
  detail::parallel_for(target.size(), options.threads, [&](std::size_t i) {
    const LabeledSegment& t = target[i];
    SegmentOutcome& out = result.segments[i];
    out.index = i;
    out.name = t.name;
    out.label = t.label;
    out.before = mfcc_segment(t.segment, analyzer);
    const CepstralEdit* edit = nullptr;
    if (!options.has_target_labels) {
      out.branch = RemovalBranch::unlabeled;
      out.edited = remove_unlabeled(out.before, prof.artifact_dims, prof.first_label);
      edit = &zero_edit;
    } else if (is_artifact(*t.label)) {
      out.branch = RemovalBranch::labeled;
      out.edited = remove_labeled(out.before, prof);
      edit = &eq_edit;
    } else {
      out.branch = RemovalBranch::passthrough;
      out.edited = out.before;
    }
    if (options.reconstruct) {
      static const CepstralEdit identity = CepstralEdit::identity();
      ReconstructionResult rec =
          reconstruct_segment(t.segment, edit ? *edit : identity, analyzer, options.reconstruction);
      out.iterations = rec.iterations;
      out.max_residual = rec.max_residual;
      out.converged = rec.converged;
      out.reextracted = mfcc_segment(rec.segment, analyzer);
      result.denoised[i] = std::move(rec.segment);
    } else {
      result.denoised[i] = t.segment;
    }
    if (options.detector) {
      out.score_before = detect(out.before, *options.detector).score;
      out.score_edited = detect(out.edited, *options.detector).score;
      if (options.reconstruct) out.score_reconstructed = detect(out.reextracted, *options.detector).score;
    }
  });

  if (options.detector) {
    std::size_t n = 0, before = 0, edited = 0, rebuilt = 0;
    for (const auto& s : result.segments) {
      if (options.has_target_labels && !is_artifact(*s.label)) continue;
      ++n;
      before += *s.score_before >= 0.0 ? 1 : 0;
      edited += *s.score_edited >= 0.0 ? 1 : 0;
      if (s.score_reconstructed) rebuilt += *s.score_reconstructed >= 0.0 ? 1 : 0;
    }
    if (n > 0) {
      const double dn = static_cast<double>(n);
      result.rate_before = static_cast<double>(before) / dn;
      result.rate_features = static_cast<double>(edited) / dn;
      if (options.reconstruct) result.rate_reconstructed = static_cast<double>(rebuilt) / dn;
    }
  }
  return result;
}

}  // namespace cepstra
