#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cepstra/cepstrum.hpp"
#include "cepstra/labels.hpp"
#include "cepstra/segment.hpp"
#include "cepstra/svm.hpp"

namespace cepstra {

/// Class names of a detector model, in class-id order.
inline const std::vector<std::string> kDetectionClasses{"clean", "artifact"};
/// Class names of a recognizer model: the six wire names in ClassLabel order.
std::vector<std::string> recognition_class_names();

struct Detection {
  bool is_artifact = false;
  double score = 0.0;  // decision value; >= 0 means "artifact"
};

/// Throws ConfigError unless the model is a clean/artifact detector whose
/// fingerprint matches the features.
Detection detect(const FeatureVector& features, const SvmModel& model);
ClassLabel recognize(const FeatureVector& features, const SvmModel& model);

struct ProfileOptions {
  std::size_t k = 2;
  std::uint64_t seed = 0;
  /// Label of the first retained coefficient (the DCT index of coeff_lo).
  std::size_t first_label = 1;
};

/// Pearson screening of retained cepstral dimensions plus the population
/// statistics used by the labeled removal transform. Dimension labels are the
/// DCT indices 1..12 with the default configuration.
struct RemovalProfile {
  std::size_t first_label = 1;
  std::size_t dims_per_channel = 0;
  std::size_t channel_count = 0;
  std::uint64_t seed = 0;
  std::vector<double> correlations;   // per dimension, mean over channels
  std::vector<bool> undefined;        // some channel had a constant series
  std::vector<std::size_t> artifact_dims;  // selected labels, ascending
  // Per feature column (channel-major), population statistics.
  std::vector<double> clean_mean, clean_std, artifact_mean, artifact_std;
  std::size_t paired_count = 0;
  bool degenerate = false;
  std::vector<std::string> warnings;
  std::string fingerprint;

  std::size_t column(std::size_t channel, std::size_t label) const {
    return channel * dims_per_channel + (label - first_label);
  }
};

/// Pairs the two populations by index after identically seeded shuffles,
/// truncates to the shorter one and keeps the k dimensions with the smallest
/// |r| (larger label first on ties).
RemovalProfile build_removal_profile(std::span<const FeatureVector> artifact, std::span<const FeatureVector> clean,
                                     const ProfileOptions& options = {});

/// (A - mean_A) / std_A * std_R + mean_R on the selected dimensions of every channel.
FeatureVector remove_labeled(const FeatureVector& features, const RemovalProfile& profile);

/// The same transform expressed as a cepstral edit for reconstruction.
CepstralEdit labeled_edit(const RemovalProfile& profile);

/// Zeroes the listed dimension labels on every channel.
FeatureVector remove_unlabeled(const FeatureVector& features, std::span<const std::size_t> dims,
                               std::size_t first_label = 1);
ReconstructionResult remove_unlabeled(const EegSegment& segment, std::span<const std::size_t> dims,
                                      const CepstralAnalyzer& analyzer, const ReconstructionOptions& options = {});

/// Fraction of inputs the detector still flags as artifact.
double residual_artifact_rate(std::span<const FeatureVector> denoised, const SvmModel& detector);

struct Algorithm1Options {
  ProfileOptions profile;
  bool has_target_labels = true;
  bool reconstruct = true;
  ReconstructionOptions reconstruction;
  const SvmModel* detector = nullptr;  // optional: adds before/after scores and rates
  std::size_t threads = 0;             // 0 uses the hardware concurrency
};

enum class RemovalBranch { passthrough, labeled, unlabeled };
std::string_view to_string(RemovalBranch branch);

struct SegmentOutcome {
  std::size_t index = 0;
  std::string name;
  std::optional<ClassLabel> label;
  RemovalBranch branch = RemovalBranch::passthrough;
  FeatureVector before;
  FeatureVector edited;       // feature-space result
  FeatureVector reextracted;  // features of the reconstructed segment
  std::size_t iterations = 0;
  double max_residual = 0.0;
  bool converged = true;
  std::optional<double> score_before, score_edited, score_reconstructed;
};

struct Algorithm1Result {
  RemovalProfile profile;
  std::vector<EegSegment> denoised;  // reconstructed targets (inputs when reconstruction is off)
  std::vector<SegmentOutcome> segments;
  // Over targets labeled as artifacts, or over all targets when unlabeled.
  std::optional<double> rate_before, rate_features, rate_reconstructed;
};

Algorithm1Result run_algorithm1(std::span<const LabeledSegment> source, std::span<const LabeledSegment> target,
                                const CepstralAnalyzer& analyzer, const Algorithm1Options& options = {});

}  // namespace cepstra
