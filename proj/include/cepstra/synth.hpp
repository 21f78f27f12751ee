#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cepstra/labels.hpp"
#include "cepstra/segment.hpp"

namespace cepstra {

enum class ContaminationMode { convolve, add };
std::string_view to_string(ContaminationMode mode);

struct SynthSpec {
  double fs = 250.0;
  double segment_seconds = 5.0;
  std::size_t channels = 7;
  std::uint64_t seed = 0;
  std::array<std::size_t, kClassLabelCount> class_mix{};  // segments per ClassLabel
  double snr_db = 20.0;      // artifact-to-EEG amplitude ratio
  ContaminationMode mode = ContaminationMode::convolve;
  double eeg_scale = 1.0;    // multiplies the background EEG; 0 gives silent segments
  double segment_gain_sigma = 0.7;  // log-normal spread of per-segment amplitude
  double channel_gain_sigma = 0.3;  // log-normal spread of per-channel amplitude
  double snr_jitter_db = 2.0;       // uniform +- jitter on snr_db per segment
  double validation_fraction = 0.2;
  std::size_t min_samples = 512;    // shortest acceptable segment (one analysis frame)

  std::size_t samples() const;
  std::size_t total_segments() const;
  /// Throws ConfigError.
  void validate() const;
};

/// Background EEG for one segment: shaped 1/f noise plus alpha and beta rhythms,
/// tens of microvolts. Depends only on (seed, segment_index) and the spec.
EegSegment gen_clean_eeg(const SynthSpec& spec, std::size_t segment_index);

struct ArtifactKernel {
  ClassLabel kind = ClassLabel::blink_hard;
  std::vector<double> waveform;
  double duration_ms = 0.0;
};

ArtifactKernel gen_artifact_kernel(ClassLabel kind, double fs, std::uint64_t seed);

/// Per-channel sign and weight of an artifact: horizontal movements load the
/// two channel halves with opposite polarity.
std::vector<double> spatial_gains(ClassLabel kind, std::size_t channels);

/// convolve: each channel becomes s * (delta + rho g k / peak|K|), truncated to
/// the segment, with rho = 10^(snr_db / 20) and g the channel's spatial gain.
/// add: rho g rms(s) k / max|k| is added at an onset drawn from onset_seed.
EegSegment contaminate(const EegSegment& clean, const ArtifactKernel& kernel, double snr_db, ContaminationMode mode,
                       std::uint64_t onset_seed = 0);

struct SynthDataset {
  std::vector<LabeledSegment> segments;  // grouped by class, in ClassLabel order
  std::vector<bool> validation;          // split flag per segment
};

SynthDataset make_dataset(const SynthSpec& spec);

/// Direct linear convolution truncated to signal.size().
std::vector<double> convolve_truncated(std::span<const double> signal, std::span<const double> kernel);

}  // namespace cepstra
