#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cepstra/dsp.hpp"
#include "cepstra/segment.hpp"

namespace cepstra {

enum class ChannelMode { concatenate, average };

/// Every constant of the cepstral pipeline. Coefficient indices are zero-based
/// DCT indices; the defaults keep DCT outputs 1..12.
struct MfccConfig {
  double beta = 0.95;
  std::size_t frame_len = 2048;
  std::size_t hop = 1024;
  std::size_t num_filters = 40;
  std::size_t coeff_lo = 1;
  std::size_t coeff_hi = 12;
  double fs = 500.0;
  double mel_lo_hz = 0.0;
  std::optional<double> mel_hi_hz;  // defaults to fs / 2
  double log_floor = 1e-10;
  ChannelMode channel_mode = ChannelMode::concatenate;

  double mel_hi() const { return mel_hi_hz.value_or(fs / 2.0); }
  std::size_t retained_count() const { return coeff_hi - coeff_lo + 1; }

  /// Throws ConfigError when any invariant fails.
  void validate() const;

  /// Stable 16-hex-digit hash over every field that affects extracted features.
  std::string fingerprint() const;
};

/// Desk-scale preset: fs = 250 Hz, N = 512, hop = 256.
MfccConfig desk_preset();
/// N = 2048 as used with the original recorder; fs = 500 Hz.
MfccConfig paper_preset();

/// Hz to mel, 2595 log10(1 + f / 700).
double mel_of_hz(double hz);
double hz_of_mel(double mel);

/// Triangular filters in FFT-bin space. Row m rises linearly from edge_bins[m]
/// to its apex (weight 1) at edge_bins[m+1] and falls to 0 at edge_bins[m+2].
struct MelFilterBank {
  struct Row {
    std::size_t first_bin = 0;     // first bin with (possibly zero) weight
    std::vector<double> weights;   // weights for first_bin .. first_bin+size-1
  };
  std::vector<Row> filters;
  std::vector<double> center_freqs;   // Hz, nominal mel-grid frequencies
  std::vector<std::size_t> edge_bins; // M + 2 distinct bin indices
  std::size_t bin_count = 0;          // N/2 + 1

  std::size_t size() const noexcept { return filters.size(); }
  double weight(std::size_t filter, std::size_t bin) const;
  std::vector<double> apply(std::span<const double> magnitudes) const;
  /// Per-bin total filter weight (column sums).
  std::vector<double> column_sums() const;
};

MelFilterBank build_mel_bank(const MfccConfig& config);

/// Side information kept per analysed frame for reconstruction.
struct CepstralFrameState {
  std::vector<double> full_dct;                     // all M coefficients
  std::vector<double> phases;                       // bins 0..N/2
  std::vector<double> magnitudes;                   // bins 0..N/2 (windowed frame)
  std::vector<double> mel_energies;                 // before the log floor
  double frame_energy = 0.0;                        // sum of squared windowed samples
};

struct FrameCepstrum {
  std::vector<double> coeffs;  // retained slice [coeff_lo, coeff_hi]
  CepstralFrameState state;
};

/// Reusable, immutable analysis context (bank, window and transform plans).
class CepstralAnalyzer {
 public:
  explicit CepstralAnalyzer(MfccConfig config);

  const MfccConfig& config() const noexcept { return config_; }
  const MelFilterBank& bank() const noexcept { return bank_; }
  const std::vector<double>& window() const noexcept { return window_; }
  const FftPlan& fft() const noexcept { return fft_; }
  const DctPlan& dct() const noexcept { return dct_; }

  /// window -> |FFT| -> mel -> log(max(., floor)) -> DCT-II.
  FrameCepstrum analyze_frame(std::span<const double> frame) const;

  /// Per-frame analysis of one raw (not yet pre-emphasized) channel.
  std::vector<FrameCepstrum> analyze_channel(std::span<const double> raw) const;

 private:
  MfccConfig config_;
  MelFilterBank bank_;
  std::vector<double> window_;
  FftPlan fft_;
  DctPlan dct_;
};

struct FeatureVector {
  std::vector<double> coeffs;
  std::size_t channel_count = 0;
  std::string fingerprint;

  std::size_t size() const noexcept { return coeffs.size(); }
};

FrameCepstrum mfcc_frame(const Frame& frame, const MelFilterBank& bank, const MfccConfig& config);

/// Per channel: pre-emphasize, frame, analyse, average the retained slices
/// (fixed reduction order); channels concatenated (or averaged, per config).
FeatureVector mfcc_segment(const EegSegment& segment, const CepstralAnalyzer& analyzer);
FeatureVector mfcc_segment(const EegSegment& segment, const MelFilterBank& bank, const MfccConfig& config);

/// One edit to a full-DCT coefficient of every analysed frame.
struct DimEdit {
  enum class Kind { keep, zero, affine };
  std::size_t dim = 0;        // zero-based DCT index, < M
  Kind kind = Kind::keep;
  double scale = 1.0;         // affine: c' = scale * c + offset
  double offset = 0.0;
  std::optional<std::size_t> channel;  // unset: every channel
};

struct CepstralEdit {
  std::vector<DimEdit> edits;

  static CepstralEdit identity() { return {}; }
  static CepstralEdit zero_dims(std::span<const std::size_t> dct_dims);
};

struct ReconstructionOptions {
  /// Refinement stops once every edited coefficient of every frame of the
  /// re-analysed signal is within this distance of its target.
  double tolerance = 1e-9;
  std::size_t max_iterations = 100;
};

struct ReconstructionResult {
  EegSegment segment;
  std::size_t iterations = 0;
  double max_residual = 0.0;  // largest |edited coefficient - target| after the last pass
  bool converged = true;
};

/// Applies a cepstral edit and maps it back to the time domain, keeping the
/// original frame phases. The identity edit reproduces the input.
ReconstructionResult reconstruct_segment(const EegSegment& segment, const CepstralEdit& edit,
                                         const CepstralAnalyzer& analyzer,
                                         const ReconstructionOptions& options = {});

struct Band {
  double low_hz;
  double high_hz;
};

/// 0.5-4, 4-8, 8-13, 13-30, 0.5-30 Hz.
std::vector<Band> default_bands();

/// Per channel and band: mean squared FFT magnitude over bins with centre
/// frequency in [low, high). The whole channel is zero-padded to a power of two.
FeatureVector band_power_features(const EegSegment& segment, std::span<const Band> bands);

/// Identifies band-power feature layouts the way MfccConfig::fingerprint does for cepstra.
std::string band_fingerprint(std::span<const Band> bands);

}  // namespace cepstra
