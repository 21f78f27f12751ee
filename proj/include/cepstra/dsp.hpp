#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace cepstra {

/// A single-channel sampled signal. Construction rejects non-finite samples.
class Signal {
 public:
  Signal(std::vector<double> samples, double fs);

  std::span<const double> samples() const noexcept { return samples_; }
  double fs() const noexcept { return fs_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  double operator[](std::size_t i) const { return samples_[i]; }

 private:
  std::vector<double> samples_;
  double fs_;
};

struct Frame {
  std::vector<double> samples;
  std::size_t index = 0;
  std::size_t start_offset = 0;
};

/// One-sided spectrum, bins 0..N/2.
struct Spectrum {
  std::vector<double> magnitudes;
  std::vector<double> phases;
};

/// out[0] = in[0]; out[n] = in[n] - beta * in[n-1].
Signal pre_emphasize(const Signal& signal, double beta);

/// Inverse of pre_emphasize: out[n] = in[n] + beta * out[n-1].
Signal de_emphasize(const Signal& signal, double beta);

/// Complete frames of length frame_len every hop samples. The tail is dropped.
std::vector<Frame> frame_signal(const Signal& signal, std::size_t frame_len, std::size_t hop);

/// Number of frames frame_signal would emit for a signal of the given length.
std::size_t frame_count(std::size_t length, std::size_t frame_len, std::size_t hop);

/// Symmetric Hamming window, w[n] = 0.54 - 0.46 cos(2 pi n / (len - 1)).
std::vector<double> hamming_window(std::size_t frame_len);

bool is_power_of_two(std::size_t n) noexcept;

/// Precomputed radix-2 transform of a fixed power-of-two length. Immutable
/// after construction, so one plan can be shared between threads.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  /// Forward DFT of a real sequence, X(k) = sum x(n) e^{-j 2 pi k n / N}.
  std::vector<std::complex<double>> forward(std::span<const double> x) const;

  /// In-place complex transform; inverse scales by 1/N.
  void transform(std::vector<std::complex<double>>& data, bool inverse) const;

  /// Real sequence from its one-sided spectrum (bins 0..N/2, Hermitian extension implied).
  std::vector<double> inverse_real(std::span<const std::complex<double>> half) const;

 private:
  std::size_t n_;
  unsigned log2n_;
  std::vector<std::complex<double>> twiddles_;
  std::vector<std::size_t> bitrev_;
};

/// Magnitude and phase of bins 0..N/2, optionally after a Hamming window.
Spectrum fft_magnitude_phase(const Frame& frame, bool windowed);
Spectrum fft_magnitude_phase(std::span<const double> samples, bool windowed, const FftPlan& plan);

/// Orthonormal DCT-II of a fixed length via a precomputed cosine table.
class DctPlan {
 public:
  explicit DctPlan(std::size_t m);

  std::size_t size() const noexcept { return m_; }
  std::vector<double> forward(std::span<const double> values) const;
  std::vector<double> inverse(std::span<const double> coeffs) const;

 private:
  std::size_t m_;
  std::vector<double> basis_;  // basis_[k * m + n] = s_k cos(pi k (n + 1/2) / m)
};

std::vector<double> dct2(std::span<const double> values);
std::vector<double> idct2(std::span<const double> coeffs);

/// Weighted overlap-add: out[t] = sum_i w[t - i*hop] f_i[t - i*hop] / sum_i w[t - i*hop]^2.
/// Samples no frame covers are zero. output_len of 0 means (frames-1)*hop + frame_len.
std::vector<double> overlap_add(std::span<const std::vector<double>> frames, std::size_t hop,
                                std::span<const double> synthesis_weights,
                                std::size_t output_len = 0);

/// Mask of samples that at least one frame with nonzero weight covers.
std::vector<bool> overlap_coverage(std::size_t frame_count, std::size_t hop,
                                   std::span<const double> synthesis_weights,
                                   std::size_t output_len);

}  // namespace cepstra
