#include "cepstra/dsp.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cepstra/error.hpp"

namespace cepstra {

Signal::Signal(std::vector<double> samples, double fs) : samples_(std::move(samples)), fs_(fs) {
  if (!(fs_ > 0.0) || !std::isfinite(fs_)) {
    throw DomainError("signal: sampling rate must be positive, got " + std::to_string(fs_));
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i])) {
      throw DomainError("signal: non-finite sample at index " + std::to_string(i));
    }
  }
}

Signal pre_emphasize(const Signal& signal, double beta) {
  if (signal.empty()) throw DomainError("pre_emphasize: empty signal");
  if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("pre_emphasize: beta must lie in [0, 1)");
  const auto in = signal.samples();
  std::vector<double> out(in.size());
  out[0] = in[0];
  for (std::size_t n = 1; n < in.size(); ++n) out[n] = in[n] - beta * in[n - 1];
  return Signal(std::move(out), signal.fs());
}

Signal de_emphasize(const Signal& signal, double beta) {
  if (signal.empty()) throw DomainError("de_emphasize: empty signal");
  if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("de_emphasize: beta must lie in [0, 1)");
  const auto in = signal.samples();
  std::vector<double> out(in.size());
  out[0] = in[0];
  for (std::size_t n = 1; n < in.size(); ++n) out[n] = in[n] + beta * out[n - 1];
  return Signal(std::move(out), signal.fs());
}

std::size_t frame_count(std::size_t length, std::size_t frame_len, std::size_t hop) {
  if (frame_len == 0) throw DomainError("frame_signal: frame length must be >= 1");
  if (hop == 0 || hop > frame_len) throw DomainError("frame_signal: hop must lie in [1, frame length]");
  if (length < frame_len) {
    throw DomainError("frame_signal: segment too short (" + std::to_string(length) +
                      " samples, frame length " + std::to_string(frame_len) + ")");
  }
  return (length - frame_len) / hop + 1;
}

std::vector<Frame> frame_signal(const Signal& signal, std::size_t frame_len, std::size_t hop) {
  const std::size_t count = frame_count(signal.size(), frame_len, hop);
  const auto in = signal.samples();
  std::vector<Frame> frames;
  frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t off = i * hop;
    frames.push_back(Frame{{in.begin() + static_cast<std::ptrdiff_t>(off),
                            in.begin() + static_cast<std::ptrdiff_t>(off + frame_len)},
                           i,
                           off});
  }
  return frames;
}

std::vector<double> hamming_window(std::size_t frame_len) {
  if (frame_len < 2) throw DomainError("hamming_window: length must be >= 2");
  std::vector<double> w(frame_len);
  const double denom = static_cast<double>(frame_len - 1);
  for (std::size_t n = 0; n < frame_len; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
  }
  // Exact symmetry; cos(2 pi (L-1-n)/(L-1)) rounds differently from cos(2 pi n/(L-1)).
  for (std::size_t n = 0; n < frame_len / 2; ++n) w[frame_len - 1 - n] = w[n];
  return w;
}

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

FftPlan::FftPlan(std::size_t n) : n_(n), log2n_(0) {
  if (!is_power_of_two(n)) {
    throw DomainError("fft: length " + std::to_string(n) + " is not a power of two");
  }
  while ((std::size_t{1} << log2n_) < n) ++log2n_;
  twiddles_.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddles_[k] = {std::cos(angle), std::sin(angle)};
  }
  bitrev_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (unsigned b = 0; b < log2n_; ++b) r |= ((i >> b) & 1u) << (log2n_ - 1 - b);
    bitrev_[i] = r;
  }
}

void FftPlan::transform(std::vector<std::complex<double>>& data, bool inverse) const {
  if (data.size() != n_) throw DomainError("fft: buffer length does not match plan");
  for (std::size_t i = 0; i < n_; ++i) {
    if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
  }
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        std::complex<double> tw = twiddles_[j * stride];
        if (inverse) tw = std::conj(tw);
        const std::complex<double> odd = tw * data[start + j + half];
        data[start + j + half] = data[start + j] - odd;
        data[start + j] += odd;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n_);
    for (auto& v : data) v *= scale;
  }
}

std::vector<std::complex<double>> FftPlan::forward(std::span<const double> x) const {
  if (x.size() != n_) throw DomainError("fft: input length does not match plan");
  std::vector<std::complex<double>> data(x.begin(), x.end());
  transform(data, false);
  return data;
}

std::vector<double> FftPlan::inverse_real(std::span<const std::complex<double>> half) const {
  if (half.size() != n_ / 2 + 1) throw DomainError("ifft: expected N/2+1 bins");
  std::vector<std::complex<double>> data(n_);
  for (std::size_t k = 0; k <= n_ / 2; ++k) data[k] = half[k];
  // DC and Nyquist of a real sequence are real.
  data[0] = {half[0].real(), 0.0};
  if (n_ > 1) data[n_ / 2] = {half[n_ / 2].real(), 0.0};
  for (std::size_t k = 1; k < n_ / 2; ++k) data[n_ - k] = std::conj(half[k]);
  transform(data, true);
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = data[i].real();
  return out;
}

Spectrum fft_magnitude_phase(std::span<const double> samples, bool windowed, const FftPlan& plan) {
  std::vector<double> buf(samples.begin(), samples.end());
  if (windowed) {
    const auto w = hamming_window(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= w[i];
  }
  const auto full = plan.forward(buf);
  const std::size_t bins = plan.size() / 2 + 1;
  Spectrum s;
  s.magnitudes.resize(bins);
  s.phases.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    s.magnitudes[k] = std::abs(full[k]);
    s.phases[k] = std::arg(full[k]);
  }
  return s;
}

Spectrum fft_magnitude_phase(const Frame& frame, bool windowed) {
  const FftPlan plan(frame.samples.size());
  return fft_magnitude_phase(frame.samples, windowed, plan);
}

DctPlan::DctPlan(std::size_t m) : m_(m) {
  if (m == 0) throw DomainError("dct: empty input");
  basis_.resize(m * m);
  const double md = static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / md) : std::sqrt(2.0 / md);
    for (std::size_t n = 0; n < m; ++n) {
      basis_[k * m + n] =
          scale * std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(n) + 0.5) / md);
    }
  }
}

std::vector<double> DctPlan::forward(std::span<const double> values) const {
  if (values.size() != m_) throw DomainError("dct: input length does not match plan");
  std::vector<double> out(m_, 0.0);
  for (std::size_t k = 0; k < m_; ++k) {
    double acc = 0.0;
    const double* row = &basis_[k * m_];
    for (std::size_t n = 0; n < m_; ++n) acc += row[n] * values[n];
    out[k] = acc;
  }
  return out;
}

std::vector<double> DctPlan::inverse(std::span<const double> coeffs) const {
  if (coeffs.size() != m_) throw DomainError("idct: input length does not match plan");
  std::vector<double> out(m_, 0.0);
  for (std::size_t k = 0; k < m_; ++k) {
    const double c = coeffs[k];
    const double* row = &basis_[k * m_];
    for (std::size_t n = 0; n < m_; ++n) out[n] += row[n] * c;
  }
  return out;
}

std::vector<double> dct2(std::span<const double> values) {
  if (values.empty()) throw DomainError("dct2: empty input");
  return DctPlan(values.size()).forward(values);
}

std::vector<double> idct2(std::span<const double> coeffs) {
  if (coeffs.empty()) throw DomainError("idct2: empty input");
  return DctPlan(coeffs.size()).inverse(coeffs);
}

std::vector<double> overlap_add(std::span<const std::vector<double>> frames, std::size_t hop,
                                std::span<const double> synthesis_weights, std::size_t output_len) {
  if (frames.empty()) return std::vector<double>(output_len, 0.0);
  const std::size_t len = frames.front().size();
  for (const auto& f : frames) {
    if (f.size() != len) throw DomainError("overlap_add: inconsistent frame lengths");
  }
  if (synthesis_weights.size() != len) throw DomainError("overlap_add: weight length differs from frame length");
  if (hop == 0) throw DomainError("overlap_add: hop must be >= 1");
  const std::size_t natural = (frames.size() - 1) * hop + len;
  if (output_len == 0) output_len = natural;

  std::vector<double> acc(output_len, 0.0);
  std::vector<double> norm(output_len, 0.0);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::size_t off = i * hop;
    for (std::size_t n = 0; n < len && off + n < output_len; ++n) {
      const double w = synthesis_weights[n];
      acc[off + n] += w * frames[i][n];
      norm[off + n] += w * w;
    }
  }
  for (std::size_t t = 0; t < output_len; ++t) acc[t] = norm[t] > 0.0 ? acc[t] / norm[t] : 0.0;
  return acc;
}

std::vector<bool> overlap_coverage(std::size_t frame_count, std::size_t hop,
                                   std::span<const double> synthesis_weights, std::size_t output_len) {
  std::vector<bool> covered(output_len, false);
  for (std::size_t i = 0; i < frame_count; ++i) {
    const std::size_t off = i * hop;
    for (std::size_t n = 0; n < synthesis_weights.size() && off + n < output_len; ++n) {
      if (synthesis_weights[n] != 0.0) covered[off + n] = true;
    }
  }
  return covered;
}

}  // namespace cepstra
