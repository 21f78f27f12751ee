#include "cepstra/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <cstdio>
#include <random>
#include <string>

#include "cepstra/dsp.hpp"
#include "cepstra/error.hpp"
#include "random.hpp"

namespace cepstra {

namespace {

constexpr double kPi = std::numbers::pi;

// Stream tags for derive_seed.
constexpr std::uint64_t kTagSegment = 1;
constexpr std::uint64_t kTagChannel = 2;
constexpr std::uint64_t kTagKernel = 3;
constexpr std::uint64_t kTagMix = 4;
constexpr std::uint64_t kTagSplit = 5;

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * detail::unit_uniform(rng); }

double normal(std::mt19937_64& rng) {
  // Box-Muller on our own uniforms keeps draws identical across standard libraries.
  const double u1 = 1.0 - detail::unit_uniform(rng);
  const double u2 = detail::unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> background_channel(const SynthSpec& spec, std::mt19937_64& rng) {
  const std::size_t len = spec.samples();
  const std::size_t n = next_pow2(len);
  const FftPlan plan(n);
  std::vector<std::complex<double>> half(n / 2 + 1);
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) * spec.fs / static_cast<double>(n);
    const double shape = std::pow(f, -0.75) / std::sqrt(1.0 + std::pow(0.8 / f, 4.0)) /
                         std::sqrt(1.0 + std::pow(f / 40.0, 4.0));
    const double u = 1.0 - detail::unit_uniform(rng);
    const double rayleigh = std::sqrt(-2.0 * std::log(u));
    half[k] = std::polar(shape * rayleigh, 2.0 * kPi * detail::unit_uniform(rng));
  }
  half[n / 2] = {half[n / 2].real(), 0.0};
  std::vector<double> x = plan.inverse_real(half);
  x.resize(len);
  double mu = 0.0, var = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(len);
  for (double& v : x) {
    v -= mu;
    var += v * v;
  }
  const double sd = std::sqrt(var / static_cast<double>(len));
  const double level = uniform(rng, 10.0, 20.0);
  for (double& v : x) v *= sd > 0.0 ? level / sd : 0.0;

  struct Rhythm {
    double lo, hi, amp_lo, amp_hi;
  };
  for (const Rhythm& r : {Rhythm{8.0, 13.0, 5.0, 15.0}, Rhythm{13.0, 30.0, 2.0, 6.0}}) {
    const double amp = uniform(rng, r.amp_lo, r.amp_hi) / std::sqrt(3.0);
    for (int i = 0; i < 3; ++i) {
      const double f = uniform(rng, r.lo, r.hi);
      const double phase = 2.0 * kPi * detail::unit_uniform(rng);
      for (std::size_t t = 0; t < len; ++t) {
        x[t] += amp * std::sin(2.0 * kPi * f * static_cast<double>(t) / spec.fs + phase);
      }
    }
  }
  return x;
}

std::vector<double> sine_squared(std::size_t len) {
  std::vector<double> k(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double s = std::sin(kPi * static_cast<double>(i) / static_cast<double>(len));
    k[i] = s * s;
  }
  return k;
}

std::vector<double> clipped_sine(std::size_t len) {
  std::vector<double> k(len);
  for (std::size_t i = 0; i < len; ++i) {
    k[i] = std::clamp(8.0 * std::sin(kPi * static_cast<double>(i) / static_cast<double>(len)), -1.0, 1.0);
  }
  return k;
}

double peak_response(std::span<const double> k) {
  const std::size_t n = next_pow2(std::max<std::size_t>(8 * k.size(), 64));
  std::vector<double> padded(n, 0.0);
  std::copy(k.begin(), k.end(), padded.begin());
  const auto spec = FftPlan(n).forward(padded);
  double peak = 0.0;
  for (std::size_t i = 0; i <= n / 2; ++i) peak = std::max(peak, std::abs(spec[i]));
  return peak;
}

}  // namespace

std::string_view to_string(ContaminationMode mode) { return mode == ContaminationMode::convolve ? "convolve" : "add"; }

std::size_t SynthSpec::samples() const { return static_cast<std::size_t>(std::llround(fs * segment_seconds)); }

std::size_t SynthSpec::total_segments() const {
  std::size_t n = 0;
  for (std::size_t c : class_mix) n += c;
  return n;
}

void SynthSpec::validate() const {
  if (!(fs > 0.0) || !std::isfinite(fs)) throw ConfigError("synth: fs must be positive");
  if (!(segment_seconds > 0.0) || !std::isfinite(segment_seconds)) {
    throw ConfigError("synth: segment duration must be positive");
  }
  if (channels == 0) throw ConfigError("synth: at least one channel is required");
  if (samples() < min_samples) {
    throw ConfigError("synth: " + std::to_string(samples()) + " samples per segment is shorter than the frame length " +
                      std::to_string(min_samples));
  }
  if (!std::isfinite(snr_db)) throw ConfigError("synth: snr_db must be finite");
  if (!(eeg_scale >= 0.0) || !std::isfinite(eeg_scale)) throw ConfigError("synth: eeg_scale must be >= 0");
  if (!(segment_gain_sigma >= 0.0) || !(channel_gain_sigma >= 0.0) || !(snr_jitter_db >= 0.0)) {
    throw ConfigError("synth: variability parameters must be >= 0");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("synth: validation_fraction must lie in [0, 1)");
  }
}

EegSegment gen_clean_eeg(const SynthSpec& spec, std::size_t segment_index) {
  spec.validate();
  std::mt19937_64 seg_rng(detail::derive_seed(spec.seed, kTagSegment, segment_index));
  const double segment_gain = std::exp(spec.segment_gain_sigma * normal(seg_rng)) * spec.eeg_scale;
  std::vector<std::vector<double>> channels;
  channels.reserve(spec.channels);
  for (std::size_t c = 0; c < spec.channels; ++c) {
    std::mt19937_64 rng(detail::derive_seed(spec.seed, kTagChannel, segment_index, c));
    auto x = background_channel(spec, rng);
    const double gain = segment_gain * std::exp(spec.channel_gain_sigma * normal(rng));
    for (double& v : x) v *= gain;
    channels.push_back(std::move(x));
  }
  return EegSegment(std::move(channels), spec.fs);
}

ArtifactKernel gen_artifact_kernel(ClassLabel kind, double fs, std::uint64_t seed) {
  if (kind == ClassLabel::clean) throw DomainError("artifact kernel: 'clean' has no artifact template");
  if (!(fs > 0.0) || !std::isfinite(fs)) throw DomainError("artifact kernel: fs must be positive");
  std::mt19937_64 rng(detail::derive_seed(seed, kTagKernel, static_cast<std::uint64_t>(kind)));
  const auto samples_for = [fs](double seconds) {
    return std::max<std::size_t>(4, static_cast<std::size_t>(std::llround(fs * seconds)));
  };
  ArtifactKernel k;
  k.kind = kind;
  switch (kind) {
    case ClassLabel::blink_hard: {
      const int pulses = 2 + static_cast<int>(rng() % 2);
      const double width = uniform(rng, 0.06, 0.09);
      const std::size_t len = samples_for(0.25 * pulses + 0.1);
      k.waveform.assign(len, 0.0);
      for (int p = 0; p < pulses; ++p) {
        const double t0 = 0.05 + 0.25 * p + uniform(rng, -0.02, 0.02);
        for (std::size_t i = 0; i < len; ++i) {
          const double t = static_cast<double>(i) / fs;
          const double a = (t - t0) / width;
          const double b = (t - t0 - 1.5 * width) / width;
          k.waveform[i] += std::exp(-a * a) - 0.6 * std::exp(-b * b);
        }
      }
      break;
    }
    case ClassLabel::look_up:
      k.waveform = sine_squared(samples_for(uniform(rng, 0.30, 0.40)));
      break;
    case ClassLabel::look_down:
      k.waveform = sine_squared(samples_for(uniform(rng, 0.60, 0.90)));
      for (double& v : k.waveform) v = -v;
      break;
    case ClassLabel::look_left:
      k.waveform = clipped_sine(samples_for(uniform(rng, 0.50, 0.60)));
      break;
    case ClassLabel::look_right:
      k.waveform = clipped_sine(samples_for(uniform(rng, 0.80, 1.00)));
      break;
    case ClassLabel::clean:
      break;
  }
  k.duration_ms = 1000.0 * static_cast<double>(k.waveform.size()) / fs;
  return k;
}

std::vector<double> spatial_gains(ClassLabel kind, std::size_t channels) {
  std::vector<double> g(channels, 1.0);
  const std::size_t half = channels / 2;
  if (kind == ClassLabel::look_left || kind == ClassLabel::look_right) {
    for (std::size_t c = 0; c < channels; ++c) {
      const bool first_half = c < half;
      const bool leading = kind == ClassLabel::look_left ? first_half : !first_half;
      g[c] = leading ? 1.0 : -0.5;
    }
  }
  return g;
}

std::vector<double> convolve_truncated(std::span<const double> signal, std::span<const double> kernel) {
  std::vector<double> out(signal.size(), 0.0);
  for (std::size_t n = 0; n < signal.size(); ++n) {
    double acc = 0.0;
    const std::size_t kmax = std::min(kernel.size(), n + 1);
    for (std::size_t j = 0; j < kmax; ++j) acc += kernel[j] * signal[n - j];
    out[n] = acc;
  }
  return out;
}

EegSegment contaminate(const EegSegment& clean, const ArtifactKernel& kernel, double snr_db, ContaminationMode mode,
                       std::uint64_t onset_seed) {
  if (kernel.kind == ClassLabel::clean) throw DomainError("contaminate: kernel kind must be an artifact");
  if (kernel.waveform.empty()) throw DomainError("contaminate: empty kernel");
  if (kernel.waveform.size() >= clean.length()) {
    throw DomainError("contaminate: kernel (" + std::to_string(kernel.waveform.size()) +
                      " samples) must be shorter than the segment (" + std::to_string(clean.length()) + ")");
  }
  for (double v : kernel.waveform) {
    if (!std::isfinite(v)) throw DomainError("contaminate: non-finite kernel sample");
  }
  if (!std::isfinite(snr_db)) throw DomainError("contaminate: snr_db must be finite");
  const double rho = std::pow(10.0, snr_db / 20.0);
  const auto gains = spatial_gains(kernel.kind, clean.channel_count());
  std::vector<std::vector<double>> out;
  out.reserve(clean.channel_count());

  if (mode == ContaminationMode::convolve) {
    const double peak = peak_response(kernel.waveform);
    for (std::size_t c = 0; c < clean.channel_count(); ++c) {
      std::vector<double> h(kernel.waveform.size(), 0.0);
      if (peak > 0.0) {
        for (std::size_t i = 0; i < h.size(); ++i) h[i] = rho * gains[c] * kernel.waveform[i] / peak;
      }
      h[0] += 1.0;
      out.push_back(convolve_truncated(clean.channel(c), h));
    }
  } else {
    std::mt19937_64 rng(detail::derive_seed(onset_seed, kTagMix));
    const std::size_t span = clean.length() - kernel.waveform.size();
    const std::size_t onset = static_cast<std::size_t>(rng() % (span + 1));
    double kmax = 0.0;
    for (double v : kernel.waveform) kmax = std::max(kmax, std::abs(v));
    for (std::size_t c = 0; c < clean.channel_count(); ++c) {
      const auto s = clean.channel(c);
      double ms = 0.0;
      for (double v : s) ms += v * v;
      const double rms = std::sqrt(ms / static_cast<double>(s.size()));
      std::vector<double> x(s.begin(), s.end());
      if (kmax > 0.0) {
        const double w = rho * gains[c] * rms / kmax;
        for (std::size_t i = 0; i < kernel.waveform.size(); ++i) x[onset + i] += w * kernel.waveform[i];
      }
      out.push_back(std::move(x));
    }
  }
  return EegSegment(std::move(out), clean.fs(), clean.channel_names());
}

SynthDataset make_dataset(const SynthSpec& spec) {
  spec.validate();
  if (spec.total_segments() == 0) throw DomainError("synth: every class count is zero");
  SynthDataset ds;
  ds.segments.reserve(spec.total_segments());
  std::size_t index = 0;
  for (std::size_t cls = 0; cls < kClassLabelCount; ++cls) {
    const auto label = static_cast<ClassLabel>(cls);
    const std::size_t count = spec.class_mix[cls];
    std::vector<bool> is_val(count, false);
    const auto perm = detail::seeded_permutation(count, detail::derive_seed(spec.seed, kTagSplit, cls));
    const auto n_val = static_cast<std::size_t>(std::llround(spec.validation_fraction * static_cast<double>(count)));
    for (std::size_t i = 0; i < n_val; ++i) is_val[perm[i]] = true;

    for (std::size_t i = 0; i < count; ++i, ++index) {
      EegSegment seg = gen_clean_eeg(spec, index);
      if (label != ClassLabel::clean) {
        const std::uint64_t seg_seed = detail::derive_seed(spec.seed, kTagMix, index);
        std::mt19937_64 rng(seg_seed);
        const double snr = spec.snr_db + uniform(rng, -spec.snr_jitter_db, spec.snr_jitter_db);
        const ArtifactKernel kernel = gen_artifact_kernel(label, spec.fs, seg_seed);
        seg = contaminate(seg, kernel, snr, spec.mode, seg_seed);
      }
      char name[64];
      std::snprintf(name, sizeof name, "seg%05zu_%s", index, std::string(to_string(label)).c_str());
      ds.segments.push_back({std::move(seg), label, name, is_val[i] ? "validation" : "train"});
      ds.validation.push_back(is_val[i]);
    }
  }
  return ds;
}

}  // namespace cepstra
