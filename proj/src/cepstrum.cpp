#include "cepstra/cepstrum.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "cepstra/error.hpp"

namespace cepstra {

namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void MfccConfig::validate() const {
  if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("mfcc config: beta must lie in [0, 1)");
  if (!is_power_of_two(frame_len) || frame_len < 2) {
    throw ConfigError("mfcc config: frame length must be a power of two >= 2");
  }
  if (hop < 1 || hop > frame_len) throw ConfigError("mfcc config: hop must lie in [1, frame length]");
  if (num_filters < 2) throw ConfigError("mfcc config: at least 2 mel filters are required");
  if (coeff_lo > coeff_hi || coeff_hi >= num_filters) {
    throw ConfigError("mfcc config: retained coefficients need 0 <= lo <= hi < number of filters");
  }
  if (!(fs > 0.0) || !std::isfinite(fs)) throw ConfigError("mfcc config: fs must be positive");
  if (!(mel_lo_hz >= 0.0 && mel_lo_hz < mel_hi() && mel_hi() <= fs / 2.0)) {
    throw ConfigError("mfcc config: mel range needs 0 <= low < high <= fs/2");
  }
  if (!(log_floor > 0.0) || !std::isfinite(log_floor)) throw ConfigError("mfcc config: log floor must be positive");
}

std::string MfccConfig::fingerprint() const {
  std::string canon;
  canon += "beta=" + format_g17(beta);
  canon += ";N=" + std::to_string(frame_len);
  canon += ";hop=" + std::to_string(hop);
  canon += ";M=" + std::to_string(num_filters);
  canon += ";lo=" + std::to_string(coeff_lo);
  canon += ";hi=" + std::to_string(coeff_hi);
  canon += ";fs=" + format_g17(fs);
  canon += ";mello=" + format_g17(mel_lo_hz);
  canon += ";melhi=" + format_g17(mel_hi());
  canon += ";floor=" + format_g17(log_floor);
  canon += channel_mode == ChannelMode::concatenate ? ";mode=concat" : ";mode=average";
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canon)));
  return buf;
}

MfccConfig desk_preset() {
  MfccConfig c;
  c.fs = 250.0;
  c.frame_len = 512;
  c.hop = 256;
  return c;
}

MfccConfig paper_preset() {
  MfccConfig c;
  c.fs = 500.0;
  c.frame_len = 2048;
  c.hop = 1024;
  return c;
}

double mel_of_hz(double hz) {
  if (!(hz >= 0.0)) throw DomainError("mel_of_hz: frequency must be non-negative");
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double hz_of_mel(double mel) {
  if (!(mel >= 0.0)) throw DomainError("hz_of_mel: mel value must be non-negative");
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

double MelFilterBank::weight(std::size_t filter, std::size_t bin) const {
  const Row& row = filters.at(filter);
  if (bin < row.first_bin || bin >= row.first_bin + row.weights.size()) return 0.0;
  return row.weights[bin - row.first_bin];
}

std::vector<double> MelFilterBank::apply(std::span<const double> magnitudes) const {
  if (magnitudes.size() != bin_count) throw DomainError("mel bank: spectrum length mismatch");
  std::vector<double> out(filters.size(), 0.0);
  for (std::size_t m = 0; m < filters.size(); ++m) {
    const Row& row = filters[m];
    double acc = 0.0;
    for (std::size_t i = 0; i < row.weights.size(); ++i) acc += row.weights[i] * magnitudes[row.first_bin + i];
    out[m] = acc;
  }
  return out;
}

std::vector<double> MelFilterBank::column_sums() const {
  std::vector<double> sums(bin_count, 0.0);
  for (const Row& row : filters) {
    for (std::size_t i = 0; i < row.weights.size(); ++i) sums[row.first_bin + i] += row.weights[i];
  }
  return sums;
}

MelFilterBank build_mel_bank(const MfccConfig& config) {
  config.validate();
  const std::size_t m_count = config.num_filters;
  const double mel_lo = mel_of_hz(config.mel_lo_hz);
  const double mel_hi = mel_of_hz(config.mel_hi());
  const double n = static_cast<double>(config.frame_len);

  MelFilterBank bank;
  bank.bin_count = config.frame_len / 2 + 1;
  bank.edge_bins.resize(m_count + 2);
  std::vector<double> edge_hz(m_count + 2);
  for (std::size_t i = 0; i < m_count + 2; ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(m_count + 1);
    edge_hz[i] = hz_of_mel(mel);
    auto bin = static_cast<std::size_t>(std::llround(edge_hz[i] * n / config.fs));
    bank.edge_bins[i] = std::min(bin, bank.bin_count - 1);
    if (i > 0 && bank.edge_bins[i] <= bank.edge_bins[i - 1]) {
      throw ConfigError("mel bank: " + std::to_string(m_count) + " filters collapse onto shared FFT bins (fs=" +
                        format_g17(config.fs) + ", N=" + std::to_string(config.frame_len) +
                        "); use fewer filters or a longer frame");
    }
  }

  bank.filters.resize(m_count);
  bank.center_freqs.resize(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    const std::size_t left = bank.edge_bins[m];
    const std::size_t centre = bank.edge_bins[m + 1];
    const std::size_t right = bank.edge_bins[m + 2];
    MelFilterBank::Row& row = bank.filters[m];
    row.first_bin = left;
    row.weights.resize(right - left + 1);
    for (std::size_t k = left; k <= right; ++k) {
      double w;
      if (k <= centre) {
        w = static_cast<double>(k - left) / static_cast<double>(centre - left);
      } else {
        w = static_cast<double>(right - k) / static_cast<double>(right - centre);
      }
      row.weights[k - left] = w;
    }
    bank.center_freqs[m] = edge_hz[m + 1];
  }
  return bank;
}

CepstralAnalyzer::CepstralAnalyzer(MfccConfig config)
    : config_(std::move(config)),
      bank_(build_mel_bank(config_)),
      window_(hamming_window(config_.frame_len)),
      fft_(config_.frame_len),
      dct_(config_.num_filters) {}

FrameCepstrum CepstralAnalyzer::analyze_frame(std::span<const double> frame) const {
  if (frame.size() != config_.frame_len) {
    throw DomainError("mfcc_frame: frame length " + std::to_string(frame.size()) + " differs from configured " +
                      std::to_string(config_.frame_len));
  }
  std::vector<double> buf(frame.size());
  double energy = 0.0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    buf[i] = frame[i] * window_[i];
    energy += buf[i] * buf[i];
  }
  const auto spectrum = fft_.forward(buf);
  FrameCepstrum out;
  CepstralFrameState& st = out.state;
  st.frame_energy = energy;
  st.magnitudes.resize(bank_.bin_count);
  st.phases.resize(bank_.bin_count);
  for (std::size_t k = 0; k < bank_.bin_count; ++k) {
    st.magnitudes[k] = std::abs(spectrum[k]);
    st.phases[k] = std::arg(spectrum[k]);
  }
  st.mel_energies = bank_.apply(st.magnitudes);
  std::vector<double> log_mel(st.mel_energies.size());
  for (std::size_t m = 0; m < log_mel.size(); ++m) {
    log_mel[m] = std::log(std::max(st.mel_energies[m], config_.log_floor));
  }
  st.full_dct = dct_.forward(log_mel);
  out.coeffs.assign(st.full_dct.begin() + static_cast<std::ptrdiff_t>(config_.coeff_lo),
                    st.full_dct.begin() + static_cast<std::ptrdiff_t>(config_.coeff_hi + 1));
  return out;
}

std::vector<FrameCepstrum> CepstralAnalyzer::analyze_channel(std::span<const double> raw) const {
  const Signal emphasized = pre_emphasize(Signal({raw.begin(), raw.end()}, config_.fs), config_.beta);
  const std::size_t count = frame_count(emphasized.size(), config_.frame_len, config_.hop);
  const auto samples = emphasized.samples();
  std::vector<FrameCepstrum> frames;
  frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    frames.push_back(analyze_frame(samples.subspan(i * config_.hop, config_.frame_len)));
  }
  return frames;
}

FrameCepstrum mfcc_frame(const Frame& frame, const MelFilterBank& bank, const MfccConfig& config) {
  const CepstralAnalyzer analyzer(config);
  if (analyzer.bank().edge_bins != bank.edge_bins) {
    throw ConfigError("mfcc_frame: filter bank was not built from this configuration");
  }
  return analyzer.analyze_frame(frame.samples);
}

FeatureVector mfcc_segment(const EegSegment& segment, const CepstralAnalyzer& analyzer) {
  const MfccConfig& cfg = analyzer.config();
  if (segment.channel_count() == 0) throw DomainError("mfcc_segment: segment has no channels");
  if (std::abs(segment.fs() - cfg.fs) > 1e-9 * cfg.fs) {
    throw ConfigError("mfcc_segment: segment fs " + format_g17(segment.fs()) + " differs from configured fs " +
                      format_g17(cfg.fs));
  }
  const std::size_t per_channel = cfg.retained_count();
  std::vector<double> concat;
  concat.reserve(per_channel * segment.channel_count());
  for (std::size_t c = 0; c < segment.channel_count(); ++c) {
    const auto frames = analyzer.analyze_channel(segment.channel(c));
    std::vector<double> mean(per_channel, 0.0);
    for (const auto& f : frames) {
      for (std::size_t i = 0; i < per_channel; ++i) mean[i] += f.coeffs[i];
    }
    for (double& v : mean) v /= static_cast<double>(frames.size());
    concat.insert(concat.end(), mean.begin(), mean.end());
  }

  FeatureVector fv;
  fv.fingerprint = cfg.fingerprint();
  if (cfg.channel_mode == ChannelMode::concatenate) {
    fv.coeffs = std::move(concat);
    fv.channel_count = segment.channel_count();
  } else {
    fv.coeffs.assign(per_channel, 0.0);
    for (std::size_t c = 0; c < segment.channel_count(); ++c) {
      for (std::size_t i = 0; i < per_channel; ++i) fv.coeffs[i] += concat[c * per_channel + i];
    }
    for (double& v : fv.coeffs) v /= static_cast<double>(segment.channel_count());
    fv.channel_count = 1;
  }
  for (double v : fv.coeffs) {
    if (!std::isfinite(v)) throw NumericalError("mfcc_segment: non-finite cepstral coefficient");
  }
  return fv;
}

FeatureVector mfcc_segment(const EegSegment& segment, const MelFilterBank& bank, const MfccConfig& config) {
  const CepstralAnalyzer analyzer(config);
  if (analyzer.bank().edge_bins != bank.edge_bins) {
    throw ConfigError("mfcc_segment: filter bank was not built from this configuration");
  }
  return mfcc_segment(segment, analyzer);
}

CepstralEdit CepstralEdit::zero_dims(std::span<const std::size_t> dct_dims) {
  CepstralEdit e;
  for (std::size_t d : dct_dims) e.edits.push_back(DimEdit{d, DimEdit::Kind::zero, 0.0, 0.0, std::nullopt});
  return e;
}

std::vector<Band> default_bands() { return {{0.5, 4.0}, {4.0, 8.0}, {8.0, 13.0}, {13.0, 30.0}, {0.5, 30.0}}; }

FeatureVector band_power_features(const EegSegment& segment, std::span<const Band> bands) {
  if (segment.channel_count() == 0 || segment.length() == 0) throw DomainError("band_power_features: empty segment");
  if (bands.empty()) throw ConfigError("band_power_features: no bands given");
  const double fs = segment.fs();
  std::size_t padded = 1;
  while (padded < segment.length()) padded <<= 1;
  const FftPlan plan(padded);
  const double resolution = fs / static_cast<double>(padded);

  std::vector<std::pair<std::size_t, std::size_t>> ranges;  // [first, last) bins per band
  for (const Band& b : bands) {
    if (!(b.low_hz > 0.0 && b.low_hz < b.high_hz && b.high_hz <= fs / 2.0)) {
      throw ConfigError("band_power_features: band [" + format_g17(b.low_hz) + ", " + format_g17(b.high_hz) +
                        ") must satisfy 0 < low < high <= fs/2");
    }
    const auto first = static_cast<std::size_t>(std::ceil(b.low_hz / resolution - 1e-9));
    auto last = static_cast<std::size_t>(std::ceil(b.high_hz / resolution - 1e-9));
    last = std::min(last, padded / 2 + 1);
    if (last <= first) {
      throw ConfigError("band_power_features: band [" + format_g17(b.low_hz) + ", " + format_g17(b.high_hz) +
                        ") contains no FFT bin at resolution " + format_g17(resolution) + " Hz");
    }
    ranges.emplace_back(first, last);
  }

  FeatureVector fv;
  fv.channel_count = segment.channel_count();
  fv.fingerprint = band_fingerprint(bands);
  for (std::size_t c = 0; c < segment.channel_count(); ++c) {
    std::vector<double> buf(padded, 0.0);
    const auto ch = segment.channel(c);
    std::copy(ch.begin(), ch.end(), buf.begin());
    const auto spec = plan.forward(buf);
    for (const auto& [first, last] : ranges) {
      double acc = 0.0;
      for (std::size_t k = first; k < last; ++k) acc += std::norm(spec[k]);
      fv.coeffs.push_back(acc / static_cast<double>(last - first));
    }
  }
  return fv;
}

std::string band_fingerprint(std::span<const Band> bands) {
  std::string canon = "bands";
  for (const Band& b : bands) canon += ";" + format_g17(b.low_hz) + "-" + format_g17(b.high_hz);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canon)));
  return buf;
}

}  // namespace cepstra
