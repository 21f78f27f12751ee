#include <algorithm>
#include <cmath>
#include <numbers>

#include "cepstra/cepstrum.hpp"
#include "cepstra/error.hpp"
#include "cepstra/synth.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cepstra;

namespace {

MfccConfig small_config() {
  MfccConfig c = desk_preset();
  c.frame_len = 256;
  c.hop = 128;
  c.num_filters = 20;
  return c;
}

EegSegment random_segment(std::size_t channels, std::size_t length, double fs, std::uint64_t seed) {
  std::vector<std::vector<double>> ch;
  for (std::size_t c = 0; c < channels; ++c) ch.push_back(oracle::random_vector(length, seed * 31 + c, -20, 20));
  return EegSegment(std::move(ch), fs);
}

// Triangle weight from the edge bins, written independently of the library.
double tri(std::size_t left, std::size_t centre, std::size_t right, std::size_t k) {
  if (k < left || k > right) return 0.0;
  if (k <= centre) return centre == left ? 1.0 : double(k - left) / double(centre - left);
  return double(right - k) / double(right - centre);
}

}  // namespace

TEST_CASE("mel scale") {
  CHECK(mel_of_hz(0.0) == 0.0);
  // Natural-log form of the same map: 2595 ln(1 + f/700) / ln 10.
  CHECK(mel_of_hz(700.0) == doctest::Approx(2595.0 * std::log(2.0) / std::log(10.0)).epsilon(1e-14));
  CHECK(mel_of_hz(7000.0) == doctest::Approx(2595.0 * std::log(11.0) / std::log(10.0)).epsilon(1e-14));
  CHECK(mel_of_hz(700.0) == doctest::Approx(781.17284).epsilon(1e-7));
  CHECK(mel_of_hz(7000.0) == doctest::Approx(2702.41402).epsilon(1e-7));
  double prev = -1.0;
  for (double f = 0.0; f < 2000.0; f += 13.7) {
    CHECK(mel_of_hz(f) > prev);
    prev = mel_of_hz(f);
    CHECK(hz_of_mel(mel_of_hz(f)) == doctest::Approx(f).epsilon(1e-12));
  }
  CHECK_THROWS_AS(mel_of_hz(-1.0), DomainError);
}

TEST_CASE("mel filter bank") {
  for (const MfccConfig& cfg : {desk_preset(), paper_preset(), small_config()}) {
    const auto bank = build_mel_bank(cfg);
    REQUIRE(bank.size() == cfg.num_filters);
    CHECK(bank.bin_count == cfg.frame_len / 2 + 1);
    for (std::size_t m = 0; m < bank.size(); ++m) {
      const auto& w = bank.filters[m].weights;
      CHECK(*std::max_element(w.begin(), w.end()) == 1.0);
      CHECK(*std::min_element(w.begin(), w.end()) >= 0.0);
      // apex at this filter's centre, zeros at the neighbouring centres
      CHECK(bank.weight(m, bank.edge_bins[m + 1]) == 1.0);
      CHECK(bank.weight(m, bank.edge_bins[m]) == 0.0);
      CHECK(bank.weight(m, bank.edge_bins[m + 2]) == 0.0);
      if (m > 0) CHECK(bank.center_freqs[m] > bank.center_freqs[m - 1]);
    }
    // equal mel spacing of centres
    const double step = mel_of_hz(bank.center_freqs[1]) - mel_of_hz(bank.center_freqs[0]);
    for (std::size_t m = 1; m < bank.size(); ++m) {
      CHECK(std::abs(mel_of_hz(bank.center_freqs[m]) - mel_of_hz(bank.center_freqs[m - 1]) - step) < 1e-9);
    }
    const auto sums = bank.column_sums();
    for (std::size_t k = bank.edge_bins.front() + 1; k < bank.edge_bins.back(); ++k) CHECK(sums[k] > 0.0);
  }
}

TEST_CASE("mel bank small case by hand") {
  MfccConfig cfg;
  cfg.num_filters = 3;
  cfg.coeff_lo = 1;
  cfg.coeff_hi = 2;
  cfg.fs = 200.0;
  cfg.frame_len = 64;
  cfg.hop = 32;
  cfg.mel_hi_hz = 100.0;
  // mel(100) = 150.489; quarter steps map to 0, 23.76, 48.33, 73.73, 100 Hz,
  // i.e. bins 0, 7.60, 15.47, 23.60, 32 of a 3.125 Hz grid.
  const auto bank = build_mel_bank(cfg);
  const std::vector<std::size_t> edges{0, 8, 15, 24, 32};
  CHECK(bank.edge_bins == edges);
  CHECK(bank.center_freqs[0] == doctest::Approx(23.762415540).epsilon(1e-9));
  CHECK(bank.center_freqs[1] == doctest::Approx(48.331477355).epsilon(1e-9));
  CHECK(bank.center_freqs[2] == doctest::Approx(73.734568107).epsilon(1e-9));
  for (std::size_t m = 0; m < 3; ++m) {
    for (std::size_t k = 0; k < 33; ++k) {
      CHECK(bank.weight(m, k) == doctest::Approx(tri(edges[m], edges[m + 1], edges[m + 2], k)));
    }
  }
}

TEST_CASE("mel bank rejects collapsing filters") {
  MfccConfig cfg;
  cfg.fs = 250.0;
  cfg.frame_len = 16;
  cfg.hop = 8;
  CHECK_THROWS_AS(build_mel_bank(cfg), ConfigError);
}

TEST_CASE("config validation") {
  auto bad = [](auto mutate) {
    MfccConfig c = desk_preset();
    mutate(c);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  bad([](MfccConfig& c) { c.beta = 1.0; });
  bad([](MfccConfig& c) { c.frame_len = 500; });
  bad([](MfccConfig& c) { c.hop = 0; });
  bad([](MfccConfig& c) { c.hop = 1024; });
  bad([](MfccConfig& c) { c.num_filters = 1; });
  bad([](MfccConfig& c) { c.coeff_hi = 40; });
  bad([](MfccConfig& c) { c.coeff_lo = 5, c.coeff_hi = 4; });
  bad([](MfccConfig& c) { c.mel_hi_hz = 200.0; });
  bad([](MfccConfig& c) { c.mel_lo_hz = 125.0; });
  CHECK_NOTHROW(desk_preset().validate());
  CHECK(desk_preset().fingerprint() != paper_preset().fingerprint());
  CHECK(desk_preset().fingerprint() == desk_preset().fingerprint());
}

TEST_CASE("single frame analysis") {
  const MfccConfig cfg = small_config();
  const CepstralAnalyzer an(cfg);

  SUBCASE("zeros") {
    const auto out = an.analyze_frame(std::vector<double>(cfg.frame_len, 0.0));
    CHECK(out.state.full_dct[0] == doctest::Approx(std::log(1e-10) * std::sqrt(double(cfg.num_filters))));
    for (double c : out.coeffs) CHECK(std::abs(c) < 1e-9);
  }

  SUBCASE("gain lands in c0 only") {
    const auto x = oracle::random_vector(cfg.frame_len, 5);
    const auto base = an.analyze_frame(x);
    for (double a : {0.1, 3.0, 1e4}) {
      auto y = x;
      for (double& v : y) v *= a;
      const auto scaled = an.analyze_frame(y);
      for (std::size_t i = 0; i < base.coeffs.size(); ++i) CHECK(std::abs(scaled.coeffs[i] - base.coeffs[i]) < 1e-9);
    }
  }

  SUBCASE("straight-line pipeline oracle") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto x = oracle::random_vector(cfg.frame_len, 900 + seed);
      const std::size_t n = cfg.frame_len;
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = x[i] * (0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * double(i) / double(n - 1)));
      }
      const auto spec = oracle::dft(y);
      const auto bank = build_mel_bank(cfg);
      std::vector<double> log_mel(cfg.num_filters);
      for (std::size_t m = 0; m < cfg.num_filters; ++m) {
        double acc = 0.0;
        for (std::size_t k = 0; k <= n / 2; ++k) {
          acc += tri(bank.edge_bins[m], bank.edge_bins[m + 1], bank.edge_bins[m + 2], k) * std::abs(spec[k]);
        }
        log_mel[m] = std::log(std::max(acc, 1e-10));
      }
      const auto dct = oracle::dct2(log_mel);
      const std::vector<double> expect(dct.begin() + 1, dct.begin() + 13);
      CHECK(oracle::rel_error(an.analyze_frame(x).coeffs, expect) < 1e-9);
    }
  }

  CHECK_THROWS_AS(an.analyze_frame(std::vector<double>(cfg.frame_len - 1, 0.0)), DomainError);
}

TEST_CASE("segment features") {
  const MfccConfig cfg = small_config();
  const CepstralAnalyzer an(cfg);

  SUBCASE("single frame equals the frame slice") {
    const auto seg = random_segment(1, cfg.frame_len, cfg.fs, 1);
    const auto fv = mfcc_segment(seg, an);
    const auto emph = pre_emphasize(seg.channel_signal(0), cfg.beta);
    const auto frame = an.analyze_frame(emph.samples());
    CHECK(fv.coeffs == frame.coeffs);
    CHECK(fv.channel_count == 1);
    CHECK(fv.fingerprint == cfg.fingerprint());
  }

  SUBCASE("periodic signal with identical frames") {
    // Period equals the hop and the last sample of a period is zero, so the
    // emphasized signal is periodic from its first sample on.
    auto x = oracle::random_vector(cfg.hop, 2);
    x.back() = 0.0;
    std::vector<double> ch;
    for (int r = 0; r < 3; ++r) ch.insert(ch.end(), x.begin(), x.end());
    const EegSegment seg({ch}, cfg.fs);
    const auto frames = an.analyze_channel(seg.channel(0));
    REQUIRE(frames.size() == 2);
    const auto fv = mfcc_segment(seg, an);
    for (std::size_t i = 0; i < fv.size(); ++i) {
      CHECK(frames[0].coeffs[i] == frames[1].coeffs[i]);
      CHECK(fv.coeffs[i] == doctest::Approx(frames[1].coeffs[i]).epsilon(1e-12));
    }
  }

  SUBCASE("duplicated channel duplicates the features") {
    const auto a = random_segment(1, 1000, cfg.fs, 3);
    const EegSegment seg({a.channels()[0], a.channels()[0]}, cfg.fs);
    const auto fv = mfcc_segment(seg, an);
    REQUIRE(fv.size() == 24);
    for (std::size_t i = 0; i < 12; ++i) CHECK(fv.coeffs[i] == fv.coeffs[12 + i]);
  }

  SUBCASE("averaging mode") {
    MfccConfig avg = cfg;
    avg.channel_mode = ChannelMode::average;
    const auto seg = random_segment(3, 800, cfg.fs, 4);
    const auto cat = mfcc_segment(seg, an);
    const auto mean = mfcc_segment(seg, CepstralAnalyzer(avg));
    REQUIRE(mean.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(mean.coeffs[i] == doctest::Approx((cat.coeffs[i] + cat.coeffs[12 + i] + cat.coeffs[24 + i]) / 3.0));
    }
  }

  SUBCASE("determinism") {
    const auto seg = random_segment(4, 1500, cfg.fs, 6);
    CHECK(mfcc_segment(seg, an).coeffs == mfcc_segment(seg, CepstralAnalyzer(cfg)).coeffs);
  }

  CHECK_THROWS_AS(mfcc_segment(random_segment(1, cfg.frame_len - 1, cfg.fs, 1), an), DomainError);
  CHECK_THROWS_AS(mfcc_segment(random_segment(1, 1000, 500.0, 1), an), ConfigError);
}

TEST_CASE("amplitude-scale invariance on desk segments") {
  const CepstralAnalyzer an(desk_preset());
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto seg = random_segment(2, 1250, 250.0, 50 + seed);
    const auto base = mfcc_segment(seg, an);
    for (double a : {0.1, 3.0, 1e4}) {
      const auto scaled = mfcc_segment(seg.scaled(a), an);
      for (std::size_t i = 0; i < base.size(); ++i) CHECK(std::abs(scaled.coeffs[i] - base.coeffs[i]) <= 1e-6);
    }
  }
}

TEST_CASE("reconstruction") {
  const MfccConfig cfg = desk_preset();
  const CepstralAnalyzer an(cfg);
  SynthSpec spec;
  spec.channels = 2;
  spec.seed = 11;
  const EegSegment seg = gen_clean_eeg(spec, 0);

  SUBCASE("identity edit keeps the features") {
    const auto rec = reconstruct_segment(seg, CepstralEdit::identity(), an);
    const auto a = mfcc_segment(seg, an);
    const auto b = mfcc_segment(rec.segment, an);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.coeffs[i] - b.coeffs[i]) <= 1e-6);
    // Interior samples are reproduced by the overlap-add.
    double err = 0.0, scale = 0.0;
    for (std::size_t c = 0; c < seg.channel_count(); ++c) {
      for (std::size_t t = cfg.hop; t + cfg.frame_len < seg.length(); ++t) {
        err = std::max(err, std::abs(rec.segment.channel(c)[t] - seg.channel(c)[t]));
        scale = std::max(scale, std::abs(seg.channel(c)[t]));
      }
    }
    CHECK(err / scale < 1e-6);
  }

  SUBCASE("zeroing dims 11 and 12") {
    const std::vector<std::size_t> dims{11, 12};
    const auto rec = reconstruct_segment(seg, CepstralEdit::zero_dims(dims), an);
    CHECK(rec.converged);
    const auto b = mfcc_segment(rec.segment, an);
    for (std::size_t c = 0; c < seg.channel_count(); ++c) {
      CHECK(std::abs(b.coeffs[c * 12 + 10]) <= 1e-6);
      CHECK(std::abs(b.coeffs[c * 12 + 11]) <= 1e-6);
    }
  }

  SUBCASE("affine edit reaches its target") {
    CepstralEdit edit;
    edit.edits.push_back(DimEdit{3, DimEdit::Kind::affine, 0.5, 1.0, std::size_t{1}});
    const auto a = mfcc_segment(seg, an);
    const auto rec = reconstruct_segment(seg, edit, an);
    const auto b = mfcc_segment(rec.segment, an);
    CHECK(b.coeffs[12 + 2] == doctest::Approx(0.5 * a.coeffs[12 + 2] + 1.0).epsilon(1e-6));
    // channel 0 untouched
    for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(b.coeffs[i] - a.coeffs[i]) <= 1e-6);
  }

  SUBCASE("zero segment stays zero") {
    const EegSegment zero({std::vector<double>(1250, 0.0)}, 250.0);
    const std::vector<std::size_t> dims{1, 2};
    for (const auto& edit : {CepstralEdit::identity(), CepstralEdit::zero_dims(dims)}) {
      const auto rec = reconstruct_segment(zero, edit, an);
      for (double v : rec.segment.channel(0)) CHECK(v == 0.0);
    }
  }

  SUBCASE("errors") {
    const std::vector<std::size_t> out_of_range{40};
    CHECK_THROWS_AS(reconstruct_segment(seg, CepstralEdit::zero_dims(out_of_range), an), DomainError);
    CepstralEdit bad_channel;
    bad_channel.edits.push_back(DimEdit{2, DimEdit::Kind::zero, 0, 0, std::size_t{5}});
    CHECK_THROWS_AS(reconstruct_segment(seg, bad_channel, an), DomainError);
  }
}

TEST_CASE("band power features") {
  SUBCASE("10 Hz tone") {
    // 40 whole cycles in 1024 samples: no leakage out of the 10 Hz bin.
    std::vector<double> x(1024);
    for (std::size_t t = 0; t < x.size(); ++t) x[t] = std::sin(2.0 * std::numbers::pi * 10.0 * double(t) / 256.0);
    const auto bands = default_bands();
    const auto fv = band_power_features(EegSegment({x}, 256.0), bands);
    REQUIRE(fv.size() == 5);
    CHECK(fv.coeffs[2] > 100.0 * fv.coeffs[0]);
    CHECK(fv.coeffs[2] > 100.0 * fv.coeffs[1]);
    CHECK(fv.coeffs[2] > 100.0 * fv.coeffs[3]);
    CHECK(fv.coeffs[0] < 1e-12 * fv.coeffs[2]);
  }

  SUBCASE("quadratic scaling") {
    const auto seg = random_segment(3, 1000, 250.0, 77);
    const auto bands = default_bands();
    const auto a = band_power_features(seg, bands);
    const auto b = band_power_features(seg.scaled(2.0), bands);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b.coeffs[i] == doctest::Approx(4.0 * a.coeffs[i]).epsilon(1e-6));
  }

  SUBCASE("64-point bin-sum oracle") {
    const auto x = oracle::random_vector(64, 8);
    const std::vector<Band> bands{{1.0, 10.0}, {10.0, 32.0}};
    const auto fv = band_power_features(EegSegment({x}, 64.0), bands);
    const auto spec = oracle::dft(x);
    // 1 Hz bins: band [lo, hi) covers bins with lo <= k < hi.
    auto brute = [&](double lo, double hi) {
      double acc = 0.0;
      int count = 0;
      for (int k = 0; k <= 32; ++k) {
        if (k >= lo && k < hi) {
          acc += std::norm(spec[k]);
          ++count;
        }
      }
      return count ? acc / count : -1.0;
    };
    CHECK(fv.coeffs[0] == doctest::Approx(brute(1.0, 10.0)).epsilon(1e-10));
    CHECK(fv.coeffs[1] == doctest::Approx(brute(10.0, 32.0)).epsilon(1e-10));
    CHECK(brute(20.5, 21.0) < 0.0);
  }

  SUBCASE("empty band") {
    const std::vector<Band> bands{{20.5, 20.9}};
    CHECK_THROWS_AS(band_power_features(random_segment(1, 64, 64.0, 1), bands), ConfigError);
  }
  const std::vector<Band> beyond{{10.0, 200.0}};
  CHECK_THROWS_AS(band_power_features(random_segment(1, 64, 64.0, 1), beyond), ConfigError);
  CHECK(band_fingerprint(default_bands()) != desk_preset().fingerprint());
}

TEST_CASE("approximate cepstral additivity on generated kernels") {
  const MfccConfig cfg = desk_preset();
  const CepstralAnalyzer an(cfg);
  SynthSpec spec;
  spec.channels = 1;
  const std::size_t n = cfg.frame_len;
  double worst = 0.0;
  for (ClassLabel kind : {ClassLabel::blink_hard, ClassLabel::look_up, ClassLabel::look_down, ClassLabel::look_left,
                          ClassLabel::look_right}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      spec.seed = 100 + seed;
      const EegSegment s = gen_clean_eeg(spec, 0);
      const auto kernel = gen_artifact_kernel(kind, cfg.fs, seed);
      const EegSegment x = contaminate(s, kernel, 20.0, ContaminationMode::convolve);

      // Impulse response of the contamination, zero-padded to the frame length.
      std::vector<double> impulse(s.length(), 0.0);
      impulse[0] = 1.0;
      const EegSegment h = contaminate(EegSegment({impulse}, cfg.fs), kernel, 20.0, ContaminationMode::convolve);
      std::vector<double> h_pad(h.channel(0).begin(), h.channel(0).begin() + static_cast<std::ptrdiff_t>(n));
      const auto bank = build_mel_bank(cfg);
      const auto hspec = oracle::dft(h_pad);
      std::vector<double> mags(n / 2 + 1);
      for (std::size_t k = 0; k <= n / 2; ++k) mags[k] = std::abs(hspec[k]);
      auto mel = bank.apply(mags);
      for (double& v : mel) v = std::log(std::max(v, cfg.log_floor));
      const auto ch = oracle::dct2(mel);

      const auto fx = mfcc_segment(x, an).coeffs;
      const auto fs = mfcc_segment(s, an).coeffs;
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < fx.size(); ++i) {
        const double d = fx[i] - (fs[i] + ch[cfg.coeff_lo + i]);
        num += d * d;
        den += fx[i] * fx[i];
      }
      worst = std::max(worst, std::sqrt(num / den));
    }
  }
  MESSAGE("worst relative additivity error: " << worst);
  CHECK(worst <= 0.15);
}
