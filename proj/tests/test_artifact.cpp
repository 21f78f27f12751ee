#include <algorithm>
#include <cmath>
#include <random>

#include "cepstra/artifact.hpp"
#include "cepstra/error.hpp"
#include "cepstra/synth.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cepstra;

namespace {

FeatureVector fv(std::vector<double> coeffs, std::size_t channels = 1, std::string fp = "fp") {
  FeatureVector f;
  f.coeffs = std::move(coeffs);
  f.channel_count = channels;
  f.fingerprint = std::move(fp);
  return f;
}

std::vector<FeatureVector> gaussian_population(std::size_t n, std::size_t width, double shift, std::uint64_t seed,
                                               std::size_t channels = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<FeatureVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(width);
    for (std::size_t j = 0; j < width; ++j) v[j] = shift + (1.0 + 0.1 * double(j)) * gauss(rng);
    out.push_back(fv(v, channels));
  }
  return out;
}

// Clean/artifact detector over 4-dim vectors: artifacts sit at +3 on dim 0.
SvmModel toy_detector() {
  LabeledDataset ds;
  ds.class_names = kDetectionClasses;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 60; ++i) {
    const int label = i % 2;
    ds.features.push_back({gauss(rng) * 0.5 + 3.0 * label, gauss(rng), gauss(rng), gauss(rng)});
    ds.labels.push_back(label);
  }
  auto model = svm_train(ds, {1.0, 0.25, 1e-3});
  model.fingerprint = "fp";
  return model;
}

double column_mean(const std::vector<FeatureVector>& rows, std::size_t col) {
  double s = 0.0;
  for (const auto& r : rows) s += r.coeffs[col];
  return s / double(rows.size());
}

double column_std(const std::vector<FeatureVector>& rows, std::size_t col) {
  const double m = column_mean(rows, col);
  double s = 0.0;
  for (const auto& r : rows) s += (r.coeffs[col] - m) * (r.coeffs[col] - m);
  return std::sqrt(s / double(rows.size()));
}

}  // namespace

TEST_CASE("detection and recognition wrappers") {
  const auto det = toy_detector();
  CHECK(detect(fv({3.0, 0, 0, 0}), det).is_artifact);
  CHECK_FALSE(detect(fv({0.0, 0, 0, 0}), det).is_artifact);
  const auto d = detect(fv({3.2, 0.1, 0, 0}), det);
  CHECK(d.score >= 0.0);
  CHECK(d.score == doctest::Approx(-svm_predict(det, std::vector<double>{3.2, 0.1, 0, 0}).decision_values[0]));

  // artifact-side support vectors are flagged
  const auto& m = det.machines[0];
  for (std::size_t s = 0; s < m.support.size(); ++s) {
    if (m.dual_coeffs[s] > 0.0) continue;  // positive side is clean
    std::vector<double> raw(4);
    for (std::size_t k = 0; k < 4; ++k) {
      raw[k] = det.support_vectors[m.support[s]][k] * det.standardization.scale[k] + det.standardization.mean[k];
    }
    CHECK(detect(fv(raw), det).is_artifact);
  }

  CHECK_THROWS_AS(detect(fv({0, 0, 0, 0}, 1, "other"), det), ConfigError);
  auto wrong_names = det;
  wrong_names.class_names = {"a", "b"};
  CHECK_THROWS_AS(detect(fv({0, 0, 0, 0}), wrong_names), ConfigError);
  CHECK_THROWS_AS(recognize(fv({0, 0, 0, 0}), det), ConfigError);
  CHECK(recognition_class_names() ==
        std::vector<std::string>{"clean", "blinkHard", "lookUp", "lookDown", "lookLeft", "lookRight"});
}

TEST_CASE("batch detection is order-equivariant") {
  const auto det = toy_detector();
  auto pop = gaussian_population(30, 4, 1.5, 3);
  for (auto& f : pop) f.fingerprint = "fp";
  std::vector<double> scores;
  for (const auto& f : pop) scores.push_back(detect(f, det).score);
  std::reverse(pop.begin(), pop.end());
  for (std::size_t i = 0; i < pop.size(); ++i) CHECK(detect(pop[i], det).score == scores[pop.size() - 1 - i]);
}

TEST_CASE("residual artifact rate") {
  const auto det = toy_detector();
  const std::vector<FeatureVector> clean{fv({0, 0, 0, 0}), fv({-0.2, 0.3, 0, 0})};
  const std::vector<FeatureVector> art{fv({3, 0, 0, 0}), fv({3.4, 0, 0.2, 0})};
  CHECK(residual_artifact_rate(clean, det) == 0.0);
  CHECK(residual_artifact_rate(art, det) == 1.0);
  const std::vector<FeatureVector> mixed{clean[0], art[0], art[1], clean[1]};
  CHECK(residual_artifact_rate(mixed, det) == 0.5);
  CHECK_THROWS_AS(residual_artifact_rate(std::vector<FeatureVector>{}, det), DomainError);
}

TEST_CASE("profile on identical populations is degenerate") {
  const auto pop = gaussian_population(40, 12, 0.0, 5);
  const auto prof = build_removal_profile(pop, pop, {2, 7, 1});
  for (double r : prof.correlations) CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(prof.degenerate);
  CHECK_FALSE(prof.warnings.empty());
  CHECK(prof.artifact_dims == std::vector<std::size_t>{11, 12});
  CHECK(prof.paired_count == 40);
}

TEST_CASE("planted artifact dimension is recovered") {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_int_distribution<std::size_t> pick(0, 11);
    const std::size_t planted = pick(rng);
    const auto clean = gaussian_population(60, 12, 0.0, seed + 1000);
    auto art = clean;
    for (auto& f : art) {
      for (std::size_t j = 0; j < 12; ++j) f.coeffs[j] += 0.3 * gauss(rng);
      f.coeffs[planted] = 5.0 + gauss(rng);
    }
    const auto prof = build_removal_profile(art, clean, {1, seed, 1});
    if (prof.artifact_dims == std::vector<std::size_t>{planted + 1}) ++hits;
  }
  CHECK(hits >= 190);
}

TEST_CASE("profile correlations follow the seeded pairing") {
  const auto art = gaussian_population(25, 3, 1.0, 11);
  const auto clean = gaussian_population(30, 3, 0.0, 12);
  const auto prof = build_removal_profile(art, clean, {1, 4, 1});
  CHECK(prof.paired_count == 25);
  // Same selection however the artifact population is ordered, once the pairing seed is fixed.
  const auto again = build_removal_profile(art, clean, {1, 4, 1});
  CHECK(again.correlations == prof.correlations);
  for (double r : prof.correlations) {
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
  }
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(prof.artifact_mean[j] == doctest::Approx(column_mean(art, j)).epsilon(1e-14));
    CHECK(prof.artifact_std[j] == doctest::Approx(column_std(art, j)).epsilon(1e-14));
    CHECK(prof.clean_mean[j] == doctest::Approx(column_mean(clean, j)).epsilon(1e-14));
    CHECK(prof.clean_std[j] == doctest::Approx(column_std(clean, j)).epsilon(1e-14));
  }
}

TEST_CASE("profile selection is invariant under positive rescaling of a dimension") {
  const auto clean = gaussian_population(50, 12, 0.0, 21);
  auto art = clean;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> gauss;
  for (auto& f : art) {
    for (std::size_t j = 0; j < 12; ++j) f.coeffs[j] += (0.1 + 0.15 * double(j)) * gauss(rng);
  }
  const auto base = build_removal_profile(art, clean, {3, 0, 1});
  for (std::size_t j = 0; j < 12; ++j) {
    auto art2 = art;
    auto clean2 = clean;
    for (auto& f : art2) f.coeffs[j] *= 7.5;
    for (auto& f : clean2) f.coeffs[j] *= 0.01;
    CHECK(build_removal_profile(art2, clean2, {3, 0, 1}).artifact_dims == base.artifact_dims);
  }
}

TEST_CASE("profile preconditions") {
  const auto pop = gaussian_population(10, 12, 0.0, 1);
  CHECK_THROWS_AS(build_removal_profile(std::vector<FeatureVector>{}, pop), DomainError);
  CHECK_THROWS_AS(build_removal_profile(pop, std::vector<FeatureVector>{pop[0]}), DomainError);
  CHECK_THROWS_AS(build_removal_profile(pop, pop, {0, 0, 1}), ConfigError);
  CHECK_THROWS_AS(build_removal_profile(pop, pop, {13, 0, 1}), ConfigError);
  auto other = pop;
  other[3].fingerprint = "x";
  CHECK_THROWS_AS(build_removal_profile(pop, other), ConfigError);
  auto narrow = pop;
  narrow[0].coeffs.pop_back();
  CHECK_THROWS_AS(build_removal_profile(narrow, pop), DomainError);

  // A constant column is flagged and ranked as zero correlation.
  auto flat = pop;
  for (auto& f : flat) f.coeffs[4] = 1.0;
  const auto prof = build_removal_profile(flat, pop, {1, 0, 1});
  CHECK(prof.undefined[4]);
  CHECK(prof.correlations[4] == 0.0);
  CHECK(prof.artifact_dims == std::vector<std::size_t>{5});
}

TEST_CASE("labeled removal, hand case") {
  RemovalProfile prof;
  prof.first_label = 1;
  prof.dims_per_channel = 3;
  prof.channel_count = 1;
  prof.artifact_dims = {2};
  prof.artifact_mean = {0, 2, 0};
  prof.artifact_std = {1, 4, 1};
  prof.clean_mean = {0, 1, 0};
  prof.clean_std = {1, 2, 1};
  prof.fingerprint = "fp";
  const auto out = remove_labeled(fv({9.0, 6.0, -4.0}), prof);
  CHECK(out.coeffs[1] == 3.0);  // (6 - 2) / 4 * 2 + 1
  CHECK(out.coeffs[0] == 9.0);
  CHECK(out.coeffs[2] == -4.0);
  CHECK(remove_labeled(fv({0.0, 2.0, 0.0}), prof).coeffs[1] == 1.0);

  prof.artifact_std[1] = 0.0;
  CHECK_THROWS_AS(remove_labeled(fv({0.0, 2.0, 0.0}), prof), DomainError);
  prof.artifact_std[1] = 4.0;
  CHECK_THROWS_AS(remove_labeled(fv({0.0, 2.0, 0.0}, 1, "zz"), prof), ConfigError);
  CHECK_THROWS_AS(remove_labeled(fv({0.0, 2.0}), prof), DomainError);
}

TEST_CASE("labeled removal population contract") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto clean = gaussian_population(80, 24, 0.0, seed, 2);
    const auto art = gaussian_population(70, 24, 3.0, seed + 50, 2);
    const auto prof = build_removal_profile(art, clean, {2, seed, 1});
    std::vector<FeatureVector> out;
    for (const auto& f : art) out.push_back(remove_labeled(f, prof));
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t label = 1; label <= 12; ++label) {
        const std::size_t col = prof.column(c, label);
        const bool selected = std::count(prof.artifact_dims.begin(), prof.artifact_dims.end(), label) > 0;
        if (selected) {
          CHECK(std::abs(column_mean(out, col) - prof.clean_mean[col]) <= 1e-9);
          CHECK(std::abs(column_std(out, col) - prof.clean_std[col]) <= 1e-9);
        } else {
          for (std::size_t i = 0; i < art.size(); ++i) CHECK(out[i].coeffs[col] == art[i].coeffs[col]);
        }
      }
    }
    // Re-profiling the transformed population and applying again is a no-op on the statistics.
    const auto prof2 = build_removal_profile(out, clean, {2, seed, 1});
    auto forced = prof2;
    forced.artifact_dims = prof.artifact_dims;
    for (const auto& f : out) {
      const auto twice = remove_labeled(f, forced);
      for (std::size_t j = 0; j < f.size(); ++j) CHECK(std::abs(twice.coeffs[j] - f.coeffs[j]) <= 1e-9);
    }
  }
}

TEST_CASE("labeled edit matches the feature-space transform") {
  const auto clean = gaussian_population(30, 24, 0.0, 1, 2);
  const auto art = gaussian_population(30, 24, 2.0, 2, 2);
  const auto prof = build_removal_profile(art, clean, {2, 0, 1});
  const auto edit = labeled_edit(prof);
  CHECK(edit.edits.size() == 4);
  for (const auto& e : edit.edits) {
    REQUIRE(e.channel.has_value());
    CHECK(e.kind == DimEdit::Kind::affine);
    const std::size_t col = prof.column(*e.channel, e.dim);
    const double a = art[0].coeffs[col];
    CHECK(e.scale * a + e.offset == doctest::Approx(remove_labeled(art[0], prof).coeffs[col]).epsilon(1e-12));
  }
}

TEST_CASE("unlabeled removal") {
  const std::vector<std::size_t> dims{11, 12};
  auto f = fv({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24}, 2);
  const auto out = remove_unlabeled(f, dims);
  for (std::size_t j = 0; j < 24; ++j) {
    const bool zeroed = j % 12 == 10 || j % 12 == 11;
    CHECK(out.coeffs[j] == (zeroed ? 0.0 : f.coeffs[j]));
  }
  CHECK(remove_unlabeled(out, dims).coeffs == out.coeffs);
  const std::vector<std::size_t> bad{13};
  CHECK_THROWS_AS(remove_unlabeled(f, bad), DomainError);
  const std::vector<std::size_t> zero_label{0};
  CHECK_THROWS_AS(remove_unlabeled(f, zero_label), DomainError);

  const CepstralAnalyzer an(desk_preset());
  SynthSpec spec;
  spec.channels = 2;
  spec.seed = 4;
  const auto seg = gen_clean_eeg(spec, 3);
  const auto rec = remove_unlabeled(seg, dims, an);
  const auto re = mfcc_segment(rec.segment, an);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(std::abs(re.coeffs[c * 12 + 10]) < 1e-6);
    CHECK(std::abs(re.coeffs[c * 12 + 11]) < 1e-6);
  }
  const auto none = remove_unlabeled(seg, std::vector<std::size_t>{}, an);
  const auto before = mfcc_segment(seg, an), after = mfcc_segment(none.segment, an);
  for (std::size_t j = 0; j < before.size(); ++j) CHECK(std::abs(before.coeffs[j] - after.coeffs[j]) <= 1e-6);
  CHECK_THROWS_AS(remove_unlabeled(seg, bad, an), DomainError);
}

TEST_CASE("algorithm 1 branches") {
  const CepstralAnalyzer an(desk_preset());
  SynthSpec spec;
  spec.channels = 2;
  spec.seed = 77;
  spec.class_mix = {8, 4, 4, 0, 0, 0};
  const auto ds = make_dataset(spec);
  const auto& source = ds.segments;

  std::vector<FeatureVector> clean_f, art_f;
  for (const auto& s : source) (is_artifact(*s.label) ? art_f : clean_f).push_back(mfcc_segment(s.segment, an));
  Algorithm1Options opts;
  opts.profile = {2, 3, 1};
  opts.reconstruct = false;
  opts.threads = 2;
  const auto expect = build_removal_profile(art_f, clean_f, opts.profile);

  SUBCASE("labeled targets follow the population transform") {
    std::vector<LabeledSegment> target;
    for (const auto& s : source) {
      if (is_artifact(*s.label)) target.push_back(s);
    }
    const auto res = run_algorithm1(source, target, an, opts);
    CHECK(res.profile.artifact_dims == expect.artifact_dims);
    CHECK(res.profile.correlations == expect.correlations);
    REQUIRE(res.segments.size() == art_f.size());
    for (std::size_t i = 0; i < art_f.size(); ++i) {
      CHECK(res.segments[i].branch == RemovalBranch::labeled);
      CHECK(res.segments[i].edited.coeffs == remove_labeled(art_f[i], expect).coeffs);
    }
    CHECK_FALSE(res.rate_before.has_value());
  }

  SUBCASE("unlabeled targets are zeroed") {
    opts.has_target_labels = false;
    std::vector<LabeledSegment> target(source.begin(), source.begin() + 3);
    for (auto& t : target) t.label.reset();
    const auto res = run_algorithm1(source, target, an, opts);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(res.segments[i].branch == RemovalBranch::unlabeled);
      CHECK(res.segments[i].edited.coeffs == remove_unlabeled(clean_f[i], expect.artifact_dims).coeffs);
    }
  }

  SUBCASE("clean targets pass through; reconstruction reproduces the edits") {
    opts.reconstruct = true;
    std::vector<LabeledSegment> target{source[0], source[9]};
    const auto res = run_algorithm1(source, target, an, opts);
    CHECK(res.segments[0].branch == RemovalBranch::passthrough);
    CHECK(res.segments[1].branch == RemovalBranch::labeled);
    const auto& prof = res.profile;
    double drift = 0.0;
    for (const auto& s : res.segments) {
      CHECK(s.converged);
      for (std::size_t c = 0; c < prof.channel_count; ++c) {
        for (std::size_t label = 1; label <= 12; ++label) {
          const std::size_t col = prof.column(c, label);
          const double d = std::abs(s.reextracted.coeffs[col] - s.edited.coeffs[col]);
          const bool pinned = s.branch == RemovalBranch::passthrough ||
                              std::count(prof.artifact_dims.begin(), prof.artifact_dims.end(), label) > 0;
          if (pinned) CHECK(d <= 1e-6);
          else drift = std::max(drift, d);
        }
      }
    }
    // Untouched coefficients move only through the overlap of neighbouring frames.
    MESSAGE("largest drift of an untouched coefficient: " << drift);
    CHECK(drift <= 1e-2);
    CHECK(res.denoised.size() == 2);
  }

  SUBCASE("preconditions") {
    std::vector<LabeledSegment> only_clean(source.begin(), source.begin() + 8);
    CHECK_THROWS_AS(run_algorithm1(only_clean, only_clean, an, opts), DomainError);
    std::vector<LabeledSegment> unlabeled_target{source[0]};
    unlabeled_target[0].label.reset();
    CHECK_THROWS_AS(run_algorithm1(source, unlabeled_target, an, opts), DomainError);
    opts.profile.first_label = 0;
    CHECK_THROWS_AS(run_algorithm1(source, unlabeled_target, an, opts), ConfigError);
  }
}
