#include <cmath>
#include <filesystem>
#include <random>

#include "cepstra/cost.hpp"
#include "cepstra/error.hpp"
#include "cepstra/io.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace cepstra;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("cepstra_io_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

SynthDataset small_dataset(std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  spec.channels = 3;
  spec.class_mix = {3, 2, 2, 1, 1, 1};
  return make_dataset(spec);
}

std::string header(int channels) {
  std::string h = "#eegcsv v1\nfs=250\nchannels=" + std::to_string(channels) + ";";
  for (int c = 0; c < channels; ++c) h += (c ? ",ch" : "ch") + std::to_string(c);
  return h + "\n";
}

}  // namespace

TEST_CASE("segment csv round trip is bit-exact") {
  const auto ds = small_dataset(1);
  for (const auto& s : ds.segments) {
    const auto text = format_segment_csv(s.segment, s.label, 99);
    const auto back = parse_segment_csv(text, "mem");
    CHECK(back.segment.channels() == s.segment.channels());
    CHECK(back.segment.fs() == s.segment.fs());
    CHECK(back.label == s.label);
  }
  const EegSegment odd({{0.1, -1e-300, 5e-324}, {1.0 / 3.0, 2.0, 1e300}}, 123.456, {"Fp1", "Fp2"});
  const auto back = parse_segment_csv(format_segment_csv(odd, std::nullopt), "mem");
  CHECK(back.segment.channels() == odd.channels());
  CHECK(back.segment.fs() == odd.fs());
  CHECK(back.segment.channel_names() == odd.channel_names());
  CHECK_FALSE(back.label.has_value());
}

TEST_CASE("segment csv errors name the line") {
  auto expect_error = [](const std::string& text, const std::string& where) {
    try {
      parse_segment_csv(text, "f.csv");
      FAIL("no error for: " << text);
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(where) != std::string::npos);
    }
  };
  // header declares 4 channels, rows carry 3: fails on the first data row
  expect_error(header(4) + "1,2,3\n4,5,6\n", "f.csv:4:");
  expect_error(header(2) + "label=clean\n1,2\n3\n", "f.csv:6:");
  expect_error(header(2) + "1,nan\n", "f.csv:4:");
  expect_error(header(2) + "1,abc\n", "f.csv:4:");
  expect_error(header(2) + "label=sneeze\n1,2\n", "f.csv:4:");
  expect_error("#eegcsv v2\nfs=250\nchannels=1;a\n1\n", "f.csv:1:");
  expect_error("#eegcsv v1\nfs=-3\nchannels=1;a\n1\n", "f.csv:2:");
  expect_error(header(2), "f.csv");
  CHECK_THROWS_AS(read_segment_csv("/nonexistent/x.csv"), ParseError);
}

TEST_CASE("directories, manifests and loading") {
  TempDir tmp;
  const auto ds = small_dataset(2);
  write_segments(tmp.path, ds.segments, 2);
  const auto manifest = read_manifest(tmp.path / kManifestName);
  REQUIRE(manifest.size() == ds.segments.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    CHECK(manifest[i].label == ds.segments[i].label);
    CHECK(manifest[i].split == ds.segments[i].split);
    CHECK(manifest[i].path.rfind("segments/", 0) == 0);
  }

  const auto loaded = load_segments(tmp.path);
  REQUIRE(loaded.size() == ds.segments.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].segment.channels() == ds.segments[i].segment.channels());
    CHECK(loaded[i].name == ds.segments[i].name);
    CHECK(loaded[i].split == ds.segments[i].split);
  }

  SUBCASE("manifest order is kept") {
    std::vector<ManifestEntry> reversed(manifest.rbegin(), manifest.rend());
    write_manifest(tmp.path / kManifestName, reversed);
    const auto again = load_segments(tmp.path / kManifestName);
    for (std::size_t i = 0; i < again.size(); ++i) {
      CHECK(again[i].segment.channels() == ds.segments[ds.segments.size() - 1 - i].segment.channels());
    }
  }
  SUBCASE("bare directory of csv files") {
    fs::remove(tmp.path / kManifestName);
    CHECK(load_segments(tmp.path / "segments").size() == ds.segments.size());
  }
  SUBCASE("single file") {
    const auto one = load_segments(tmp.path / manifest[0].path);
    REQUIRE(one.size() == 1);
    CHECK(one[0].label == ds.segments[0].label);
  }
  SUBCASE("manifest label conflicting with the file header") {
    auto edited = manifest;
    edited[0].label = ClassLabel::look_up;
    write_manifest(tmp.path / kManifestName, edited);
    CHECK_THROWS_AS(load_segments(tmp.path), ParseError);
  }
  CHECK_THROWS_AS(load_segments(tmp.path / "missing"), ParseError);
}

TEST_CASE("feature tables") {
  FeatureTable t;
  t.kind = "mfcc";
  t.fingerprint = desk_preset().fingerprint();
  t.channel_count = 2;
  t.names = {"a", "b"};
  t.labels = {ClassLabel::clean, std::nullopt};
  t.splits = {"train", ""};
  t.rows = {{0.1, 0.2, 1.0 / 3.0, -4.0}, {1e-17, 5.0, 6.0, 7.0}};
  const auto back = parse_feature_table(format_feature_table(t), "mem");
  CHECK(back.kind == t.kind);
  CHECK(back.fingerprint == t.fingerprint);
  CHECK(back.channel_count == 2);
  CHECK(back.names == t.names);
  CHECK(back.labels == t.labels);
  CHECK(back.splits == t.splits);
  CHECK(back.rows == t.rows);
  const auto v = back.vector(1);
  CHECK(v.channel_count == 2);
  CHECK(v.fingerprint == t.fingerprint);

  auto text = format_feature_table(t);
  text += "c,clean,train,1,2\n";  // short row
  CHECK_THROWS_AS(parse_feature_table(text, "mem"), ParseError);
}

TEST_CASE("run configuration") {
  const auto desk = preset_run_config("desk");
  CHECK(desk.mfcc.frame_len == 512);
  CHECK(desk.synth.fs == 250.0);
  const auto paper = preset_run_config("paper");
  CHECK(paper.mfcc.frame_len == 2048);
  CHECK(paper.synth.fs == 500.0);
  CHECK_THROWS_AS(preset_run_config("laptop"), ConfigError);

  const auto cfg = parse_run_config(R"({"preset":"paper","seed":7,"train":{"folds":3,"C":[1,10]},
                                        "removal":{"k":3},"mfcc":{"num_filters":30}})",
                                    "cfg.json");
  CHECK(cfg.preset == "paper");
  CHECK(cfg.seed == 7);
  CHECK(cfg.synth.seed == 7);
  CHECK(cfg.folds == 3);
  CHECK(cfg.grid.C == std::vector<double>{1, 10});
  CHECK(cfg.grid.gamma == SvmGrid{}.gamma);
  CHECK(cfg.removal_k == 3);
  CHECK(cfg.mfcc.num_filters == 30);
  CHECK(cfg.mfcc.frame_len == 2048);

  const auto again = parse_run_config(format_run_config(cfg), "round");
  CHECK(format_run_config(again) == format_run_config(cfg));
  CHECK(again.mfcc.fingerprint() == cfg.mfcc.fingerprint());

  CHECK_THROWS_AS(parse_run_config(R"({"sed": 1})", "typo"), ParseError);
  CHECK_THROWS_AS(parse_run_config(R"({"seed": )", "broken"), ParseError);
  CHECK_THROWS_AS(parse_run_config(R"({"mfcc":{"frame_len":500}})", "bad"), ConfigError);

  const auto m = parse_mfcc_config(format_mfcc_config(paper.mfcc), "m");
  CHECK(m.fingerprint() == paper.mfcc.fingerprint());
}

TEST_CASE("models") {
  LabeledDataset ds;
  ds.class_names = kDetectionClasses;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 30; ++i) {
    ds.features.push_back({gauss(rng) + 2.0 * (i % 2), gauss(rng), 1.0 / 3.0});
    ds.labels.push_back(i % 2);
  }
  ModelFile file;
  file.model = svm_train(ds, {10.0, 0.5, 1e-3});
  file.model.fingerprint = desk_preset().fingerprint();
  file.task = "detect";
  file.feature_kind = "mfcc";
  file.mfcc = desk_preset();

  const auto back = parse_model(format_model(file), "mem");
  CHECK(back.task == "detect");
  CHECK(back.model.support_vectors == file.model.support_vectors);
  CHECK(back.model.standardization.mean == file.model.standardization.mean);
  REQUIRE(back.model.machines.size() == 1);
  CHECK(back.model.machines[0].dual_coeffs == file.model.machines[0].dual_coeffs);
  CHECK(back.model.machines[0].bias == file.model.machines[0].bias);
  for (const auto& row : ds.features) {
    CHECK(svm_predict(back.model, row).decision_values == svm_predict(file.model, row).decision_values);
  }

  TempDir tmp;
  save_model(tmp.path / "model.json", file);
  CHECK_NOTHROW(load_model(tmp.path / "model.json", desk_preset().fingerprint()));
  CHECK_THROWS_AS(load_model(tmp.path / "model.json", paper_preset().fingerprint()), ConfigError);

  // A model whose stored configuration no longer matches its fingerprint is rejected.
  auto doc = nlohmann::json::parse(format_model(file));
  doc["fingerprint"] = "0000000000000000";
  CHECK_THROWS(parse_model(doc.dump(), "tampered"));
  auto versioned = nlohmann::json::parse(format_model(file));
  versioned["version"] = 99;
  CHECK_THROWS_AS(parse_model(versioned.dump(), "future"), ParseError);
}

TEST_CASE("reports carry finite numbers and the schema tag") {
  LabeledDataset ds;
  ds.class_names = {"x", "y"};
  for (int i = 0; i < 20; ++i) {
    ds.features.push_back({double(i % 2) + 0.01 * i});
    ds.labels.push_back(i % 2);
  }
  CvOptions opts;
  opts.grid.C = {1.0};
  opts.grid.gamma = {1.0};
  const auto cv = grid_search_cv(ds, opts);
  const auto doc = nlohmann::json::parse(format_cv_report(cv.report, ds.class_names, "detect", "mfcc", utc_timestamp()));
  CHECK(doc["format"] == "cepstra-cv-report");
  CHECK(doc["version"] == 1);
  CHECK(doc["accuracy"]["mean"].get<double>() == doctest::Approx(cv.report.accuracy.mean));
  CHECK(utc_timestamp().size() == 20);
}

TEST_CASE("cost model") {
  CHECK(estimate_cost({7, 2048, 40, 12}) == 655'648);
  CHECK(estimate_cost({1, 2, 1, 1}) == 4);
  CHECK(estimate_cost({7, 512, 40, 12}) == 162'848);
  for (std::uint64_t c = 1; c < 10; ++c) {
    CHECK(estimate_cost({2 * c, 1024, 26, 13}) == 2 * estimate_cost({c, 1024, 26, 13}));
  }
  CHECK_THROWS_AS(estimate_cost({7, 2000, 40, 12}), DomainError);
  CHECK_THROWS_AS(estimate_cost({0, 2048, 40, 12}), DomainError);
  CHECK_THROWS_AS(estimate_cost({~std::uint64_t{0}, 2048, 40, 12}), DomainError);
}
