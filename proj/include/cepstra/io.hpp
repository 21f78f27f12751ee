#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cepstra/artifact.hpp"
#include "cepstra/cepstrum.hpp"
#include "cepstra/cv.hpp"
#include "cepstra/segment.hpp"
#include "cepstra/svm.hpp"
#include "cepstra/synth.hpp"

namespace cepstra {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path);
/// Writes atomically enough for our purposes: to a sibling temp file, then renames.
void write_text_file(const fs::path& path, const std::string& text);

// Segment files ----------------------------------------------------------------

/// #eegcsv v1 / fs= / channels=k;names / [label=] / [seed=] / one row per sample.
std::string format_segment_csv(const EegSegment& segment, std::optional<ClassLabel> label,
                               std::optional<std::uint64_t> seed = {});
void write_segment_csv(const fs::path& path, const EegSegment& segment, std::optional<ClassLabel> label,
                       std::optional<std::uint64_t> seed = {});
/// Errors name the file and line.
LabeledSegment parse_segment_csv(const std::string& text, const std::string& source);
LabeledSegment read_segment_csv(const fs::path& path);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  std::optional<ClassLabel> label;
  std::string split;
};

inline constexpr const char* kManifestName = "manifest.csv";

void write_manifest(const fs::path& path, std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> read_manifest(const fs::path& path);

/// A segment file, a manifest, or a directory (its manifest.csv when present,
/// otherwise every *.csv file in name order). Manifest labels and splits are
/// attached; a label in the file header must agree with the manifest.
std::vector<LabeledSegment> load_segments(const fs::path& path);

/// segments/<name>.csv for every segment plus manifest.csv.
void write_segments(const fs::path& dir, std::span<const LabeledSegment> segments,
                    std::optional<std::uint64_t> seed = {});

// Feature tables ---------------------------------------------------------------

struct FeatureTable {
  std::string kind;  // "mfcc" or "bands"
  std::string fingerprint;
  std::size_t channel_count = 0;
  std::vector<std::string> names;
  std::vector<std::optional<ClassLabel>> labels;
  std::vector<std::string> splits;
  Matrix rows;

  std::size_t size() const noexcept { return rows.size(); }
  FeatureVector vector(std::size_t i) const;
};

std::string format_feature_table(const FeatureTable& table);
FeatureTable parse_feature_table(const std::string& text, const std::string& source);
void write_feature_table(const fs::path& path, const FeatureTable& table);
FeatureTable read_feature_table(const fs::path& path);

// Configuration ----------------------------------------------------------------

/// Everything a command needs besides its inputs. One seed drives every random
/// choice (synthesis, folds, pairing).
struct RunConfig {
  std::string preset = "desk";
  MfccConfig mfcc = desk_preset();
  std::vector<Band> bands = default_bands();
  SynthSpec synth;
  SvmGrid grid;
  std::size_t folds = 5;
  double svm_tol = 1e-3;
  std::size_t removal_k = 2;
  ReconstructionOptions reconstruction;
  std::size_t threads = 0;
  std::uint64_t seed = 0;

  void set_seed(std::uint64_t s);
  void validate() const;
};

/// "desk" (fs 250 Hz, N 512) or "paper" (fs 500 Hz, N 2048).
RunConfig preset_run_config(const std::string& name);
/// Keys absent from the document keep the values of the named (or default) preset.
RunConfig parse_run_config(const std::string& json_text, const std::string& source);
std::string format_run_config(const RunConfig& config);

std::string format_mfcc_config(const MfccConfig& config);
MfccConfig parse_mfcc_config(const std::string& json_text, const std::string& source);

// Models and reports -----------------------------------------------------------

struct ModelFile {
  SvmModel model;
  std::string task;          // "detect" or "recognize"
  std::string feature_kind;  // "mfcc" or "bands"
  std::optional<MfccConfig> mfcc;
  std::vector<Band> bands;
};

inline constexpr int kFormatVersion = 1;

std::string format_model(const ModelFile& file);
ModelFile parse_model(const std::string& json_text, const std::string& source);
void save_model(const fs::path& path, const ModelFile& file);
/// With expected_fingerprint set, a model built for other features is refused.
ModelFile load_model(const fs::path& path, const std::optional<std::string>& expected_fingerprint = {});

std::string format_cv_report(const CvReport& report, std::span<const std::string> class_names,
                             const std::string& task, const std::string& feature_kind, const std::string& timestamp);

std::string format_removal_report(const Algorithm1Result& result, const Algorithm1Options& options,
                                  const std::string& timestamp);

/// ISO-8601 UTC, second resolution.
std::string utc_timestamp();

}  // namespace cepstra
