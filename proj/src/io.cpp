#include "cepstra/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "cepstra/error.hpp"
#include "json.hpp"

namespace cepstra {

using json = nlohmann::ordered_json;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError(path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw ParseError(path.string() + ": write failed");
  }
  fs::rename(tmp, path);
}

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// Line reader that tracks 1-based line numbers for error messages.
class Lines {
 public:
  Lines(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string::npos) end = text_.size();
    line = std::string_view(text_).substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end + 1;
    ++number_;
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, number_, what); }
  std::size_t number() const { return number_; }
  const std::string& source() const { return source_; }

 private:
  const std::string& text_;
  std::string source_;
  std::size_t pos_ = 0;
  std::size_t number_ = 0;
};

double parse_double(std::string_view cell, const Lines& lines, const char* what) {
  cell = trim(cell);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
    lines.fail(std::string("cannot parse ") + what + " '" + std::string(cell) + "'");
  }
  if (!std::isfinite(v)) lines.fail(std::string("non-finite ") + what + " '" + std::string(cell) + "'");
  return v;
}

std::uint64_t parse_u64(std::string_view cell, const Lines& lines, const char* what) {
  cell = trim(cell);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
    lines.fail(std::string("cannot parse ") + what + " '" + std::string(cell) + "'");
  }
  return v;
}

std::optional<ClassLabel> parse_label_cell(std::string_view cell, const Lines& lines) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  auto l = parse_class_label(cell);
  if (!l) lines.fail("unknown label '" + std::string(cell) + "'");
  return l;
}

std::string_view expect_key(std::string_view line, std::string_view key, const Lines& lines) {
  if (line.substr(0, key.size()) != key) lines.fail("expected '" + std::string(key) + "...'");
  return line.substr(key.size());
}

}  // namespace

// Segment files ----------------------------------------------------------------

std::string format_segment_csv(const EegSegment& segment, std::optional<ClassLabel> label,
                               std::optional<std::uint64_t> seed) {
  std::string out = "#eegcsv v1\nfs=" + g17(segment.fs()) + "\nchannels=" + std::to_string(segment.channel_count()) + ";";
  const auto& names = segment.channel_names();
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (names[c].find_first_of(",;\n") != std::string::npos) {
      throw DomainError("segment: channel name '" + names[c] + "' contains a separator");
    }
    out += (c ? "," : "") + names[c];
  }
  out += "\n";
  if (label) out += "label=" + std::string(to_string(*label)) + "\n";
  if (seed) out += "seed=" + std::to_string(*seed) + "\n";
  for (std::size_t t = 0; t < segment.length(); ++t) {
    for (std::size_t c = 0; c < segment.channel_count(); ++c) {
      if (c) out += ',';
      out += g17(segment.channel(c)[t]);
    }
    out += '\n';
  }
  return out;
}

void write_segment_csv(const fs::path& path, const EegSegment& segment, std::optional<ClassLabel> label,
                       std::optional<std::uint64_t> seed) {
  write_text_file(path, format_segment_csv(segment, label, seed));
}

LabeledSegment parse_segment_csv(const std::string& text, const std::string& source) {
  Lines lines(text, source);
  std::string_view line;
  if (!lines.next(line) || trim(line) != "#eegcsv v1") lines.fail("missing '#eegcsv v1' header");
  if (!lines.next(line)) lines.fail("missing 'fs=' line");
  const double fs = parse_double(expect_key(line, "fs=", lines), lines, "sampling rate");
  if (!(fs > 0.0)) lines.fail("sampling rate must be positive");
  if (!lines.next(line)) lines.fail("missing 'channels=' line");
  const auto spec = expect_key(line, "channels=", lines);
  const std::size_t semi = spec.find(';');
  const auto count = static_cast<std::size_t>(
      parse_u64(semi == std::string_view::npos ? spec : spec.substr(0, semi), lines, "channel count"));
  if (count == 0) lines.fail("channel count must be >= 1");
  std::vector<std::string> names;
  if (semi != std::string_view::npos && !trim(spec.substr(semi + 1)).empty()) {
    for (auto n : split(spec.substr(semi + 1), ',')) names.emplace_back(trim(n));
    if (names.size() != count) {
      lines.fail("header declares " + std::to_string(count) + " channels but names " + std::to_string(names.size()));
    }
  }

  LabeledSegment out;
  out.name = fs::path(source).stem().string();
  std::vector<std::vector<double>> channels(count);
  bool in_header = true;
  while (lines.next(line)) {
    if (trim(line).empty()) continue;
    if (in_header && line.starts_with("label=")) {
      out.label = parse_label_cell(line.substr(6), lines);
      if (!out.label) lines.fail("empty label");
      continue;
    }
    if (in_header && line.starts_with("seed=")) {
      parse_u64(line.substr(5), lines, "seed");
      continue;
    }
    in_header = false;
    const auto cells = split(line, ',');
    if (cells.size() != count) {
      lines.fail("row has " + std::to_string(cells.size()) + " values but the header declares " +
                 std::to_string(count) + " channels");
    }
    for (std::size_t c = 0; c < count; ++c) channels[c].push_back(parse_double(cells[c], lines, "sample"));
  }
  if (channels.front().empty()) lines.fail("no sample rows");
  out.segment = EegSegment(std::move(channels), fs, std::move(names));
  return out;
}

LabeledSegment read_segment_csv(const fs::path& path) { return parse_segment_csv(read_text_file(path), path.string()); }

void write_manifest(const fs::path& path, std::span<const ManifestEntry> entries) {
  std::string out = "path,label,split\n";
  for (const auto& e : entries) {
    out += e.path + "," + (e.label ? std::string(to_string(*e.label)) : "") + "," + e.split + "\n";
  }
  write_text_file(path, out);
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  const std::string text = read_text_file(path);
  Lines lines(text, path.string());
  std::string_view line;
  if (!lines.next(line) || trim(line) != "path,label,split") lines.fail("expected header 'path,label,split'");
  std::vector<ManifestEntry> out;
  while (lines.next(line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 3) lines.fail("expected 3 fields (path,label,split)");
    if (trim(cells[0]).empty()) lines.fail("empty path");
    out.push_back({std::string(trim(cells[0])), parse_label_cell(cells[1], lines), std::string(trim(cells[2]))});
  }
  return out;
}

namespace {

std::vector<LabeledSegment> load_from_manifest(const fs::path& manifest) {
  const auto entries = read_manifest(manifest);
  const fs::path base = manifest.parent_path();
  std::vector<LabeledSegment> out;
  out.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    LabeledSegment seg = read_segment_csv(base / e.path);
    if (e.label && seg.label && *e.label != *seg.label) {
      throw ParseError(manifest.string(), i + 2,
                       "label '" + std::string(to_string(*e.label)) + "' disagrees with the file header ('" +
                           std::string(to_string(*seg.label)) + "')");
    }
    if (e.label) seg.label = e.label;
    seg.split = e.split;
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace

std::vector<LabeledSegment> load_segments(const fs::path& path) {
  if (fs::is_directory(path)) {
    if (fs::exists(path / kManifestName)) return load_from_manifest(path / kManifestName);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<LabeledSegment> out;
    for (const auto& f : files) out.push_back(read_segment_csv(f));
    if (out.empty()) throw ParseError(path.string() + ": no segment files found");
    return out;
  }
  if (!fs::exists(path)) throw ParseError(path.string() + ": no such file or directory");
  if (path.filename() == kManifestName) return load_from_manifest(path);
  return {read_segment_csv(path)};
}

void write_segments(const fs::path& dir, std::span<const LabeledSegment> segments, std::optional<std::uint64_t> seed) {
  std::vector<ManifestEntry> entries;
  entries.reserve(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    const std::string stem = s.name.empty() ? "seg" + std::to_string(i) : s.name;
    const std::string rel = "segments/" + stem + ".csv";
    write_segment_csv(dir / rel, s.segment, s.label, seed);
    entries.push_back({rel, s.label, s.split});
  }
  write_manifest(dir / kManifestName, entries);
}

// Feature tables ---------------------------------------------------------------

FeatureVector FeatureTable::vector(std::size_t i) const {
  FeatureVector f;
  f.coeffs = rows.at(i);
  f.channel_count = channel_count;
  f.fingerprint = fingerprint;
  return f;
}

std::string format_feature_table(const FeatureTable& t) {
  std::string out = "#features v1\nkind=" + t.kind + "\nfingerprint=" + t.fingerprint +
                    "\nchannels=" + std::to_string(t.channel_count) + "\nname,label,split";
  const std::size_t width = t.rows.empty() ? 0 : t.rows.front().size();
  for (std::size_t j = 0; j < width; ++j) out += ",f" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out += t.names[i] + "," + (t.labels[i] ? std::string(to_string(*t.labels[i])) : "") + "," + t.splits[i];
    for (double v : t.rows[i]) out += "," + g17(v);
    out += '\n';
  }
  return out;
}

FeatureTable parse_feature_table(const std::string& text, const std::string& source) {
  Lines lines(text, source);
  std::string_view line;
  FeatureTable t;
  if (!lines.next(line) || trim(line) != "#features v1") lines.fail("missing '#features v1' header");
  if (!lines.next(line)) lines.fail("missing 'kind=' line");
  t.kind = std::string(trim(expect_key(line, "kind=", lines)));
  if (t.kind != "mfcc" && t.kind != "bands") lines.fail("unknown feature kind '" + t.kind + "'");
  if (!lines.next(line)) lines.fail("missing 'fingerprint=' line");
  t.fingerprint = std::string(trim(expect_key(line, "fingerprint=", lines)));
  if (!lines.next(line)) lines.fail("missing 'channels=' line");
  t.channel_count = static_cast<std::size_t>(parse_u64(expect_key(line, "channels=", lines), lines, "channel count"));
  if (!lines.next(line)) lines.fail("missing column header");
  const auto header = split(line, ',');
  if (header.size() < 4 || trim(header[0]) != "name" || trim(header[1]) != "label" || trim(header[2]) != "split") {
    lines.fail("column header must start with name,label,split and list at least one feature");
  }
  const std::size_t width = header.size() - 3;
  if (t.channel_count == 0 || width % t.channel_count != 0) {
    lines.fail(std::to_string(width) + " feature columns do not split into " + std::to_string(t.channel_count) +
               " channels");
  }
  while (lines.next(line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      lines.fail("row has " + std::to_string(cells.size()) + " fields, header has " + std::to_string(header.size()));
    }
    t.names.emplace_back(trim(cells[0]));
    t.labels.push_back(parse_label_cell(cells[1], lines));
    t.splits.emplace_back(trim(cells[2]));
    std::vector<double> row(width);
    for (std::size_t j = 0; j < width; ++j) row[j] = parse_double(cells[j + 3], lines, "feature");
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) lines.fail("no feature rows");
  return t;
}

void write_feature_table(const fs::path& path, const FeatureTable& table) {
  write_text_file(path, format_feature_table(table));
}

FeatureTable read_feature_table(const fs::path& path) {
  return parse_feature_table(read_text_file(path), path.string());
}

// Configuration ----------------------------------------------------------------

namespace {

[[noreturn]] void config_fail(const std::string& source, const std::string& what) {
  throw ParseError(source + ": " + what);
}

json mfcc_to_json(const MfccConfig& c) {
  return json{{"beta", c.beta},
              {"frame_len", c.frame_len},
              {"hop", c.hop},
              {"num_filters", c.num_filters},
              {"coeff_lo", c.coeff_lo},
              {"coeff_hi", c.coeff_hi},
              {"fs", c.fs},
              {"mel_lo_hz", c.mel_lo_hz},
              {"mel_hi_hz", c.mel_hi()},
              {"log_floor", c.log_floor},
              {"channel_mode", c.channel_mode == ChannelMode::concatenate ? "concatenate" : "average"}};
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& source) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_fail(source, std::string("field '") + key + "': " + e.what());
  }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& source,
                const std::string& where) {
  if (!j.is_object()) config_fail(source, where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
      config_fail(source, "unknown key '" + key + "' in " + where);
    }
  }
}

void mfcc_from_json(const json& j, MfccConfig& c, const std::string& source) {
  check_keys(j,
             {"beta", "frame_len", "hop", "num_filters", "coeff_lo", "coeff_hi", "fs", "mel_lo_hz", "mel_hi_hz",
              "log_floor", "channel_mode"},
             source, "mfcc");
  read_field(j, "beta", c.beta, source);
  read_field(j, "frame_len", c.frame_len, source);
  read_field(j, "hop", c.hop, source);
  read_field(j, "num_filters", c.num_filters, source);
  read_field(j, "coeff_lo", c.coeff_lo, source);
  read_field(j, "coeff_hi", c.coeff_hi, source);
  read_field(j, "fs", c.fs, source);
  read_field(j, "mel_lo_hz", c.mel_lo_hz, source);
  if (j.contains("mel_hi_hz")) {
    double hi = 0.0;
    read_field(j, "mel_hi_hz", hi, source);
    c.mel_hi_hz = hi;
  }
  read_field(j, "log_floor", c.log_floor, source);
  if (j.contains("channel_mode")) {
    std::string mode;
    read_field(j, "channel_mode", mode, source);
    if (mode == "concatenate") c.channel_mode = ChannelMode::concatenate;
    else if (mode == "average") c.channel_mode = ChannelMode::average;
    else config_fail(source, "channel_mode must be 'concatenate' or 'average'");
  }
}

json bands_to_json(std::span<const Band> bands) {
  json arr = json::array();
  for (const Band& b : bands) arr.push_back(json::array({b.low_hz, b.high_hz}));
  return arr;
}

std::vector<Band> bands_from_json(const json& j, const std::string& source) {
  if (!j.is_array()) config_fail(source, "bands must be an array of [low, high] pairs");
  std::vector<Band> out;
  for (const auto& b : j) {
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number()) {
      config_fail(source, "bands must be an array of [low, high] pairs");
    }
    out.push_back({b[0].get<double>(), b[1].get<double>()});
  }
  return out;
}

json class_mix_to_json(const std::array<std::size_t, kClassLabelCount>& mix) {
  json j = json::object();
  for (ClassLabel l : kAllClassLabels) j[std::string(to_string(l))] = mix[static_cast<std::size_t>(l)];
  return j;
}

}  // namespace

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  synth.seed = s;
}

void RunConfig::validate() const {
  mfcc.validate();
  synth.validate();
  if (std::abs(synth.fs - mfcc.fs) > 1e-9 * mfcc.fs) {
    throw ConfigError("config: synth fs (" + g17(synth.fs) + ") differs from mfcc fs (" + g17(mfcc.fs) + ")");
  }
  if (synth.min_samples < mfcc.frame_len) throw ConfigError("config: synth segments must hold one frame");
  if (folds < 2) throw ConfigError("config: folds must be >= 2");
  if (grid.C.empty() || grid.gamma.empty()) throw ConfigError("config: empty SVM grid");
  for (double v : grid.C) {
    if (!(v > 0.0)) throw ConfigError("config: grid C values must be positive");
  }
  for (double v : grid.gamma) {
    if (!(v > 0.0)) throw ConfigError("config: grid gamma values must be positive");
  }
  if (!(svm_tol > 0.0)) throw ConfigError("config: svm tolerance must be positive");
  if (removal_k < 1 || removal_k > mfcc.retained_count()) {
    throw ConfigError("config: removal k must lie in [1, " + std::to_string(mfcc.retained_count()) + "]");
  }
  if (!(reconstruction.tolerance > 0.0) || reconstruction.max_iterations == 0) {
    throw ConfigError("config: reconstruction tolerance and iteration limit must be positive");
  }
}

RunConfig preset_run_config(const std::string& name) {
  RunConfig c;
  c.preset = name;
  if (name == "desk") {
    c.mfcc = desk_preset();
  } else if (name == "paper") {
    c.mfcc = paper_preset();
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected 'desk' or 'paper')");
  }
  c.synth.fs = c.mfcc.fs;
  c.synth.min_samples = c.mfcc.frame_len;
  c.synth.class_mix = {100, 100, 100, 100, 100, 100};
  return c;
}

RunConfig parse_run_config(const std::string& json_text, const std::string& source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_fail(source, e.what());
  }
  check_keys(j, {"preset", "seed", "threads", "mfcc", "bands", "synth", "train", "removal"}, source, "config");
  std::string preset = "desk";
  read_field(j, "preset", preset, source);
  RunConfig c = preset_run_config(preset);
  if (j.contains("mfcc")) {
    mfcc_from_json(j["mfcc"], c.mfcc, source);
    c.synth.fs = c.mfcc.fs;
    c.synth.min_samples = c.mfcc.frame_len;
  }
  if (j.contains("bands")) c.bands = bands_from_json(j["bands"], source);
  read_field(j, "threads", c.threads, source);
  if (j.contains("synth")) {
    const json& s = j["synth"];
    check_keys(s,
               {"segment_seconds", "channels", "class_mix", "snr_db", "mode", "eeg_scale", "segment_gain_sigma",
                "channel_gain_sigma", "snr_jitter_db", "validation_fraction"},
               source, "synth");
    read_field(s, "segment_seconds", c.synth.segment_seconds, source);
    read_field(s, "channels", c.synth.channels, source);
    read_field(s, "snr_db", c.synth.snr_db, source);
    read_field(s, "eeg_scale", c.synth.eeg_scale, source);
    read_field(s, "segment_gain_sigma", c.synth.segment_gain_sigma, source);
    read_field(s, "channel_gain_sigma", c.synth.channel_gain_sigma, source);
    read_field(s, "snr_jitter_db", c.synth.snr_jitter_db, source);
    read_field(s, "validation_fraction", c.synth.validation_fraction, source);
    if (s.contains("mode")) {
      std::string mode;
      read_field(s, "mode", mode, source);
      if (mode == "convolve") c.synth.mode = ContaminationMode::convolve;
      else if (mode == "add") c.synth.mode = ContaminationMode::add;
      else config_fail(source, "synth.mode must be 'convolve' or 'add'");
    }
    if (s.contains("class_mix")) {
      const json& mix = s["class_mix"];
      if (!mix.is_object()) config_fail(source, "synth.class_mix must map class names to counts");
      c.synth.class_mix.fill(0);
      for (const auto& [key, value] : mix.items()) {
        const auto label = parse_class_label(key);
        if (!label) config_fail(source, "synth.class_mix: unknown class '" + key + "'");
        if (!value.is_number_unsigned()) config_fail(source, "synth.class_mix: counts must be non-negative integers");
        c.synth.class_mix[static_cast<std::size_t>(*label)] = value.get<std::size_t>();
      }
    }
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    check_keys(t, {"folds", "C", "gamma", "tol"}, source, "train");
    read_field(t, "folds", c.folds, source);
    read_field(t, "C", c.grid.C, source);
    read_field(t, "gamma", c.grid.gamma, source);
    read_field(t, "tol", c.svm_tol, source);
  }
  if (j.contains("removal")) {
    const json& r = j["removal"];
    check_keys(r, {"k", "tolerance", "max_iterations"}, source, "removal");
    read_field(r, "k", c.removal_k, source);
    read_field(r, "tolerance", c.reconstruction.tolerance, source);
    read_field(r, "max_iterations", c.reconstruction.max_iterations, source);
  }
  std::uint64_t seed = 0;
  read_field(j, "seed", seed, source);
  c.set_seed(seed);
  c.validate();
  return c;
}

std::string format_run_config(const RunConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["mfcc"] = mfcc_to_json(c.mfcc);
  j["bands"] = bands_to_json(c.bands);
  j["synth"] = {{"segment_seconds", c.synth.segment_seconds},
                {"channels", c.synth.channels},
                {"class_mix", class_mix_to_json(c.synth.class_mix)},
                {"snr_db", c.synth.snr_db},
                {"mode", std::string(to_string(c.synth.mode))},
                {"eeg_scale", c.synth.eeg_scale},
                {"segment_gain_sigma", c.synth.segment_gain_sigma},
                {"channel_gain_sigma", c.synth.channel_gain_sigma},
                {"snr_jitter_db", c.synth.snr_jitter_db},
                {"validation_fraction", c.synth.validation_fraction}};
  j["train"] = {{"folds", c.folds}, {"C", c.grid.C}, {"gamma", c.grid.gamma}, {"tol", c.svm_tol}};
  j["removal"] = {{"k", c.removal_k},
                  {"tolerance", c.reconstruction.tolerance},
                  {"max_iterations", c.reconstruction.max_iterations}};
  return j.dump(2) + "\n";
}

std::string format_mfcc_config(const MfccConfig& config) { return mfcc_to_json(config).dump(2) + "\n"; }

MfccConfig parse_mfcc_config(const std::string& json_text, const std::string& source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_fail(source, e.what());
  }
  MfccConfig c;
  mfcc_from_json(j, c, source);
  c.validate();
  return c;
}

// Models and reports -----------------------------------------------------------

std::string format_model(const ModelFile& f) {
  const SvmModel& m = f.model;
  json j;
  j["format"] = "cepstra-svm";
  j["version"] = kFormatVersion;
  j["task"] = f.task;
  j["feature_kind"] = f.feature_kind;
  j["fingerprint"] = m.fingerprint;
  j["mfcc_config"] = f.mfcc ? mfcc_to_json(*f.mfcc) : json(nullptr);
  j["bands"] = f.bands.empty() ? json(nullptr) : bands_to_json(f.bands);
  j["class_names"] = m.class_names;
  j["C"] = m.C;
  j["gamma"] = m.gamma;
  j["standardization"] = {{"mean", m.standardization.mean}, {"scale", m.standardization.scale}};
  j["support_vectors"] = m.support_vectors;
  json machines = json::array();
  for (const auto& b : m.machines) {
    machines.push_back({{"positive_class", b.positive_class},
                        {"negative_class", b.negative_class},
                        {"support", b.support},
                        {"dual_coeffs", b.dual_coeffs},
                        {"bias", b.bias},
                        {"iterations", b.iterations},
                        {"kkt_gap", b.kkt_gap},
                        {"converged", b.converged}});
  }
  j["machines"] = machines;
  return j.dump(1) + "\n";
}

ModelFile parse_model(const std::string& json_text, const std::string& source) {
  ModelFile f;
  try {
    const json j = json::parse(json_text);
    if (j.at("format").get<std::string>() != "cepstra-svm") config_fail(source, "not a cepstra model file");
    const int version = j.at("version").get<int>();
    if (version != kFormatVersion) config_fail(source, "unsupported model version " + std::to_string(version));
    f.task = j.at("task").get<std::string>();
    f.feature_kind = j.at("feature_kind").get<std::string>();
    SvmModel& m = f.model;
    m.fingerprint = j.at("fingerprint").get<std::string>();
    if (!j.at("mfcc_config").is_null()) {
      MfccConfig c;
      mfcc_from_json(j["mfcc_config"], c, source);
      c.validate();
      f.mfcc = c;
    }
    if (!j.at("bands").is_null()) f.bands = bands_from_json(j["bands"], source);
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.C = j.at("C").get<double>();
    m.gamma = j.at("gamma").get<double>();
    m.standardization.mean = j.at("standardization").at("mean").get<std::vector<double>>();
    m.standardization.scale = j.at("standardization").at("scale").get<std::vector<double>>();
    m.support_vectors = j.at("support_vectors").get<Matrix>();
    for (const auto& b : j.at("machines")) {
      BinaryMachine bm;
      bm.positive_class = b.at("positive_class").get<int>();
      bm.negative_class = b.at("negative_class").get<int>();
      bm.support = b.at("support").get<std::vector<std::size_t>>();
      bm.dual_coeffs = b.at("dual_coeffs").get<std::vector<double>>();
      bm.bias = b.at("bias").get<double>();
      bm.iterations = b.at("iterations").get<std::size_t>();
      bm.kkt_gap = b.at("kkt_gap").get<double>();
      bm.converged = b.at("converged").get<bool>();
      m.machines.push_back(std::move(bm));
    }
  } catch (const json::exception& e) {
    config_fail(source, std::string("malformed model: ") + e.what());
  }

  // Structural checks so a damaged file cannot index out of range later.
  const SvmModel& m = f.model;
  const std::size_t d = m.standardization.mean.size();
  const auto classes = static_cast<int>(m.class_names.size());
  if (classes < 2 || m.standardization.scale.size() != d || d == 0) config_fail(source, "inconsistent model header");
  if (m.machines.size() != m.class_names.size() * (m.class_names.size() - 1) / 2) {
    config_fail(source, "machine count does not match the class count");
  }
  for (const auto& sv : m.support_vectors) {
    if (sv.size() != d) config_fail(source, "support vector width differs from the model dimension");
  }
  for (const auto& b : m.machines) {
    if (b.positive_class < 0 || b.positive_class >= classes || b.negative_class < 0 || b.negative_class >= classes ||
        b.support.size() != b.dual_coeffs.size()) {
      config_fail(source, "inconsistent machine entry");
    }
    for (std::size_t s : b.support) {
      if (s >= m.support_vectors.size()) config_fail(source, "support index out of range");
    }
  }
  if (f.feature_kind == "mfcc") {
    if (!f.mfcc || f.mfcc->fingerprint() != m.fingerprint) {
      config_fail(source, "stored MFCC configuration does not match the stored fingerprint");
    }
  } else if (f.feature_kind == "bands") {
    if (band_fingerprint(f.bands) != m.fingerprint) {
      config_fail(source, "stored band list does not match the stored fingerprint");
    }
  } else {
    config_fail(source, "unknown feature kind '" + f.feature_kind + "'");
  }
  return f;
}

void save_model(const fs::path& path, const ModelFile& file) { write_text_file(path, format_model(file)); }

ModelFile load_model(const fs::path& path, const std::optional<std::string>& expected_fingerprint) {
  ModelFile f = parse_model(read_text_file(path), path.string());
  if (expected_fingerprint && *expected_fingerprint != f.model.fingerprint) {
    throw ConfigError(path.string() + ": model was trained on features with fingerprint " + f.model.fingerprint +
                      " but the current configuration has fingerprint " + *expected_fingerprint +
                      "; retrain or use the model's configuration");
  }
  return f;
}

namespace {

json metrics_to_json(const ClassificationMetrics& m) {
  return json{{"accuracy", m.accuracy},
              {"macro_precision", m.macro_precision},
              {"macro_recall", m.macro_recall},
              {"macro_f1", m.macro_f1},
              {"precision", m.precision},
              {"recall", m.recall},
              {"f1", m.f1},
              {"confusion", m.confusion},
              {"absent_classes", m.absent_classes}};
}

json mean_std(const MeanStd& v) { return json{{"mean", v.mean}, {"std", v.std}}; }

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string format_cv_report(const CvReport& r, std::span<const std::string> class_names, const std::string& task,
                             const std::string& feature_kind, const std::string& timestamp) {
  json j;
  j["format"] = "cepstra-cv-report";
  j["version"] = kFormatVersion;
  j["generated_at"] = timestamp;
  j["task"] = task;
  j["feature_kind"] = feature_kind;
  j["class_names"] = std::vector<std::string>(class_names.begin(), class_names.end());
  j["k"] = r.k;
  j["seed"] = r.seed;
  j["best"] = {{"C", r.best_C}, {"gamma", r.best_gamma}};
  j["accuracy"] = mean_std(r.accuracy);
  j["macro_precision"] = mean_std(r.macro_precision);
  j["macro_recall"] = mean_std(r.macro_recall);
  j["macro_f1"] = mean_std(r.macro_f1);
  json folds = json::array();
  for (const auto& m : r.per_fold) folds.push_back(metrics_to_json(m));
  j["per_fold"] = folds;
  j["pooled"] = metrics_to_json(r.pooled);
  json grid = json::array();
  for (const auto& g : r.grid) grid.push_back({{"C", g.C}, {"gamma", g.gamma}, {"mean_accuracy", g.mean_accuracy}});
  j["grid"] = grid;
  return j.dump(2) + "\n";
}

std::string format_removal_report(const Algorithm1Result& result, const Algorithm1Options& options,
                                  const std::string& timestamp) {
  const RemovalProfile& p = result.profile;
  json j;
  j["format"] = "cepstra-removal-report";
  j["version"] = kFormatVersion;
  j["generated_at"] = timestamp;
  j["has_target_labels"] = options.has_target_labels;
  j["reconstructed"] = options.reconstruct;
  json corr = json::array();
  for (std::size_t d = 0; d < p.correlations.size(); ++d) {
    corr.push_back({{"dim", d + p.first_label}, {"r", p.correlations[d]}, {"undefined", static_cast<bool>(p.undefined[d])}});
  }
  j["profile"] = {{"fingerprint", p.fingerprint},
                  {"seed", p.seed},
                  {"k", p.artifact_dims.size()},
                  {"artifact_dims", p.artifact_dims},
                  {"paired_count", p.paired_count},
                  {"channel_count", p.channel_count},
                  {"dims_per_channel", p.dims_per_channel},
                  {"correlations", corr},
                  {"clean_mean", p.clean_mean},
                  {"clean_std", p.clean_std},
                  {"artifact_mean", p.artifact_mean},
                  {"artifact_std", p.artifact_std},
                  {"degenerate", p.degenerate},
                  {"warnings", p.warnings}};
  j["residual_artifact_rate"] = {{"before", optional_number(result.rate_before)},
                                 {"feature_space", optional_number(result.rate_features)},
                                 {"reconstructed", optional_number(result.rate_reconstructed)}};
  json segs = json::array();
  for (const auto& s : result.segments) {
    segs.push_back({{"index", s.index},
                    {"name", s.name},
                    {"label", s.label ? json(std::string(to_string(*s.label))) : json(nullptr)},
                    {"branch", std::string(to_string(s.branch))},
                    {"iterations", s.iterations},
                    {"max_residual", s.max_residual},
                    {"converged", s.converged},
                    {"score_before", optional_number(s.score_before)},
                    {"score_feature_space", optional_number(s.score_edited)},
                    {"score_reconstructed", optional_number(s.score_reconstructed)}});
  }
  j["segments"] = segs;
  return j.dump(2) + "\n";
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace cepstra
