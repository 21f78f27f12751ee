// cepstra command-line front end. Talks to the library only through cepstra.h.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cepstra/cepstra.h"

namespace {

namespace fs = std::filesystem;

// Carries a library status out of a command.
struct Failure {
  cep_status status;
  std::string message;
};

void check(cep_status s) {
  if (s != CEP_OK) throw Failure{s, cep_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Config = std::unique_ptr<cep_config, Deleter<cep_config, cep_config_free>>;
using Dataset = std::unique_ptr<cep_dataset, Deleter<cep_dataset, cep_dataset_free>>;
using Features = std::unique_ptr<cep_features, Deleter<cep_features, cep_features_free>>;
using Model = std::unique_ptr<cep_model, Deleter<cep_model, cep_model_free>>;

std::string take(char* s) {
  std::string out = s ? s : "";
  cep_string_free(s);
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure{CEP_ERR_PARSE, path.string() + ": cannot open for writing"};
  out << text;
}

struct Common {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--config", c.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--preset", c.preset, "Built-in configuration")->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--seed", c.seed, "Seed for every random choice");
  cmd->add_option("--threads", c.threads, "Worker threads (0: all cores)");
  auto* out = cmd->add_option("--out", c.out, "Output directory or file");
  if (out_required) out->required();
}

Config make_config(const Common& c) {
  if (!c.config_path.empty() && !c.preset.empty()) {
    throw Failure{CEP_ERR_VALIDATION, "--config and --preset are mutually exclusive (a config file names its preset)"};
  }
  cep_config* raw = nullptr;
  if (!c.config_path.empty()) check(cep_config_load(c.config_path.c_str(), &raw));
  else check(cep_config_preset(c.preset.empty() ? "desk" : c.preset.c_str(), &raw));
  Config cfg(raw);
  if (c.seed) check(cep_config_set_seed(cfg.get(), *c.seed));
  check(cep_config_set_threads(cfg.get(), c.threads));
  return cfg;
}

Dataset load_dataset(const std::string& path, const std::string& split) {
  cep_dataset* raw = nullptr;
  check(cep_dataset_load(path.c_str(), &raw));
  Dataset d(raw);
  if (!split.empty()) {
    cep_dataset* filtered = nullptr;
    check(cep_dataset_filter_split(d.get(), split.c_str(), &filtered));
    d.reset(filtered);
    if (cep_dataset_size(d.get()) == 0) {
      throw Failure{CEP_ERR_VALIDATION, path + ": no segments in split '" + split + "'"};
    }
  }
  return d;
}

cep_feature_kind feature_kind(const std::string& name) {
  return name == "bands" ? CEP_FEATURES_BANDS : CEP_FEATURES_MFCC;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cepstral EEG artifact detection, recognition and removal"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cep_version()));

  Common common;
  std::string in_path, split, features = "mfcc", task, model_path;
  std::string source_path, target_path, source_split, target_split, detector_path;
  bool include_validation = false, unlabeled = false;
  std::uint64_t bench_channels = 0, bench_n = 0, bench_m = 0, bench_l = 0;
  std::size_t bench_segments = 0;

  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic dataset");
  add_common(synth, common, true);

  auto* extract = app.add_subcommand("extract", "Segments to a feature table");
  add_common(extract, common, true);
  extract->add_option("--in", in_path, "Segment file, manifest or directory")->required();
  extract->add_option("--features", features, "Feature family")->check(CLI::IsMember({"mfcc", "bands"}));

  auto* train = app.add_subcommand("train", "Grid-search cross-validation and final model");
  add_common(train, common, true);
  train->add_option("--in", in_path, "Feature table")->required()->check(CLI::ExistingFile);
  train->add_option("--task", task, "detect or recognize")->required()->check(CLI::IsMember({"detect", "recognize"}));
  train->add_flag("--include-validation", include_validation, "Also train on the validation split");

  auto* detect = app.add_subcommand("detect", "Per-segment clean/artifact verdicts");
  auto* recognize = app.add_subcommand("recognize", "Per-segment eye-movement class");
  for (auto* cmd : {detect, recognize}) {
    add_common(cmd, common, true);
    cmd->add_option("--model", model_path, "Model file from 'train'")->required()->check(CLI::ExistingFile);
    cmd->add_option("--in", in_path, "Segment file, manifest or directory")->required();
    cmd->add_option("--split", split, "Only segments of this manifest split");
  }

  auto* remove = app.add_subcommand("remove", "Profile artifact dimensions and denoise target segments");
  add_common(remove, common, true);
  remove->add_option("--source", source_path, "Labeled source segments")->required();
  remove->add_option("--target", target_path, "Segments to denoise")->required();
  remove->add_option("--source-split", source_split, "Only source segments of this split");
  remove->add_option("--target-split", target_split, "Only target segments of this split");
  remove->add_flag("--unlabeled", unlabeled, "Ignore target labels and zero the selected dimensions");
  remove->add_option("--detector", detector_path, "Detect model for residual artifact rates")
      ->check(CLI::ExistingFile);

  auto* bench = app.add_subcommand("bench", "Multiplication count and extraction throughput");
  add_common(bench, common, false);
  bench->add_option("--channels", bench_channels, "C (default: configured channel count)");
  bench->add_option("--frame-len", bench_n, "N (default: configured frame length)");
  bench->add_option("--filters", bench_m, "M (default: configured filter count)");
  bench->add_option("--coeffs", bench_l, "L (default: configured retained count)");
  bench->add_option("--segments", bench_segments, "Synthesize this many segments and time extraction");
  bench->add_option("--features", features, "Feature family")->check(CLI::IsMember({"mfcc", "bands"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(CEP_ERR_VALIDATION);
  }

  try {
    Config cfg = make_config(common);
    const fs::path out = common.out;

    if (synth->parsed()) {
      cep_dataset* raw = nullptr;
      check(cep_dataset_synthesize(cfg.get(), &raw));
      Dataset d(raw);
      check(cep_dataset_save(d.get(), out.c_str()));
      char* json = nullptr;
      check(cep_config_to_json(cfg.get(), &json));
      write_file(out / "config.json", take(json));
      std::printf("wrote %zu segments to %s\n", cep_dataset_size(d.get()), out.c_str());
    } else if (extract->parsed()) {
      Dataset d = load_dataset(in_path, "");
      cep_features* raw = nullptr;
      check(cep_extract(cfg.get(), d.get(), feature_kind(features), &raw));
      Features f(raw);
      check(cep_features_save(f.get(), out.c_str()));
      std::printf("wrote %zu x %zu %s features to %s\n", cep_features_rows(f.get()), cep_features_width(f.get()),
                  features.c_str(), out.c_str());
    } else if (train->parsed()) {
      cep_features* raw = nullptr;
      check(cep_features_load(in_path.c_str(), &raw));
      Features f(raw);
      cep_model* m = nullptr;
      char* report = nullptr;
      check(cep_train(cfg.get(), f.get(), task == "detect" ? CEP_TASK_DETECT : CEP_TASK_RECOGNIZE,
                      include_validation ? 1 : 0, &m, &report));
      Model model(m);
      const std::string report_text = take(report);
      check(cep_model_save(model.get(), (out / "model.json").c_str()));
      write_file(out / "cv_report.json", report_text);
      std::printf("wrote %s and %s\n", (out / "model.json").c_str(), (out / "cv_report.json").c_str());
    } else if (detect->parsed() || recognize->parsed()) {
      cep_model* m = nullptr;
      check(cep_model_load(model_path.c_str(), &m));
      Model model(m);
      cep_task mt = CEP_TASK_DETECT;
      check(cep_model_task(model.get(), &mt));
      const bool want_detect = detect->parsed();
      if ((mt == CEP_TASK_DETECT) != want_detect) {
        throw Failure{CEP_ERR_VALIDATION, model_path + ": model was trained for '" +
                                              std::string(mt == CEP_TASK_DETECT ? "detect" : "recognize") +
                                              "', not '" + (want_detect ? "detect" : "recognize") + "'"};
      }
      Dataset d = load_dataset(in_path, split);
      char* verdicts = nullptr;
      char* summary = nullptr;
      check(cep_predict(model.get(), cfg.get(), d.get(), &verdicts, &summary));
      write_file(out / "verdicts.csv", take(verdicts));
      std::printf("%s\n", take(summary).c_str());
    } else if (remove->parsed()) {
      Dataset source = load_dataset(source_path, source_split);
      Dataset target = load_dataset(target_path, target_split);
      Model detector;
      if (!detector_path.empty()) {
        cep_model* m = nullptr;
        check(cep_model_load(detector_path.c_str(), &m));
        detector.reset(m);
      }
      cep_dataset* denoised = nullptr;
      char* report = nullptr;
      check(cep_remove(cfg.get(), source.get(), target.get(), unlabeled ? 0 : 1, detector.get(), &denoised, &report));
      Dataset result(denoised);
      check(cep_dataset_save(result.get(), out.c_str()));
      write_file(out / "removal_report.json", take(report));
      std::printf("denoised %zu segments into %s\n", cep_dataset_size(result.get()), out.c_str());
    } else if (bench->parsed()) {
      std::uint64_t c = 0, n = 0, m = 0, l = 0;
      check(cep_config_cost_params(cfg.get(), &c, &n, &m, &l));
      if (bench_channels) c = bench_channels;
      if (bench_n) n = bench_n;
      if (bench_m) m = bench_m;
      if (bench_l) l = bench_l;
      std::uint64_t mults = 0;
      check(cep_estimate_cost(c, n, m, l, &mults));
      std::string report = "{\n  \"format\": \"cepstra-cost-report\",\n  \"version\": 1,\n  \"params\": {\"C\": " +
                           std::to_string(c) + ", \"N\": " + std::to_string(n) + ", \"M\": " + std::to_string(m) +
                           ", \"L\": " + std::to_string(l) + "},\n  \"multiplications\": " + std::to_string(mults);
      if (bench_segments > 0) {
        const std::size_t mix[6] = {bench_segments, 0, 0, 0, 0, 0};
        check(cep_config_set_class_mix(cfg.get(), mix, 6));
        cep_dataset* ds = nullptr;
        check(cep_dataset_synthesize(cfg.get(), &ds));
        Dataset d(ds);
        double seconds = 0.0;
        check(cep_bench_extract(cfg.get(), d.get(), feature_kind(features), &seconds));
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      ",\n  \"throughput\": {\"features\": \"%s\", \"segments\": %zu, \"seconds\": %.6f, "
                      "\"segments_per_second\": %.3f}",
                      features.c_str(), cep_dataset_size(d.get()), seconds,
                      seconds > 0.0 ? static_cast<double>(cep_dataset_size(d.get())) / seconds : 0.0);
        report += buf;
      }
      report += "\n}\n";
      if (common.out.empty()) std::fputs(report.c_str(), stdout);
      else write_file(out, report);
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return static_cast<int>(f.status);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(CEP_ERR_INTERNAL);
  }
  return 0;
}
