#include "cepstra/cepstra.h"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "cepstra/artifact.hpp"
#include "cepstra/cost.hpp"
#include "cepstra/error.hpp"
#include "cepstra/io.hpp"
#include "parallel.hpp"

struct cep_config {
  cepstra::RunConfig value;
};
struct cep_dataset {
  std::vector<cepstra::LabeledSegment> segments;
};
struct cep_features {
  cepstra::FeatureTable table;
};
struct cep_model {
  cepstra::ModelFile file;
};

namespace {

using namespace cepstra;

thread_local std::string g_last_error;

cep_status fail(cep_status status, const std::string& what) {
  g_last_error = what;
  return status;
}

template <typename Fn>
cep_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return CEP_OK;
  } catch (const Error& e) {
    return fail(static_cast<cep_status>(e.kind()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(CEP_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(CEP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CEP_ERR_INTERNAL, e.what());
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw DomainError(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

const char* kind_name(cep_feature_kind kind) { return kind == CEP_FEATURES_BANDS ? "bands" : "mfcc"; }

std::string fingerprint_for(const RunConfig& c, const std::string& kind) {
  return kind == "bands" ? band_fingerprint(c.bands) : c.mfcc.fingerprint();
}

FeatureTable extract_table(const RunConfig& c, const std::vector<LabeledSegment>& segs, cep_feature_kind kind) {
  if (segs.empty()) throw DomainError("extract: the dataset is empty");
  if (kind != CEP_FEATURES_MFCC && kind != CEP_FEATURES_BANDS) throw DomainError("extract: unknown feature kind");
  FeatureTable t;
  t.kind = kind_name(kind);
  t.fingerprint = fingerprint_for(c, t.kind);
  t.rows.resize(segs.size());
  std::vector<std::size_t> channels(segs.size());
  if (kind == CEP_FEATURES_MFCC) {
    const CepstralAnalyzer analyzer(c.mfcc);
    detail::parallel_for(segs.size(), c.threads, [&](std::size_t i) {
      auto f = mfcc_segment(segs[i].segment, analyzer);
      channels[i] = f.channel_count;
      t.rows[i] = std::move(f.coeffs);
    });
  } else {
    detail::parallel_for(segs.size(), c.threads, [&](std::size_t i) {
      auto f = band_power_features(segs[i].segment, c.bands);
      channels[i] = f.channel_count;
      t.rows[i] = std::move(f.coeffs);
    });
  }
  t.channel_count = channels.front();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (t.rows[i].size() != t.rows.front().size()) {
      throw DomainError("extract: segment '" + segs[i].name + "' has a different channel count");
    }
    t.names.push_back(segs[i].name);
    t.labels.push_back(segs[i].label);
    t.splits.push_back(segs[i].split);
  }
  return t;
}

LabeledDataset training_set(const FeatureTable& t, cep_task task, bool include_validation) {
  LabeledDataset d;
  d.class_names = task == CEP_TASK_DETECT ? kDetectionClasses : recognition_class_names();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!include_validation && t.splits[i] == "validation") continue;
    if (!t.labels[i]) throw DomainError("train: row '" + t.names[i] + "' has no label");
    const int cls = static_cast<int>(*t.labels[i]);
    d.features.push_back(t.rows[i]);
    d.labels.push_back(task == CEP_TASK_DETECT ? (cls == 0 ? 0 : 1) : cls);
  }
  if (d.size() == 0) throw DomainError("train: no training rows (every row is in the validation split)");
  const auto sizes = d.class_sizes();
  std::string missing;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] == 0) missing += (missing.empty() ? "" : ", ") + d.class_names[c];
  }
  if (!missing.empty()) {
    throw TrainingError(task == CEP_TASK_DETECT
                            ? "train: the detect task needs both clean and artifact samples; missing: " + missing
                            : "train: the recognize task needs samples of all six classes; missing: " + missing);
  }
  return d;
}

std::string csv_label(const std::optional<ClassLabel>& l) { return l ? std::string(to_string(*l)) : ""; }

void predict_rows(const ModelFile& mf, const FeatureTable& t, std::string& verdicts, std::string& summary) {
  const bool detect_task = mf.task == "detect";
  std::vector<std::string> rows(t.size());
  std::vector<int> correct(t.size(), -1);
  std::vector<int> flagged(t.size(), 0);
  detail::parallel_for(t.size(), 0, [&](std::size_t i) {
    const FeatureVector f = t.vector(i);
    char buf[64];
    if (detect_task) {
      const Detection d = detect(f, mf.model);
      std::snprintf(buf, sizeof buf, "%.17g", d.score);
      rows[i] = t.names[i] + "," + csv_label(t.labels[i]) + "," + t.splits[i] + "," +
                (d.is_artifact ? "artifact" : "clean") + "," + buf + "\n";
      flagged[i] = d.is_artifact ? 1 : 0;
      if (t.labels[i]) correct[i] = (is_artifact(*t.labels[i]) == d.is_artifact) ? 1 : 0;
    } else {
      const ClassLabel l = recognize(f, mf.model);
      const int votes = svm_predict(mf.model, f.coeffs).votes[static_cast<std::size_t>(l)];
      rows[i] = t.names[i] + "," + csv_label(t.labels[i]) + "," + t.splits[i] + "," + std::string(to_string(l)) +
                "," + std::to_string(votes) + "\n";
      if (t.labels[i]) correct[i] = (*t.labels[i] == l) ? 1 : 0;
    }
  });
  verdicts = detect_task ? "name,label,split,predicted,score\n" : "name,label,split,predicted,votes\n";
  std::size_t labeled = 0, right = 0, positives = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    verdicts += rows[i];
    if (correct[i] >= 0) {
      ++labeled;
      right += static_cast<std::size_t>(correct[i]);
    }
    positives += static_cast<std::size_t>(flagged[i]);
  }
  summary = std::to_string(t.size()) + " segments";
  if (detect_task) summary += ", " + std::to_string(positives) + " flagged as artifact";
  if (labeled > 0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", static_cast<double>(right) / static_cast<double>(labeled));
    summary += ", accuracy " + std::string(buf) + " over " + std::to_string(labeled) + " labeled";
  }
}

}  // namespace

extern "C" {

const char* cep_version(void) { return "1.0.0"; }

const char* cep_last_error(void) { return g_last_error.c_str(); }

void cep_string_free(char* s) { std::free(s); }

cep_status cep_config_preset(const char* name, cep_config** out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    *out = new cep_config{preset_run_config(name)};
  });
}

cep_status cep_config_load(const char* path, cep_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new cep_config{parse_run_config(read_text_file(path), path)};
  });
}

cep_status cep_config_set_seed(cep_config* config, uint64_t seed) {
  return guarded([&] {
    require(config, "config");
    config->value.set_seed(seed);
  });
}

cep_status cep_config_set_threads(cep_config* config, size_t threads) {
  return guarded([&] {
    require(config, "config");
    config->value.threads = threads;
  });
}

cep_status cep_config_set_class_mix(cep_config* config, const size_t* counts, size_t n) {
  return guarded([&] {
    require(config, "config");
    require(counts, "counts");
    if (n != kClassLabelCount) throw DomainError("class mix needs exactly 6 counts");
    for (std::size_t i = 0; i < n; ++i) config->value.synth.class_mix[i] = counts[i];
  });
}

cep_status cep_config_cost_params(const cep_config* config, uint64_t* channels, uint64_t* frame_len,
                                  uint64_t* filters, uint64_t* coeffs) {
  return guarded([&] {
    require(config, "config");
    require(channels, "channels");
    require(frame_len, "frame_len");
    require(filters, "filters");
    require(coeffs, "coeffs");
    const RunConfig& c = config->value;
    *channels = c.synth.channels;
    *frame_len = c.mfcc.frame_len;
    *filters = c.mfcc.num_filters;
    *coeffs = c.mfcc.retained_count();
  });
}

cep_status cep_config_to_json(const cep_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = dup_string(format_run_config(config->value));
  });
}

cep_status cep_config_fingerprint(const cep_config* config, cep_feature_kind kind, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = dup_string(fingerprint_for(config->value, kind_name(kind)));
  });
}

void cep_config_free(cep_config* config) { delete config; }

cep_status cep_dataset_synthesize(const cep_config* config, cep_dataset** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    config->value.validate();
    *out = new cep_dataset{make_dataset(config->value.synth).segments};
  });
}

cep_status cep_dataset_load(const char* path, cep_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new cep_dataset{load_segments(path)};
  });
}

cep_status cep_dataset_save(const cep_dataset* dataset, const char* dir) {
  return guarded([&] {
    require(dataset, "dataset");
    require(dir, "dir");
    write_segments(dir, dataset->segments);
  });
}

cep_status cep_dataset_filter_split(const cep_dataset* dataset, const char* split, cep_dataset** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(split, "split");
    require(out, "out");
    auto* d = new cep_dataset;
    for (const auto& s : dataset->segments) {
      if (s.split == split) d->segments.push_back(s);
    }
    *out = d;
  });
}

size_t cep_dataset_size(const cep_dataset* dataset) { return dataset ? dataset->segments.size() : 0; }

void cep_dataset_free(cep_dataset* dataset) { delete dataset; }

cep_status cep_extract(const cep_config* config, const cep_dataset* dataset, cep_feature_kind kind,
                       cep_features** out) {
  return guarded([&] {
    require(config, "config");
    require(dataset, "dataset");
    require(out, "out");
    *out = new cep_features{extract_table(config->value, dataset->segments, kind)};
  });
}

cep_status cep_features_save(const cep_features* features, const char* path) {
  return guarded([&] {
    require(features, "features");
    require(path, "path");
    write_feature_table(path, features->table);
  });
}

cep_status cep_features_load(const char* path, cep_features** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new cep_features{read_feature_table(path)};
  });
}

size_t cep_features_rows(const cep_features* features) { return features ? features->table.size() : 0; }

size_t cep_features_width(const cep_features* features) {
  return features && !features->table.rows.empty() ? features->table.rows.front().size() : 0;
}

void cep_features_free(cep_features* features) { delete features; }

cep_status cep_train(const cep_config* config, const cep_features* features, cep_task task, int include_validation,
                     cep_model** model, char** report) {
  return guarded([&] {
    require(config, "config");
    require(features, "features");
    require(model, "model");
    if (task != CEP_TASK_DETECT && task != CEP_TASK_RECOGNIZE) throw DomainError("train: unknown task");
    const RunConfig& c = config->value;
    const FeatureTable& t = features->table;
    if (t.fingerprint != fingerprint_for(c, t.kind)) {
      throw ConfigError("train: feature table fingerprint " + t.fingerprint +
                        " does not match the configuration (" + fingerprint_for(c, t.kind) +
                        "); re-extract with this configuration");
    }
    const LabeledDataset d = training_set(t, task, include_validation != 0);
    CvOptions opts;
    opts.grid = c.grid;
    opts.k = c.folds;
    opts.seed = c.seed;
    opts.tol = c.svm_tol;
    opts.threads = c.threads;
    CvResult cv = grid_search_cv(d, opts);
    cv.model.fingerprint = t.fingerprint;

    ModelFile mf;
    mf.model = std::move(cv.model);
    mf.task = task == CEP_TASK_DETECT ? "detect" : "recognize";
    mf.feature_kind = t.kind;
    if (t.kind == "mfcc") mf.mfcc = c.mfcc;
    else mf.bands = c.bands;
    if (report) *report = dup_string(format_cv_report(cv.report, d.class_names, mf.task, t.kind, utc_timestamp()));
    *model = new cep_model{std::move(mf)};
  });
}

cep_status cep_model_save(const cep_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    save_model(path, model->file);
  });
}

cep_status cep_model_load(const char* path, cep_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new cep_model{load_model(path)};
  });
}

cep_status cep_model_task(const cep_model* model, cep_task* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = model->file.task == "detect" ? CEP_TASK_DETECT : CEP_TASK_RECOGNIZE;
  });
}

void cep_model_free(cep_model* model) { delete model; }

cep_status cep_predict(const cep_model* model, const cep_config* config, const cep_dataset* dataset, char** verdicts,
                       char** summary) {
  return guarded([&] {
    require(model, "model");
    require(config, "config");
    require(dataset, "dataset");
    require(verdicts, "verdicts");
    const ModelFile& mf = model->file;
    const std::string expected = fingerprint_for(config->value, mf.feature_kind);
    if (expected != mf.model.fingerprint) {
      throw ConfigError("predict: the model was trained on " + mf.feature_kind + " features with fingerprint " +
                        mf.model.fingerprint + " but the current configuration yields " + expected +
                        "; use the configuration the model was trained with");
    }
    const auto kind = mf.feature_kind == "bands" ? CEP_FEATURES_BANDS : CEP_FEATURES_MFCC;
    const FeatureTable t = extract_table(config->value, dataset->segments, kind);
    std::string v, s;
    predict_rows(mf, t, v, s);
    *verdicts = dup_string(v);
    if (summary) *summary = dup_string(s);
  });
}

cep_status cep_predict_features(const cep_model* model, const cep_features* features, char** verdicts,
                                char** summary) {
  return guarded([&] {
    require(model, "model");
    require(features, "features");
    require(verdicts, "verdicts");
    if (features->table.fingerprint != model->file.model.fingerprint) {
      throw ConfigError("predict: feature table fingerprint " + features->table.fingerprint +
                        " does not match the model's " + model->file.model.fingerprint);
    }
    std::string v, s;
    predict_rows(model->file, features->table, v, s);
    *verdicts = dup_string(v);
    if (summary) *summary = dup_string(s);
  });
}

cep_status cep_remove(const cep_config* config, const cep_dataset* source, const cep_dataset* target,
                      int has_target_labels, const cep_model* detector, cep_dataset** denoised, char** report) {
  return guarded([&] {
    require(config, "config");
    require(source, "source");
    require(target, "target");
    const RunConfig& c = config->value;
    if (detector != nullptr) {
      if (detector->file.task != "detect" || detector->file.model.fingerprint != c.mfcc.fingerprint()) {
        throw ConfigError("remove: the detector must be an MFCC detect model trained with this configuration");
      }
    }
    Algorithm1Options opts;
    opts.profile.k = c.removal_k;
    opts.profile.seed = c.seed;
    opts.profile.first_label = c.mfcc.coeff_lo;
    opts.has_target_labels = has_target_labels != 0;
    opts.reconstruction = c.reconstruction;
    opts.detector = detector ? &detector->file.model : nullptr;
    opts.threads = c.threads;
    const CepstralAnalyzer analyzer(c.mfcc);
    Algorithm1Result r = run_algorithm1(source->segments, target->segments, analyzer, opts);
    if (report) *report = dup_string(format_removal_report(r, opts, utc_timestamp()));
    if (denoised) {
      auto* d = new cep_dataset;
      for (std::size_t i = 0; i < r.denoised.size(); ++i) {
        const auto& t = target->segments[i];
        d->segments.push_back({std::move(r.denoised[i]), t.label, t.name, t.split});
      }
      *denoised = d;
    }
  });
}

cep_status cep_estimate_cost(uint64_t channels, uint64_t frame_len, uint64_t filters, uint64_t coeffs,
                             uint64_t* out) {
  return guarded([&] {
    require(out, "out");
    *out = estimate_cost({channels, frame_len, filters, coeffs});
  });
}

cep_status cep_bench_extract(const cep_config* config, const cep_dataset* dataset, cep_feature_kind kind,
                             double* seconds) {
  return guarded([&] {
    require(config, "config");
    require(dataset, "dataset");
    require(seconds, "seconds");
    const auto t0 = std::chrono::steady_clock::now();
    const FeatureTable t = extract_table(config->value, dataset->segments, kind);
    *seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
}

}  // extern "C"
