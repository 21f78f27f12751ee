/* C interface to the cepstra library. Every function returns a cep_status;
 * on failure cep_last_error() describes the problem for the calling thread.
 * Handles are opaque and owned by the caller; release them with the matching
 * *_free function. Strings returned through char** are released with
 * cep_string_free. */
#ifndef CEPSTRA_H
#define CEPSTRA_H

#include <stddef.h>
#include <stdint.h>

#if defined(CEPSTRA_BUILDING_LIBRARY)
#define CEPSTRA_API __attribute__((visibility("default")))
#else
#define CEPSTRA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cep_status {
  CEP_OK = 0,
  CEP_ERR_INTERNAL = 1,   /* unexpected failure (allocation, filesystem) */
  CEP_ERR_VALIDATION = 2, /* bad argument, configuration or training precondition */
  CEP_ERR_PARSE = 3,      /* malformed input file */
  CEP_ERR_NUMERICAL = 4   /* non-finite or singular computation */
} cep_status;

typedef enum cep_feature_kind { CEP_FEATURES_MFCC = 0, CEP_FEATURES_BANDS = 1 } cep_feature_kind;
typedef enum cep_task { CEP_TASK_DETECT = 0, CEP_TASK_RECOGNIZE = 1 } cep_task;

typedef struct cep_config cep_config;
typedef struct cep_dataset cep_dataset;
typedef struct cep_features cep_features;
typedef struct cep_model cep_model;

CEPSTRA_API const char* cep_version(void);
CEPSTRA_API const char* cep_last_error(void);
CEPSTRA_API void cep_string_free(char* s);

/* Configuration. */
CEPSTRA_API cep_status cep_config_preset(const char* name, cep_config** out);
CEPSTRA_API cep_status cep_config_load(const char* path, cep_config** out);
CEPSTRA_API cep_status cep_config_set_seed(cep_config* config, uint64_t seed);
CEPSTRA_API cep_status cep_config_set_threads(cep_config* config, size_t threads);
/* counts[i] segments of class i (clean, blinkHard, lookUp, lookDown, lookLeft, lookRight); n must be 6. */
CEPSTRA_API cep_status cep_config_set_class_mix(cep_config* config, const size_t* counts, size_t n);
/* Channel count, frame length, filter count and retained coefficient count. */
CEPSTRA_API cep_status cep_config_cost_params(const cep_config* config, uint64_t* channels, uint64_t* frame_len,
                                              uint64_t* filters, uint64_t* coeffs);
CEPSTRA_API cep_status cep_config_to_json(const cep_config* config, char** out);
CEPSTRA_API cep_status cep_config_fingerprint(const cep_config* config, cep_feature_kind kind, char** out);
CEPSTRA_API void cep_config_free(cep_config* config);

/* Segment collections. */
CEPSTRA_API cep_status cep_dataset_synthesize(const cep_config* config, cep_dataset** out);
CEPSTRA_API cep_status cep_dataset_load(const char* path, cep_dataset** out);
CEPSTRA_API cep_status cep_dataset_save(const cep_dataset* dataset, const char* dir);
/* Keeps the segments whose manifest split equals `split`. */
CEPSTRA_API cep_status cep_dataset_filter_split(const cep_dataset* dataset, const char* split, cep_dataset** out);
CEPSTRA_API size_t cep_dataset_size(const cep_dataset* dataset);
CEPSTRA_API void cep_dataset_free(cep_dataset* dataset);

/* Feature tables. */
CEPSTRA_API cep_status cep_extract(const cep_config* config, const cep_dataset* dataset, cep_feature_kind kind,
                                   cep_features** out);
CEPSTRA_API cep_status cep_features_save(const cep_features* features, const char* path);
CEPSTRA_API cep_status cep_features_load(const char* path, cep_features** out);
CEPSTRA_API size_t cep_features_rows(const cep_features* features);
CEPSTRA_API size_t cep_features_width(const cep_features* features);
CEPSTRA_API void cep_features_free(cep_features* features);

/* Training and prediction. Training uses rows outside the "validation" split
 * unless include_validation is non-zero; report receives the CV report JSON. */
CEPSTRA_API cep_status cep_train(const cep_config* config, const cep_features* features, cep_task task,
                                 int include_validation, cep_model** model, char** report);
CEPSTRA_API cep_status cep_model_save(const cep_model* model, const char* path);
CEPSTRA_API cep_status cep_model_load(const char* path, cep_model** out);
CEPSTRA_API cep_status cep_model_task(const cep_model* model, cep_task* out);
CEPSTRA_API void cep_model_free(cep_model* model);

/* Extracts features with `config` (refused when its fingerprint differs from
 * the model's) and writes one CSV verdict row per segment into *verdicts.
 * `summary` receives a one-line human-readable summary. */
CEPSTRA_API cep_status cep_predict(const cep_model* model, const cep_config* config, const cep_dataset* dataset,
                                   char** verdicts, char** summary);
CEPSTRA_API cep_status cep_predict_features(const cep_model* model, const cep_features* features, char** verdicts,
                                            char** summary);

/* Profile from `source`, removal on `target`. detector may be NULL. */
CEPSTRA_API cep_status cep_remove(const cep_config* config, const cep_dataset* source, const cep_dataset* target,
                                  int has_target_labels, const cep_model* detector, cep_dataset** denoised,
                                  char** report);

/* C (N/2 log2 N + M N + M L). */
CEPSTRA_API cep_status cep_estimate_cost(uint64_t channels, uint64_t frame_len, uint64_t filters, uint64_t coeffs,
                                         uint64_t* out);
/* Wall-clock seconds to extract features from every segment. */
CEPSTRA_API cep_status cep_bench_extract(const cep_config* config, const cep_dataset* dataset, cep_feature_kind kind,
                                         double* seconds);

#ifdef __cplusplus
}
#endif

#endif /* CEPSTRA_H */
