#ifndef HANFORGE_H
#define HANFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Values are stable.
typedef enum HfStatus {
  HF_STATUS_OK = 0,
  HF_STATUS_NULL_ARGUMENT = 1,
  HF_STATUS_INVALID_UTF8 = 2,
  // Missing, corrupt or incompatible model file.
  HF_STATUS_MODEL_ERROR = 3,
  // Empty, over-long or otherwise unusable input text or word list.
  HF_STATUS_INPUT_ERROR = 4,
  // The corpus tag does not exist or belongs to another task.
  HF_STATUS_UNKNOWN_TAG = 5,
  // The model has no head for the requested task, or a bad argument.
  HF_STATUS_UNSUPPORTED = 6,
  HF_STATUS_INTERNAL = 7,
} HfStatus;

typedef enum HfTask {
  HF_TASK_CWS = 0,
  HF_TASK_POS = 1,
  HF_TASK_NER = 2,
  HF_TASK_DEP = 3,
} HfTask;

typedef enum HfFormat {
  // One JSON value per sentence.
  HF_FORMAT_JSON = 0,
  // Space-separated tokens; dependency output as tab-separated rows.
  HF_FORMAT_PLAIN = 1,
  // Tab-separated rows, one token per line.
  HF_FORMAT_CONLL = 2,
} HfFormat;

// An analysis session over a model.
typedef struct HfAnalyzer HfAnalyzer;

// A loaded model.
typedef struct HfModel HfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *hf_last_error(void);

// Library version as a static string.
const char *hf_version(void);

// Loads a model container.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum HfStatus hf_model_load(const char *path, struct HfModel **out);

// Releases a model. Analyzers created from it stay valid.
//
// # Safety
// `model` must come from [`hf_model_load`] and not be freed twice.
void hf_model_free(struct HfModel *model);

// Number of encoder layers, or 0 for a null model.
//
// # Safety
// `model` must be null or a live model handle.
size_t hf_model_num_layers(const struct HfModel *model);

// Creates an analyzer using each task's first corpus tag.
//
// # Safety
// `model` must be a live model handle and `out` a valid pointer.
enum HfStatus hf_analyzer_new(const struct HfModel *model, struct HfAnalyzer **out);

// # Safety
// `analyzer` must come from [`hf_analyzer_new`] and not be freed twice.
void hf_analyzer_free(struct HfAnalyzer *analyzer);

// Selects the corpus tag (annotation style) for that tag's task.
//
// # Safety
// `analyzer` must be a live handle and `tag` a NUL-terminated string.
enum HfStatus hf_analyzer_set_style(struct HfAnalyzer *analyzer, const char *tag);

// Installs a user word list (one word per line) with bias weight
// `weight`; a null `path` removes the lexicon.
//
// # Safety
// `analyzer` must be a live handle; `path` null or NUL-terminated.
enum HfStatus hf_analyzer_set_lexicon(struct HfAnalyzer *analyzer, const char *path, double weight);

// Analyses one sentence. On success `*out` receives a string to release
// with [`hf_string_free`].
//
// # Safety
// `analyzer` must be a live handle, `text` NUL-terminated, `out` valid.
enum HfStatus hf_analyze(const struct HfAnalyzer *analyzer,
                         const char *text,
                         enum HfTask task,
                         enum HfFormat format,
                         char **out);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or come from this library and not be freed twice.
void hf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HANFORGE_H */
