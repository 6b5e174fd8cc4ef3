#ifndef GIAT_H
#define GIAT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GiatStatus {
  GIAT_STATUS_OK = 0,
  GIAT_STATUS_NULL_POINTER = 1,
  GIAT_STATUS_INVALID_ARGUMENT = 2,
  GIAT_STATUS_IO = 3,
  GIAT_STATUS_FORMAT = 4,
  GIAT_STATUS_SHAPE = 5,
  GIAT_STATUS_MISMATCH = 6,
  GIAT_STATUS_NUMERIC = 7,
  GIAT_STATUS_PANIC = 8,
} GiatStatus;

/**
 * A loaded filter bank.
 */
typedef struct GiatBank GiatBank;

/**
 * A checkpoint paired with the filter bank it was trained against.
 */
typedef struct GiatModel GiatModel;

/**
 * Scores from [`giat_classification_metrics`]. `kappa` is NaN when
 * `kappa_defined` is false.
 */
typedef struct GiatMetrics {
  double accuracy;
  double macro_precision;
  double macro_recall;
  double kappa;
  bool kappa_defined;
} GiatMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *giat_version(void);

/**
 * Message for the last failed call on this thread, or NULL after a
 * successful one. Valid until the next giat call on the same thread.
 */
const char *giat_last_error(void);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from a giat function documented as returning an owned
 * string, and must not be freed twice.
 */
void giat_string_free(char *s);

/**
 * Loads a filter bank JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum GiatStatus giat_bank_load(const char *path, struct GiatBank **out);

/**
 * Releases a bank. NULL is ignored.
 *
 * # Safety
 * `bank` must come from [`giat_bank_load`] and not be used afterwards.
 */
void giat_bank_free(struct GiatBank *bank);

/**
 * Number of classes, curves, and the filter width.
 *
 * # Safety
 * `bank` must be a live handle; the outputs must be writable.
 */
enum GiatStatus giat_bank_shape(const struct GiatBank *bank,
                                size_t *n_classes,
                                size_t *n_curves,
                                size_t *width);

/**
 * Geological similarity `S` for samples `start..start+len` of a well.
 *
 * The responses are computed over the whole well before the window is cut
 * out. `curves` holds `n_curves × n_samples` values in the bank's curve
 * order and `out` receives `len × len` values, row-major.
 *
 * # Safety
 * `curves` must hold `n_curves * n_samples` doubles and `out` room for
 * `len * len`.
 */
enum GiatStatus giat_bank_similarity(const struct GiatBank *bank,
                                     const double *curves,
                                     size_t n_samples,
                                     size_t start,
                                     size_t len,
                                     double *out);

/**
 * Loads a checkpoint and the filter bank it was trained with. The two must
 * agree on classes and curves.
 *
 * # Safety
 * Both paths must be NUL-terminated strings and `out` a writable pointer.
 */
enum GiatStatus giat_model_load(const char *checkpoint_path,
                                const char *bank_path,
                                struct GiatModel **out);

/**
 * Releases a model. NULL is ignored.
 *
 * # Safety
 * `model` must come from [`giat_model_load`] and not be used afterwards.
 */
void giat_model_free(struct GiatModel *model);

/**
 * Input curve count, class count and window length.
 *
 * # Safety
 * `model` must be a live handle; the outputs must be writable.
 */
enum GiatStatus giat_model_shape(const struct GiatModel *model,
                                 size_t *n_curves,
                                 size_t *n_classes,
                                 size_t *seq_len);

/**
 * Name of class `index`. Free the string with [`giat_string_free`].
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum GiatStatus giat_model_class_name(const struct GiatModel *model, size_t index, char **out);

/**
 * Name of input curve `index`. Free the string with [`giat_string_free`].
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum GiatStatus giat_model_curve_name(const struct GiatModel *model, size_t index, char **out);

/**
 * Classifies every sample of one well.
 *
 * With `normalize` set, raw curves are standardized with the statistics
 * stored in the checkpoint first. `labels` receives `n_samples` class
 * indices; `probabilities`, if not NULL, receives `n_samples × n_classes`
 * values, row-major.
 *
 * # Safety
 * `curves` must hold `n_curves * n_samples` doubles, `labels` room for
 * `n_samples`, and a non-NULL `probabilities` room for
 * `n_samples * n_classes`.
 */
enum GiatStatus giat_model_predict(const struct GiatModel *model,
                                   const double *curves,
                                   size_t n_samples,
                                   bool normalize_input,
                                   uint32_t *labels,
                                   double *probabilities);

/**
 * Accuracy, macro precision, macro recall and Cohen's kappa for `n` paired
 * labels in `0..n_classes`.
 *
 * # Safety
 * `truth` and `predicted` must each hold `n` values; `out` must be writable.
 */
enum GiatStatus giat_classification_metrics(const uint32_t *truth,
                                            const uint32_t *predicted,
                                            size_t n,
                                            size_t n_classes,
                                            struct GiatMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GIAT_H */
