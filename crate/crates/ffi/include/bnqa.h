#ifndef BNQA_H
#define BNQA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every call.
 */
typedef enum BnqaStatus {
  BNQA_STATUS_OK = 0,
  /**
   * Null pointer, invalid UTF-8 or an out-of-range number.
   */
  BNQA_STATUS_INVALID_ARGUMENT = 1,
  /**
   * A file or directory could not be read.
   */
  BNQA_STATUS_IO = 2,
  /**
   * Malformed dataset, vocabulary or input text.
   */
  BNQA_STATUS_DATA = 3,
  /**
   * Corrupt checkpoint or failed inference.
   */
  BNQA_STATUS_MODEL = 4,
  /**
   * An internal panic was caught at the boundary.
   */
  BNQA_STATUS_INTERNAL = 5,
} BnqaStatus;

/**
 * Loaded checkpoint. Opaque to C.
 */
typedef struct BnqaModel BnqaModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *bnqa_last_error(void);

/**
 * Library version as a static string.
 */
const char *bnqa_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void bnqa_string_free(char *s);

/**
 * Loads a checkpoint directory.
 *
 * # Safety
 * `checkpoint_dir` must be a valid C string and `out` writable.
 */
enum BnqaStatus bnqa_model_load(const char *checkpoint_dir, struct BnqaModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from `bnqa_model_load` and not have been freed.
 */
void bnqa_model_free(struct BnqaModel *model);

/**
 * Short content hash identifying the loaded weights.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum BnqaStatus bnqa_model_id(const struct BnqaModel *model, char **out);

/**
 * Answers `question` over `context`. Writes a JSON array of up to `k`
 * answers `[{"text", "char_start", "char_end", "score"}]`, best first, with
 * code-point offsets into the NFC context. The array is empty when the
 * context has no answerable token.
 *
 * # Safety
 * `model` must be a live handle, the strings valid and `out_json` writable.
 */
enum BnqaStatus bnqa_answer(const struct BnqaModel *model,
                            const char *context,
                            const char *question,
                            uint32_t k,
                            uint32_t max_answer_tokens,
                            char **out_json);

/**
 * Exact match (0 or 1) of `prediction` against any of `n_golds` answers.
 *
 * # Safety
 * `golds` must point to `n_golds` valid C strings; `out` must be writable.
 */
enum BnqaStatus bnqa_exact_match(const char *prediction,
                                 const char *const *golds,
                                 uintptr_t n_golds,
                                 uint8_t *out);

/**
 * Token F1 in [0, 1], the maximum over `n_golds` answers.
 *
 * # Safety
 * `golds` must point to `n_golds` valid C strings; `out` must be writable.
 */
enum BnqaStatus bnqa_token_f1(const char *prediction,
                              const char *const *golds,
                              uintptr_t n_golds,
                              double *out);

/**
 * The normalized form used by both metrics.
 *
 * # Safety
 * `text` must be a valid C string and `out` writable.
 */
enum BnqaStatus bnqa_normalize_answer(const char *text, char **out);

/**
 * Validates a dataset file and writes the report as JSON
 * (`{"errors": [{"subject", "code", "message"}], "paragraphs", "questions", "answers"}`).
 * A dataset with validation errors still returns `Ok`; an unreadable or
 * malformed file does not.
 *
 * # Safety
 * `path` must be a valid C string and `out_json` writable.
 */
enum BnqaStatus bnqa_validate_dataset(const char *path, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BNQA_H */
