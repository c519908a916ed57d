#ifndef IPREDICT_H
#define IPREDICT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IpStatus {
  IP_STATUS_OK = 0,
  IP_STATUS_NULL_POINTER = 1,
  IP_STATUS_INVALID_UTF8 = 2,
  IP_STATUS_INVALID_ARGUMENT = 3,
  IP_STATUS_IO = 4,
  IP_STATUS_UNKNOWN_SOURCE = 5,
  IP_STATUS_OUT_OF_BOUNDS = 6,
  IP_STATUS_ACCEPTED = 7,
  IP_STATUS_DECODE = 8,
  IP_STATUS_PANIC = 99,
} IpStatus;

/**
 * A loaded model, shareable by any number of sessions.
 */
typedef struct IpScorer IpScorer;

/**
 * One interactive correction loop.
 */
typedef struct IpSession IpSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *ip_last_error(void);

/**
 * Builds an n-best scorer from vocabulary text (one word per line, with
 * `#eos`/`#unk` marker lines) and `source_id<TAB>logprob<TAB>candidate`
 * lines.
 *
 * # Safety
 * Both strings must be valid NUL-terminated; `out` must be writable.
 */
enum IpStatus ip_scorer_nbest_parse(const char *vocab_text,
                                    const char *nbest_text,
                                    struct IpScorer **out_scorer);

/**
 * As [`ip_scorer_nbest_parse`], reading both tables from files.
 *
 * # Safety
 * Both paths must be valid NUL-terminated; `out` must be writable.
 */
enum IpStatus ip_scorer_nbest_load(const char *vocab_path,
                                   const char *nbest_path,
                                   struct IpScorer **out_scorer);

/**
 * Trains the default n-gram scorer on line-aligned source and target text.
 * `vocab_text` may be null, in which case the vocabulary is built from the
 * target side.
 *
 * # Safety
 * Non-null strings must be valid NUL-terminated; `out` must be writable.
 */
enum IpStatus ip_scorer_ngram_train(const char *vocab_text,
                                    const char *source_text,
                                    const char *target_text,
                                    struct IpScorer **out_scorer);

/**
 * # Safety
 * `scorer` must come from an `ip_scorer_*` constructor, or be null.
 */
void ip_scorer_free(struct IpScorer *scorer);

/**
 * Starts a session and decodes the initial prediction. `source_id` may be
 * null; lookup-based scorers key on it when given and on `source_text`
 * otherwise. `beam_size` 0 selects the default.
 *
 * # Safety
 * `scorer` must be a live handle; strings valid NUL-terminated or null where
 * allowed; `out_session` writable.
 */
enum IpStatus ip_session_new(const struct IpScorer *scorer,
                             const char *source_text,
                             const char *source_id,
                             uint32_t beam_size,
                             struct IpSession **out_session);

/**
 * Copies the current hypothesis into a new string; release it with
 * [`ip_string_free`].
 *
 * # Safety
 * `session` must be a live handle; `out_text` writable.
 */
enum IpStatus ip_session_hypothesis(const struct IpSession *session, char **out_text);

/**
 * Types `codepoint` at character `position` of the current hypothesis and
 * re-decodes.
 *
 * # Safety
 * `session` must be a live handle.
 */
enum IpStatus ip_session_feedback(struct IpSession *session,
                                  uintptr_t position,
                                  uint32_t codepoint);

/**
 * Declares the hypothesis complete at character `position`.
 *
 * # Safety
 * `session` must be a live handle.
 */
enum IpStatus ip_session_end_of_text(struct IpSession *session, uintptr_t position);

/**
 * Live effort counters. Any output pointer may be null.
 *
 * # Safety
 * `session` must be a live handle; non-null outputs writable.
 */
enum IpStatus ip_session_counters(const struct IpSession *session,
                                  uintptr_t *keystrokes,
                                  uintptr_t *mouse_actions,
                                  uintptr_t *validated_prefix_length);

/**
 * Accepts the current hypothesis (idempotent) and reports its KSMR.
 *
 * # Safety
 * `session` must be a live handle; `out_ksmr` writable or null.
 */
enum IpStatus ip_session_accept(struct IpSession *session, double *out_ksmr);

/**
 * # Safety
 * `session` must come from [`ip_session_new`], or be null.
 */
void ip_session_free(struct IpSession *session);

/**
 * # Safety
 * `s` must be a string returned by this library, or null.
 */
void ip_string_free(char *s);

/**
 * CharacTER of one hypothesis against one reference, on the 0-100 scale.
 *
 * # Safety
 * Strings valid NUL-terminated; `out_rate` writable.
 */
enum IpStatus ip_character_ter(const char *hypothesis, const char *reference, double *out_rate);

/**
 * Corpus BLEU-4 over `n` hypotheses, one reference each.
 *
 * # Safety
 * `hypotheses` and `references` must point to `n` valid strings each;
 * `out_rate` writable.
 */
enum IpStatus ip_bleu(const char *const *hypotheses,
                      const char *const *references,
                      uintptr_t n,
                      double *out_rate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IPREDICT_H */
