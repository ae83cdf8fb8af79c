#ifndef ROLECHAIN_H
#define ROLECHAIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RcStatus {
  RC_STATUS_OK = 0,
  RC_STATUS_NULL_POINTER = 1,
  RC_STATUS_INVALID_UTF8 = 2,
  /**
   * The bytes do not decode as a chain or transaction.
   */
  RC_STATUS_CORRUPT = 3,
  /**
   * A block of the chain breaks a consensus rule.
   */
  RC_STATUS_INVALID_BLOCK = 4,
  /**
   * The transaction is well formed but not valid at the tip.
   */
  RC_STATUS_INVALID_TX = 5,
  RC_STATUS_NOT_FOUND = 6,
  RC_STATUS_BUFFER_TOO_SMALL = 7,
  RC_STATUS_SCRIPT_ERROR = 8,
  RC_STATUS_ASSERTION_FAILED = 9,
  RC_STATUS_PANIC = 10,
} RcStatus;

/**
 * A validated chain.
 */
typedef struct RcChain RcChain;

/**
 * The outcome of a finished simulation run.
 */
typedef struct RcReport RcReport;

/**
 * Fee and minted amount of an accepted transaction.
 */
typedef struct RcTxVerdict {
  uint64_t fee;
  uint64_t minted;
} RcTxVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static name of a status code, e.g. `"InvalidTx"`.
 */
const char *rc_status_name(enum RcStatus status);

/**
 * Message for the last failure on this thread (empty after a success).
 *
 * # Safety
 * `buf` must be valid for `cap` bytes; `needed` must be valid.
 */
enum RcStatus rc_last_error(char *buf, size_t cap, size_t *needed);

/**
 * Decodes and fully validates a chain file with default node settings.
 *
 * # Safety
 * `data` must be valid for `len` bytes; `out` must be valid for a write.
 */
enum RcStatus rc_chain_open(const uint8_t *data, size_t len, struct RcChain **out);

/**
 * Releases a chain. Null is ignored.
 *
 * # Safety
 * `chain` must come from [`rc_chain_open`] and not be used afterwards.
 */
void rc_chain_free(struct RcChain *chain);

/**
 * # Safety
 * `chain` must be a live handle; `height` must be valid for a write.
 */
enum RcStatus rc_chain_height(const struct RcChain *chain, uint64_t *height);

/**
 * Writes the 32-byte tip hash, in the same byte order as its hex form.
 *
 * # Safety
 * `chain` must be a live handle; `hash` must be valid for 32 bytes.
 */
enum RcStatus rc_chain_tip_hash(const struct RcChain *chain, uint8_t *hash);

/**
 * Coin balance of a 32-byte account key at the tip.
 *
 * # Safety
 * `chain` must be a live handle; `account` valid for 32 bytes; `balance`
 * valid for a write.
 */
enum RcStatus rc_chain_balance(const struct RcChain *chain,
                               const uint8_t *account,
                               uint64_t *balance);

/**
 * Role bits (U=1, A=2, C=4, L=8, M=16) and lock flag of an account.
 * Returns `RC_STATUS_NOT_FOUND` for an account that holds no role output.
 *
 * # Safety
 * `chain` must be a live handle; `account` valid for 32 bytes; `roles` and
 * `locked` valid for a write.
 */
enum RcStatus rc_chain_roles(const struct RcChain *chain,
                             const uint8_t *account,
                             uint8_t *roles,
                             bool *locked);

/**
 * Validates a serialized transaction as the next block would see it.
 *
 * # Safety
 * `chain` must be a live handle; `tx` valid for `len` bytes; `verdict`
 * valid for a write.
 */
enum RcStatus rc_chain_validate_tx(const struct RcChain *chain,
                                   const uint8_t *tx,
                                   size_t len,
                                   struct RcTxVerdict *verdict);

/**
 * Parses and runs a NUL-terminated scenario script. With
 * `override_seed` set, `seed` replaces the script's seed.
 *
 * # Safety
 * `script` must be a NUL-terminated string; `out` valid for a write.
 */
enum RcStatus rc_run_scenario(const char *script,
                              bool override_seed,
                              uint64_t seed,
                              struct RcReport **out);

/**
 * Releases a report. Null is ignored.
 *
 * # Safety
 * `report` must come from [`rc_run_scenario`] and not be used afterwards.
 */
void rc_report_free(struct RcReport *report);

/**
 * The run trace as NUL-terminated text.
 *
 * # Safety
 * `report` must be a live handle; `buf` valid for `cap` bytes; `needed`
 * valid for a write.
 */
enum RcStatus rc_report_trace(const struct RcReport *report, char *buf, size_t cap, size_t *needed);

/**
 * The observer's final hierarchy as NUL-terminated DOT text.
 *
 * # Safety
 * As for [`rc_report_trace`].
 */
enum RcStatus rc_report_dot(const struct RcReport *report, char *buf, size_t cap, size_t *needed);

/**
 * The observer's best chain in chain-file encoding.
 *
 * # Safety
 * `report` must be a live handle; `buf` valid for `cap` bytes; `needed`
 * valid for a write.
 */
enum RcStatus rc_report_chain(const struct RcReport *report,
                              uint8_t *buf,
                              size_t cap,
                              size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROLECHAIN_H */
