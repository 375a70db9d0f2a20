#ifndef TAXOFORGE_H
#define TAXOFORGE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TxfStatus {
  TXF_STATUS_OK = 0,
  TXF_STATUS_NULL_ARGUMENT = 1,
  TXF_STATUS_INVALID_UTF8 = 2,
  TXF_STATUS_CONFIG = 3,
  TXF_STATUS_PARSE = 4,
  TXF_STATUS_PRECONDITION = 5,
  TXF_STATUS_NOT_FOUND = 6,
  TXF_STATUS_IO = 7,
  TXF_STATUS_SCORER = 8,
  TXF_STATUS_STAGE = 9,
  TXF_STATUS_INTERNAL = 10,
  TXF_STATUS_PANIC = 11,
} TxfStatus;

/**
 * Ingested corpus.
 */
typedef struct TxfCorpus TxfCorpus;

/**
 * Seed or constructed taxonomy.
 */
typedef struct TxfTaxonomy TxfTaxonomy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *txf_version(void);

/**
 * Message of the last failed call on this thread, empty after a success.
 * Valid until the next `txf_*` call on the same thread; do not free.
 */
const char *txf_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void txf_string_free(char *s);

/**
 * Ingests UTF-8 text, one document per line.
 *
 * # Safety
 * `text` must be a valid nul-terminated string and `out` a valid pointer.
 */
enum TxfStatus txf_corpus_from_text(const char *text, uint64_t min_count, struct TxfCorpus **out);

/**
 * # Safety
 * `corpus` must be null or a handle from [`txf_corpus_from_text`], not yet freed.
 */
void txf_corpus_free(struct TxfCorpus *corpus);

/**
 * Vocabulary size and sentence count.
 *
 * # Safety
 * `corpus` must be a live handle; the out pointers must be valid or null.
 */
enum TxfStatus txf_corpus_stats(const struct TxfCorpus *corpus, size_t *vocab, size_t *sentences);

/**
 * Number of sentences containing both terms.
 *
 * # Safety
 * `corpus` must be a live handle, `a` and `b` valid strings, `out` valid.
 */
enum TxfStatus txf_corpus_cooccurrence(const struct TxfCorpus *corpus,
                                       const char *a,
                                       const char *b,
                                       size_t *out);

/**
 * Parses a taxonomy (JSON object, JSON forest, or tab-separated edge list).
 *
 * # Safety
 * `text` must be a valid string and `out` a valid pointer.
 */
enum TxfStatus txf_taxonomy_load(const char *text, struct TxfTaxonomy **out);

/**
 * # Safety
 * `tax` must be null or a live taxonomy handle.
 */
void txf_taxonomy_free(struct TxfTaxonomy *tax);

/**
 * # Safety
 * `tax` must be a live handle and `out` valid.
 */
enum TxfStatus txf_taxonomy_node_count(const struct TxfTaxonomy *tax, size_t *out);

/**
 * Structural JSON of the taxonomy; free with [`txf_string_free`].
 *
 * # Safety
 * `tax` must be a live handle and `out` valid.
 */
enum TxfStatus txf_taxonomy_to_json(const struct TxfTaxonomy *tax, char **out);

/**
 * Relation precision, recall and F1 of `pred` against gold
 * `ancestor<TAB>descendant` lines. `transitive` selects ancestor pairs
 * (non-zero) or direct edges (zero).
 *
 * # Safety
 * `pred` must be a live handle, `gold` a valid string; out pointers valid or null.
 */
enum TxfStatus txf_relation_f1(const struct TxfTaxonomy *pred,
                               const char *gold,
                               int32_t transitive,
                               double *precision,
                               double *recall,
                               double *f1);

/**
 * KL(uniform || p) of a three-class distribution ordered
 * (forward, backward, none).
 *
 * # Safety
 * `p` must point to three readable doubles and `out` be valid.
 */
enum TxfStatus txf_kl_from_uniform(const double *p, double *out);

/**
 * Runs the full pipeline from a TOML config file. On success `out_tax`
 * receives the constructed taxonomy and, when non-null, `out_report`
 * the run report as JSON (free with [`txf_string_free`]).
 *
 * # Safety
 * `config_path` must be a valid string; out pointers valid or null.
 */
enum TxfStatus txf_run(const char *config_path, struct TxfTaxonomy **out_tax, char **out_report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAXOFORGE_H */
