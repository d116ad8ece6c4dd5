/*
 * biasaudit C API
 *
 * Shared-library surface over the bias-audit core: corpus generation against
 * chat-completions endpoints, JSON Lines corpus handling, and the three
 * group-comparison analyses (weighted log-odds, linear SVM features,
 * Jensen-Shannon divergence contributions).
 *
 * Conventions: every fallible call returns ba_status; BA_OK is 0. On failure
 * ba_last_error_message() describes the problem for the calling thread.
 * Strings returned through char** out-parameters are heap-allocated and must
 * be released with ba_string_free(). Opaque handles have matching _free
 * functions. Structured results are UTF-8 JSON strings.
 */

#ifndef BIASAUDIT_H
#define BIASAUDIT_H

#include <stddef.h>

#if defined(_WIN32)
#define BA_API __declspec(dllexport)
#else
#define BA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ba_status {
  BA_OK = 0,
  BA_ERROR = 1,
  BA_ERROR_INVALID_ARGUMENT = 2,
  BA_ERROR_IO = 3,
  BA_ERROR_PARSE = 4,
  BA_ERROR_VALIDATION = 5,
  BA_ERROR_EMPTY_INPUT = 6,
  BA_ERROR_DEGENERATE = 7,
  BA_ERROR_ZERO_DIVERGENCE = 8,
  BA_ERROR_CLASS_TOO_SMALL = 9,
  BA_ERROR_ENDPOINT = 10,
  BA_ERROR_AUTH = 11,
  /* Generation finished but some cells exhausted their retries. */
  BA_ERROR_PARTIAL = 12
} ba_status;

typedef struct ba_corpus ba_corpus;
typedef struct ba_lexicon ba_lexicon;

BA_API const char* ba_version(void);

/* Message for the most recent failure on this thread; never NULL. */
BA_API const char* ba_last_error_message(void);

BA_API void ba_string_free(char* s);

/* ------------------------------------------------------------------ corpus */

BA_API ba_status ba_corpus_load(const char* path, ba_corpus** out);
BA_API ba_status ba_corpus_save(const ba_corpus* corpus, const char* path);
BA_API void ba_corpus_free(ba_corpus* corpus);
BA_API ba_status ba_corpus_record_count(const ba_corpus* corpus, size_t* out);

/* Quality summary: record count, per-group counts, grid completeness,
 * responses without exactly 10 products, raw responses that no longer
 * reparse to their stored products. */
BA_API ba_status ba_corpus_validate(const ba_corpus* corpus, char** summary_json);

/* Space-joined text of one persona cell. field is "item", "reason" or
 * "both"; race/gender accept file labels or lenient variants ("asian",
 * "middle-eastern"). An absent group yields an empty string. */
BA_API ba_status ba_corpus_group_text(const ba_corpus* corpus, const char* race,
                                      const char* gender, const char* field, char** text_out);

/* -------------------------------------------------------- text operations */

/* Parses one model response into ordered [name, reason] pairs (JSON array of
 * two-element arrays), applying the bounded repair pass first: code fences
 * stripped, trailing commas before '}' removed, text outside the outermost
 * braces dropped. */
BA_API ba_status ba_parse_response(const char* raw, char** pairs_json);

/* Lowercased [a-z0-9]+ tokens as a JSON array. Hyphens and apostrophes are
 * deleted so "Noise-Canceling" yields "noisecanceling". */
BA_API ba_status ba_tokenize(const char* text, char** tokens_json);

BA_API ba_status ba_lexicon_default(ba_lexicon** out);
BA_API ba_status ba_lexicon_load(const char* path, ba_lexicon** out);
BA_API void ba_lexicon_free(ba_lexicon* lexicon);

/* Removes whole-token lexicon matches from a JSON array of tokens. */
BA_API ba_status ba_anonymize_tokens(const ba_lexicon* lexicon, const char* tokens_json,
                                     char** tokens_out);

/* --------------------------------------------------------- direct statistics */

/* Weighted log-odds with an informative Dirichlet prior between two raw
 * texts (tokenized internally). Returns every shared-vocabulary word as
 * {"word","delta","var_marked","var_unmarked","z","significant"}, sorted by
 * z descending. */
BA_API ba_status ba_marked_words_from_texts(const char* marked_text, const char* unmarked_text,
                                            double z_threshold, double laplace,
                                            long long min_count, char** rows_json);

/* Jensen-Shannon divergence between two raw texts plus per-word contribution
 * rows {"rank","word","contribution","percent","favored"}. top_k <= 0 keeps
 * all words; natural_log switches from base 2. */
BA_API ba_status ba_jsd_from_texts(const char* marked_text, const char* unmarked_text, int top_k,
                                   int natural_log, double* jsd_out, char** rows_json);

/* -------------------------------------------------------------- generation */

typedef struct ba_generation_options {
  const char* corpus_path; /* output JSON Lines file; existing cells are skipped */
  const char* groups;      /* "all" or comma-separated race:gender cells */
  int responses_per_group; /* default 15 */
  double temperature;      /* default 1.0 */
  const char* model_id;    /* NULL = "gpt-4o" live, "mock" offline */
  int max_retries;         /* extra attempts per cell, default 2 */
  long retry_backoff_ms;   /* sleep between attempts, default 250 */
  int use_mock;            /* 1 = bundled deterministic offline backend */
  const char* base_url;    /* chat-completions base, default api.openai.com/v1 */
  const char* api_key_env; /* environment variable holding the bearer key */
  long timeout_ms;         /* per-request timeout, default 30000 */
  int max_in_flight;       /* concurrent requests, default 4 */
  const char* cache_dir;   /* response cache directory; NULL disables caching */
} ba_generation_options;

BA_API void ba_generation_options_init(ba_generation_options* options);

/* Runs the generation job and appends to corpus_path, resuming if the file
 * already has records. Returns BA_OK on full success or BA_ERROR_PARTIAL when
 * some cells failed; summary_json reports records_total, records_new,
 * requests_issued and per-cell failures either way. */
BA_API ba_status ba_generate(const ba_generation_options* options, char** summary_json);

/* ---------------------------------------------------------------- analysis */

typedef struct ba_analysis_options {
  const char* method;       /* "marked-words", "jsd" or "svm" */
  const char* axis;         /* "race", "gender" or "combined" */
  const char* text_field;   /* "item", "reason", "both"; NULL = method default */
  int anonymize;            /* -1 = method default, 0 = off, 1 = on */
  int use_stopwords;        /* default 0 */
  const char* lexicon_path; /* NULL = builtin lexicon */
  double z_threshold;       /* marked-words, default 1.96 */
  double laplace;           /* marked-words additive smoothing, default 0 */
  int paper_mode;           /* marked-words: uniform 0.5 smoothing */
  long long min_count;      /* marked-words, default 0 */
  int top_k;                /* jsd rows per pair, default 20 */
  int natural_log;          /* jsd: base e instead of base 2 */
  double train_fraction;    /* svm, default 0.8 */
  double reg_c;             /* svm, default 1.0 */
  unsigned long long seed;  /* svm split/shuffle seed, default 42 */
  int abs_coefficients;     /* svm: rank by |coefficient| */
} ba_analysis_options;

BA_API void ba_analysis_options_init(ba_analysis_options* options);

/* Runs one method over every marked-vs-unmarked pair of the axis and writes
 * the report files under output_dir. summary_json lists pairs, per-pair
 * numbers and the files written. */
BA_API ba_status ba_analyze(const char* corpus_path, const ba_analysis_options* options,
                            const char* output_dir, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif /* BIASAUDIT_H */
