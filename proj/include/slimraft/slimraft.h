/*
 * C interface to the slimraft toolchain.
 *
 * Every fallible call returns a slimraft_status. On failure a description is
 * available from slimraft_last_error() on the calling thread until the next
 * call on that thread. Strings handed out through char** parameters are
 * owned by the caller and must be released with slimraft_string_free().
 * Handles are opaque; release each with its matching *_free function.
 */
#ifndef SLIMRAFT_H
#define SLIMRAFT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SLIMRAFT_BUILDING)
#    define SLIMRAFT_API __declspec(dllexport)
#  else
#    define SLIMRAFT_API __declspec(dllimport)
#  endif
#else
#  define SLIMRAFT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum slimraft_status {
  SLIMRAFT_OK = 0,
  SLIMRAFT_ERR_INVALID_ARGUMENT = 1,
  SLIMRAFT_ERR_IO = 2,
  SLIMRAFT_ERR_PARSE = 3,
  SLIMRAFT_ERR_INVALID_LENGTH = 4,
  SLIMRAFT_ERR_NON_DIGIT = 5,
  SLIMRAFT_ERR_CHAPTER_OUT_OF_RANGE = 6,
  SLIMRAFT_ERR_DUPLICATE_CODE = 7,
  SLIMRAFT_ERR_MISSING_ANCESTOR = 8,
  SLIMRAFT_ERR_UNKNOWN_CODE = 9,
  SLIMRAFT_ERR_EMPTY_TABLE = 10,
  SLIMRAFT_ERR_UNKNOWN_PLACEHOLDER = 11,
  SLIMRAFT_ERR_DUPLICATE_TEMPLATE_ID = 12,
  SLIMRAFT_ERR_EMPTY_TEMPLATE_SET = 13,
  SLIMRAFT_ERR_DUPLICATE_VARIANT = 14,
  SLIMRAFT_ERR_INCONSISTENT_VARIATIONS = 15,
  SLIMRAFT_ERR_RESIDUAL_PLACEHOLDER = 16,
  SLIMRAFT_ERR_INVALID_RECORD = 17,
  SLIMRAFT_ERR_HOLDOUT_TOO_LARGE = 18,
  SLIMRAFT_ERR_BUDGET_EXHAUSTED = 19,
  SLIMRAFT_ERR_CLIENT = 20,
  SLIMRAFT_ERR_UNPARSABLE_VERDICT = 21,
  SLIMRAFT_ERR_NON_CANONICAL_OUTPUT = 22,
  SLIMRAFT_ERR_EMPTY_VERDICT_SET = 23,
  SLIMRAFT_ERR_ALL_ITEMS_FAILED = 24,
  SLIMRAFT_ERR_VERSION_MISMATCH = 25,
  SLIMRAFT_ERR_INTERNAL = 99
} slimraft_status;

typedef struct slimraft_table slimraft_table;
typedef struct slimraft_index slimraft_index;
typedef struct slimraft_client slimraft_client;

SLIMRAFT_API const char* slimraft_version(void);
SLIMRAFT_API const char* slimraft_status_name(slimraft_status status);
SLIMRAFT_API const char* slimraft_last_error(void);
SLIMRAFT_API void slimraft_string_free(char* s);

/* ---- nomenclature ------------------------------------------------------ */

/* Parses `text` and writes it back in plain (dotted = 0) or dotted form. */
SLIMRAFT_API slimraft_status slimraft_code_format(const char* text, int dotted,
                                                  char** out);

/* JSON array of ancestor codes (plain digits), shallowest first. */
SLIMRAFT_API slimraft_status slimraft_code_ancestors(const char* text,
                                                     char** out_json);

/* strict != 0 rejects entries missing their chapter or heading row. */
SLIMRAFT_API slimraft_status slimraft_table_load(const char* path, int strict,
                                                 slimraft_table** out);
SLIMRAFT_API void slimraft_table_free(slimraft_table* table);
SLIMRAFT_API size_t slimraft_table_size(const slimraft_table* table);

/* {"source","entries","levels":{...},"violations":[...],"warnings":[...]} */
SLIMRAFT_API slimraft_status slimraft_table_report(const slimraft_table* table,
                                                   char** out_json);
SLIMRAFT_API slimraft_status slimraft_table_category_path(
    const slimraft_table* table, const char* code, char** out);

/* ---- corpus ------------------------------------------------------------ */

typedef struct slimraft_corpus_options {
  const char* nomenclature_path;
  const char* templates_path;
  const char* variations_path;    /* optional */
  const char* records_path;
  const char* abbreviations_path; /* optional */
  const char* corpus_out_path;
  const char* manifest_out_path;
  const char* instruction;        /* optional; Portuguese default */
  uint64_t seed;
  unsigned threads;
  int lenient;                    /* accept tables with missing ancestors */
} slimraft_corpus_options;

/* Writes the corpus and manifest; *out_plan_json receives the manifest. */
SLIMRAFT_API slimraft_status slimraft_corpus_generate(
    const slimraft_corpus_options* options, char** out_plan_json);

typedef struct slimraft_split_options {
  const char* records_path;
  size_t holdout;
  uint64_t seed;
  const char* train_out_path;
  const char* eval_out_path;
  const char* templates_path;      /* optional, with the next two */
  const char* nomenclature_path;   /* optional */
  const char* eval_items_out_path; /* optional */
  const char* instruction;         /* optional */
} slimraft_split_options;

SLIMRAFT_API slimraft_status slimraft_corpus_split(
    const slimraft_split_options* options, char** out_summary_json);

/* Generates `count` paraphrases per template and writes a variations file. */
SLIMRAFT_API slimraft_status slimraft_variations_generate(
    const char* templates_path, int count, int retry_budget,
    slimraft_client* client, const char* out_path, char** out_json);

/* dictionary_path: JSON object abbreviation -> expansion. */
SLIMRAFT_API slimraft_status slimraft_normalize_description(
    const char* text, const char* dictionary_path, char** out);

/* ---- retrieval --------------------------------------------------------- */

SLIMRAFT_API slimraft_status slimraft_index_build(const slimraft_table* table,
                                                  slimraft_index** out);
SLIMRAFT_API slimraft_status slimraft_index_save(const slimraft_index* index,
                                                 const char* path);
SLIMRAFT_API slimraft_status slimraft_index_load(const char* path,
                                                 slimraft_index** out);
SLIMRAFT_API void slimraft_index_free(slimraft_index* index);
SLIMRAFT_API size_t slimraft_index_doc_count(const slimraft_index* index);

/* {"empty_query":bool,"hits":[{"code","score","text"}]} */
SLIMRAFT_API slimraft_status slimraft_index_search(const slimraft_index* index,
                                                   const char* query, size_t k,
                                                   char** out_json);

/* Retrieves the top-k contexts for `question` and lays out the user message.
 * instruction may be NULL for the default. */
SLIMRAFT_API slimraft_status slimraft_index_assemble_prompt(
    const slimraft_index* index, const char* question, size_t k,
    const char* instruction, char** out_prompt);

/* Lays out a user message from a JSON array of context strings. */
SLIMRAFT_API slimraft_status slimraft_assemble_prompt(const char* contexts_json,
                                                      const char* question,
                                                      const char* instruction,
                                                      char** out_prompt);

/* ---- chat clients ------------------------------------------------------ */

typedef struct slimraft_http_config {
  const char* endpoint;  /* full chat-completions URL */
  const char* model;
  const char* api_key;   /* optional; NULL reads SLIMRAFT_API_KEY */
  unsigned timeout_ms;
  int max_retries;
  unsigned initial_backoff_ms;
  double rate_per_second;
} slimraft_http_config;

SLIMRAFT_API slimraft_status slimraft_client_http_create(
    const slimraft_http_config* config, slimraft_client** out);

/* responses_json: JSON array of reply strings, replayed in order. */
SLIMRAFT_API slimraft_status slimraft_client_scripted_create(
    const char* responses_json, int cycle, slimraft_client** out);

/* Offline judge: 10 for an exact match, 0 otherwise, refuses empty answers. */
SLIMRAFT_API slimraft_status slimraft_client_exact_match_judge_create(
    slimraft_client** out);

SLIMRAFT_API void slimraft_client_free(slimraft_client* client);

/* messages_json: [{"role":..., "content":...}, ...] */
SLIMRAFT_API slimraft_status slimraft_client_complete(slimraft_client* client,
                                                      const char* messages_json,
                                                      char** out_reply);

/* ---- evaluation -------------------------------------------------------- */

/* pattern may be NULL for the default canonical question pattern. */
SLIMRAFT_API slimraft_status slimraft_reformulate(slimraft_client* client,
                                                  const char* raw_query,
                                                  const char* fewshot_prompt,
                                                  const char* pattern,
                                                  char** out_question);

typedef struct slimraft_eval_options {
  const char* rubric;  /* optional */
  unsigned concurrency;
  double rate_per_second;
  int parse_retries;
} slimraft_eval_options;

/* Judges an eval-items JSONL file, one report per model tag. judged/total
 * receive the overall coverage. */
SLIMRAFT_API slimraft_status slimraft_eval_run(
    const char* items_path, slimraft_client* client,
    const slimraft_eval_options* options, char** out_report_json,
    char** out_table, size_t* out_judged, size_t* out_total);

/* {"model_tag","average","std_dev","min","max",...} */
SLIMRAFT_API slimraft_status slimraft_aggregate(const double* scores, size_t n,
                                                const char* model_tag,
                                                char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* SLIMRAFT_H */
