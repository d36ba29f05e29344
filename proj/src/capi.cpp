#include "slimraft/slimraft.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "slimraft/chat_client.hpp"
#include "slimraft/corpus.hpp"
#include "slimraft/error.hpp"
#include "slimraft/eval.hpp"
#include "slimraft/nomenclature.hpp"
#include "slimraft/pipeline.hpp"
#include "slimraft/retrieval.hpp"

struct slimraft_table {
  slimraft::NomenclatureTable table;
};

struct slimraft_index {
  slimraft::LexicalIndex index;
};

struct slimraft_client {
  std::shared_ptr<slimraft::ChatClient> client;
};

namespace {

using json = nlohmann::json;

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

slimraft_status fail(slimraft_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
slimraft_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return SLIMRAFT_OK;
  } catch (const slimraft::Error& e) {
    return fail(static_cast<slimraft_status>(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(SLIMRAFT_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SLIMRAFT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SLIMRAFT_ERR_INTERNAL, e.what());
  }
}

void require(bool condition, const char* what) {
  if (!condition) throw slimraft::Error(slimraft::Errc::InvalidArgument, what);
}

void emit(char** out, const std::string& value) {
  if (!out) return;
  *out = dup_string(value);
  if (!*out) throw std::bad_alloc();
}

std::optional<std::filesystem::path> opt_path(const char* p) {
  if (!p || !*p) return std::nullopt;
  return std::filesystem::path(p);
}

json report_json(const slimraft::EvalReport& r) {
  return json::parse(slimraft::report_to_json(std::span(&r, 1)))["reports"][0];
}

}  // namespace

extern "C" {

const char* slimraft_version(void) { return "0.1.0"; }

const char* slimraft_status_name(slimraft_status status) {
  if (status == SLIMRAFT_OK) return "Ok";
  if (status == SLIMRAFT_ERR_INTERNAL) return "Internal";
  if (status < SLIMRAFT_ERR_INVALID_ARGUMENT || status > SLIMRAFT_ERR_VERSION_MISMATCH)
    return "Unknown";
  return slimraft::errc_name(static_cast<slimraft::Errc>(status)).data();
}

const char* slimraft_last_error(void) { return g_last_error.c_str(); }

void slimraft_string_free(char* s) { std::free(s); }

slimraft_status slimraft_code_format(const char* text, int dotted, char** out) {
  return guarded([&] {
    require(text && out, "text and out are required");
    const auto code = slimraft::NcmCode::parse(text);
    emit(out, code.format(dotted ? slimraft::CodeStyle::Dotted : slimraft::CodeStyle::Plain));
  });
}

slimraft_status slimraft_code_ancestors(const char* text, char** out_json) {
  return guarded([&] {
    require(text && out_json, "text and out_json are required");
    json arr = json::array();
    for (const auto& a : slimraft::NcmCode::parse(text).ancestors()) arr.push_back(a.digits());
    emit(out_json, arr.dump());
  });
}

slimraft_status slimraft_table_load(const char* path, int strict, slimraft_table** out) {
  return guarded([&] {
    require(path && out, "path and out are required");
    *out = nullptr;
    auto table = slimraft::NomenclatureTable::load(
        path, strict ? slimraft::IntegrityMode::Strict : slimraft::IntegrityMode::Lenient);
    *out = new slimraft_table{std::move(table)};
  });
}

void slimraft_table_free(slimraft_table* table) { delete table; }

size_t slimraft_table_size(const slimraft_table* table) {
  return table ? table->table.size() : 0;
}

slimraft_status slimraft_table_report(const slimraft_table* table, char** out_json) {
  return guarded([&] {
    require(table && out_json, "table and out_json are required");
    emit(out_json, slimraft::table_report_json(table->table));
  });
}

slimraft_status slimraft_table_category_path(const slimraft_table* table, const char* code,
                                             char** out) {
  return guarded([&] {
    require(table && code && out, "table, code and out are required");
    emit(out, table->table.category_path(slimraft::NcmCode::parse(code)).rendered);
  });
}

slimraft_status slimraft_corpus_generate(const slimraft_corpus_options* options,
                                         char** out_plan_json) {
  return guarded([&] {
    require(options && options->nomenclature_path && options->templates_path &&
                options->records_path && options->corpus_out_path &&
                options->manifest_out_path,
            "nomenclature, templates, records and both output paths are required");
    slimraft::CorpusJob job;
    job.nomenclature = options->nomenclature_path;
    job.templates = options->templates_path;
    job.variations = opt_path(options->variations_path);
    job.records = options->records_path;
    job.abbreviations = opt_path(options->abbreviations_path);
    job.corpus_out = options->corpus_out_path;
    job.manifest_out = options->manifest_out_path;
    if (options->instruction) job.instruction = options->instruction;
    job.seed = options->seed;
    job.threads = options->threads;
    job.mode = options->lenient ? slimraft::IntegrityMode::Lenient
                                : slimraft::IntegrityMode::Strict;
    emit(out_plan_json, slimraft::run_corpus_job(job).manifest_json);
  });
}

slimraft_status slimraft_corpus_split(const slimraft_split_options* options,
                                      char** out_summary_json) {
  return guarded([&] {
    require(options && options->records_path && options->train_out_path &&
                options->eval_out_path,
            "records, train and eval paths are required");
    slimraft::SplitJob job;
    job.records = options->records_path;
    job.holdout = options->holdout;
    job.seed = options->seed;
    job.train_out = options->train_out_path;
    job.eval_out = options->eval_out_path;
    job.templates = opt_path(options->templates_path);
    job.nomenclature = opt_path(options->nomenclature_path);
    job.eval_items_out = opt_path(options->eval_items_out_path);
    if (options->instruction) job.instruction = options->instruction;
    emit(out_summary_json, slimraft::run_split_job(job).summary_json);
  });
}

slimraft_status slimraft_variations_generate(const char* templates_path, int count,
                                             int retry_budget, slimraft_client* client,
                                             const char* out_path, char** out_json) {
  return guarded([&] {
    require(templates_path && client && out_path, "templates, client and out are required");
    const auto templates = slimraft::load_templates(templates_path);
    slimraft::VariationOptions opts;
    opts.retry_budget = retry_budget;
    slimraft::VariationMap map;
    for (const auto& t : templates) {
      map.emplace(t.id, slimraft::generate_variations(t, count, *client->client, opts));
    }
    const auto text = slimraft::format_variations(map);
    slimraft::write_text_file(out_path, text);
    emit(out_json, text);
  });
}

slimraft_status slimraft_normalize_description(const char* text, const char* dictionary_path,
                                               char** out) {
  return guarded([&] {
    require(text && dictionary_path && out, "text, dictionary and out are required");
    const auto dict = slimraft::load_abbreviations(dictionary_path);
    emit(out, slimraft::normalize_description(text, dict));
  });
}

slimraft_status slimraft_index_build(const slimraft_table* table, slimraft_index** out) {
  return guarded([&] {
    require(table && out, "table and out are required");
    *out = nullptr;
    *out = new slimraft_index{slimraft::LexicalIndex::build(table->table)};
  });
}

slimraft_status slimraft_index_save(const slimraft_index* index, const char* path) {
  return guarded([&] {
    require(index && path, "index and path are required");
    index->index.save(path);
  });
}

slimraft_status slimraft_index_load(const char* path, slimraft_index** out) {
  return guarded([&] {
    require(path && out, "path and out are required");
    *out = nullptr;
    *out = new slimraft_index{slimraft::LexicalIndex::load(path)};
  });
}

void slimraft_index_free(slimraft_index* index) { delete index; }

size_t slimraft_index_doc_count(const slimraft_index* index) {
  return index ? index->index.doc_count() : 0;
}

slimraft_status slimraft_index_search(const slimraft_index* index, const char* query,
                                      size_t k, char** out_json) {
  return guarded([&] {
    require(index && query && out_json, "index, query and out_json are required");
    const auto result = index->index.search(query, k);
    json hits = json::array();
    for (const auto& h : result.hits) {
      hits.push_back({{"code", h.source_code.digits()}, {"score", h.score}, {"text", h.text}});
    }
    emit(out_json, json{{"empty_query", result.empty_query}, {"hits", std::move(hits)}}.dump());
  });
}

slimraft_status slimraft_index_assemble_prompt(const slimraft_index* index,
                                               const char* question, size_t k,
                                               const char* instruction, char** out_prompt) {
  return guarded([&] {
    require(index && question && out_prompt, "index, question and out are required");
    const auto result = index->index.search(question, k);
    emit(out_prompt,
         slimraft::assemble_prompt(result.hits, question,
                                   instruction ? instruction : slimraft::kDefaultInstruction));
  });
}

slimraft_status slimraft_assemble_prompt(const char* contexts_json, const char* question,
                                         const char* instruction, char** out_prompt) {
  return guarded([&] {
    require(contexts_json && question && out_prompt, "contexts, question and out are required");
    const auto arr = json::parse(contexts_json);
    require(arr.is_array(), "contexts_json must be a JSON array of strings");
    std::vector<slimraft::ContextDocument> docs;
    for (const auto& c : arr) {
      docs.push_back({c.get<std::string>(), slimraft::NcmCode::parse("01"), 0.0});
    }
    emit(out_prompt,
         slimraft::assemble_prompt(docs, question,
                                   instruction ? instruction : slimraft::kDefaultInstruction));
  });
}

slimraft_status slimraft_client_http_create(const slimraft_http_config* config,
                                            slimraft_client** out) {
  return guarded([&] {
    require(config && config->endpoint && config->model && out,
            "endpoint, model and out are required");
    *out = nullptr;
    slimraft::HttpClientConfig cfg;
    cfg.endpoint = config->endpoint;
    cfg.model = config->model;
    if (config->api_key) {
      cfg.api_key = config->api_key;
    } else if (const char* env = std::getenv("SLIMRAFT_API_KEY")) {
      cfg.api_key = env;
    }
    if (config->timeout_ms) cfg.timeout = std::chrono::milliseconds(config->timeout_ms);
    if (config->max_retries >= 0) cfg.retry.max_retries = config->max_retries;
    if (config->initial_backoff_ms)
      cfg.retry.initial_backoff = std::chrono::milliseconds(config->initial_backoff_ms);
    cfg.rate_per_second = config->rate_per_second;
    *out = new slimraft_client{std::make_shared<slimraft::HttpChatClient>(std::move(cfg))};
  });
}

slimraft_status slimraft_client_scripted_create(const char* responses_json, int cycle,
                                                slimraft_client** out) {
  return guarded([&] {
    require(responses_json && out, "responses_json and out are required");
    *out = nullptr;
    const auto arr = json::parse(responses_json);
    require(arr.is_array(), "responses_json must be a JSON array of strings");
    *out = new slimraft_client{std::make_shared<slimraft::ScriptedClient>(
        arr.get<std::vector<std::string>>(), cycle != 0)};
  });
}

slimraft_status slimraft_client_exact_match_judge_create(slimraft_client** out) {
  return guarded([&] {
    require(out != nullptr, "out is required");
    *out = new slimraft_client{std::make_shared<slimraft::ExactMatchJudge>()};
  });
}

void slimraft_client_free(slimraft_client* client) { delete client; }

slimraft_status slimraft_client_complete(slimraft_client* client, const char* messages_json,
                                         char** out_reply) {
  return guarded([&] {
    require(client && messages_json && out_reply, "client, messages and out are required");
    const auto arr = json::parse(messages_json);
    require(arr.is_array(), "messages_json must be a JSON array");
    slimraft::ChatRequest req;
    for (const auto& m : arr) {
      req.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
    }
    emit(out_reply, client->client->complete(req));
  });
}

slimraft_status slimraft_reformulate(slimraft_client* client, const char* raw_query,
                                     const char* fewshot_prompt, const char* pattern,
                                     char** out_question) {
  return guarded([&] {
    require(client && raw_query && fewshot_prompt && out_question,
            "client, query, prompt and out are required");
    slimraft::ReformulateOptions opts;
    if (pattern && *pattern) opts.pattern = pattern;
    emit(out_question, slimraft::reformulate(raw_query, fewshot_prompt, *client->client, opts));
  });
}

slimraft_status slimraft_eval_run(const char* items_path, slimraft_client* client,
                                  const slimraft_eval_options* options, char** out_report_json,
                                  char** out_table, size_t* out_judged, size_t* out_total) {
  return guarded([&] {
    require(items_path && client, "items_path and client are required");
    const auto items = slimraft::load_eval_items(items_path);
    slimraft::RunOptions opts;
    if (options) {
      if (options->rubric) opts.judge.rubric = options->rubric;
      if (options->concurrency) opts.concurrency = options->concurrency;
      opts.rate_per_second = options->rate_per_second;
      if (options->parse_retries >= 0) opts.judge.parse_retries = options->parse_retries;
    }
    const auto reports = slimraft::run_eval_grouped(items, *client->client, opts);
    std::size_t judged = 0, total = 0;
    for (const auto& r : reports) {
      judged += r.judged();
      total += r.total;
    }
    if (out_judged) *out_judged = judged;
    if (out_total) *out_total = total;
    emit(out_report_json, slimraft::report_to_json(reports));
    emit(out_table, slimraft::render_report_table(reports));
  });
}

slimraft_status slimraft_aggregate(const double* scores, size_t n, const char* model_tag,
                                   char** out_json) {
  return guarded([&] {
    require(out_json && (scores || n == 0), "scores and out_json are required");
    std::vector<slimraft::JudgeVerdict> verdicts;
    for (size_t i = 0; i < n; ++i) verdicts.push_back({std::to_string(i), scores[i], ""});
    emit(out_json, report_json(slimraft::aggregate(verdicts, model_tag ? model_tag : "")).dump());
  });
}

}  // extern "C"
