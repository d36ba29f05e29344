// slimraft command-line entry point. Talks to the library exclusively through
// the C API in slimraft/slimraft.h.
//
// Exit codes: 0 success, 1 domain-level failure, 2 input/IO failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slimraft/slimraft.h"

#ifndef SLIMRAFT_DATA_DIR
#define SLIMRAFT_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitInput = 2;

using OwnedString = std::unique_ptr<char, decltype(&slimraft_string_free)>;

OwnedString own(char* s) { return OwnedString(s, &slimraft_string_free); }

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(slimraft_status status) {
  switch (status) {
    case SLIMRAFT_ERR_IO:
    case SLIMRAFT_ERR_PARSE:
    case SLIMRAFT_ERR_INVALID_ARGUMENT:
    case SLIMRAFT_ERR_VERSION_MISMATCH:
      return kExitInput;
    default:
      return kExitDomain;
  }
}

void check(slimraft_status status, const std::string& context) {
  if (status == SLIMRAFT_OK) return;
  throw Failure{exit_code_for(status), context + ": " + slimraft_status_name(status) + ": " +
                                           slimraft_last_error()};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitInput, "cannot open " + path};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void require_input(const std::string& path, const char* what) {
  if (path.empty()) throw Failure{kExitInput, std::string("missing required path: ") + what};
  if (!fs::exists(path)) throw Failure{kExitInput, std::string(what) + " not found: " + path};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{kExitInput, "cannot create output directory " + dir + ": " + ec.message()};
}

// Flags bound to flat config keys. A flag given on the command line wins
// over the config file.
class Settings {
 public:
  template <typename T>
  CLI::Option* bind(CLI::App* app, const std::string& flag, T& target,
                    const std::string& key, const std::string& help) {
    auto* opt = app->add_option(flag, target, help + "  [config: " + key + "]");
    opt->capture_default_str();
    fillers_.push_back({app, opt, [&target, key](const json& cfg) {
                          if (cfg.contains(key)) target = cfg.at(key).get<T>();
                        }});
    return opt;
  }

  CLI::Option* bind_flag(CLI::App* app, const std::string& flag, bool& target,
                         const std::string& key, const std::string& help) {
    auto* opt = app->add_flag(flag, target, help + "  [config: " + key + "]");
    fillers_.push_back({app, opt, [&target, key](const json& cfg) {
                          if (cfg.contains(key)) target = cfg.at(key).get<bool>();
                        }});
    return opt;
  }

  void apply(const std::string& config_path) {
    std::string path = config_path;
    if (path.empty()) {
      if (const char* env = std::getenv("SLIMRAFT_CONFIG")) path = env;
    }
    if (path.empty()) return;
    json cfg;
    try {
      cfg = json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw Failure{kExitInput, "config " + path + ": " + e.what()};
    }
    if (!cfg.is_object()) throw Failure{kExitInput, "config " + path + " must be a JSON object"};
    for (auto& f : fillers_) {
      if (f.opt->count() > 0 || !f.app->parsed()) continue;
      try {
        f.fill(cfg);
      } catch (const json::exception& e) {
        throw Failure{kExitInput, "config " + path + ": key for " + f.opt->get_name() + ": " + e.what()};
      }
    }
  }

 private:
  struct Filler {
    CLI::App* app;
    CLI::Option* opt;
    std::function<void(const json&)> fill;
  };
  std::vector<Filler> fillers_;
};

struct ClientFlags {
  std::string endpoint;
  std::string model;
  unsigned timeout_ms = 60000;
  int retries = 3;
  double rate_limit = 0.0;
  std::string mock_responses;

  void add(CLI::App* app, Settings& s) {
    s.bind(app, "--endpoint", endpoint, "endpoint", "Chat-completions URL");
    s.bind(app, "--model", model, "model", "Model name sent to the endpoint");
    s.bind(app, "--timeout-ms", timeout_ms, "timeout_ms", "Per-request timeout");
    s.bind(app, "--retries", retries, "retries", "Retries with exponential backoff");
    s.bind(app, "--rate-limit", rate_limit, "rate_limit", "Requests per second (0 = unlimited)");
    s.bind(app, "--mock-responses", mock_responses, "mock_responses",
           "JSON array of canned replies; replaces the HTTP client (offline runs)");
  }

  bool configured() const { return !mock_responses.empty() || !endpoint.empty(); }

  slimraft_client* create() const {
    slimraft_client* client = nullptr;
    if (!mock_responses.empty()) {
      const auto text = read_file(mock_responses);
      check(slimraft_client_scripted_create(text.c_str(), 1, &client), "mock client");
      return client;
    }
    if (endpoint.empty()) throw Failure{kExitInput, "no chat client configured (--endpoint)"};
    slimraft_http_config cfg{};
    cfg.endpoint = endpoint.c_str();
    cfg.model = model.c_str();
    cfg.api_key = nullptr;  // SLIMRAFT_API_KEY
    cfg.timeout_ms = timeout_ms;
    cfg.max_retries = retries;
    cfg.initial_backoff_ms = 500;
    cfg.rate_per_second = rate_limit;
    check(slimraft_client_http_create(&cfg, &client), "http client");
    return client;
  }
};

using ClientHandle = std::unique_ptr<slimraft_client, decltype(&slimraft_client_free)>;

ClientHandle make_client(const ClientFlags& flags) {
  return ClientHandle(flags.create(), &slimraft_client_free);
}

// ---- nomenclature validate -------------------------------------------------

struct ValidateCmd {
  std::string nomenclature;

  int run() const {
    require_input(nomenclature, "nomenclature file");
    slimraft_table* raw = nullptr;
    check(slimraft_table_load(nomenclature.c_str(), 0, &raw), "load " + nomenclature);
    std::unique_ptr<slimraft_table, decltype(&slimraft_table_free)> table(raw, &slimraft_table_free);
    char* report_raw = nullptr;
    check(slimraft_table_report(table.get(), &report_raw), "report");
    const auto report = json::parse(own(report_raw).get());

    std::cout << report["entries"].get<std::size_t>() << " entries\n";
    for (const char* level : {"chapter", "heading", "subheading", "item", "subitem"}) {
      std::cout << "  " << level << ": " << report["levels"][level].get<std::size_t>() << '\n';
    }
    for (const auto& w : report["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
    const auto violations = report["violations"].size();
    std::cout << violations << " integrity violations\n";
    return violations == 0 ? kExitOk : kExitDomain;
  }
};

// ---- corpus generate / split / vary -----------------------------------------

struct GenerateCmd {
  std::string nomenclature, templates, variations, records, abbreviations;
  std::string output_dir = "out";
  std::string instruction =
      "responda a seguinte pergunta usando informações do contexto anterior:";
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool lenient = false;

  int run() const {
    require_input(nomenclature, "nomenclature file");
    require_input(templates, "templates file");
    require_input(records, "records file");
    if (!variations.empty()) require_input(variations, "variations file");
    if (!abbreviations.empty()) require_input(abbreviations, "abbreviations file");
    ensure_dir(output_dir);
    const auto corpus = (fs::path(output_dir) / "corpus.jsonl").string();
    const auto manifest = (fs::path(output_dir) / "manifest.json").string();

    slimraft_corpus_options opts{};
    opts.nomenclature_path = nomenclature.c_str();
    opts.templates_path = templates.c_str();
    opts.variations_path = variations.empty() ? nullptr : variations.c_str();
    opts.records_path = records.c_str();
    opts.abbreviations_path = abbreviations.empty() ? nullptr : abbreviations.c_str();
    opts.corpus_out_path = corpus.c_str();
    opts.manifest_out_path = manifest.c_str();
    opts.instruction = instruction.c_str();
    opts.seed = seed;
    opts.threads = threads;
    opts.lenient = lenient ? 1 : 0;
    char* plan_raw = nullptr;
    check(slimraft_corpus_generate(&opts, &plan_raw), "corpus generate");
    const auto plan = json::parse(own(plan_raw).get());
    std::cout << "q=" << plan["q"] << " v=" << plan["v"] << " n=" << plan["n"]
              << " N=" << plan["N"] << '\n';
    std::cerr << "wrote " << corpus << " and " << manifest << '\n';
    return kExitOk;
  }
};

struct SplitCmd {
  std::string records, templates, nomenclature;
  std::string output_dir = "out";
  std::size_t holdout = 100;
  std::uint64_t seed = 0;

  int run() const {
    require_input(records, "records file");
    const bool with_items = !templates.empty() && !nomenclature.empty();
    if (with_items) {
      require_input(templates, "templates file");
      require_input(nomenclature, "nomenclature file");
    }
    ensure_dir(output_dir);
    const auto train = (fs::path(output_dir) / "train_records.csv").string();
    const auto eval = (fs::path(output_dir) / "eval_records.csv").string();
    const auto items = (fs::path(output_dir) / "eval_items.jsonl").string();

    slimraft_split_options opts{};
    opts.records_path = records.c_str();
    opts.holdout = holdout;
    opts.seed = seed;
    opts.train_out_path = train.c_str();
    opts.eval_out_path = eval.c_str();
    if (with_items) {
      opts.templates_path = templates.c_str();
      opts.nomenclature_path = nomenclature.c_str();
      opts.eval_items_out_path = items.c_str();
    }
    char* summary = nullptr;
    check(slimraft_corpus_split(&opts, &summary), "corpus split");
    std::cout << own(summary).get() << '\n';
    return kExitOk;
  }
};

struct VaryCmd {
  std::string templates;
  std::string output = "out/variations.json";
  int count = 3;
  int retry_budget = 5;
  ClientFlags client;

  int run() const {
    require_input(templates, "templates file");
    auto handle = make_client(client);
    if (fs::path(output).has_parent_path()) ensure_dir(fs::path(output).parent_path().string());
    char* out = nullptr;
    check(slimraft_variations_generate(templates.c_str(), count, retry_budget, handle.get(),
                                       output.c_str(), &out),
          "corpus vary");
    std::cout << own(out).get();
    return kExitOk;
  }
};

// ---- index build / rag ask ---------------------------------------------------

struct IndexBuildCmd {
  std::string nomenclature;
  std::string index = "out/index.json";
  bool lenient = false;

  int run() const {
    require_input(nomenclature, "nomenclature file");
    slimraft_table* table_raw = nullptr;
    check(slimraft_table_load(nomenclature.c_str(), lenient ? 0 : 1, &table_raw),
          "load " + nomenclature);
    std::unique_ptr<slimraft_table, decltype(&slimraft_table_free)> table(table_raw,
                                                                          &slimraft_table_free);
    slimraft_index* index_raw = nullptr;
    check(slimraft_index_build(table.get(), &index_raw), "index build");
    std::unique_ptr<slimraft_index, decltype(&slimraft_index_free)> idx(index_raw,
                                                                        &slimraft_index_free);
    if (fs::path(index).has_parent_path()) ensure_dir(fs::path(index).parent_path().string());
    check(slimraft_index_save(idx.get(), index.c_str()), "save " + index);
    std::cout << slimraft_index_doc_count(idx.get()) << " documents indexed\n";
    return kExitOk;
  }
};

struct RagAskCmd {
  std::string question;
  std::string index = "out/index.json";
  std::size_t k = 3;
  std::string instruction =
      "responda a seguinte pergunta usando informações do contexto anterior:";
  bool reformulate = false;
  bool answer = false;
  bool as_json = false;
  std::string fewshot_prompt = std::string(SLIMRAFT_DATA_DIR) + "/fewshot_reformulate_pt.txt";
  std::string pattern;
  ClientFlags client;

  int run() const {
    if (question.empty()) throw Failure{kExitInput, "question is required"};
    if (!fs::exists(index)) {
      throw Failure{kExitDomain, "index snapshot not found: " + index + " (run 'index build')"};
    }
    slimraft_index* raw = nullptr;
    check(slimraft_index_load(index.c_str(), &raw), "load " + index);
    std::unique_ptr<slimraft_index, decltype(&slimraft_index_free)> idx(raw, &slimraft_index_free);

    std::optional<ClientHandle> handle;
    if (reformulate || answer) handle.emplace(make_client(client));

    json out;
    std::string q = question;
    if (reformulate) {
      require_input(fewshot_prompt, "few-shot prompt file");
      const auto prompt = read_file(fewshot_prompt);
      char* reformulated = nullptr;
      check(slimraft_reformulate(handle->get(), q.c_str(), prompt.c_str(),
                                 pattern.empty() ? nullptr : pattern.c_str(), &reformulated),
            "reformulate");
      q = own(reformulated).get();
      out["reformulated"] = q;
      if (!as_json) std::cout << "reformulated: " << q << '\n';
    }

    char* hits_raw = nullptr;
    check(slimraft_index_search(idx.get(), q.c_str(), k, &hits_raw), "search");
    const auto hits = json::parse(own(hits_raw).get());
    if (hits["empty_query"].get<bool>()) std::cerr << "warning: query has no searchable tokens\n";

    char* prompt_raw = nullptr;
    check(slimraft_index_assemble_prompt(idx.get(), q.c_str(), k, instruction.c_str(), &prompt_raw),
          "assemble prompt");
    const std::string prompt = own(prompt_raw).get();
    out["hits"] = hits["hits"];
    out["prompt"] = prompt;

    if (!as_json) {
      std::size_t rank = 1;
      for (const auto& h : hits["hits"]) {
        std::cout << "context " << rank++ << " [" << h["code"].get<std::string>()
                  << "] score=" << h["score"].get<double>() << '\n';
      }
      std::cout << "--- prompt ---\n" << prompt << '\n';
    }

    if (answer) {
      const auto messages = json::array({{{"role", "user"}, {"content", prompt}}}).dump();
      char* reply = nullptr;
      check(slimraft_client_complete(handle->get(), messages.c_str(), &reply), "model answer");
      out["answer"] = own(reply).get();
      if (!as_json) std::cout << "--- answer ---\n" << out["answer"].get<std::string>() << '\n';
    }
    if (as_json) std::cout << out.dump(2) << '\n';
    return kExitOk;
  }
};

// ---- eval run ------------------------------------------------------------------

struct EvalRunCmd {
  std::string items;
  std::string output_dir = "out";
  std::string rubric;
  bool mock_judge = false;
  unsigned concurrency = 4;
  ClientFlags client;

  int run() const {
    require_input(items, "eval items file");
    if (!rubric.empty()) require_input(rubric, "rubric file");
    if (!mock_judge && !client.configured()) {
      throw Failure{kExitInput, "no judge configured: pass --mock-judge or --endpoint"};
    }
    ensure_dir(output_dir);

    slimraft_client* raw = nullptr;
    if (mock_judge) {
      check(slimraft_client_exact_match_judge_create(&raw), "mock judge");
    } else {
      raw = client.create();
    }
    ClientHandle judge(raw, &slimraft_client_free);

    const std::string rubric_text = rubric.empty() ? std::string{} : read_file(rubric);
    slimraft_eval_options opts{};
    opts.rubric = rubric_text.empty() ? nullptr : rubric_text.c_str();
    opts.concurrency = concurrency;
    opts.rate_per_second = client.rate_limit;
    opts.parse_retries = 2;

    char* report_raw = nullptr;
    char* table_raw = nullptr;
    std::size_t judged = 0, total = 0;
    const auto status = slimraft_eval_run(items.c_str(), judge.get(), &opts, &report_raw,
                                          &table_raw, &judged, &total);
    if (status == SLIMRAFT_ERR_ALL_ITEMS_FAILED) {
      throw Failure{kExitInput, std::string("eval run: ") + slimraft_last_error()};
    }
    check(status, "eval run");
    const auto report = own(report_raw);
    const auto table = own(table_raw);

    std::ofstream(fs::path(output_dir) / "report.json", std::ios::binary) << report.get();
    std::ofstream(fs::path(output_dir) / "report.txt", std::ios::binary) << table.get();
    std::cout << table.get();
    std::cout << "coverage: " << judged << "/" << total << '\n';
    return judged == total ? kExitOk : kExitDomain;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slimraft: NCM nomenclature, fine-tuning corpus, retrieval and evaluation tooling"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(slimraft_version()));
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON config file with flat keys (default: $SLIMRAFT_CONFIG)");

  Settings settings;

  auto* nomen = app.add_subcommand("nomenclature", "Nomenclature tables");
  nomen->require_subcommand(1);
  ValidateCmd validate;
  auto* validate_app = nomen->add_subcommand("validate", "Check a code,description table");
  settings.bind(validate_app, "--nomenclature", validate.nomenclature, "nomenclature",
                "Nomenclature CSV file");

  auto* corpus = app.add_subcommand("corpus", "Fine-tuning corpus construction");
  corpus->require_subcommand(1);

  GenerateCmd generate;
  auto* gen_app = corpus->add_subcommand("generate", "Render the JSONL corpus and manifest");
  settings.bind(gen_app, "--nomenclature", generate.nomenclature, "nomenclature", "Nomenclature CSV");
  settings.bind(gen_app, "--templates", generate.templates, "templates", "Templates JSON");
  settings.bind(gen_app, "--variations", generate.variations, "variations",
                "Variations JSON (optional)");
  settings.bind(gen_app, "--records", generate.records, "records", "Product records CSV");
  settings.bind(gen_app, "--abbreviations", generate.abbreviations, "abbreviations",
                "Abbreviation dictionary JSON applied to descriptions (optional)");
  settings.bind(gen_app, "--output-dir", generate.output_dir, "output_dir",
                "Directory for corpus.jsonl and manifest.json");
  settings.bind(gen_app, "--instruction", generate.instruction, "instruction",
                "Instruction sentence before the question");
  settings.bind(gen_app, "--seed", generate.seed, "seed", "Seed recorded in the manifest");
  settings.bind(gen_app, "--threads", generate.threads, "threads", "Rendering threads");
  settings.bind_flag(gen_app, "--lenient", generate.lenient, "lenient",
                     "Accept nomenclature rows missing their chapter/heading");

  SplitCmd split;
  auto* split_app = corpus->add_subcommand("split", "Hold out products for evaluation");
  settings.bind(split_app, "--records", split.records, "records", "Product records CSV");
  settings.bind(split_app, "--holdout", split.holdout, "holdout", "Number of held-out products");
  settings.bind(split_app, "--seed", split.seed, "seed", "Shuffle seed");
  settings.bind(split_app, "--output-dir", split.output_dir, "output_dir",
                "Directory for train_records.csv, eval_records.csv, eval_items.jsonl");
  settings.bind(split_app, "--templates", split.templates, "templates",
                "Templates JSON; with --nomenclature also writes eval_items.jsonl");
  settings.bind(split_app, "--nomenclature", split.nomenclature, "nomenclature",
                "Nomenclature CSV used to render expected answers");

  VaryCmd vary;
  auto* vary_app = corpus->add_subcommand("vary", "Generate question paraphrases with an LLM");
  settings.bind(vary_app, "--templates", vary.templates, "templates", "Templates JSON");
  settings.bind(vary_app, "--count", vary.count, "variation_count",
                "Paraphrases per template (original excluded)");
  settings.bind(vary_app, "--retry-budget", vary.retry_budget, "retry_budget",
                "Extra calls allowed for rejected generations");
  settings.bind(vary_app, "--output", vary.output, "variations_out", "Variations JSON to write");
  vary.client.add(vary_app, settings);

  auto* index = app.add_subcommand("index", "Retrieval index");
  index->require_subcommand(1);
  IndexBuildCmd build;
  auto* build_app = index->add_subcommand("build", "Index a nomenclature table");
  settings.bind(build_app, "--nomenclature", build.nomenclature, "nomenclature", "Nomenclature CSV");
  settings.bind(build_app, "--index", build.index, "index", "Snapshot file to write");
  settings.bind_flag(build_app, "--lenient", build.lenient, "lenient",
                     "Accept rows missing their chapter/heading");

  auto* rag = app.add_subcommand("rag", "Retrieval-augmented prompting");
  rag->require_subcommand(1);
  RagAskCmd ask;
  auto* ask_app = rag->add_subcommand("ask", "Retrieve contexts and assemble the prompt");
  ask_app->add_option("question", ask.question, "Question text")->required();
  settings.bind(ask_app, "--index", ask.index, "index", "Index snapshot");
  settings.bind(ask_app, "--k", ask.k, "k", "Number of contexts");
  settings.bind(ask_app, "--instruction", ask.instruction, "instruction",
                "Instruction sentence before the question");
  settings.bind_flag(ask_app, "--reformulate", ask.reformulate, "reformulate",
                     "Rewrite the question into canonical form first");
  settings.bind(ask_app, "--fewshot-prompt", ask.fewshot_prompt, "fewshot_prompt",
                "Few-shot prompt file for --reformulate");
  settings.bind(ask_app, "--pattern", ask.pattern, "pattern",
                "Regex a reformulated question must match");
  settings.bind_flag(ask_app, "--answer", ask.answer, "answer",
                     "Send the prompt to the configured model and print its answer");
  ask_app->add_flag("--json", ask.as_json, "Print a JSON object instead of text");
  ask.client.add(ask_app, settings);

  auto* eval = app.add_subcommand("eval", "LLM-as-judge evaluation");
  eval->require_subcommand(1);
  EvalRunCmd run;
  auto* run_app = eval->add_subcommand("run", "Judge model answers and write reports");
  settings.bind(run_app, "--items", run.items, "items", "Eval items JSONL");
  settings.bind(run_app, "--output-dir", run.output_dir, "output_dir",
                "Directory for report.json and report.txt");
  settings.bind(run_app, "--rubric", run.rubric, "rubric", "Judge rubric file (optional)");
  settings.bind(run_app, "--concurrency", run.concurrency, "concurrency", "Parallel judge calls");
  settings.bind_flag(run_app, "--mock-judge", run.mock_judge, "mock_judge",
                     "Use the offline exact-match judge");
  run.client.add(run_app, settings);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    settings.apply(config_path);
    if (validate_app->parsed()) return validate.run();
    if (gen_app->parsed()) return generate.run();
    if (split_app->parsed()) return split.run();
    if (vary_app->parsed()) return vary.run();
    if (build_app->parsed()) return build.run();
    if (ask_app->parsed()) return ask.run();
    if (run_app->parsed()) return run.run();
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
