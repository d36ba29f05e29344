#include <doctest.h>

#include <atomic>
#include <cmath>
#include <memory>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "slimraft/chat_client.hpp"
#include "slimraft/error.hpp"
#include "slimraft/eval.hpp"
#include "slimraft/pipeline.hpp"
#include "support.hpp"

using namespace slimraft;
using json = nlohmann::json;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::InvalidArgument;
}

std::vector<JudgeVerdict> verdicts(std::initializer_list<double> scores) {
  std::vector<JudgeVerdict> out;
  int i = 0;
  for (double s : scores) out.push_back({"i" + std::to_string(i++), s, ""});
  return out;
}

std::vector<EvalItem> items(std::size_t n, const std::string& tag) {
  std::vector<EvalItem> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = "resposta " + std::to_string(i);
    out.push_back({"item-" + std::to_string(i), "pergunta " + std::to_string(i), a,
                   i % 3 == 0 ? "outra" : a, tag});
  }
  return out;
}

}  // namespace

TEST_CASE("score parsing") {
  CHECK(parse_score("Score: 10 - exact match") == 10.0);
  CHECK(parse_score("score: 7.5 because") == 7.5);
  CHECK(parse_score("Nota 8") == 8.0);
  CHECK(parse_score("I would give it 6") == 6.0);
  CHECK(parse_score("6 out of 6") == 6.0);
  CHECK_FALSE(parse_score("no number here"));
  CHECK_FALSE(parse_score("between 3 and 7"));
  CHECK_FALSE(parse_score("42"));
  CHECK(parse_score("Score: 9 (was 3 before review)") == 9.0);
}

TEST_CASE("judge parses, retries, and gives up") {
  const EvalItem item{"a", "q", "x", "x", "secret-tag"};
  ScriptedClient happy({"Score: 10 - exact match"});
  CHECK(judge(item, happy).score == 10.0);

  ScriptedClient flaky({"hmm", "Score: 4"});
  CHECK(judge(item, flaky).score == 4.0);
  CHECK(flaky.calls() == 2);

  ScriptedClient never({"no number here"}, true);
  CHECK(code_of([&] { judge(item, never); }) == Errc::UnparsableVerdict);
  CHECK(never.calls() == 3);

  ExactMatchJudge exact;
  CHECK(judge(item, exact).score == 10.0);
  CHECK(judge({"b", "q", "x", "y", ""}, exact).score == 0.0);
}

TEST_CASE("judge request never carries the model tag") {
  const EvalItem item{"id-77", "Qual a categoria?", "esperada", "candidata", "MODEL-TAG-XYZ"};
  const auto req = build_judge_request(item);
  CHECK(req.temperature == 0.0);
  const auto payload = serialize_request(req, "judge-model");
  CHECK(payload.find("MODEL-TAG-XYZ") == std::string::npos);
  CHECK(payload.find("Qual a categoria?") != std::string::npos);
  CHECK(payload.find("esperada") != std::string::npos);
  CHECK(payload.find("candidata") != std::string::npos);
}

TEST_CASE("aggregate statistics") {
  const auto r = aggregate(verdicts({0, 5, 10}), "m");
  CHECK(r.average == doctest::Approx(5.0));
  CHECK(std::abs(r.std_dev - std::sqrt(50.0 / 3.0)) < 1e-9);
  CHECK(r.min == 0.0);
  CHECK(r.max == 10.0);

  const auto c = aggregate(verdicts({10, 10, 10}), "m");
  CHECK(c.average == 10.0);
  CHECK(c.std_dev == 0.0);

  const auto same = aggregate(verdicts({0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1}), "m");
  CHECK(same.std_dev == 0.0);
  CHECK(same.average == 0.1);

  CHECK(code_of([] { aggregate({}, "m"); }) == Errc::EmptyVerdictSet);
}

TEST_CASE("report table has the expected columns") {
  const std::vector<EvalReport> reports = {aggregate(verdicts({0, 5, 10}), "SLIM")};
  const auto table = render_report_table(reports);
  CHECK(table.find("Model") == 0);
  for (const char* col : {"Aver.", "St. Dev.", "Min.", "Max."}) {
    CHECK(table.find(col) != std::string::npos);
  }
  CHECK(table.find("5.00") != std::string::npos);
  CHECK(table.find("4.08") != std::string::npos);
  CHECK(table.find("10.00") != std::string::npos);
}

TEST_CASE("run_eval over a mock judge") {
  ExactMatchJudge judge_client;
  const auto all = items(100, "m1");
  const auto report = run_eval(all, judge_client);
  CHECK(report.judged() == 100);
  CHECK(report.complete());
  CHECK(report.model_tag == "m1");
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(report.verdicts[i].item_id == all[i].id);
  CHECK(report.min <= report.average);
  CHECK(report.average <= report.max);

  const auto again = run_eval(all, judge_client);
  CHECK(report_to_json(std::vector{again}) == report_to_json(std::vector{report}));

  const auto one = run_eval(std::span(all).first(1), judge_client);
  CHECK(one.judged() == 1);
  CHECK(one.average == one.verdicts[0].score);
}

TEST_CASE("partial failures are recorded") {
  auto three = items(3, "m");
  three[1].model_answer.clear();  // exact-match judge refuses to grade
  ExactMatchJudge judge_client;
  const auto r = run_eval(three, judge_client);
  CHECK(r.judged() == 2);
  CHECK(r.total == 3);
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].item_id == "item-1");
  const auto js = json::parse(report_to_json(std::vector{r}));
  CHECK(js["reports"][0]["coverage"] == "2/3");

  for (auto& i : three) i.model_answer.clear();
  CHECK(code_of([&] { run_eval(three, judge_client); }) == Errc::AllItemsFailed);
  CHECK(code_of([&] { run_eval({}, judge_client); }) == Errc::InvalidArgument);
}

TEST_CASE("single-use clients are driven from one thread") {
  std::atomic<int> active{0}, peak{0};
  FunctionClient client(
      [&](const ChatRequest&) {
        const int now = ++active;
        int p = peak.load();
        while (now > p && !peak.compare_exchange_weak(p, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
        --active;
        return std::string("Score: 5");
      },
      false);
  RunOptions opts;
  opts.concurrency = 8;
  const auto r = run_eval(items(20, "m"), client, opts);
  CHECK(r.judged() == 20);
  CHECK(peak.load() == 1);
}

TEST_CASE("grouped evaluation splits by model tag") {
  auto a = items(4, "alpha");
  auto b = items(3, "beta");
  a.insert(a.end(), b.begin(), b.end());
  ExactMatchJudge judge_client;
  const auto reports = run_eval_grouped(a, judge_client, {});
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].model_tag == "alpha");
  CHECK(reports[0].judged() == 4);
  CHECK(reports[1].model_tag == "beta");
}

TEST_CASE("eval items parsing") {
  const auto parsed = parse_eval_items(
      "{\"id\":\"1\",\"question\":\"q\",\"expected_answer\":\"a\",\"model_answer\":\"a\","
      "\"model_tag\":\"t\"}\n\n{\"id\":\"2\",\"question\":\"q\",\"expected_answer\":\"b\"}\n");
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].model_answer.empty());
  CHECK(parse_eval_items(eval_item_to_json(parsed[0]))[0].model_tag == "t");
  CHECK(code_of([] { parse_eval_items("{\"id\":\"1\",\"question\":\"\",\"expected_answer\":\"a\"}"); }) ==
        Errc::Parse);
  CHECK(code_of([] { parse_eval_items("not json"); }) == Errc::Parse);
}

TEST_CASE("reformulation to the canonical question") {
  const auto fewshot = testing::slurp(testing::data_file("fewshot_reformulate_pt.txt"));
  const std::string narrative =
      "Fui na padaria e comprei um suco de laranja, mas o código NCM da nota estava borrado.";
  ScriptedClient juice({"Pergunta: Qual a categoria NCM correta para o produto: suco de laranja?"});
  CHECK(reformulate(narrative, fewshot, juice) ==
        "Qual a categoria NCM correta para o produto: suco de laranja?");
  const auto sent = juice.requests().at(0).messages.at(0).content;
  CHECK(sent.find(narrative) != std::string::npos);
  CHECK(sent.find("{{query}}") == std::string::npos);

  const std::string wine =
      "Qual a categoria NCM correta para o produto: V. ITAL. CORBELLI PRIMITIVO TTO 750 ML?";
  FunctionClient identity([&](const ChatRequest&) { return wine; });
  CHECK(reformulate(wine, fewshot, identity) == wine);

  ScriptedClient chatter({"Não sei.", "Talvez vinho?", "Desculpe."});
  CHECK(code_of([&] { reformulate(narrative, fewshot, chatter); }) == Errc::NonCanonicalOutput);
  CHECK(chatter.calls() == 3);

  CHECK(code_of([&] { reformulate(narrative, "sem exemplos", identity); }) ==
        Errc::InvalidArgument);
}

TEST_CASE("token bucket") {
  TokenBucket unlimited(0.0);
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 100; ++i) CHECK(unlimited.try_acquire(t0));

  TokenBucket limited(2.0, 1.0);
  const auto start = std::chrono::steady_clock::now() + std::chrono::milliseconds(1);
  CHECK(limited.try_acquire(start));
  CHECK_FALSE(limited.try_acquire(start));
  CHECK_FALSE(limited.try_acquire(start + std::chrono::milliseconds(200)));
  CHECK(limited.try_acquire(start + std::chrono::milliseconds(600)));
}

TEST_CASE("retry backoff grows and caps") {
  RetryPolicy p;
  CHECK(p.delay(0).count() == 500);
  CHECK(p.delay(1).count() == 1000);
  CHECK(p.delay(2).count() == 2000);
  CHECK(p.delay(10).count() == 8000);
}

TEST_CASE("completion payloads") {
  ChatRequest req;
  req.messages = {{"system", "s"}, {"user", "u"}};
  const auto body = json::parse(serialize_request(req, "m"));
  CHECK(body["model"] == "m");
  CHECK(body["messages"][1]["content"] == "u");
  CHECK(body["temperature"] == 0.0);
  CHECK(parse_completion(R"({"choices":[{"message":{"role":"assistant","content":"ok"}}]})") ==
        "ok");
  CHECK(code_of([] { parse_completion("{}"); }) == Errc::Client);
}

TEST_CASE("http client retries transient failures") {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    if (++hits < 3) {
      res.status = hits == 1 ? 503 : 429;
      return;
    }
    const auto body = json::parse(req.body);
    res.set_content(json{{"choices", {{{"message", {{"role", "assistant"},
                                                    {"content", "echo " + body["model"].get<std::string>()}}}}}}}
                        .dump(),
                    "application/json");
  });
  server.Post("/bad", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpClientConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
  cfg.model = "judge";
  cfg.api_key = "k123";
  cfg.retry.initial_backoff = std::chrono::milliseconds(5);
  cfg.timeout = std::chrono::milliseconds(2000);
  HttpChatClient client(cfg);
  ChatRequest req;
  req.messages = {{"user", "hi"}};
  CHECK(client.complete(req) == "echo judge");
  CHECK(hits == 3);
  CHECK(auth == "Bearer k123");

  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/bad";
  HttpChatClient bad(cfg);
  CHECK(code_of([&] { bad.complete(req); }) == Errc::Client);

  server.stop();
  th.join();

  cfg.retry.max_retries = 1;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
  HttpChatClient down(cfg);
  CHECK(code_of([&] { down.complete(req); }) == Errc::Client);
}

TEST_CASE("capturing client records serialized payloads") {
  auto inner = std::make_shared<ExactMatchJudge>();
  CapturingClient cap(inner);
  const auto r = run_eval(items(10, "HIDDEN-TAG"), cap);
  CHECK(r.judged() == 10);
  const auto payloads = cap.payloads();
  CHECK(payloads.size() == 10);
  for (const auto& p : payloads) CHECK(p.find("HIDDEN-TAG") == std::string::npos);
}
