#include <doctest.h>

#include <set>

#include "slimraft/chat_client.hpp"
#include "slimraft/corpus.hpp"
#include "slimraft/error.hpp"
#include "slimraft/prompt.hpp"
#include "support.hpp"

using namespace slimraft;

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

QaTemplate generic(std::string id = "t") {
  return {std::move(id),
          {"o produto {{product}} tem código {{NCM}}", "{{NCM}} pertence a {{category}}"},
          "Qual a categoria do produto {{product}}?",
          "a categoria é {{category}}"};
}

NomenclatureTable wine_table() {
  return NomenclatureTable::load(testing::fixture("wine_ncm.csv"));
}

std::vector<ProductRecord> wine_records(std::size_t n) {
  std::vector<ProductRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(make_product_record("p" + std::to_string(i), "VINHO " + std::to_string(i),
                                      "22041010"));
  }
  return out;
}

std::vector<QaTemplate> templates(std::size_t q) {
  std::vector<QaTemplate> out;
  for (std::size_t i = 0; i < q; ++i) out.push_back(generic("t" + std::to_string(i)));
  return out;
}

VariationMap variations(const std::vector<QaTemplate>& ts, std::size_t v) {
  VariationMap out;
  for (const auto& t : ts) {
    VariationSet set{t.id, {}};
    for (std::size_t j = 1; j < v; ++j) {
      set.question_variants.push_back("Variante " + std::to_string(j) + " para {{product}}?");
    }
    out.emplace(t.id, std::move(set));
  }
  return out;
}

}  // namespace

TEST_CASE("templates file loads and validates placeholders") {
  const auto ts = load_templates(testing::fixture("wine_template.json"));
  REQUIRE(ts.size() == 1);
  CHECK(ts[0].context_masks.size() == 3);

  CHECK(code_of([] {
          parse_templates(R"([{"id":"a","context_masks":["{{price}}"],"question_mask":"q",
                              "answer_mask":"a"}])");
        }) == Errc::UnknownPlaceholder);
  CHECK(code_of([] { parse_templates("[]"); }) == Errc::EmptyTemplateSet);
  CHECK(code_of([] {
          parse_templates(R"([{"id":"a","context_masks":["x"],"question_mask":"q","answer_mask":"a"},
                              {"id":"a","context_masks":["x"],"question_mask":"q","answer_mask":"a"}])");
        }) == Errc::DuplicateTemplateId);
  CHECK(code_of([] {
          parse_templates(R"([{"id":"a","context_masks":[],"question_mask":"q","answer_mask":"a"}])");
        }) == Errc::Parse);
  CHECK(code_of([] { parse_templates("{"); }) == Errc::Parse);
}

TEST_CASE("placeholder scanning") {
  const auto names = placeholders_in("{{product}} e {{NCM}} e {{product}}");
  CHECK(names == std::vector<std::string>{"product", "NCM", "product"});
  CHECK(code_of([] { check_placeholders("{{product", "m"); }) == Errc::UnknownPlaceholder);
  CHECK_NOTHROW(check_placeholders("sem marcadores", "m"));
}

TEST_CASE("variation files") {
  const auto ts = templates(1);
  const auto v = parse_variations(R"({"t0":["Outra {{product}}?"]})", ts);
  CHECK(v.at("t0").question_variants.size() == 1);
  CHECK(code_of([&] { parse_variations(R"({"zz":["x"]})", ts); }) == Errc::Parse);
  CHECK(code_of([&] {
          parse_variations(R"({"t0":["A {{product}}?","A  {{product}}? "]})", ts);
        }) == Errc::DuplicateVariant);
  CHECK(code_of([&] {
          parse_variations(R"({"t0":["Qual a categoria do produto {{product}}?"]})", ts);
        }) == Errc::DuplicateVariant);
}

TEST_CASE("generate_variations keeps conforming paraphrases") {
  QaTemplate t = generic();
  t.question_mask = "What is the category of the product {{product}}?";
  ScriptedClient ok({"Could you specify the category to which the product {{product}} belongs?"});
  const auto set = generate_variations(t, 1, ok);
  REQUIRE(set.question_variants.size() == 1);
  CHECK(set.question_variants[0] ==
        "Could you specify the category to which the product {{product}} belongs?");

  ScriptedClient drops({"Which category is this?", "\"Name the category of {{product}}.\""});
  const auto retried = generate_variations(t, 1, drops);
  CHECK(drops.calls() == 2);
  CHECK(retried.question_variants[0] == "Name the category of {{product}}.");

  ScriptedClient bad({"no placeholder"}, true);
  CHECK(code_of([&] { generate_variations(t, 2, bad, {.retry_budget = 3}); }) ==
        Errc::BudgetExhausted);
  CHECK(bad.calls() == 5);

  CHECK(code_of([&] { generate_variations(t, 0, ok); }) == Errc::InvalidArgument);
}

TEST_CASE("render_record matches the golden wine record") {
  const auto table = wine_table();
  const auto ts = load_templates(testing::fixture("wine_template.json"));
  const auto records = load_records(testing::fixture("wine_records.csv"));
  const auto rec = render_record(ts[0].question_mask, ts[0], records[0], table);
  auto golden = testing::slurp(testing::fixture("wine_golden.jsonl"));
  while (!golden.empty() && golden.back() == '\n') golden.pop_back();
  CHECK(rec.to_json() == golden);
  CHECK(TrainingRecord::from_json(golden) == rec);
}

TEST_CASE("render_record edge cases") {
  const auto table = wine_table();
  const QaTemplate literal{"lit", {"contexto fixo"}, "pergunta fixa?", "resposta fixa"};
  const auto rec = render_record(literal.question_mask, literal, wine_records(1)[0], table, "I:");
  CHECK(rec.user == "[contexto fixo],\n\nI: pergunta fixa?");
  CHECK(rec.assistant == "resposta fixa");

  const auto stray = make_product_record("x", "produto", "22041090");
  CHECK(code_of([&] { render_record(literal.question_mask, literal, stray, table); }) ==
        Errc::UnknownCode);

  // braces inside a product description are caught
  const auto braces = make_product_record("b", "CAIXA {{X}}", "22041010");
  const auto t = generic();
  CHECK(code_of([&] { render_record(t.question_mask, t, braces, table); }) ==
        Errc::ResidualPlaceholder);
}

TEST_CASE("substitution is single pass") {
  PlaceholderValues v{"{{NCM}}", "123", "cat", "head"};
  CHECK(substitute("{{product}}/{{NCM}}", v) == "{{NCM}}/123");
}

TEST_CASE("counting law on small grids") {
  const auto table = wine_table();
  for (auto [q, v, n] : {std::tuple{1u, 1u, 1u}, {2u, 3u, 5u}, {3u, 4u, 100u}}) {
    const auto ts = templates(q);
    const auto vs = variations(ts, v);
    const auto recs = wine_records(n);
    std::size_t emitted = 0;
    const auto plan = generate_corpus(ts, vs, recs, table, [&](const TrainingRecord&) { ++emitted; });
    CHECK(plan.total == q * v * n);
    CHECK(emitted == q * v * n);
  }
}

TEST_CASE("corpus order is template, variant, record and thread-independent") {
  const auto table = wine_table();
  const auto ts = templates(2);
  const auto vs = variations(ts, 3);
  const auto recs = wine_records(1500);
  CorpusOptions single;
  CorpusOptions many;
  many.threads = 8;
  const auto a = generate_corpus(ts, vs, recs, table, single);
  const auto b = generate_corpus(ts, vs, recs, table, many);
  REQUIRE(a.size() == 9000);
  CHECK(a == b);
  CHECK(a[1].user.find("VINHO 1 ") != std::string::npos);
  CHECK(a[1500].user.find("Variante 1 para VINHO 0?") != std::string::npos);
  for (const auto& r : a) {
    CHECK(r.user.find("{{") == std::string::npos);
  }
}

TEST_CASE("variation counts must agree across templates") {
  const auto ts = templates(2);
  auto vs = variations(ts, 2);
  vs.erase("t1");
  CHECK(code_of([&] { plan_corpus(ts, vs, wine_records(1)); }) ==
        Errc::InconsistentVariations);
}

TEST_CASE("render errors name the template and record") {
  const auto table = wine_table();
  const auto ts = templates(1);
  auto recs = wine_records(3);
  recs[2] = make_product_record("bad-id", "x", "22041099");
  try {
    generate_corpus(ts, {}, recs, table, CorpusOptions{});
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownCode);
    CHECK(std::string(e.what()).find("bad-id") != std::string::npos);
    CHECK(std::string(e.what()).find("t0") != std::string::npos);
  }
}

TEST_CASE("product records are validated") {
  CHECK(code_of([] { make_product_record("a", "", "22041010"); }) == Errc::InvalidRecord);
  CHECK(code_of([] { make_product_record("a", std::string(121, 'x'), "22041010"); }) ==
        Errc::InvalidRecord);
  CHECK_NOTHROW(make_product_record("a", std::string(120, 'x'), "22041010"));
  // 120 code points, more bytes
  std::string accented;
  for (int i = 0; i < 120; ++i) accented += "ç";
  CHECK_NOTHROW(make_product_record("a", accented, "22041010"));
  CHECK(code_of([] { make_product_record("a", "x", "220410"); }) == Errc::InvalidRecord);
  CHECK(code_of([] { parse_records("id,description,ncm_code\na,x,22041010\na,y,22041010\n", "s"); }) ==
        Errc::InvalidRecord);
  const auto recs = wine_records(3);
  CHECK(parse_records(format_records(recs), "again").size() == 3);
}

TEST_CASE("holdout split") {
  const auto recs = wine_records(1000);
  const auto s = split_holdout(recs, 100, 42);
  CHECK(s.train.size() == 900);
  CHECK(s.eval.size() == 100);
  std::set<std::string> train_ids;
  for (const auto& r : s.train) train_ids.insert(r.id);
  for (const auto& r : s.eval) CHECK_FALSE(train_ids.contains(r.id));
  const auto again = split_holdout(recs, 100, 42);
  CHECK(again.eval.size() == s.eval.size());
  for (std::size_t i = 0; i < s.eval.size(); ++i) CHECK(again.eval[i].id == s.eval[i].id);
  const auto other = split_holdout(recs, 100, 43);
  bool differs = false;
  for (std::size_t i = 0; i < s.eval.size(); ++i) differs |= other.eval[i].id != s.eval[i].id;
  CHECK(differs);

  const auto none = split_holdout(recs, 0, 1);
  CHECK(none.train.size() == 1000);
  CHECK(none.eval.empty());
  CHECK(code_of([&] { split_holdout(recs, 1000, 1); }) == Errc::HoldoutTooLarge);
}

TEST_CASE("abbreviation normalization") {
  const auto dict = load_abbreviations(testing::data_file("abbreviations.json"));
  CHECK(normalize_description("Fr. Desc.", dict) == "Fralda descartável");
  CHECK(normalize_description("EDT", dict) == "Eau de Toilette");
  CHECK(normalize_description("perfume edp 50ml", dict) == "perfume Eau de Parfum 50ml");
  CHECK(normalize_description("EDTX", dict) == "EDTX");
  CHECK(normalize_description("Coc. 2L gelada", dict) == "Coca-Cola 2 Liters gelada");
  CHECK(normalize_description("qualquer coisa", {}) == "qualquer coisa");

  const AbbreviationDictionary overlap = {{"P.", "Pacote"}, {"P. W. Rice", "Parboiled White Rice"}};
  CHECK(normalize_description("P. W. Rice 5kg", overlap) == "Parboiled White Rice 5kg");

  for (const std::string s : {"Fr. Desc. G", "T. Pap. FDupla 2un", "EDP e EDT"}) {
    const auto once = normalize_description(s, dict);
    CHECK(normalize_description(once, dict) == once);
  }
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
