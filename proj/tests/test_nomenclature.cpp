#include <doctest.h>

#include <random>

#include "slimraft/error.hpp"
#include "slimraft/nomenclature.hpp"
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

}  // namespace

TEST_CASE("parse recognises every level") {
  CHECK(NcmCode::parse("08").level() == Level::Chapter);
  CHECK(NcmCode::parse("08.08").level() == Level::Heading);
  const auto sub = NcmCode::parse("0808.10");
  CHECK(sub.digits() == "080810");
  CHECK(sub.level() == Level::Subheading);
  CHECK(NcmCode::parse("2204101").level() == Level::Item);
  const auto wine = NcmCode::parse("22041010");
  CHECK(wine.digits() == "22041010");
  CHECK(wine.level() == Level::SubItem);
}

TEST_CASE("parse rejects malformed codes") {
  CHECK(code_of([] { NcmCode::parse("220"); }) == Errc::InvalidLength);
  CHECK(code_of([] { NcmCode::parse("220410101"); }) == Errc::InvalidLength);
  CHECK(code_of([] { NcmCode::parse(""); }) == Errc::InvalidLength);
  CHECK(code_of([] { NcmCode::parse("22O4"); }) == Errc::NonDigit);
  CHECK(code_of([] { NcmCode::parse("00"); }) == Errc::ChapterOutOfRange);
  CHECK(code_of([] { NcmCode::parse("98"); }) == Errc::ChapterOutOfRange);
  CHECK(code_of([] { NcmCode::parse("9999"); }) == Errc::ChapterOutOfRange);
  CHECK_NOTHROW(NcmCode::parse("01"));
  CHECK_NOTHROW(NcmCode::parse("97"));
}

TEST_CASE("format in both styles") {
  const auto wine = NcmCode::parse("22041010");
  CHECK(wine.format(CodeStyle::Dotted) == "2204.10.10");
  CHECK(wine.format(CodeStyle::Plain) == "22041010");
  CHECK(NcmCode::parse("080810").format(CodeStyle::Plain) == "080810");
  CHECK(NcmCode::parse("080810").format(CodeStyle::Dotted) == "0808.10");
  CHECK(NcmCode::parse("2204101").format(CodeStyle::Dotted) == "2204.10.1");
  CHECK(NcmCode::parse("0808").format(CodeStyle::Dotted) == "0808");
  CHECK(NcmCode::parse("01").format(CodeStyle::Dotted) == "01");
}

TEST_CASE("ancestors are the proper prefixes at standard lengths") {
  const auto a = NcmCode::parse("0808.10").ancestors();
  REQUIRE(a.size() == 2);
  CHECK(a[0].digits() == "08");
  CHECK(a[1].digits() == "0808");
  CHECK(NcmCode::parse("22").ancestors().empty());
  const auto w = NcmCode::parse("22041010").ancestors();
  REQUIRE(w.size() == 4);
  CHECK(w[3].digits() == "2204101");
  CHECK(NcmCode::parse("2204").is_prefix_of(NcmCode::parse("22041010")));
}

TEST_CASE("round-trip property over random codes") {
  for (const auto& e : testing::random_entries(300, 5)) {
    CHECK(NcmCode::parse(e.code.format(CodeStyle::Dotted)) == e.code);
    CHECK(NcmCode::parse(e.code.format(CodeStyle::Plain)) == e.code);
  }
}

TEST_CASE("table load from Table-2 style file") {
  const auto t = NomenclatureTable::load(testing::fixture("toy_hs.csv"));
  CHECK(t.size() == 6);
  CHECK(t.integrity_violations().empty());
  const auto h = t.level_histogram();
  CHECK(h[0] == 1);
  CHECK(h[1] == 2);
  CHECK(h[2] == 3);
}

TEST_CASE("two-row table") {
  const auto t = NomenclatureTable::parse(
      "code,description\n08,\"Edible fruit and nuts\"\n0808,\"Apples, pears and quinces, fresh.\"\n",
      "inline");
  CHECK(t.size() == 2);
  CHECK(t.at(NcmCode::parse("0808")).description == "Apples, pears and quinces, fresh.");
}

TEST_CASE("table errors") {
  CHECK(code_of([] {
          NomenclatureTable::parse("code,description\n08,a\n0808,b\n0808,c\n", "dup");
        }) == Errc::DuplicateCode);
  CHECK(code_of([] {
          NomenclatureTable::parse("code,description\n08,a\n080810,b\n", "gap");
        }) == Errc::MissingAncestor);
  CHECK(code_of([] { NomenclatureTable::parse("code,description\n08\n", "short"); }) ==
        Errc::Parse);
  CHECK(code_of([] { NomenclatureTable::parse("codigo,descricao\n08,a\n", "header"); }) ==
        Errc::Parse);
  CHECK(code_of([] { NomenclatureTable::load("/nonexistent/ncm.csv"); }) == Errc::Io);

  const auto lenient = NomenclatureTable::load(testing::fixture("missing_heading.csv"),
                                               IntegrityMode::Lenient);
  CHECK(lenient.integrity_violations().size() == 1);
  CHECK_FALSE(lenient.warnings().empty());

  const auto empty = NomenclatureTable::parse("", "empty");
  CHECK(empty.empty());
  CHECK_FALSE(empty.warnings().empty());
}

TEST_CASE("category path of the wine sub-item") {
  const auto t = NomenclatureTable::load(testing::fixture("wine_ncm.csv"));
  const auto code = NcmCode::parse("22041010");
  const auto path = t.category_path(code);
  CHECK(path.segments.size() == 4);
  CHECK(path.rendered.rfind("Bebidas, líquidos alcoólicos e vinagres. - Vinhos de uvas frescas",
                            0) == 0);
  CHECK(path.rendered.find("- - Vinhos espumantes e vinhos espumosos - Tipo champanha") !=
        std::string::npos);
  CHECK(t.heading_description(code).rfind("Vinhos de uvas frescas", 0) == 0);
  CHECK(code_of([&] { t.category_path(NcmCode::parse("22041090")); }) == Errc::UnknownCode);
}

TEST_CASE("category path of a chapter is just its description") {
  const auto t = NomenclatureTable::load(testing::fixture("toy_hs.csv"));
  const auto p = t.category_path(NcmCode::parse("08"));
  CHECK(p.segments.size() == 1);
  CHECK(p.rendered == p.segments[0]);
}
