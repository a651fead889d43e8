#include "doctest.h"

#include "planmine/segmenter.hpp"
#include "planmine/text.hpp"
#include "support.hpp"

using namespace planmine;

TEST_CASE("render inverts segment on the fifty-program corpus") {
  const auto corpus = testsupport::segmentation_corpus();
  REQUIRE(corpus.size() == 50);
  for (const auto& program : corpus) {
    CAPTURE(program);
    const auto segmented = segment(program);
    CHECK(render(segmented) == program);
    const auto ranges = snippet_code_ranges(segmented);
    REQUIRE(ranges.size() == segmented.snippets.size());
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      CHECK(program.substr(ranges[i].start, ranges[i].length()) == segmented.snippets[i].code);
    }
  }
}

TEST_CASE("zero comments gives only a preamble") {
  const auto s = segment("import os\nprint(1)\n");
  REQUIRE(s.preamble.has_value());
  CHECK(s.preamble->code == "import os\nprint(1)\n");
  CHECK(s.snippets.empty());
}

TEST_CASE("empty source") {
  const auto s = segment("");
  CHECK_FALSE(s.preamble.has_value());
  CHECK(s.snippets.empty());
}

TEST_CASE("consecutive comment lines form one header") {
  const auto s = segment("# Load\n# the data\ndf = load()\n\n# Show\nprint(df)\n");
  CHECK_FALSE(s.preamble.has_value());
  REQUIRE(s.snippets.size() == 2);
  CHECK(s.snippets[0].goal == "Load the data");
  CHECK(s.snippets[0].header == "# Load\n# the data\n");
  CHECK(s.snippets[0].code == "df = load()\n\n");
  CHECK(s.snippets[1].goal == "Show");
  CHECK(s.snippets[1].code == "print(df)\n");
}

TEST_CASE("blank lines between comment and code belong to the header") {
  const auto s = segment("# Goal\n\n\nx = 1\n");
  REQUIRE(s.snippets.size() == 1);
  CHECK(s.snippets[0].header == "# Goal\n\n\n");
  CHECK(s.snippets[0].code == "x = 1\n");
}

TEST_CASE("trailing comments without code stay in the last snippet") {
  const auto s = segment("# Read\ndf = read()\n# trailing comment\n\n\n");
  REQUIRE(s.snippets.size() == 1);
  CHECK(s.snippets[0].code == "df = read()\n# trailing comment\n\n\n");
}

TEST_CASE("a hash inside a string is not a boundary") {
  const auto s = segment("s = \"# no\"\n# yes\nt = s\n");
  REQUIRE(s.preamble.has_value());
  CHECK(s.preamble->code == "s = \"# no\"\n");
  REQUIRE(s.snippets.size() == 1);
  CHECK(s.snippets[0].goal == "yes");

  const auto doc = segment("d = \"\"\"\n# inside\n\"\"\"\nprint(d)\n");
  CHECK(doc.snippets.empty());
}

TEST_CASE("indented comments also split") {
  const auto s = segment("def f():\n    # inner\n    return 1\n");
  REQUIRE(s.snippets.size() == 1);
  CHECK(s.snippets[0].goal == "inner");
  CHECK(s.preamble->code == "def f():\n");
}

TEST_CASE("goal text") {
  CHECK(goal_from_comments("# a\n#   b  \n\n") == "a b");
  CHECK(goal_from_comments("## heading\n") == "heading");
  CHECK(goal_from_comments("// x\n", "//") == "x");
}

TEST_CASE("custom comment marker") {
  LexerOptions options;
  options.comment_marker = "//";
  const auto s = segment("// Load\nx = 1\n", options);
  REQUIRE(s.snippets.size() == 1);
  CHECK(s.snippets[0].goal == "Load");
}

TEST_CASE("fragment localization") {
  const std::string code = "df = pd.read_csv(\"a.csv\")\nx = df[\"a\"]\n";
  const auto found = localize_fragments(code, {"\"a.csv\"", "df", "missing", "\"a", ""});
  REQUIRE(found.spans.size() == 2);
  CHECK(found.spans[0].start == 0);
  CHECK(found.spans[0].end == 2);
  CHECK(code.substr(found.spans[1].start, found.spans[1].length()) == "\"a.csv\"");
  CHECK(found.discarded == std::vector<std::string>{"missing", ""});
}

TEST_CASE("fragments never split a UTF-8 character") {
  const std::string code = "name = \"\xC3\xA9t\xC3\xA9\"\n";  // "été"
  const auto found = localize_fragments(code, {"\xA9t"});
  CHECK(found.spans.empty());
  CHECK(found.discarded.size() == 1);
  const auto ok = localize_fragments(code, {"\xC3\xA9t"});
  REQUIRE(ok.spans.size() == 1);
  CHECK(ok.spans[0].start == 8);
}

TEST_CASE("overlapping fragments merge") {
  const auto found = localize_fragments("abcdef", {"bcd", "cde", "f"});
  REQUIRE(found.spans.size() == 2);
  CHECK(found.spans[0].start == 1);
  CHECK(found.spans[0].end == 5);
  CHECK(found.spans[1].start == 5);
  CHECK(spans_well_formed(found.spans, 6));
}
