#include "doctest.h"

#include "json.hpp"
#include "planmine/corpus.hpp"
#include "planmine/error.hpp"
#include "support.hpp"

using namespace planmine;
using nlohmann::json;
using testsupport::TempDir;
using testsupport::write_text;

namespace {

Id add_plan(Store& store, Id domain_id, const std::string& name, const std::string& solution,
            std::vector<CodeSpan> areas = {}) {
  Plan plan;
  plan.domain_id = domain_id;
  plan.name = name;
  plan.goal = "Goal of " + name;
  plan.solution = solution;
  plan.changeable_areas = std::move(areas);
  return store.insert_plan(plan).id;
}

}  // namespace

TEST_CASE("scanning a directory applies the filters") {
  TempDir dir;
  std::filesystem::create_directories(dir / "pkg/sub");
  write_text(dir / "pkg/b.py", "import requests\nrequests.get(u)\n");
  write_text(dir / "pkg/sub/a.py", "import requests\nprint(\n");
  write_text(dir / "pkg/test_a.py", "import requests\n");
  write_text(dir / "pkg/notes.txt", "import requests\n");
  write_text(dir / "pkg/c.py", "print(1)\n");

  CorpusFilter filter;
  filter.required_substrings = {"requests"};
  const auto programs = scan_corpus(dir / "pkg", filter);
  REQUIRE(programs.size() == 2);
  CHECK(programs[0].path == "b.py");
  CHECK(programs[1].path == "sub/a.py");
  CHECK(programs[0].ordinal == 1);
  CHECK(programs[0].syntactically_valid);
  CHECK_FALSE(programs[1].syntactically_valid);
  CHECK(programs[0].origin == ProgramOrigin::ingested);
  CHECK(programs[0].annotated_source == programs[0].raw_source);

  filter.exclude_test_files = false;
  filter.required_substrings.clear();
  CHECK(scan_corpus(dir / "pkg", filter).size() == 4);
  filter.extensions.clear();
  CHECK(scan_corpus(dir / "pkg", filter).size() == 5);
  CHECK_THROWS_AS((void)scan_corpus(dir / "missing", filter), Error);
}

TEST_CASE("ingesting stores the programs") {
  TempDir dir;
  write_text(dir / "a.py", "x = 1\n");
  Store store(dir / "s.db");
  const auto domain = store.create_domain("mine", "stdlib");
  const auto programs = ingest_corpus(store, domain.id, dir.path(), CorpusFilter{});
  REQUIRE(programs.size() == 1);
  CHECK(store.programs(domain.id).size() == 1);
  CHECK(store.find_program(programs[0].id)->raw_source == "x = 1\n");
}

TEST_CASE("search ranks by match count then position") {
  Store store(":memory:");
  const auto domain = store.create_domain("d", "pandas");
  (void)store.replace_use_cases(domain.id, {"Read a CSV", "Plot data", "Read CSV and read JSON", "read"});
  const auto hits = search(store, domain.id, "read", SearchScope::use_cases);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].matches == 2);
  CHECK(hits[1].ordinal < hits[2].ordinal);
  CHECK(search(store, domain.id, "READ", SearchScope::use_cases).size() == 3);
  CHECK(search(store, domain.id, "nothing", SearchScope::use_cases).empty());
  CHECK_THROWS_AS((void)search(store, domain.id, "  ", SearchScope::use_cases), Error);
  CHECK(search_scope_from_string("programs") == SearchScope::programs);
  CHECK_THROWS_AS((void)search_scope_from_string("plans"), Error);
}

TEST_CASE("json export has the documented shape") {
  Store store(":memory:");
  const auto domain = store.create_domain("web", "requests");
  const Id a = add_plan(store, domain.id, "Fetch", "r = get(url)", {{8, 11, "the url"}});
  const Id b = add_plan(store, domain.id, "Parse", "soup(r)");
  (void)add_plan(store, domain.id, "Loose", "x");
  (void)store.insert_group(domain.id, "Networking", {b, a});

  const auto doc = json::parse(export_plans(store, domain.id, ExportFormat::json));
  CHECK(doc["domain"] == "web");
  REQUIRE(doc["plans"].size() == 3);
  CHECK(doc["plans"][0] == json{{"name", "Fetch"},
                                {"goal", "Goal of Fetch"},
                                {"solution", "r = get(url)"},
                                {"changeable_areas", {{{"start", 8}, {"end", 11}, {"note", "the url"}}}},
                                {"group", "Networking"}});
  CHECK(doc["plans"][2]["group"].is_null());
  REQUIRE(doc["groups"].size() == 1);
  CHECK(doc["groups"][0]["name"] == "Networking");
  CHECK(doc["groups"][0]["plan_ids"] == json::array({1, 0}));
}

TEST_CASE("markdown export") {
  Store store(":memory:");
  const auto domain = store.create_domain("web", "requests");
  const Id a = add_plan(store, domain.id, "Fetch", "r = get(url)", {{8, 11, ""}});
  (void)add_plan(store, domain.id, "Loose", "x = `y`");
  (void)store.insert_group(domain.id, "Networking", {a});
  const auto md = export_plans(store, domain.id, ExportFormat::markdown);
  CHECK(md.starts_with("# web\n"));
  CHECK(md.find("## Networking") != std::string::npos);
  CHECK(md.find("### Fetch") != std::string::npos);
  CHECK(md.find("```python\nr = get(url)\n```") != std::string::npos);
  CHECK(md.find("`url`") != std::string::npos);
  CHECK(md.find("## Ungrouped") > md.find("## Networking"));
  CHECK(md.find("### Loose") > md.find("## Ungrouped"));
  CHECK(export_format_from_string("md") == ExportFormat::markdown);
}

TEST_CASE("export then import reproduces the document") {
  Store store(":memory:");
  const auto source = store.create_domain("web", "requests");
  const Id a = add_plan(store, source.id, "Fetch", "r = get(url)", {{8, 11, "u"}});
  const Id b = add_plan(store, source.id, "Ünïcode", "s = \"é\"", {{4, 8, ""}});
  const Id c = add_plan(store, source.id, "Third", "pass");
  (void)store.insert_group(source.id, "G1", {c, a});
  (void)store.insert_group(source.id, "G2", {b});
  const auto exported = export_plans(store, source.id, ExportFormat::json);

  const auto target = store.create_domain("copy", "requests");
  CHECK(import_plans(store, target.id, exported) == 3);
  auto original = json::parse(exported);
  auto copy = json::parse(export_plans(store, target.id, ExportFormat::json));
  original.erase("domain");
  copy.erase("domain");
  CHECK(original == copy);

  CHECK_THROWS_AS((void)import_plans(store, target.id, "{"), Error);
  CHECK_THROWS_AS((void)import_plans(store, target.id, R"({"plans":[],"groups":[{"name":"x","plan_ids":[4]}]})"),
                  Error);
  CHECK(store.plans(target.id).size() == 3);
}
