#include "planmine/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "planmine/error.hpp"
#include "planmine/syntax.hpp"
#include "planmine/text.hpp"

namespace planmine {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

bool passes(const fs::path& path, const std::string& content, const CorpusFilter& filter) {
  if (!filter.extensions.empty() &&
      std::find(filter.extensions.begin(), filter.extensions.end(), path.extension().string()) ==
          filter.extensions.end()) {
    return false;
  }
  if (filter.exclude_test_files && text::to_lower(path.filename().string()).find("test") != std::string::npos) {
    return false;
  }
  return std::all_of(filter.required_substrings.begin(), filter.required_substrings.end(),
                     [&](const std::string& needle) { return content.find(needle) != std::string::npos; });
}

// Longest run of backticks in `s`, so inline code can be wrapped safely.
std::size_t longest_backtick_run(std::string_view s) {
  std::size_t best = 0;
  std::size_t run = 0;
  for (const char c : s) {
    run = c == '`' ? run + 1 : 0;
    best = std::max(best, run);
  }
  return best;
}

std::string inline_code(std::string_view s) {
  const std::string ticks(longest_backtick_run(s) + 1, '`');
  const bool pad = !s.empty() && (s.front() == '`' || s.back() == '`');
  std::string out = ticks;
  if (pad) out += ' ';
  for (const char c : s) out += c == '\n' ? ' ' : c;
  if (pad) out += ' ';
  return out + ticks;
}

std::string fence_for(std::string_view code) {
  return std::string(std::max<std::size_t>(3, longest_backtick_run(code) + 1), '`');
}

void plan_markdown(std::ostringstream& out, const Plan& plan, const std::string& language) {
  out << "### " << (plan.name.empty() ? "(unnamed plan)" : plan.name) << "\n\n";
  if (!plan.goal.empty()) out << "Goal: " << plan.goal << "\n\n";
  const std::string fence = fence_for(plan.solution);
  out << fence << language << "\n" << plan.solution;
  if (!plan.solution.empty() && plan.solution.back() != '\n') out << "\n";
  out << fence << "\n\n";
  if (!plan.changeable_areas.empty()) {
    out << "Changeable areas:\n\n";
    for (const auto& span : plan.changeable_areas) {
      out << "- " << inline_code(std::string_view(plan.solution).substr(span.start, span.length()));
      if (!span.note.empty()) out << ": " << span.note;
      out << "\n";
    }
    out << "\n";
  }
}

}  // namespace

std::vector<ExampleProgram> scan_corpus(const fs::path& dir, const CorpusFilter& filter) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorKind::io, "not a readable directory: " + dir.string());

  std::vector<fs::path> files;
  fs::recursive_directory_iterator it(dir, fs::directory_options::skip_permission_denied, ec);
  if (ec) fail(ErrorKind::io, "cannot list " + dir.string() + ": " + ec.message());
  for (const auto& entry : it) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<ExampleProgram> programs;
  for (const auto& path : files) {
    std::string content = read_file(path);
    if (!passes(path, content, filter)) continue;
    ExampleProgram program;
    program.ordinal = static_cast<int>(programs.size()) + 1;
    program.syntactically_valid = validate_syntax(content);
    program.raw_source = content;
    program.annotated_source = std::move(content);
    program.origin = ProgramOrigin::ingested;
    program.path = fs::relative(path, dir).generic_string();
    programs.push_back(std::move(program));
  }
  return programs;
}

std::vector<ExampleProgram> ingest_corpus(Store& store, Id domain_id, const fs::path& dir, const CorpusFilter& filter) {
  auto programs = scan_corpus(dir, filter);
  (void)store.domain(domain_id);
  store.transact([&] {
    for (auto& program : programs) {
      program.domain_id = domain_id;
      store.insert_program(program);
    }
  });
  return programs;
}

SearchScope search_scope_from_string(const std::string& text) {
  if (text == "use_cases") return SearchScope::use_cases;
  if (text == "programs") return SearchScope::programs;
  if (text == "snippets") return SearchScope::snippets;
  fail(ErrorKind::validation, "unknown search scope '" + text + "'");
}

std::vector<SearchHit> search(Store& store, Id domain_id, const std::string& query, SearchScope scope) {
  (void)store.domain(domain_id);
  const auto needle = text::trim(query);
  if (needle.empty()) fail(ErrorKind::precondition, "search query must be non-empty");

  std::vector<SearchHit> hits;
  auto consider = [&](Id id, int ordinal, std::size_t matches) {
    if (matches > 0) hits.push_back(SearchHit{id, ordinal, matches});
  };
  switch (scope) {
    case SearchScope::use_cases:
      for (const auto& uc : store.use_cases(domain_id)) {
        consider(uc.id, uc.ordinal, text::count_occurrences_icase(uc.description, needle));
      }
      break;
    case SearchScope::programs:
      for (const auto& p : store.programs(domain_id)) {
        consider(p.id, p.ordinal, text::count_occurrences_icase(p.annotated_source, needle));
      }
      break;
    case SearchScope::snippets: {
      int position = 0;
      for (const auto& s : store.snippets_for_domain(domain_id)) {
        consider(s.id, position++,
                 text::count_occurrences_icase(s.goal, needle) + text::count_occurrences_icase(s.code, needle));
      }
      break;
    }
  }
  std::stable_sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    return a.matches != b.matches ? a.matches > b.matches : a.ordinal < b.ordinal;
  });
  return hits;
}

ExportFormat export_format_from_string(const std::string& text) {
  if (text == "json") return ExportFormat::json;
  if (text == "markdown" || text == "md") return ExportFormat::markdown;
  fail(ErrorKind::validation, "unknown export format '" + text + "'");
}

std::string export_plans(Store& store, Id domain_id, ExportFormat format) {
  return store.transact([&] {
    const Domain domain = store.domain(domain_id);
    const auto plans = store.plans(domain_id);
    const auto groups = store.groups(domain_id);

    std::map<Id, std::size_t> position;
    for (std::size_t i = 0; i < plans.size(); ++i) position[plans[i].id] = i;
    std::map<Id, std::string> group_name;
    for (const auto& g : groups) group_name[g.id] = g.name;

    if (format == ExportFormat::json) {
      json doc;
      doc["domain"] = domain.name;
      doc["plans"] = json::array();
      for (const auto& plan : plans) {
        json areas = json::array();
        for (const auto& span : plan.changeable_areas) {
          areas.push_back({{"start", span.start}, {"end", span.end}, {"note", span.note}});
        }
        doc["plans"].push_back({{"name", plan.name},
                                {"goal", plan.goal},
                                {"solution", plan.solution},
                                {"changeable_areas", areas},
                                {"group", plan.group_id ? json(group_name.at(*plan.group_id)) : json(nullptr)}});
      }
      doc["groups"] = json::array();
      for (const auto& g : groups) {
        json ids = json::array();
        for (const Id id : g.plan_ids) ids.push_back(position.at(id));
        doc["groups"].push_back({{"name", g.name}, {"plan_ids", ids}});
      }
      return doc.dump(2) + "\n";
    }

    std::ostringstream out;
    out << "# " << domain.name << "\n\n";
    for (const auto& g : groups) {
      out << "## " << g.name << "\n\n";
      for (const Id id : g.plan_ids) plan_markdown(out, plans[position.at(id)], domain.language);
    }
    const bool any_loose =
        std::any_of(plans.begin(), plans.end(), [](const Plan& p) { return !p.group_id.has_value(); });
    if (any_loose) {
      out << "## Ungrouped\n\n";
      for (const auto& plan : plans) {
        if (!plan.group_id) plan_markdown(out, plan, domain.language);
      }
    }
    return out.str();
  });
}

std::size_t import_plans(Store& store, Id domain_id, const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("export document is not valid JSON: ") + e.what());
  }
  try {
    return store.transact([&] {
      (void)store.domain(domain_id);
      std::vector<Id> created;
      for (const auto& item : doc.at("plans")) {
        Plan plan;
        plan.domain_id = domain_id;
        plan.name = item.at("name").get<std::string>();
        plan.goal = item.at("goal").get<std::string>();
        plan.solution = item.at("solution").get<std::string>();
        for (const auto& area : item.at("changeable_areas")) {
          plan.changeable_areas.push_back(CodeSpan{area.at("start").get<std::size_t>(),
                                                   area.at("end").get<std::size_t>(),
                                                   area.value("note", std::string())});
        }
        plan.canvas_x = 40.0 * static_cast<double>(created.size());
        plan.canvas_y = 40.0 * static_cast<double>(created.size());
        created.push_back(store.insert_plan(std::move(plan)).id);
      }
      for (const auto& item : doc.at("groups")) {
        std::vector<Id> members;
        for (const auto& index : item.at("plan_ids")) {
          const auto i = index.get<std::size_t>();
          if (i >= created.size()) fail(ErrorKind::validation, "group refers to plan index out of range");
          members.push_back(created[i]);
        }
        store.insert_group(domain_id, item.at("name").get<std::string>(), members);
      }
      return created.size();
    });
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed export document: ") + e.what());
  }
}

}  // namespace planmine
