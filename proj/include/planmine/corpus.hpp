#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "planmine/store.hpp"
#include "planmine/types.hpp"

namespace planmine {

struct CorpusFilter {
  std::vector<std::string> required_substrings;  // every one must occur in the file
  bool exclude_test_files = true;                // filename contains "test", any case
  std::vector<std::string> extensions = {".py"};  // empty accepts every file
};

/// Reads matching files under `dir` (recursively, sorted by relative path).
/// Programs come back with origin=ingested, validity computed and ids unset.
[[nodiscard]] std::vector<ExampleProgram> scan_corpus(const std::filesystem::path& dir, const CorpusFilter& filter);

/// scan_corpus() followed by insertion into `domain_id`, in one transaction.
std::vector<ExampleProgram> ingest_corpus(Store& store, Id domain_id, const std::filesystem::path& dir,
                                          const CorpusFilter& filter);

enum class SearchScope { use_cases, programs, snippets };

[[nodiscard]] SearchScope search_scope_from_string(const std::string& text);

struct SearchHit {
  Id id = 0;
  int ordinal = 0;  // position used for tie-breaking
  std::size_t matches = 0;
};

/// Case-insensitive substring search. Use cases match on description,
/// programs on annotated source, snippets on goal and code. Hits are ordered
/// by match count (descending), then ordinal.
[[nodiscard]] std::vector<SearchHit> search(Store& store, Id domain_id, const std::string& query, SearchScope scope);

enum class ExportFormat { json, markdown };

[[nodiscard]] ExportFormat export_format_from_string(const std::string& text);

[[nodiscard]] std::string export_plans(Store& store, Id domain_id, ExportFormat format);

/// Adds the plans and groups of a JSON export to `domain_id`. Returns the
/// number of plans created.
std::size_t import_plans(Store& store, Id domain_id, const std::string& json_text);

}  // namespace planmine
