#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace planmine {

using Id = std::int64_t;

/// Half-open byte range [start, end) over some UTF-8 text.
struct CodeSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string note;

  [[nodiscard]] std::size_t length() const noexcept { return end - start; }
  bool operator==(const CodeSpan&) const = default;
};

/// Embedding vector. Stored as little-endian float32, so the in-memory type
/// matches the persisted precision exactly.
struct Vector {
  std::vector<float> values;

  [[nodiscard]] std::size_t dim() const noexcept { return values.size(); }
  bool operator==(const Vector&) const = default;
};

struct Domain {
  Id id = 0;
  std::string name;
  std::string library_name;  // substituted for {DOMAIN_NAME}
  std::string language = "python";
  std::string created_at;
  bool operator==(const Domain&) const = default;
};

struct UseCase {
  Id id = 0;
  Id domain_id = 0;
  std::string description;
  int ordinal = 0;  // 1-based
  bool operator==(const UseCase&) const = default;
};

enum class ProgramOrigin { generated, ingested };

struct ExampleProgram {
  Id id = 0;
  Id domain_id = 0;
  std::optional<Id> use_case_id;
  int ordinal = 0;
  std::string raw_source;
  std::string annotated_source;
  bool syntactically_valid = false;
  ProgramOrigin origin = ProgramOrigin::generated;
  std::string path;  // ingested programs only
  bool operator==(const ExampleProgram&) const = default;
};

struct Snippet {
  Id id = 0;
  Id program_id = 0;
  int ordinal = 0;  // 0-based within the program
  std::string goal;
  std::string header;  // raw subgoal comment lines, exactly as they appeared
  std::string code;
  std::vector<CodeSpan> changeable_spans;
  std::optional<Vector> embedding;
  bool operator==(const Snippet&) const = default;
};

struct PlanCandidate {
  Id id = 0;
  Id domain_id = 0;
  std::string name;
  bool name_pending = false;
  std::vector<Id> snippet_ids;  // ascending distance to centroid
  Vector centroid;
  std::size_t size = 0;
  std::vector<Id> representative_ids;  // prefix of snippet_ids
  int rank = 0;                        // 0 = largest
  bool top_ranked = false;             // among the L largest
  bool operator==(const PlanCandidate&) const = default;
};

enum class Provenance { empty, from_selection, from_program, from_candidate };

struct Plan {
  Id id = 0;
  Id domain_id = 0;
  std::string name;
  std::string goal;
  std::string solution;
  std::vector<CodeSpan> changeable_areas;
  Provenance provenance = Provenance::empty;
  std::optional<Id> source_id;
  std::optional<CodeSpan> source_selection;
  std::optional<Id> candidate_id;
  double canvas_x = 0.0;
  double canvas_y = 0.0;
  std::optional<Id> group_id;
  std::int64_t version = 1;
  bool operator==(const Plan&) const = default;
};

struct PlanGroup {
  Id id = 0;
  Id domain_id = 0;
  std::string name;
  std::vector<Id> plan_ids;
  bool operator==(const PlanGroup&) const = default;
};

struct PipelineConfig {
  int n_use_cases = 100;
  double pca_variance = 0.90;
  int k_min = 2;
  int k_max = 10;
  int n_init = 10;
  int max_iters = 300;
  double tol = 1e-6;
  int top_clusters = 10;      // L
  int n_representatives = 4;  // R
  std::uint64_t seed = 0;
  int embedding_dim = 256;

  /// Throws a validation error naming the first violated bound.
  void validate() const;
};

[[nodiscard]] const char* to_string(ProgramOrigin origin) noexcept;
[[nodiscard]] ProgramOrigin program_origin_from_string(const std::string& text);
[[nodiscard]] const char* to_string(Provenance provenance) noexcept;
[[nodiscard]] Provenance provenance_from_string(const std::string& text);

/// True when every span satisfies start < end <= limit and the list is
/// sorted by start with no overlaps.
[[nodiscard]] bool spans_well_formed(const std::vector<CodeSpan>& spans,
                                     std::size_t limit);

}  // namespace planmine
