#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "planmine/types.hpp"

struct sqlite3;

namespace planmine {

/// Pipeline stages, in execution order. Each one is committed atomically and
/// recorded so an interrupted run resumes after the last finished stage.
enum class Stage { use_cases, programs, annotation, segmentation, changeable_areas, embedding, clustering };

[[nodiscard]] const char* to_string(Stage stage) noexcept;
[[nodiscard]] const std::vector<Stage>& all_stages();

/// Single-file SQLite store. One handle may be shared across threads: every
/// call takes the store lock, and transact() holds it for the whole
/// transaction, so writers are serialized and readers only observe
/// committed state from other threads.
class Store {
 public:
  /// Opens (creating if needed) the database at `path`; ":memory:" works.
  explicit Store(const std::filesystem::path& path);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  /// Runs `fn` inside a transaction; commits on return and rolls back if it
  /// throws. Nested calls run in a savepoint, so an inner failure that the
  /// caller catches undoes only the inner work.
  template <class Fn>
  decltype(auto) transact(Fn&& fn) {
    std::lock_guard lock(mutex_);
    Scope scope(*this);
    if constexpr (std::is_void_v<std::invoke_result_t<Fn>>) {
      fn();
      scope.commit();
    } else {
      decltype(auto) result = fn();
      scope.commit();
      return result;
    }
  }

  // Domains
  Domain create_domain(const std::string& name, const std::string& library_name,
                       const std::string& language = "python");
  [[nodiscard]] std::vector<Domain> domains();
  [[nodiscard]] std::optional<Domain> find_domain(Id id);
  [[nodiscard]] std::optional<Domain> find_domain_by_name(const std::string& name);
  [[nodiscard]] Domain domain(Id id);  // throws not_found

  // Use cases
  std::vector<UseCase> replace_use_cases(Id domain_id, const std::vector<std::string>& descriptions);
  [[nodiscard]] std::vector<UseCase> use_cases(Id domain_id);
  [[nodiscard]] std::optional<UseCase> find_use_case(Id id);

  // Programs
  Id insert_program(ExampleProgram& program);  // fills program.id
  void set_annotated_source(Id program_id, const std::string& annotated);
  void delete_programs(Id domain_id, ProgramOrigin origin);
  [[nodiscard]] std::vector<ExampleProgram> programs(Id domain_id);
  [[nodiscard]] std::optional<ExampleProgram> find_program(Id id);
  [[nodiscard]] std::optional<ExampleProgram> program_for_use_case(Id use_case_id);

  // Snippets
  void replace_snippets(Id program_id, std::vector<Snippet>& snippets);  // fills ids
  void delete_snippets(Id domain_id);
  void set_snippet_spans(Id snippet_id, const std::vector<CodeSpan>& spans);
  void set_snippet_embedding(Id snippet_id, const std::optional<Vector>& embedding);
  [[nodiscard]] std::vector<Snippet> snippets_for_program(Id program_id);
  [[nodiscard]] std::vector<Snippet> snippets_for_domain(Id domain_id);  // program ordinal, then ordinal
  [[nodiscard]] std::optional<Snippet> find_snippet(Id id);

  // Embedding cache keyed by (provider id, content hash)
  [[nodiscard]] std::optional<Vector> cached_embedding(const std::string& provider, const std::string& content_hash);
  void cache_embedding(const std::string& provider, const std::string& content_hash, const Vector& vector);

  // Plan candidates
  void replace_candidates(Id domain_id, std::vector<PlanCandidate>& candidates);  // fills ids
  [[nodiscard]] std::vector<PlanCandidate> candidates(Id domain_id);  // by rank
  [[nodiscard]] std::optional<PlanCandidate> find_candidate(Id id);

  // Plans. update_plan bumps the version counter.
  Plan insert_plan(Plan plan);
  Plan update_plan(const Plan& plan);
  void delete_plan(Id id);
  [[nodiscard]] std::vector<Plan> plans(Id domain_id);
  [[nodiscard]] std::optional<Plan> find_plan(Id id);

  // Groups. Membership is exclusive: a plan is in at most one group.
  PlanGroup insert_group(Id domain_id, const std::string& name, const std::vector<Id>& plan_ids);
  PlanGroup update_group(const PlanGroup& group);
  void delete_group(Id id);
  [[nodiscard]] std::vector<PlanGroup> groups(Id domain_id);
  [[nodiscard]] std::optional<PlanGroup> find_group(Id id);

  // Pipeline checkpoints
  void mark_stage(Id domain_id, Stage stage);
  void clear_stages(Id domain_id);
  [[nodiscard]] bool stage_done(Id domain_id, Stage stage);

  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

 private:
  class Scope {
   public:
    explicit Scope(Store& store);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;
    void commit();

   private:
    Store& store_;
    int level_;
    bool done_ = false;
  };

  void exec(const std::string& sql);
  void migrate();

  std::filesystem::path path_;
  sqlite3* db_ = nullptr;
  std::recursive_mutex mutex_;
  int depth_ = 0;
};

}  // namespace planmine
