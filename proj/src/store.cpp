#include "planmine/store.hpp"

#include <sqlite3.h>

#include <bit>
#include <chrono>
#include <cstring>
#include <ctime>

#include "planmine/error.hpp"

namespace planmine {

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS domains(
  id INTEGER PRIMARY KEY,
  name TEXT NOT NULL UNIQUE,
  library_name TEXT NOT NULL CHECK(length(library_name) > 0),
  language TEXT NOT NULL,
  created_at TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS use_cases(
  id INTEGER PRIMARY KEY,
  domain_id INTEGER NOT NULL REFERENCES domains(id) ON DELETE CASCADE,
  description TEXT NOT NULL CHECK(length(description) > 0),
  ordinal INTEGER NOT NULL,
  UNIQUE(domain_id, ordinal));
CREATE TABLE IF NOT EXISTS programs(
  id INTEGER PRIMARY KEY,
  domain_id INTEGER NOT NULL REFERENCES domains(id) ON DELETE CASCADE,
  use_case_id INTEGER REFERENCES use_cases(id) ON DELETE CASCADE,
  ordinal INTEGER NOT NULL,
  raw_source TEXT NOT NULL,
  annotated_source TEXT NOT NULL,
  syntactically_valid INTEGER NOT NULL,
  origin TEXT NOT NULL,
  path TEXT NOT NULL DEFAULT '');
CREATE TABLE IF NOT EXISTS snippets(
  id INTEGER PRIMARY KEY,
  program_id INTEGER NOT NULL REFERENCES programs(id) ON DELETE CASCADE,
  ordinal INTEGER NOT NULL,
  goal TEXT NOT NULL,
  header TEXT NOT NULL,
  code TEXT NOT NULL,
  embedding BLOB,
  UNIQUE(program_id, ordinal));
CREATE TABLE IF NOT EXISTS snippet_spans(
  snippet_id INTEGER NOT NULL REFERENCES snippets(id) ON DELETE CASCADE,
  idx INTEGER NOT NULL,
  start INTEGER NOT NULL,
  end_ INTEGER NOT NULL,
  note TEXT NOT NULL,
  PRIMARY KEY(snippet_id, idx));
CREATE TABLE IF NOT EXISTS embedding_cache(
  provider TEXT NOT NULL,
  content_hash TEXT NOT NULL,
  vector BLOB NOT NULL,
  PRIMARY KEY(provider, content_hash));
CREATE TABLE IF NOT EXISTS candidates(
  id INTEGER PRIMARY KEY,
  domain_id INTEGER NOT NULL REFERENCES domains(id) ON DELETE CASCADE,
  name TEXT NOT NULL,
  name_pending INTEGER NOT NULL,
  size INTEGER NOT NULL CHECK(size >= 1),
  centroid BLOB NOT NULL,
  representative_count INTEGER NOT NULL,
  rank INTEGER NOT NULL,
  top_ranked INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS candidate_members(
  candidate_id INTEGER NOT NULL REFERENCES candidates(id) ON DELETE CASCADE,
  position INTEGER NOT NULL,
  snippet_id INTEGER NOT NULL REFERENCES snippets(id) ON DELETE CASCADE,
  PRIMARY KEY(candidate_id, position));
CREATE TABLE IF NOT EXISTS plans(
  id INTEGER PRIMARY KEY,
  domain_id INTEGER NOT NULL REFERENCES domains(id) ON DELETE CASCADE,
  name TEXT NOT NULL,
  goal TEXT NOT NULL,
  solution TEXT NOT NULL,
  provenance TEXT NOT NULL,
  source_id INTEGER,
  sel_start INTEGER,
  sel_end INTEGER,
  candidate_id INTEGER REFERENCES candidates(id) ON DELETE SET NULL,
  canvas_x REAL NOT NULL,
  canvas_y REAL NOT NULL,
  version INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS plan_spans(
  plan_id INTEGER NOT NULL REFERENCES plans(id) ON DELETE CASCADE,
  idx INTEGER NOT NULL,
  start INTEGER NOT NULL,
  end_ INTEGER NOT NULL,
  note TEXT NOT NULL,
  PRIMARY KEY(plan_id, idx));
CREATE TABLE IF NOT EXISTS plan_groups(
  id INTEGER PRIMARY KEY,
  domain_id INTEGER NOT NULL REFERENCES domains(id) ON DELETE CASCADE,
  name TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS group_members(
  plan_id INTEGER PRIMARY KEY REFERENCES plans(id) ON DELETE CASCADE,
  group_id INTEGER NOT NULL REFERENCES plan_groups(id) ON DELETE CASCADE,
  position INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS pipeline_stages(
  domain_id INTEGER NOT NULL REFERENCES domains(id) ON DELETE CASCADE,
  stage TEXT NOT NULL,
  PRIMARY KEY(domain_id, stage));
CREATE INDEX IF NOT EXISTS programs_by_domain ON programs(domain_id, ordinal);
CREATE INDEX IF NOT EXISTS snippets_by_program ON snippets(program_id, ordinal);
CREATE INDEX IF NOT EXISTS members_by_group ON group_members(group_id, position);
)sql";

[[noreturn]] void db_fail(sqlite3* db, const std::string& what) {
  const int code = sqlite3_extended_errcode(db);
  const ErrorKind kind = (code & 0xff) == SQLITE_CONSTRAINT ? ErrorKind::conflict : ErrorKind::io;
  fail(kind, what + ": " + sqlite3_errmsg(db));
}

class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) db_fail(db, "prepare");
  }
  ~Stmt() { sqlite3_finalize(stmt_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int idx, std::int64_t value) {
    sqlite3_bind_int64(stmt_, idx, value);
    return *this;
  }
  Stmt& bind(int idx, int value) { return bind(idx, static_cast<std::int64_t>(value)); }
  Stmt& bind(int idx, std::size_t value) { return bind(idx, static_cast<std::int64_t>(value)); }
  Stmt& bind(int idx, bool value) { return bind(idx, static_cast<std::int64_t>(value ? 1 : 0)); }
  Stmt& bind(int idx, double value) {
    sqlite3_bind_double(stmt_, idx, value);
    return *this;
  }
  Stmt& bind(int idx, const std::string& value) {
    sqlite3_bind_text(stmt_, idx, value.data(), static_cast<int>(value.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind(int idx, const char* value) { return bind(idx, std::string(value)); }
  Stmt& bind_blob(int idx, const std::string& bytes) {
    sqlite3_bind_blob(stmt_, idx, bytes.data(), static_cast<int>(bytes.size()), SQLITE_TRANSIENT);
    return *this;
  }
  template <class T>
  Stmt& bind(int idx, const std::optional<T>& value) {
    if (value) return bind(idx, *value);
    sqlite3_bind_null(stmt_, idx);
    return *this;
  }

  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    db_fail(db_, "step");
  }
  void run() {
    while (step()) {
    }
  }

  [[nodiscard]] bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
  [[nodiscard]] std::int64_t i64(int col) const { return sqlite3_column_int64(stmt_, col); }
  [[nodiscard]] int i32(int col) const { return static_cast<int>(sqlite3_column_int64(stmt_, col)); }
  [[nodiscard]] double f64(int col) const { return sqlite3_column_double(stmt_, col); }
  [[nodiscard]] std::string str(int col) const {
    const auto* data = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
    return data == nullptr ? std::string() : std::string(data, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)));
  }
  [[nodiscard]] std::string blob(int col) const {
    const auto* data = static_cast<const char*>(sqlite3_column_blob(stmt_, col));
    return data == nullptr ? std::string() : std::string(data, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)));
  }
  [[nodiscard]] std::optional<Id> opt_id(int col) const {
    if (is_null(col)) return std::nullopt;
    return i64(col);
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

std::string pack_floats(const Vector& vector) {
  std::string bytes;
  bytes.reserve(vector.values.size() * 4);
  for (const float value : vector.values) {
    const auto bits = std::bit_cast<std::uint32_t>(value);
    for (int shift = 0; shift < 32; shift += 8) bytes.push_back(static_cast<char>((bits >> shift) & 0xff));
  }
  return bytes;
}

Vector unpack_floats(const std::string& bytes) {
  if (bytes.size() % 4 != 0) fail(ErrorKind::io, "corrupt float blob");
  Vector vector;
  vector.values.reserve(bytes.size() / 4);
  for (std::size_t i = 0; i < bytes.size(); i += 4) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i + b])) << (8 * b);
    vector.values.push_back(std::bit_cast<float>(bits));
  }
  return vector;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<CodeSpan> load_spans(sqlite3* db, const char* sql, Id owner) {
  Stmt stmt(db, sql);
  stmt.bind(1, owner);
  std::vector<CodeSpan> spans;
  while (stmt.step()) {
    spans.push_back(CodeSpan{static_cast<std::size_t>(stmt.i64(0)), static_cast<std::size_t>(stmt.i64(1)), stmt.str(2)});
  }
  return spans;
}

void store_spans(sqlite3* db, const char* delete_sql, const char* insert_sql, Id owner,
                 const std::vector<CodeSpan>& spans) {
  Stmt(db, delete_sql).bind(1, owner).run();
  for (std::size_t i = 0; i < spans.size(); ++i) {
    Stmt(db, insert_sql).bind(1, owner).bind(2, i).bind(3, spans[i].start).bind(4, spans[i].end).bind(5, spans[i].note).run();
  }
}

constexpr const char* kSnippetSpansSelect = "SELECT start, end_, note FROM snippet_spans WHERE snippet_id = ? ORDER BY idx";
constexpr const char* kPlanSpansSelect = "SELECT start, end_, note FROM plan_spans WHERE plan_id = ? ORDER BY idx";

constexpr const char* kProgramColumns =
    "SELECT id, domain_id, use_case_id, ordinal, raw_source, annotated_source, syntactically_valid, origin, path "
    "FROM programs ";

ExampleProgram read_program(const Stmt& s) {
  ExampleProgram p;
  p.id = s.i64(0);
  p.domain_id = s.i64(1);
  p.use_case_id = s.opt_id(2);
  p.ordinal = s.i32(3);
  p.raw_source = s.str(4);
  p.annotated_source = s.str(5);
  p.syntactically_valid = s.i64(6) != 0;
  p.origin = program_origin_from_string(s.str(7));
  p.path = s.str(8);
  return p;
}

constexpr const char* kSnippetColumns = "SELECT s.id, s.program_id, s.ordinal, s.goal, s.header, s.code, s.embedding FROM snippets s ";

Snippet read_snippet(sqlite3* db, const Stmt& s) {
  Snippet snip;
  snip.id = s.i64(0);
  snip.program_id = s.i64(1);
  snip.ordinal = s.i32(2);
  snip.goal = s.str(3);
  snip.header = s.str(4);
  snip.code = s.str(5);
  if (!s.is_null(6)) snip.embedding = unpack_floats(s.blob(6));
  snip.changeable_spans = load_spans(db, kSnippetSpansSelect, snip.id);
  return snip;
}

constexpr const char* kPlanColumns =
    "SELECT p.id, p.domain_id, p.name, p.goal, p.solution, p.provenance, p.source_id, p.sel_start, p.sel_end, "
    "p.candidate_id, p.canvas_x, p.canvas_y, p.version, m.group_id "
    "FROM plans p LEFT JOIN group_members m ON m.plan_id = p.id ";

Plan read_plan(sqlite3* db, const Stmt& s) {
  Plan plan;
  plan.id = s.i64(0);
  plan.domain_id = s.i64(1);
  plan.name = s.str(2);
  plan.goal = s.str(3);
  plan.solution = s.str(4);
  plan.provenance = provenance_from_string(s.str(5));
  plan.source_id = s.opt_id(6);
  if (!s.is_null(7) && !s.is_null(8)) {
    plan.source_selection = CodeSpan{static_cast<std::size_t>(s.i64(7)), static_cast<std::size_t>(s.i64(8)), ""};
  }
  plan.candidate_id = s.opt_id(9);
  plan.canvas_x = s.f64(10);
  plan.canvas_y = s.f64(11);
  plan.version = s.i64(12);
  plan.group_id = s.opt_id(13);
  plan.changeable_areas = load_spans(db, kPlanSpansSelect, plan.id);
  return plan;
}

std::optional<std::int64_t> opt_size(const std::optional<CodeSpan>& span, bool start) {
  if (!span) return std::nullopt;
  return static_cast<std::int64_t>(start ? span->start : span->end);
}

}  // namespace

const char* to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::use_cases: return "use_cases";
    case Stage::programs: return "programs";
    case Stage::annotation: return "annotation";
    case Stage::segmentation: return "segmentation";
    case Stage::changeable_areas: return "changeable_areas";
    case Stage::embedding: return "embedding";
    case Stage::clustering: return "clustering";
  }
  return "?";
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages = {Stage::use_cases,    Stage::programs,         Stage::annotation,
                                            Stage::segmentation, Stage::changeable_areas, Stage::embedding,
                                            Stage::clustering};
  return stages;
}

// ---------------------------------------------------------------------------

Store::Scope::Scope(Store& store) : store_(store), level_(store.depth_) {
  if (level_ == 0) {
    store_.exec("BEGIN IMMEDIATE");
  } else {
    store_.exec("SAVEPOINT sp" + std::to_string(level_));
  }
  ++store_.depth_;
}

Store::Scope::~Scope() {
  if (!done_) {
    try {
      if (level_ == 0) {
        store_.exec("ROLLBACK");
      } else {
        const std::string name = "sp" + std::to_string(level_);
        store_.exec("ROLLBACK TO " + name);
        store_.exec("RELEASE " + name);
      }
    } catch (...) {
      // Rollback failure leaves SQLite to abort the transaction itself.
    }
  }
  --store_.depth_;
}

void Store::Scope::commit() {
  if (level_ == 0) {
    store_.exec("COMMIT");
  } else {
    store_.exec("RELEASE sp" + std::to_string(level_));
  }
  done_ = true;
}

Store::Store(const std::filesystem::path& path) : path_(path) {
  const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
  if (sqlite3_open_v2(path.string().c_str(), &db_, flags, nullptr) != SQLITE_OK) {
    const std::string message = db_ != nullptr ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    fail(ErrorKind::io, "cannot open store '" + path.string() + "': " + message);
  }
  sqlite3_busy_timeout(db_, 5000);
  exec("PRAGMA foreign_keys = ON");
  migrate();
}

Store::~Store() { sqlite3_close(db_); }

void Store::exec(const std::string& sql) {
  char* message = nullptr;
  if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &message) != SQLITE_OK) {
    const std::string text = message != nullptr ? message : "unknown error";
    sqlite3_free(message);
    fail(ErrorKind::io, "sql failed (" + sql.substr(0, 40) + "): " + text);
  }
}

void Store::migrate() {
  std::lock_guard lock(mutex_);
  exec(kSchema);
}

// Domains --------------------------------------------------------------------

Domain Store::create_domain(const std::string& name, const std::string& library_name, const std::string& language) {
  if (library_name.empty()) fail(ErrorKind::validation, "library_name must be non-empty");
  if (name.empty()) fail(ErrorKind::validation, "domain name must be non-empty");
  return transact([&] {
    Domain d{0, name, library_name, language, utc_now()};
    Stmt(db_, "INSERT INTO domains(name, library_name, language, created_at) VALUES(?,?,?,?)")
        .bind(1, d.name)
        .bind(2, d.library_name)
        .bind(3, d.language)
        .bind(4, d.created_at)
        .run();
    d.id = sqlite3_last_insert_rowid(db_);
    return d;
  });
}

std::vector<Domain> Store::domains() {
  std::lock_guard lock(mutex_);
  Stmt s(db_, "SELECT id, name, library_name, language, created_at FROM domains ORDER BY id");
  std::vector<Domain> out;
  while (s.step()) out.push_back(Domain{s.i64(0), s.str(1), s.str(2), s.str(3), s.str(4)});
  return out;
}

std::optional<Domain> Store::find_domain(Id id) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, "SELECT id, name, library_name, language, created_at FROM domains WHERE id = ?");
  s.bind(1, id);
  if (!s.step()) return std::nullopt;
  return Domain{s.i64(0), s.str(1), s.str(2), s.str(3), s.str(4)};
}

std::optional<Domain> Store::find_domain_by_name(const std::string& name) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, "SELECT id FROM domains WHERE name = ?");
  s.bind(1, name);
  if (!s.step()) return std::nullopt;
  return find_domain(s.i64(0));
}

Domain Store::domain(Id id) {
  auto d = find_domain(id);
  if (!d) fail(ErrorKind::not_found, "unknown domain " + std::to_string(id));
  return *d;
}

// Use cases ------------------------------------------------------------------

std::vector<UseCase> Store::replace_use_cases(Id domain_id, const std::vector<std::string>& descriptions) {
  return transact([&] {
    Stmt(db_, "DELETE FROM use_cases WHERE domain_id = ?").bind(1, domain_id).run();
    std::vector<UseCase> out;
    int ordinal = 1;
    for (const auto& description : descriptions) {
      if (description.empty()) fail(ErrorKind::validation, "use case description must be non-empty");
      Stmt(db_, "INSERT INTO use_cases(domain_id, description, ordinal) VALUES(?,?,?)")
          .bind(1, domain_id)
          .bind(2, description)
          .bind(3, ordinal)
          .run();
      out.push_back(UseCase{sqlite3_last_insert_rowid(db_), domain_id, description, ordinal});
      ++ordinal;
    }
    return out;
  });
}

std::vector<UseCase> Store::use_cases(Id domain_id) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, "SELECT id, domain_id, description, ordinal FROM use_cases WHERE domain_id = ? ORDER BY ordinal");
  s.bind(1, domain_id);
  std::vector<UseCase> out;
  while (s.step()) out.push_back(UseCase{s.i64(0), s.i64(1), s.str(2), s.i32(3)});
  return out;
}

std::optional<UseCase> Store::find_use_case(Id id) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, "SELECT id, domain_id, description, ordinal FROM use_cases WHERE id = ?");
  s.bind(1, id);
  if (!s.step()) return std::nullopt;
  return UseCase{s.i64(0), s.i64(1), s.str(2), s.i32(3)};
}

// Programs -------------------------------------------------------------------

Id Store::insert_program(ExampleProgram& program) {
  return transact([&] {
    Stmt(db_,
         "INSERT INTO programs(domain_id, use_case_id, ordinal, raw_source, annotated_source, syntactically_valid, "
         "origin, path) VALUES(?,?,?,?,?,?,?,?)")
        .bind(1, program.domain_id)
        .bind(2, program.use_case_id)
        .bind(3, program.ordinal)
        .bind(4, program.raw_source)
        .bind(5, program.annotated_source)
        .bind(6, program.syntactically_valid)
        .bind(7, to_string(program.origin))
        .bind(8, program.path)
        .run();
    program.id = sqlite3_last_insert_rowid(db_);
    return program.id;
  });
}

void Store::set_annotated_source(Id program_id, const std::string& annotated) {
  std::lock_guard lock(mutex_);
  Stmt(db_, "UPDATE programs SET annotated_source = ? WHERE id = ?").bind(1, annotated).bind(2, program_id).run();
}

void Store::delete_programs(Id domain_id, ProgramOrigin origin) {
  std::lock_guard lock(mutex_);
  Stmt(db_, "DELETE FROM programs WHERE domain_id = ? AND origin = ?").bind(1, domain_id).bind(2, to_string(origin)).run();
}

std::vector<ExampleProgram> Store::programs(Id domain_id) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, (std::string(kProgramColumns) + "WHERE domain_id = ? ORDER BY ordinal, id").c_str());
  s.bind(1, domain_id);
  std::vector<ExampleProgram> out;
  while (s.step()) out.push_back(read_program(s));
  return out;
}

std::optional<ExampleProgram> Store::find_program(Id id) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, (std::string(kProgramColumns) + "WHERE id = ?").c_str());
  s.bind(1, id);
  if (!s.step()) return std::nullopt;
  return read_program(s);
}

std::optional<ExampleProgram> Store::program_for_use_case(Id use_case_id) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, (std::string(kProgramColumns) + "WHERE use_case_id = ? ORDER BY id LIMIT 1").c_str());
  s.bind(1, use_case_id);
  if (!s.step()) return std::nullopt;
  return read_program(s);
}

// Snippets -------------------------------------------------------------------

void Store::replace_snippets(Id program_id, std::vector<Snippet>& snippets) {
  transact([&] {
    Stmt(db_, "DELETE FROM snippets WHERE program_id = ?").bind(1, program_id).run();
    for (auto& snip : snippets) {
      snip.program_id = program_id;
      Stmt insert(db_, "INSERT INTO snippets(program_id, ordinal, goal, header, code, embedding) VALUES(?,?,?,?,?,?)");
      insert.bind(1, program_id).bind(2, snip.ordinal).bind(3, snip.goal).bind(4, snip.header).bind(5, snip.code);
      if (snip.embedding) insert.bind_blob(6, pack_floats(*snip.embedding));
      insert.run();
      snip.id = sqlite3_last_insert_rowid(db_);
      store_spans(db_, "DELETE FROM snippet_spans WHERE snippet_id = ?",
                  "INSERT INTO snippet_spans(snippet_id, idx, start, end_, note) VALUES(?,?,?,?,?)", snip.id,
                  snip.changeable_spans);
    }
  });
}

void Store::delete_snippets(Id domain_id) {
  std::lock_guard lock(mutex_);
  Stmt(db_, "DELETE FROM snippets WHERE program_id IN (SELECT id FROM programs WHERE domain_id = ?)")
      .bind(1, domain_id)
      .run();
}

void Store::set_snippet_spans(Id snippet_id, const std::vector<CodeSpan>& spans) {
  transact([&] {
    store_spans(db_, "DELETE FROM snippet_spans WHERE snippet_id = ?",
                "INSERT INTO snippet_spans(snippet_id, idx, start, end_, note) VALUES(?,?,?,?,?)", snippet_id, spans);
  });
}

void Store::set_snippet_embedding(Id snippet_id, const std::optional<Vector>& embedding) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, "UPDATE snippets SET embedding = ? WHERE id = ?");
  if (embedding) s.bind_blob(1, pack_floats(*embedding));
  s.bind(2, snippet_id).run();
}

std::vector<Snippet> Store::snippets_for_program(Id program_id) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, (std::string(kSnippetColumns) + "WHERE s.program_id = ? ORDER BY s.ordinal").c_str());
  s.bind(1, program_id);
  std::vector<Snippet> out;
  while (s.step()) out.push_back(read_snippet(db_, s));
  return out;
}

std::vector<Snippet> Store::snippets_for_domain(Id domain_id) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, (std::string(kSnippetColumns) +
               "JOIN programs p ON p.id = s.program_id WHERE p.domain_id = ? ORDER BY p.ordinal, p.id, s.ordinal")
                  .c_str());
  s.bind(1, domain_id);
  std::vector<Snippet> out;
  while (s.step()) out.push_back(read_snippet(db_, s));
  return out;
}

std::optional<Snippet> Store::find_snippet(Id id) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, (std::string(kSnippetColumns) + "WHERE s.id = ?").c_str());
  s.bind(1, id);
  if (!s.step()) return std::nullopt;
  return read_snippet(db_, s);
}

// Embedding cache ------------------------------------------------------------

std::optional<Vector> Store::cached_embedding(const std::string& provider, const std::string& content_hash) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, "SELECT vector FROM embedding_cache WHERE provider = ? AND content_hash = ?");
  s.bind(1, provider).bind(2, content_hash);
  if (!s.step()) return std::nullopt;
  return unpack_floats(s.blob(0));
}

void Store::cache_embedding(const std::string& provider, const std::string& content_hash, const Vector& vector) {
  std::lock_guard lock(mutex_);
  Stmt(db_, "INSERT OR REPLACE INTO embedding_cache(provider, content_hash, vector) VALUES(?,?,?)")
      .bind(1, provider)
      .bind(2, content_hash)
      .bind_blob(3, pack_floats(vector))
      .run();
}

// Candidates -----------------------------------------------------------------

void Store::replace_candidates(Id domain_id, std::vector<PlanCandidate>& candidates) {
  transact([&] {
    Stmt(db_, "DELETE FROM candidates WHERE domain_id = ?").bind(1, domain_id).run();
    for (auto& c : candidates) {
      if (c.snippet_ids.empty() || c.size != c.snippet_ids.size()) {
        fail(ErrorKind::validation, "candidate size must equal its member count and be >= 1");
      }
      for (std::size_t i = 0; i < c.representative_ids.size(); ++i) {
        if (i >= c.snippet_ids.size() || c.representative_ids[i] != c.snippet_ids[i]) {
          fail(ErrorKind::validation, "representatives must be a prefix of the distance-ordered members");
        }
      }
      c.domain_id = domain_id;
      Stmt(db_,
           "INSERT INTO candidates(domain_id, name, name_pending, size, centroid, representative_count, rank, "
           "top_ranked) VALUES(?,?,?,?,?,?,?,?)")
          .bind(1, domain_id)
          .bind(2, c.name)
          .bind(3, c.name_pending)
          .bind(4, c.size)
          .bind_blob(5, pack_floats(c.centroid))
          .bind(6, c.representative_ids.size())
          .bind(7, c.rank)
          .bind(8, c.top_ranked)
          .run();
      c.id = sqlite3_last_insert_rowid(db_);
      for (std::size_t i = 0; i < c.snippet_ids.size(); ++i) {
        Stmt(db_, "INSERT INTO candidate_members(candidate_id, position, snippet_id) VALUES(?,?,?)")
            .bind(1, c.id)
            .bind(2, i)
            .bind(3, c.snippet_ids[i])
            .run();
      }
    }
  });
}

namespace {
constexpr const char* kCandidateColumns =
    "SELECT id, domain_id, name, name_pending, size, centroid, representative_count, rank, top_ranked FROM candidates ";

PlanCandidate read_candidate(sqlite3* db, const Stmt& s) {
  PlanCandidate c;
  c.id = s.i64(0);
  c.domain_id = s.i64(1);
  c.name = s.str(2);
  c.name_pending = s.i64(3) != 0;
  c.size = static_cast<std::size_t>(s.i64(4));
  c.centroid = unpack_floats(s.blob(5));
  const auto reps = static_cast<std::size_t>(s.i64(6));
  c.rank = s.i32(7);
  c.top_ranked = s.i64(8) != 0;
  Stmt members(db, "SELECT snippet_id FROM candidate_members WHERE candidate_id = ? ORDER BY position");
  members.bind(1, c.id);
  while (members.step()) c.snippet_ids.push_back(members.i64(0));
  c.representative_ids.assign(c.snippet_ids.begin(),
                              c.snippet_ids.begin() + static_cast<std::ptrdiff_t>(std::min(reps, c.snippet_ids.size())));
  return c;
}
}  // namespace

std::vector<PlanCandidate> Store::candidates(Id domain_id) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, (std::string(kCandidateColumns) + "WHERE domain_id = ? ORDER BY rank, id").c_str());
  s.bind(1, domain_id);
  std::vector<PlanCandidate> out;
  while (s.step()) out.push_back(read_candidate(db_, s));
  return out;
}

std::optional<PlanCandidate> Store::find_candidate(Id id) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, (std::string(kCandidateColumns) + "WHERE id = ?").c_str());
  s.bind(1, id);
  if (!s.step()) return std::nullopt;
  return read_candidate(db_, s);
}

// Plans ----------------------------------------------------------------------

Plan Store::insert_plan(Plan plan) {
  if (!spans_well_formed(plan.changeable_areas, plan.solution.size())) {
    fail(ErrorKind::validation, "changeable areas must be sorted, non-overlapping and within the solution");
  }
  return transact([&] {
    plan.version = 1;
    Stmt(db_,
         "INSERT INTO plans(domain_id, name, goal, solution, provenance, source_id, sel_start, sel_end, candidate_id, "
         "canvas_x, canvas_y, version) VALUES(?,?,?,?,?,?,?,?,?,?,?,?)")
        .bind(1, plan.domain_id)
        .bind(2, plan.name)
        .bind(3, plan.goal)
        .bind(4, plan.solution)
        .bind(5, to_string(plan.provenance))
        .bind(6, plan.source_id)
        .bind(7, opt_size(plan.source_selection, true))
        .bind(8, opt_size(plan.source_selection, false))
        .bind(9, plan.candidate_id)
        .bind(10, plan.canvas_x)
        .bind(11, plan.canvas_y)
        .bind(12, plan.version)
        .run();
    plan.id = sqlite3_last_insert_rowid(db_);
    store_spans(db_, "DELETE FROM plan_spans WHERE plan_id = ?",
                "INSERT INTO plan_spans(plan_id, idx, start, end_, note) VALUES(?,?,?,?,?)", plan.id,
                plan.changeable_areas);
    plan.group_id.reset();
    return plan;
  });
}

Plan Store::update_plan(const Plan& plan) {
  if (!spans_well_formed(plan.changeable_areas, plan.solution.size())) {
    fail(ErrorKind::validation, "changeable areas must be sorted, non-overlapping and within the solution");
  }
  return transact([&] {
    Stmt update(db_,
                "UPDATE plans SET name = ?, goal = ?, solution = ?, candidate_id = ?, canvas_x = ?, canvas_y = ?, "
                "version = version + 1 WHERE id = ?");
    update.bind(1, plan.name)
        .bind(2, plan.goal)
        .bind(3, plan.solution)
        .bind(4, plan.candidate_id)
        .bind(5, plan.canvas_x)
        .bind(6, plan.canvas_y)
        .bind(7, plan.id)
        .run();
    if (sqlite3_changes(db_) == 0) fail(ErrorKind::not_found, "unknown plan " + std::to_string(plan.id));
    store_spans(db_, "DELETE FROM plan_spans WHERE plan_id = ?",
                "INSERT INTO plan_spans(plan_id, idx, start, end_, note) VALUES(?,?,?,?,?)", plan.id,
                plan.changeable_areas);
    return *find_plan(plan.id);
  });
}

void Store::delete_plan(Id id) {
  transact([&] {
    const auto plan = find_plan(id);
    if (!plan) fail(ErrorKind::not_found, "unknown plan " + std::to_string(id));
    Stmt(db_, "DELETE FROM plans WHERE id = ?").bind(1, id).run();
    if (plan->group_id) {
      Stmt left(db_, "SELECT COUNT(*) FROM group_members WHERE group_id = ?");
      left.bind(1, *plan->group_id);
      left.step();
      if (left.i64(0) == 0) delete_group(*plan->group_id);
    }
  });
}

std::vector<Plan> Store::plans(Id domain_id) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, (std::string(kPlanColumns) + "WHERE p.domain_id = ? ORDER BY p.id").c_str());
  s.bind(1, domain_id);
  std::vector<Plan> out;
  while (s.step()) out.push_back(read_plan(db_, s));
  return out;
}

std::optional<Plan> Store::find_plan(Id id) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, (std::string(kPlanColumns) + "WHERE p.id = ?").c_str());
  s.bind(1, id);
  if (!s.step()) return std::nullopt;
  return read_plan(db_, s);
}

// Groups ---------------------------------------------------------------------

PlanGroup Store::insert_group(Id domain_id, const std::string& name, const std::vector<Id>& plan_ids) {
  if (plan_ids.empty()) fail(ErrorKind::validation, "a group needs at least one plan");
  return transact([&] {
    Stmt(db_, "INSERT INTO plan_groups(domain_id, name) VALUES(?,?)").bind(1, domain_id).bind(2, name).run();
    PlanGroup group{sqlite3_last_insert_rowid(db_), domain_id, name, {}};
    group.plan_ids = plan_ids;
    return update_group(group);
  });
}

PlanGroup Store::update_group(const PlanGroup& group) {
  if (group.plan_ids.empty()) fail(ErrorKind::validation, "a group needs at least one plan");
  return transact([&] {
    Stmt(db_, "UPDATE plan_groups SET name = ? WHERE id = ?").bind(1, group.name).bind(2, group.id).run();
    if (sqlite3_changes(db_) == 0) fail(ErrorKind::not_found, "unknown group " + std::to_string(group.id));
    Stmt(db_, "DELETE FROM group_members WHERE group_id = ?").bind(1, group.id).run();
    for (std::size_t i = 0; i < group.plan_ids.size(); ++i) {
      const auto plan = find_plan(group.plan_ids[i]);
      if (!plan || plan->domain_id != group.domain_id) {
        fail(ErrorKind::not_found, "unknown plan " + std::to_string(group.plan_ids[i]) + " for this domain");
      }
      // PRIMARY KEY(plan_id) rejects a plan that already sits in another group.
      Stmt(db_, "INSERT INTO group_members(plan_id, group_id, position) VALUES(?,?,?)")
          .bind(1, group.plan_ids[i])
          .bind(2, group.id)
          .bind(3, i)
          .run();
    }
    return *find_group(group.id);
  });
}

void Store::delete_group(Id id) {
  std::lock_guard lock(mutex_);
  Stmt(db_, "DELETE FROM plan_groups WHERE id = ?").bind(1, id).run();
}

std::vector<PlanGroup> Store::groups(Id domain_id) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, "SELECT id FROM plan_groups WHERE domain_id = ? ORDER BY id");
  s.bind(1, domain_id);
  std::vector<Id> ids;
  while (s.step()) ids.push_back(s.i64(0));
  std::vector<PlanGroup> out;
  for (const Id id : ids) out.push_back(*find_group(id));
  return out;
}

std::optional<PlanGroup> Store::find_group(Id id) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, "SELECT id, domain_id, name FROM plan_groups WHERE id = ?");
  s.bind(1, id);
  if (!s.step()) return std::nullopt;
  PlanGroup group{s.i64(0), s.i64(1), s.str(2), {}};
  Stmt members(db_, "SELECT plan_id FROM group_members WHERE group_id = ? ORDER BY position");
  members.bind(1, id);
  while (members.step()) group.plan_ids.push_back(members.i64(0));
  return group;
}

// Stages ---------------------------------------------------------------------

void Store::mark_stage(Id domain_id, Stage stage) {
  std::lock_guard lock(mutex_);
  Stmt(db_, "INSERT OR IGNORE INTO pipeline_stages(domain_id, stage) VALUES(?,?)")
      .bind(1, domain_id)
      .bind(2, to_string(stage))
      .run();
}

void Store::clear_stages(Id domain_id) {
  std::lock_guard lock(mutex_);
  Stmt(db_, "DELETE FROM pipeline_stages WHERE domain_id = ?").bind(1, domain_id).run();
}

bool Store::stage_done(Id domain_id, Stage stage) {
  std::lock_guard lock(mutex_);
  Stmt s(db_, "SELECT 1 FROM pipeline_stages WHERE domain_id = ? AND stage = ?");
  s.bind(1, domain_id).bind(2, to_string(stage));
  return s.step();
}

}  // namespace planmine
