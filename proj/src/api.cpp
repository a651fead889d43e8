#include "planmine/api.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "planmine/corpus.hpp"
#include "planmine/error.hpp"
#include "planmine/pipeline.hpp"
#include "planmine/text.hpp"

// After Eigen: <resolv.h> defines a `_res` macro.
#include "httplib.h"

namespace planmine {

using nlohmann::json;
using httplib::Request;
using httplib::Response;

namespace {

constexpr double kSlotWidth = 320.0;
constexpr double kSlotHeight = 220.0;
constexpr std::size_t kSlotColumns = 4;
constexpr double kDuplicateOffset = 24.0;
constexpr std::size_t kSimilarLimit = 10;

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::not_found: return 404;
    case ErrorKind::precondition:
    case ErrorKind::validation:
    case ErrorKind::degenerate_data: return 422;
    case ErrorKind::conflict: return 409;
    case ErrorKind::gone: return 410;
    case ErrorKind::transport:
    case ErrorKind::malformed_response: return 502;
    case ErrorKind::usage: return 400;
    case ErrorKind::io: return 500;
  }
  return 500;
}

void send(Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(Response& res, int status, const std::string& code, const std::string& message) {
  send(res, status, json{{"code", code}, {"message", message}});
}

using Handler = std::function<void(const Request&, Response&)>;

Handler guarded(Handler fn) {
  return [fn = std::move(fn)](const Request& req, Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, status_for(e.kind()), to_string(e.kind()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 422, to_string(ErrorKind::validation), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal_error", e.what());
    }
  };
}

Id path_id(const Request& req, std::size_t group = 1) {
  try {
    return std::stoll(req.matches[static_cast<int>(group)].str());
  } catch (const std::exception&) {
    fail(ErrorKind::not_found, "bad id in path");
  }
}

json body_of(const Request& req) {
  if (text::trim(req.body).empty()) return json::object();
  json body;
  try {
    body = json::parse(req.body);
  } catch (const json::exception& e) {
    fail(ErrorKind::usage, std::string("request body is not valid JSON: ") + e.what());
  }
  if (!body.is_object()) fail(ErrorKind::usage, "request body must be a JSON object");
  return body;
}

std::string string_field(const json& body, const char* key) {
  const auto it = body.find(key);
  if (it == body.end() || !it->is_string()) fail(ErrorKind::validation, std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& body, const char* key) {
  if (!body.contains(key) || body[key].is_null()) return std::nullopt;
  return string_field(body, key);
}

std::int64_t int_field(const json& body, const char* key) {
  const auto it = body.find(key);
  if (it == body.end() || !it->is_number_integer()) {
    fail(ErrorKind::validation, std::string("'") + key + "' must be an integer");
  }
  return it->get<std::int64_t>();
}

std::size_t offset_field(const json& body, const char* key) {
  const auto value = int_field(body, key);
  if (value < 0) fail(ErrorKind::validation, std::string("'") + key + "' must be >= 0");
  return static_cast<std::size_t>(value);
}

std::optional<double> optional_number(const json& body, const char* key) {
  if (!body.contains(key) || body[key].is_null()) return std::nullopt;
  if (!body[key].is_number()) fail(ErrorKind::validation, std::string("'") + key + "' must be a number");
  const double v = body[key].get<double>();
  if (!std::isfinite(v)) fail(ErrorKind::validation, std::string("'") + key + "' must be finite");
  return v;
}

bool flag_field(const json& body, const char* key) {
  if (!body.contains(key) || body[key].is_null()) return false;
  if (!body[key].is_boolean()) fail(ErrorKind::validation, std::string("'") + key + "' must be a boolean");
  return body[key].get<bool>();
}

std::vector<Id> id_list(const json& body, const char* key) {
  const auto it = body.find(key);
  if (it == body.end() || !it->is_array()) fail(ErrorKind::validation, std::string("'") + key + "' must be an array");
  std::vector<Id> ids;
  for (const auto& v : *it) {
    if (!v.is_number_integer()) fail(ErrorKind::validation, std::string("'") + key + "' must hold integer ids");
    ids.push_back(v.get<Id>());
  }
  std::vector<Id> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    fail(ErrorKind::validation, std::string("'") + key + "' lists a plan twice");
  }
  return ids;
}

CodeSpan checked_span(std::string_view text_value, std::size_t start, std::size_t end) {
  if (start >= end) fail(ErrorKind::validation, "span must satisfy start < end");
  if (end > text_value.size()) fail(ErrorKind::validation, "span exceeds the text");
  if (!text::is_utf8_boundary(text_value, start) || !text::is_utf8_boundary(text_value, end)) {
    fail(ErrorKind::validation, "span splits a UTF-8 character");
  }
  return CodeSpan{start, end, ""};
}

json span_json(const CodeSpan& s) { return {{"start", s.start}, {"end", s.end}, {"note", s.note}}; }

json snippet_json(const Snippet& s) {
  json spans = json::array();
  for (const auto& span : s.changeable_spans) spans.push_back(span_json(span));
  return {{"id", s.id}, {"program_id", s.program_id}, {"ordinal", s.ordinal},
          {"goal", s.goal}, {"code", s.code},         {"changeable_spans", spans}};
}

json group_json(const PlanGroup& g) {
  return {{"id", g.id}, {"domain_id", g.domain_id}, {"name", g.name}, {"plan_ids", g.plan_ids}};
}

Provenance provenance_field(const std::string& mode) {
  try {
    return provenance_from_string(mode);
  } catch (const Error&) {
    fail(ErrorKind::validation, "mode must be one of empty, from_selection, from_program, from_candidate");
  }
}

// Distinct lower-case words (letters, digits, underscore) of `s`.
std::vector<std::string> keywords(std::string_view s) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && std::find(words.begin(), words.end(), current) == words.end()) words.push_back(current);
    current.clear();
  };
  for (const char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) != 0 || c == '_' || u >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else {
      flush();
    }
  }
  flush();
  return words;
}

}  // namespace

std::pair<double, double> canvas_slot(std::size_t n) {
  return {40.0 + static_cast<double>(n % kSlotColumns) * kSlotWidth,
          40.0 + static_cast<double>(n / kSlotColumns) * kSlotHeight};
}

json plan_to_json(const Plan& plan) {
  json areas = json::array();
  for (const auto& span : plan.changeable_areas) areas.push_back(span_json(span));
  return {{"id", plan.id},
          {"domain_id", plan.domain_id},
          {"name", plan.name},
          {"goal", plan.goal},
          {"solution", plan.solution},
          {"changeable_areas", areas},
          {"provenance", to_string(plan.provenance)},
          {"source_id", plan.source_id ? json(*plan.source_id) : json(nullptr)},
          {"source_selection", plan.source_selection
                                   ? json{{"start", plan.source_selection->start}, {"end", plan.source_selection->end}}
                                   : json(nullptr)},
          {"candidate_id", plan.candidate_id ? json(*plan.candidate_id) : json(nullptr)},
          {"canvas_x", plan.canvas_x},
          {"canvas_y", plan.canvas_y},
          {"group_id", plan.group_id ? json(*plan.group_id) : json(nullptr)},
          {"version", plan.version}};
}

ApiService::ApiService(Store& store, Gateway& gateway, ApiOptions options)
    : store_(store), gateway_(gateway), options_(std::move(options)) {}

std::size_t ApiService::session_count() {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

std::string ApiService::touch_session(const std::string& token) {
  std::lock_guard lock(sessions_mutex_);
  const auto now = std::chrono::steady_clock::now();
  std::erase_if(sessions_, [&](const auto& entry) { return now - entry.second.last_used > options_.session_ttl; });
  if (!token.empty()) {
    if (auto it = sessions_.find(token); it != sessions_.end()) {
      it->second.last_used = now;
      return token;
    }
  }
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::string fresh = text::hex64(rng()) + text::hex64(rng());
  sessions_[fresh] = Session{{}, now};
  return fresh;
}

std::set<Id>& ApiService::shown_for(const std::string& token, Id domain_id) {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.at(token).shown[domain_id];
}

std::optional<std::string> ApiService::cached(const std::string& key) {
  std::lock_guard lock(cache_mutex_);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  return std::nullopt;
}

void ApiService::remember(const std::string& key, const std::string& value) {
  std::lock_guard lock(cache_mutex_);
  cache_[key] = value;
}

class ApiRoutes {
 public:
  explicit ApiRoutes(ApiService& api) : api_(api), store_(api.store_) {}

  void install(httplib::Server& server) {
    const std::string origin = api_.options_.cors_origin;
    server.set_default_headers({{"Access-Control-Allow-Origin", origin},
                                {"Access-Control-Expose-Headers", ApiService::kSessionHeader}});
    server.Options(R"(.*)", [](const Request&, Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, PATCH, DELETE, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", std::string("Content-Type, ") + ApiService::kSessionHeader);
      res.status = 204;
    });
    server.set_error_handler([](const Request&, Response& res) {
      if (res.body.empty()) send_error(res, res.status, res.status == 404 ? "not_found" : "error", "no such route");
    });

    server.Get("/domains", guarded([this](const Request&, Response& res) { list_domains(res); }));
    server.Get(R"(/domains/(\d+)/use-cases)", guarded([this](const Request& q, Response& r) { use_cases(q, r); }));
    server.Get(R"(/domains/(\d+)/programs)", guarded([this](const Request& q, Response& r) { programs(q, r); }));
    server.Get(R"(/domains/(\d+)/candidates)", guarded([this](const Request& q, Response& r) { candidates(q, r); }));
    server.Get(R"(/domains/(\d+)/candidates/next)",
               guarded([this](const Request& q, Response& r) { next_candidate(q, r); }));
    server.Get(R"(/domains/(\d+)/plans)", guarded([this](const Request& q, Response& r) { domain_plans(q, r); }));
    server.Get(R"(/domains/(\d+)/groups)", guarded([this](const Request& q, Response& r) { domain_groups(q, r); }));
    server.Get(R"(/domains/(\d+)/export)", guarded([this](const Request& q, Response& r) { export_domain(q, r); }));

    server.Post("/plans", guarded([this](const Request& q, Response& r) { create_plan(q, r); }));
    server.Get(R"(/plans/(\d+))", guarded([this](const Request& q, Response& r) { get_plan(q, r); }));
    server.Patch(R"(/plans/(\d+))", guarded([this](const Request& q, Response& r) { patch_plan(q, r); }));
    server.Delete(R"(/plans/(\d+))", guarded([this](const Request& q, Response& r) { delete_plan(q, r); }));
    server.Post(R"(/plans/(\d+)/duplicate)", guarded([this](const Request& q, Response& r) { duplicate_plan(q, r); }));
    server.Post(R"(/plans/(\d+)/changeable-areas)", guarded([this](const Request& q, Response& r) { add_area(q, r); }));
    server.Delete(R"(/plans/(\d+)/changeable-areas/(\d+))",
                  guarded([this](const Request& q, Response& r) { remove_area(q, r); }));
    server.Get(R"(/plans/(\d+)/similar)", guarded([this](const Request& q, Response& r) { similar(q, r); }));
    server.Get(R"(/plans/(\d+)/context)", guarded([this](const Request& q, Response& r) { context(q, r); }));

    server.Post("/groups", guarded([this](const Request& q, Response& r) { create_group(q, r); }));
    server.Patch(R"(/groups/(\d+))", guarded([this](const Request& q, Response& r) { patch_group(q, r); }));

    server.Post("/explain", guarded([this](const Request& q, Response& r) { explain(q, r); }));
    server.Post("/predict-output", guarded([this](const Request& q, Response& r) { predict(q, r); }));
  }

 private:
  // Domains and corpora -------------------------------------------------------

  void list_domains(Response& res) {
    const json out = store_.transact([&] {
      json list = json::array();
      for (const auto& d : store_.domains()) {
        list.push_back({{"id", d.id},
                        {"name", d.name},
                        {"library_name", d.library_name},
                        {"language", d.language},
                        {"created_at", d.created_at},
                        {"pipeline_complete", store_.stage_done(d.id, Stage::clustering)}});
      }
      return list;
    });
    send(res, 200, out);
  }

  void use_cases(const Request& req, Response& res) {
    const Id domain_id = path_id(req);
    const json out = store_.transact([&] {
      (void)store_.domain(domain_id);
      std::map<Id, UseCase> by_id;
      std::vector<Id> order;
      for (const auto& uc : store_.use_cases(domain_id)) {
        by_id[uc.id] = uc;
        order.push_back(uc.id);
      }
      if (req.has_param("q")) {
        order.clear();
        for (const auto& hit : search(store_, domain_id, req.get_param_value("q"), SearchScope::use_cases)) {
          order.push_back(hit.id);
        }
      }
      json list = json::array();
      for (const Id id : order) {
        const auto& uc = by_id.at(id);
        const auto program = store_.program_for_use_case(id);
        list.push_back({{"id", uc.id},
                        {"ordinal", uc.ordinal},
                        {"description", uc.description},
                        {"program_id", program ? json(program->id) : json(nullptr)}});
      }
      return list;
    });
    send(res, 200, out);
  }

  void programs(const Request& req, Response& res) {
    const Id domain_id = path_id(req);
    const json out = store_.transact([&] {
      (void)store_.domain(domain_id);
      std::map<Id, ExampleProgram> by_id;
      std::vector<Id> order;
      for (auto& p : store_.programs(domain_id)) {
        order.push_back(p.id);
        by_id[p.id] = std::move(p);
      }
      if (req.has_param("q")) {
        order.clear();
        for (const auto& hit : search(store_, domain_id, req.get_param_value("q"), SearchScope::programs)) {
          order.push_back(hit.id);
        }
      }
      json list = json::array();
      for (const Id id : order) {
        const auto& p = by_id.at(id);
        std::optional<UseCase> uc;
        if (p.use_case_id) uc = store_.find_use_case(*p.use_case_id);
        list.push_back({{"id", p.id},
                        {"ordinal", p.ordinal},
                        {"use_case_id", p.use_case_id ? json(*p.use_case_id) : json(nullptr)},
                        {"use_case", uc ? json(uc->description) : json(nullptr)},
                        {"annotated_source", p.annotated_source},
                        {"syntactically_valid", p.syntactically_valid},
                        {"origin", to_string(p.origin)},
                        {"path", p.path}});
      }
      return list;
    });
    send(res, 200, out);
  }

  json candidate_json(const PlanCandidate& c) {
    json out = {{"id", c.id},
                {"name", c.name},
                {"name_pending", c.name_pending},
                {"size", c.size},
                {"rank", c.rank},
                {"top_ranked", c.top_ranked},
                {"snippet_ids", c.snippet_ids},
                {"representative_ids", c.representative_ids}};
    const auto rep = store_.find_snippet(c.representative_ids.front());
    out["representative"] = rep ? snippet_json(*rep) : json(nullptr);
    return out;
  }

  void candidates(const Request& req, Response& res) {
    const Id domain_id = path_id(req);
    const json out = store_.transact([&] {
      (void)store_.domain(domain_id);
      json list = json::array();
      for (const auto& c : store_.candidates(domain_id)) list.push_back(candidate_json(c));
      return list;
    });
    send(res, 200, out);
  }

  void next_candidate(const Request& req, Response& res) {
    const Id domain_id = path_id(req);
    const std::string token = api_.touch_session(req.get_header_value(ApiService::kSessionHeader));
    res.set_header(ApiService::kSessionHeader, token);
    const json out = store_.transact([&] {
      (void)store_.domain(domain_id);
      if (!store_.stage_done(domain_id, Stage::clustering)) {
        fail(ErrorKind::conflict, "the pipeline has not finished for this domain");
      }
      auto& shown = api_.shown_for(token, domain_id);
      for (const auto& c : store_.candidates(domain_id)) {
        if (shown.contains(c.id)) continue;
        shown.insert(c.id);
        return candidate_json(c);
      }
      fail(ErrorKind::gone, "every candidate has been suggested in this session");
    });
    send(res, 200, out);
  }

  void domain_plans(const Request& req, Response& res) {
    const Id domain_id = path_id(req);
    const json out = store_.transact([&] {
      (void)store_.domain(domain_id);
      json list = json::array();
      for (const auto& p : store_.plans(domain_id)) list.push_back(plan_to_json(p));
      return list;
    });
    send(res, 200, out);
  }

  void domain_groups(const Request& req, Response& res) {
    const Id domain_id = path_id(req);
    const json out = store_.transact([&] {
      (void)store_.domain(domain_id);
      json list = json::array();
      for (const auto& g : store_.groups(domain_id)) list.push_back(group_json(g));
      return list;
    });
    send(res, 200, out);
  }

  void export_domain(const Request& req, Response& res) {
    const Id domain_id = path_id(req);
    const auto format = req.has_param("format") ? req.get_param_value("format") : std::string("json");
    if (format == "snapshot") {
      send(res, 200, snapshot_domain(store_, domain_id));
      return;
    }
    const auto parsed = export_format_from_string(format);
    const std::string doc = export_plans(store_, domain_id, parsed);
    res.status = 200;
    res.set_content(doc, parsed == ExportFormat::json ? "application/json" : "text/markdown; charset=utf-8");
  }

  // Plans -----------------------------------------------------------------------

  Plan require_plan(Id id) {
    auto plan = store_.find_plan(id);
    if (!plan) fail(ErrorKind::not_found, "unknown plan " + std::to_string(id));
    return *plan;
  }

  ExampleProgram require_program(Id id) {
    auto program = store_.find_program(id);
    if (!program) fail(ErrorKind::not_found, "unknown program " + std::to_string(id));
    return *program;
  }

  std::string program_title(const ExampleProgram& p) {
    if (p.use_case_id) {
      if (auto uc = store_.find_use_case(*p.use_case_id)) return uc->description;
    }
    return p.path;
  }

  void place_in_free_slot(Plan& plan) {
    const auto existing = store_.plans(plan.domain_id);
    for (std::size_t n = 0;; ++n) {
      const auto [x, y] = canvas_slot(n);
      const bool taken = std::any_of(existing.begin(), existing.end(), [&](const Plan& p) {
        return p.canvas_x >= x && p.canvas_x < x + kSlotWidth && p.canvas_y >= y && p.canvas_y < y + kSlotHeight;
      });
      if (!taken) {
        plan.canvas_x = x;
        plan.canvas_y = y;
        return;
      }
    }
  }

  void create_plan(const Request& req, Response& res) {
    const json body = body_of(req);
    const Provenance mode = provenance_field(string_field(body, "mode"));
    const Id source = int_field(body, "source_ref");
    const bool has_selection = body.contains("selection") && !body["selection"].is_null();

    const json out = store_.transact([&] {
      Plan plan;
      plan.provenance = mode;
      switch (mode) {
        case Provenance::empty: {
          if (has_selection) fail(ErrorKind::validation, "an empty plan takes no selection");
          plan.domain_id = store_.domain(source).id;
          break;
        }
        case Provenance::from_program:
        case Provenance::from_selection: {
          const auto program = require_program(source);
          plan.domain_id = program.domain_id;
          plan.source_id = program.id;
          plan.name = program_title(program);
          if (mode == Provenance::from_selection) {
            if (!has_selection) fail(ErrorKind::validation, "from_selection needs a selection");
            const auto& sel = body["selection"];
            if (!sel.is_object()) fail(ErrorKind::validation, "'selection' must be an object");
            const auto span = checked_span(program.annotated_source, offset_field(sel, "start"), offset_field(sel, "end"));
            plan.source_selection = span;
            plan.solution = program.annotated_source.substr(span.start, span.length());
          } else {
            if (has_selection) fail(ErrorKind::validation, "from_program copies the whole program; use from_selection");
            plan.solution = program.annotated_source;
          }
          break;
        }
        case Provenance::from_candidate: {
          if (has_selection) fail(ErrorKind::validation, "a candidate plan takes no selection");
          const auto candidate = store_.find_candidate(source);
          if (!candidate) fail(ErrorKind::not_found, "unknown candidate " + std::to_string(source));
          const auto rep = store_.find_snippet(candidate->representative_ids.front());
          if (!rep) fail(ErrorKind::not_found, "candidate representative is missing");
          plan.domain_id = candidate->domain_id;
          plan.source_id = candidate->id;
          plan.candidate_id = candidate->id;
          plan.name = candidate->name;
          plan.goal = rep->goal;
          plan.solution = rep->code;
          plan.changeable_areas = rep->changeable_spans;
          break;
        }
      }
      place_in_free_slot(plan);
      return plan_to_json(store_.insert_plan(std::move(plan)));
    });
    send(res, 201, out);
  }

  void get_plan(const Request& req, Response& res) {
    const Id id = path_id(req);
    send(res, 200, store_.transact([&] { return plan_to_json(require_plan(id)); }));
  }

  void patch_plan(const Request& req, Response& res) {
    const Id id = path_id(req);
    const json body = body_of(req);
    const json out = store_.transact([&] {
      Plan plan = require_plan(id);
      if (body.contains("version") && !body["version"].is_null() && int_field(body, "version") != plan.version) {
        fail(ErrorKind::conflict, "plan was modified (current version " + std::to_string(plan.version) + ")");
      }
      if (auto v = optional_string(body, "name")) plan.name = *v;
      if (auto v = optional_string(body, "goal")) plan.goal = *v;
      if (auto v = optional_string(body, "solution")) {
        plan.solution = *v;
        std::erase_if(plan.changeable_areas, [&](const CodeSpan& s) {
          return s.end > plan.solution.size() || !text::is_utf8_boundary(plan.solution, s.start) ||
                 !text::is_utf8_boundary(plan.solution, s.end);
        });
      }
      if (auto v = optional_number(body, "canvas_x")) plan.canvas_x = *v;
      if (auto v = optional_number(body, "canvas_y")) plan.canvas_y = *v;
      return plan_to_json(store_.update_plan(plan));
    });
    send(res, 200, out);
  }

  void delete_plan(const Request& req, Response& res) {
    const Id id = path_id(req);
    store_.transact([&] {
      (void)require_plan(id);
      store_.delete_plan(id);
    });
    res.status = 204;
  }

  void duplicate_plan(const Request& req, Response& res) {
    const Id id = path_id(req);
    const json out = store_.transact([&] {
      Plan copy = require_plan(id);
      copy.id = 0;
      copy.group_id.reset();
      copy.canvas_x += kDuplicateOffset;
      copy.canvas_y += kDuplicateOffset;
      return plan_to_json(store_.insert_plan(std::move(copy)));
    });
    send(res, 201, out);
  }

  void add_area(const Request& req, Response& res) {
    const Id id = path_id(req);
    const json body = body_of(req);
    const json out = store_.transact([&] {
      Plan plan = require_plan(id);
      CodeSpan span = checked_span(plan.solution, offset_field(body, "start"), offset_field(body, "end"));
      span.note = optional_string(body, "note").value_or("");
      for (const auto& existing : plan.changeable_areas) {
        if (span.start < existing.end && existing.start < span.end) {
          fail(ErrorKind::validation, "changeable area overlaps [" + std::to_string(existing.start) + ", " +
                                          std::to_string(existing.end) + ")");
        }
      }
      const auto at = std::upper_bound(plan.changeable_areas.begin(), plan.changeable_areas.end(), span,
                                       [](const CodeSpan& a, const CodeSpan& b) { return a.start < b.start; });
      plan.changeable_areas.insert(at, span);
      return plan_to_json(store_.update_plan(plan));
    });
    send(res, 201, out);
  }

  void remove_area(const Request& req, Response& res) {
    const Id id = path_id(req);
    const auto index = static_cast<std::size_t>(path_id(req, 2));
    const json out = store_.transact([&] {
      Plan plan = require_plan(id);
      if (index >= plan.changeable_areas.size()) fail(ErrorKind::not_found, "no changeable area at that index");
      plan.changeable_areas.erase(plan.changeable_areas.begin() + static_cast<std::ptrdiff_t>(index));
      return plan_to_json(store_.update_plan(plan));
    });
    send(res, 200, out);
  }

  // Value of `component` for a stored snippet.
  std::string component_of(const Snippet& s, const std::string& component, std::map<Id, std::string>& titles) {
    if (component == "goal") return s.goal;
    if (component == "solution") return s.code;
    auto it = titles.find(s.program_id);
    if (it == titles.end()) {
      const auto program = store_.find_program(s.program_id);
      it = titles.emplace(s.program_id, program ? program_title(*program) : std::string()).first;
    }
    return it->second;
  }

  void similar(const Request& req, Response& res) {
    const Id id = path_id(req);
    const std::string component = req.has_param("component") ? req.get_param_value("component") : "goal";
    if (component != "name" && component != "goal" && component != "solution") {
      fail(ErrorKind::validation, "component must be name, goal or solution");
    }
    const json out = store_.transact([&] {
      const Plan plan = require_plan(id);
      std::map<Id, std::string> titles;
      std::vector<std::string> values;
      auto add = [&](std::string v) {
        if (!v.empty() && std::find(values.begin(), values.end(), v) == values.end()) values.push_back(std::move(v));
      };
      std::string source = "search";
      std::optional<PlanCandidate> candidate;
      if (plan.candidate_id) candidate = store_.find_candidate(*plan.candidate_id);
      if (candidate) {
        source = "candidate";
        for (const Id sid : candidate->snippet_ids) {
          if (auto s = store_.find_snippet(sid)) add(component_of(*s, component, titles));
        }
      } else {
        const std::string& current = component == "name" ? plan.name : component == "goal" ? plan.goal : plan.solution;
        const auto words = keywords(current);
        if (!words.empty()) {
          std::vector<std::pair<std::size_t, std::string>> scored;  // stable by snippet order
          for (const auto& s : store_.snippets_for_domain(plan.domain_id)) {
            if (!is_plan_snippet(s)) continue;
            std::string value = component_of(s, component, titles);
            std::size_t score = 0;
            for (const auto& w : words) score += text::count_occurrences_icase(value, w) > 0 ? 1 : 0;
            if (score > 0) scored.emplace_back(score, std::move(value));
          }
          std::stable_sort(scored.begin(), scored.end(),
                           [](const auto& a, const auto& b) { return a.first > b.first; });
          for (auto& [score, value] : scored) {
            if (values.size() == kSimilarLimit) break;
            add(std::move(value));
          }
        }
      }
      return json{{"component", component}, {"source", source}, {"values", values}};
    });
    send(res, 200, out);
  }

  void context(const Request& req, Response& res) {
    const Id id = path_id(req);
    const json out = store_.transact([&] {
      const Plan plan = require_plan(id);
      if (plan.provenance == Provenance::empty || !plan.source_id) {
        fail(ErrorKind::not_found, "plan has no source program");
      }
      ExampleProgram program;
      CodeSpan range;
      Id snippet_id = 0;
      if (plan.provenance == Provenance::from_candidate) {
        const auto candidate = store_.find_candidate(*plan.source_id);
        if (!candidate) fail(ErrorKind::not_found, "source candidate no longer exists");
        const auto rep = store_.find_snippet(candidate->representative_ids.front());
        if (!rep) fail(ErrorKind::not_found, "candidate representative is missing");
        snippet_id = rep->id;
        program = require_program(rep->program_id);
        // Snippets tile the annotated program, so the offset is the length of
        // everything rendered before this snippet's code.
        std::size_t offset = 0;
        for (const auto& s : store_.snippets_for_program(program.id)) {
          if (s.ordinal == rep->ordinal) {
            offset += s.header.size();
            range = CodeSpan{offset, offset + s.code.size(), ""};
            break;
          }
          offset += s.header.size() + s.code.size();
        }
      } else {
        program = require_program(*plan.source_id);
        range = plan.source_selection ? *plan.source_selection : CodeSpan{0, program.annotated_source.size(), ""};
      }
      return json{{"program_id", program.id},
                  {"use_case", program_title(program)},
                  {"annotated_source", program.annotated_source},
                  {"range", {{"start", range.start}, {"end", range.end}}},
                  {"snippet_id", snippet_id == 0 ? json(nullptr) : json(snippet_id)}};
    });
    send(res, 200, out);
  }

  // Groups ----------------------------------------------------------------------

  // Detaches `plan_ids` from other groups (when `move`) and returns the domain.
  Id claim_plans(const std::vector<Id>& plan_ids, std::optional<Id> target, bool move) {
    if (plan_ids.empty()) fail(ErrorKind::validation, "a group needs at least one plan");
    std::optional<Id> domain;
    std::map<Id, std::vector<Id>> leaving;  // other group -> plans to remove from it
    for (const Id pid : plan_ids) {
      const Plan plan = require_plan(pid);
      if (domain && *domain != plan.domain_id) fail(ErrorKind::validation, "plans belong to different domains");
      domain = plan.domain_id;
      if (plan.group_id && plan.group_id != target) {
        if (!move) {
          fail(ErrorKind::conflict, "plan " + std::to_string(pid) + " is already in group " +
                                        std::to_string(*plan.group_id));
        }
        leaving[*plan.group_id].push_back(pid);
      }
    }
    for (const auto& [gid, pids] : leaving) {
      PlanGroup old = *store_.find_group(gid);
      std::erase_if(old.plan_ids, [&](Id p) { return std::find(pids.begin(), pids.end(), p) != pids.end(); });
      if (old.plan_ids.empty()) {
        store_.delete_group(gid);
      } else {
        store_.update_group(old);
      }
    }
    return *domain;
  }

  void create_group(const Request& req, Response& res) {
    const json body = body_of(req);
    const std::string name = string_field(body, "name");
    const auto plan_ids = id_list(body, "plan_ids");
    const bool move = flag_field(body, "move");
    const json out = store_.transact([&] {
      const Id domain_id = claim_plans(plan_ids, std::nullopt, move);
      return group_json(store_.insert_group(domain_id, name, plan_ids));
    });
    send(res, 201, out);
  }

  void patch_group(const Request& req, Response& res) {
    const Id id = path_id(req);
    const json body = body_of(req);
    const json out = store_.transact([&] {
      auto group = store_.find_group(id);
      if (!group) fail(ErrorKind::not_found, "unknown group " + std::to_string(id));
      if (auto v = optional_string(body, "name")) group->name = *v;
      if (body.contains("plan_ids")) {
        group->plan_ids = id_list(body, "plan_ids");
        const Id domain_id = claim_plans(group->plan_ids, id, flag_field(body, "move"));
        if (domain_id != group->domain_id) fail(ErrorKind::validation, "plans belong to another domain");
      }
      return group_json(store_.update_group(*group));
    });
    send(res, 200, out);
  }

  // LLM delegations ---------------------------------------------------------------

  template <class Fn>
  std::pair<std::string, bool> through_cache(const std::string& key, Fn compute) {
    if (auto hit = api_.cached(key)) return {*hit, true};
    std::string value = compute();
    api_.remember(key, value);
    return {value, false};
  }

  void explain(const Request& req, Response& res) {
    const json body = body_of(req);
    const std::string code = string_field(body, "code");
    const CodeSpan span = checked_span(code, offset_field(body, "start"), offset_field(body, "end"));
    const std::string key = "explain\x1f" + code + "\x1f" + std::to_string(span.start) + "\x1f" + std::to_string(span.end);
    const auto [text_value, hit] =
        through_cache(text::hex64(text::fnv1a64(key)), [&] { return api_.gateway_.explain_selection(code, span); });
    send(res, 200, json{{"explanation", text_value}, {"cached", hit}});
  }

  void predict(const Request& req, Response& res) {
    const json body = body_of(req);
    const std::string code = string_field(body, "code");
    if (text::trim(code).empty()) fail(ErrorKind::validation, "code must be non-empty");
    const auto [text_value, hit] = through_cache(text::hex64(text::fnv1a64("predict\x1f" + code)),
                                                 [&] { return api_.gateway_.predict_output(code); });
    send(res, 200, json{{"output", text_value}, {"cached", hit}});
  }

  ApiService& api_;
  Store& store_;
};

void ApiService::install(httplib::Server& server) {
  // Route handlers capture the routes object; it lives as long as the server.
  auto routes = std::make_shared<ApiRoutes>(*this);
  server.set_tcp_nodelay(true);
  routes->install(server);
  routes_keepalive_ = routes;
}

}  // namespace planmine
