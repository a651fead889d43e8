#include "planmine/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <atomic>
#include <exception>
#include <map>
#include <numeric>
#include <thread>

#include "planmine/error.hpp"
#include "planmine/segmenter.hpp"
#include "planmine/syntax.hpp"
#include "planmine/text.hpp"

namespace planmine {

using nlohmann::json;

namespace {

// Calls fn(i) for i in [0, n) on up to `workers` threads. Results keep index
// order; if any call throws, the exception of the lowest failing index wins.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, int workers, Fn fn) {
  std::vector<T> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto count = static_cast<std::size_t>(std::max(1, workers));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < std::min(count, n); ++t) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

Vector to_vector(const Eigen::VectorXd& v) {
  Vector out;
  out.values.resize(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out.values[static_cast<std::size_t>(i)] = static_cast<float>(v(i));
  return out;
}

std::vector<Snippet> plan_snippets(Store& store, Id domain_id) {
  std::vector<Snippet> out;
  for (auto& s : store.snippets_for_domain(domain_id)) {
    if (is_plan_snippet(s)) out.push_back(std::move(s));
  }
  return out;
}

json config_json(const PipelineConfig& c) {
  return {{"n_use_cases", c.n_use_cases}, {"pca_variance", c.pca_variance},
          {"k_min", c.k_min},             {"k_max", c.k_max},
          {"n_init", c.n_init},           {"max_iters", c.max_iters},
          {"tol", c.tol},                 {"top_clusters", c.top_clusters},
          {"n_representatives", c.n_representatives}, {"seed", c.seed},
          {"embedding_dim", c.embedding_dim}};
}

class Runner {
 public:
  Runner(Store& store, Gateway& gateway, EmbeddingProvider& embedder, const PipelineOptions& options)
      : store_(store), gateway_(gateway), embedder_(embedder), options_(options) {}

  RunManifest run() {
    options_.config.validate();
    if (options_.library.empty()) fail(ErrorKind::validation, "library name must be non-empty");
    const Domain domain = open_domain();
    domain_id_ = domain.id;

    manifest_.domain = domain.name;
    manifest_.domain_id = domain.id;
    manifest_.library = domain.library_name;
    manifest_.provider_id = gateway_.provider_id();
    manifest_.embedding_id = embedder_.id();
    manifest_.config = options_.config;

    for (const Stage stage : all_stages()) {
      StageRecord record{stage, store_.stage_done(domain_id_, stage), 0.0};
      if (!record.skipped) {
        const auto started = std::chrono::steady_clock::now();
        try {
          run_stage(stage);
        } catch (const Error& e) {
          throw Error(e.kind(), std::string("stage ") + to_string(stage) + ": " + e.what());
        }
        record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      }
      manifest_.stages.push_back(record);
    }
    fill_counts(store_, domain_id_, manifest_);
    return manifest_;
  }

 private:
  Domain open_domain() {
    if (auto existing = store_.find_domain_by_name(options_.domain_name)) {
      if (existing->library_name != options_.library) {
        fail(ErrorKind::conflict, "domain '" + existing->name + "' already exists for library '" +
                                      existing->library_name + "'");
      }
      return *existing;
    }
    return store_.create_domain(options_.domain_name, options_.library, options_.language);
  }

  void run_stage(Stage stage) {
    switch (stage) {
      case Stage::use_cases: return use_cases();
      case Stage::programs: return programs();
      case Stage::annotation: return annotation();
      case Stage::segmentation: return segmentation();
      case Stage::changeable_areas: return changeable_areas();
      case Stage::embedding: return embedding();
      case Stage::clustering: return clustering();
    }
  }

  void use_cases() {
    const auto items = gateway_.generate_use_cases(options_.library, options_.config.n_use_cases);
    store_.transact([&] {
      store_.replace_use_cases(domain_id_, items);
      store_.mark_stage(domain_id_, Stage::use_cases);
    });
  }

  void programs() {
    const auto cases = store_.use_cases(domain_id_);
    auto sources = parallel_map<std::string>(cases.size(), options_.workers, [&](std::size_t i) {
      return gateway_.generate_program(options_.library, cases[i].description);
    });
    auto validity = parallel_map<char>(sources.size(), options_.workers,
                                       [&](std::size_t i) { return static_cast<char>(validate_syntax(sources[i])); });
    store_.transact([&] {
      store_.delete_programs(domain_id_, ProgramOrigin::generated);
      for (std::size_t i = 0; i < cases.size(); ++i) {
        ExampleProgram p;
        p.domain_id = domain_id_;
        p.use_case_id = cases[i].id;
        p.ordinal = cases[i].ordinal;
        p.raw_source = sources[i];
        p.annotated_source = std::move(sources[i]);
        p.syntactically_valid = validity[i] != 0;
        p.origin = ProgramOrigin::generated;
        store_.insert_program(p);
      }
      store_.mark_stage(domain_id_, Stage::programs);
    });
  }

  void annotation() {
    std::vector<ExampleProgram> valid;
    for (auto& p : store_.programs(domain_id_)) {
      if (p.syntactically_valid && p.origin == ProgramOrigin::generated) valid.push_back(std::move(p));
    }
    const auto annotated = parallel_map<std::string>(valid.size(), options_.workers, [&](std::size_t i) {
      return gateway_.annotate_subgoals(valid[i].raw_source);
    });
    store_.transact([&] {
      for (std::size_t i = 0; i < valid.size(); ++i) store_.set_annotated_source(valid[i].id, annotated[i]);
      store_.mark_stage(domain_id_, Stage::annotation);
    });
  }

  void segmentation() {
    store_.transact([&] {
      store_.delete_snippets(domain_id_);
      for (const auto& p : store_.programs(domain_id_)) {
        if (!p.syntactically_valid) continue;
        const auto segmented = segment(p.annotated_source);
        std::vector<Snippet> rows;
        if (segmented.preamble) {
          rows.push_back(Snippet{0, p.id, 0, "", "", segmented.preamble->code, {}, std::nullopt});
        }
        for (const auto& seg : segmented.snippets) {
          rows.push_back(Snippet{0, p.id, static_cast<int>(rows.size()), seg.goal, seg.header, seg.code, {}, std::nullopt});
        }
        store_.replace_snippets(p.id, rows);
      }
      store_.mark_stage(domain_id_, Stage::segmentation);
    });
  }

  void changeable_areas() {
    const auto snippets = plan_snippets(store_, domain_id_);
    const auto fragments = parallel_map<std::vector<std::string>>(snippets.size(), options_.workers, [&](std::size_t i) {
      return gateway_.extract_changeable_fragments(snippets[i].code);
    });
    store_.transact([&] {
      for (std::size_t i = 0; i < snippets.size(); ++i) {
        const auto located = localize_fragments(snippets[i].code, fragments[i]);
        manifest_.discarded_fragments += located.discarded.size();
        store_.set_snippet_spans(snippets[i].id, located.spans);
      }
      store_.mark_stage(domain_id_, Stage::changeable_areas);
    });
  }

  void embedding() {
    const auto snippets = plan_snippets(store_, domain_id_);
    std::vector<std::string> codes;
    codes.reserve(snippets.size());
    for (const auto& s : snippets) codes.push_back(s.code);
    const auto vectors = embed_cached(store_, embedder_, codes);
    store_.transact([&] {
      for (std::size_t i = 0; i < snippets.size(); ++i) store_.set_snippet_embedding(snippets[i].id, vectors[i]);
      store_.mark_stage(domain_id_, Stage::embedding);
    });
  }

  void clustering() {
    const auto snippets = plan_snippets(store_, domain_id_);
    std::vector<Id> ids;
    std::vector<Vector> vectors;
    for (const auto& s : snippets) {
      if (!s.embedding) fail(ErrorKind::precondition, "snippet " + std::to_string(s.id) + " has no embedding");
      ids.push_back(s.id);
      vectors.push_back(*s.embedding);
    }
    const auto& config = options_.config;
    if (static_cast<int>(ids.size()) < config.k_min + 1) {
      fail(ErrorKind::precondition, "need at least " + std::to_string(config.k_min + 1) + " snippets to cluster, have " +
                                        std::to_string(ids.size()));
    }
    const PointSet points = to_point_set(vectors);
    const PcaModel pca = fit_pca(points, config.pca_variance);
    manifest_.pca_components = static_cast<std::size_t>(pca.retained);
    const PointSet reduced = pca.project(points);
    const ClusteringResult result = select_k_and_cluster(reduced, config);
    auto candidates = assemble_candidates(ids, reduced, result, config.n_representatives, config.top_clusters);

    std::map<Id, const Snippet*> by_id;
    for (const auto& s : snippets) by_id[s.id] = &s;
    const auto names = parallel_map<std::optional<std::string>>(candidates.size(), options_.workers, [&](std::size_t i) {
      std::vector<std::pair<std::string, std::string>> members;
      for (const Id id : candidates[i].representative_ids) members.emplace_back(by_id.at(id)->goal, by_id.at(id)->code);
      try {
        return std::optional<std::string>(gateway_.name_cluster(programs_in_cluster(members)));
      } catch (const Error&) {
        return std::optional<std::string>();
      }
    });
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (names[i]) {
        candidates[i].name = *names[i];
      } else {
        candidates[i].name = "Unnamed candidate " + std::to_string(candidates[i].rank + 1);
        candidates[i].name_pending = true;
      }
    }
    store_.transact([&] {
      store_.replace_candidates(domain_id_, candidates);
      store_.mark_stage(domain_id_, Stage::clustering);
    });
  }

  Store& store_;
  Gateway& gateway_;
  EmbeddingProvider& embedder_;
  PipelineOptions options_;
  Id domain_id_ = 0;
  RunManifest manifest_;
};

}  // namespace

bool is_plan_snippet(const Snippet& snippet) {
  return !snippet.header.empty() && !text::trim(snippet.code).empty();
}

std::vector<PlanCandidate> assemble_candidates(const std::vector<Id>& snippet_ids, const PointSet& reduced,
                                               const ClusteringResult& clustering, int n_representatives,
                                               int top_clusters) {
  require(reduced.rows() == static_cast<Eigen::Index>(snippet_ids.size()), "one point per snippet");
  require(clustering.assignments.size() == snippet_ids.size(), "one assignment per snippet");
  require(n_representatives >= 1 && top_clusters >= 1, "R and L must be >= 1");

  std::vector<PlanCandidate> candidates;
  for (int c = 0; c < clustering.k; ++c) {
    const Eigen::VectorXd centroid = clustering.centroids.row(c).transpose();
    std::vector<std::pair<double, Id>> members;
    for (std::size_t i = 0; i < snippet_ids.size(); ++i) {
      if (clustering.assignments[i] != c) continue;
      const double d = (reduced.row(static_cast<Eigen::Index>(i)).transpose() - centroid).norm();
      members.emplace_back(d, snippet_ids[i]);
    }
    if (members.empty()) continue;
    std::sort(members.begin(), members.end());

    PlanCandidate candidate;
    candidate.centroid = to_vector(centroid);
    for (const auto& [d, id] : members) candidate.snippet_ids.push_back(id);
    candidate.size = candidate.snippet_ids.size();
    const auto reps = std::min(candidate.size, static_cast<std::size_t>(n_representatives));
    candidate.representative_ids.assign(candidate.snippet_ids.begin(),
                                        candidate.snippet_ids.begin() + static_cast<std::ptrdiff_t>(reps));
    candidates.push_back(std::move(candidate));
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const PlanCandidate& a, const PlanCandidate& b) {
    if (a.size != b.size) return a.size > b.size;
    return *std::min_element(a.snippet_ids.begin(), a.snippet_ids.end()) <
           *std::min_element(b.snippet_ids.begin(), b.snippet_ids.end());
  });
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    candidates[i].rank = static_cast<int>(i);
    candidates[i].top_ranked = static_cast<int>(i) < top_clusters;
  }
  return candidates;
}

json RunManifest::to_json() const {
  json stage_list = json::array();
  for (const auto& s : stages) {
    stage_list.push_back({{"stage", to_string(s.stage)}, {"skipped", s.skipped}, {"seconds", s.seconds}});
  }
  return {{"domain", domain},
          {"library", library},
          {"provider", provider_id},
          {"embedding_provider", embedding_id},
          {"seed", config.seed},
          {"config", config_json(config)},
          {"counts",
           {{"use_cases", use_cases},
            {"programs", programs},
            {"valid_programs", valid_programs},
            {"snippets", snippets},
            {"embedded_snippets", embedded_snippets},
            {"clusters", clusters},
            {"discarded_fragments", discarded_fragments},
            {"pca_components", pca_components}}},
          {"stages", stage_list}};
}

RunManifest run_pipeline(Store& store, Gateway& gateway, EmbeddingProvider& embedder, const PipelineOptions& options) {
  return Runner(store, gateway, embedder, options).run();
}

void fill_counts(Store& store, Id domain_id, RunManifest& manifest) {
  manifest.use_cases = store.use_cases(domain_id).size();
  const auto programs = store.programs(domain_id);
  manifest.programs = programs.size();
  manifest.valid_programs = static_cast<std::size_t>(
      std::count_if(programs.begin(), programs.end(), [](const ExampleProgram& p) { return p.syntactically_valid; }));
  const auto snippets = store.snippets_for_domain(domain_id);
  manifest.snippets = snippets.size();
  manifest.embedded_snippets = static_cast<std::size_t>(
      std::count_if(snippets.begin(), snippets.end(), [](const Snippet& s) { return s.embedding.has_value(); }));
  manifest.clusters = store.candidates(domain_id).size();
}

std::filesystem::path manifest_path(const std::filesystem::path& store_path) {
  return std::filesystem::path(store_path.string() + ".manifest.json");
}

json snapshot_domain(Store& store, Id domain_id) {
  return store.transact([&] {
    const Domain domain = store.domain(domain_id);
    json doc;
    doc["domain"] = {{"name", domain.name}, {"library", domain.library_name}, {"language", domain.language}};

    std::map<Id, int> use_case_ordinal;
    doc["use_cases"] = json::array();
    for (const auto& uc : store.use_cases(domain_id)) {
      use_case_ordinal[uc.id] = uc.ordinal;
      doc["use_cases"].push_back({{"ordinal", uc.ordinal}, {"description", uc.description}});
    }

    // Snippets are referred to by (program ordinal, snippet ordinal).
    std::map<Id, json> snippet_ref;
    doc["programs"] = json::array();
    for (const auto& p : store.programs(domain_id)) {
      json snippets = json::array();
      for (const auto& s : store.snippets_for_program(p.id)) {
        snippet_ref[s.id] = json::array({p.ordinal, s.ordinal});
        json spans = json::array();
        for (const auto& span : s.changeable_spans) spans.push_back({span.start, span.end});
        snippets.push_back({{"ordinal", s.ordinal},
                            {"goal", s.goal},
                            {"header", s.header},
                            {"code", s.code},
                            {"spans", spans},
                            {"embedding", s.embedding ? json(s.embedding->values) : json(nullptr)}});
      }
      doc["programs"].push_back(
          {{"ordinal", p.ordinal},
           {"use_case", p.use_case_id ? json(use_case_ordinal.at(*p.use_case_id)) : json(nullptr)},
           {"origin", to_string(p.origin)},
           {"path", p.path},
           {"valid", p.syntactically_valid},
           {"raw_source", p.raw_source},
           {"annotated_source", p.annotated_source},
           {"snippets", snippets}});
    }

    doc["candidates"] = json::array();
    for (const auto& c : store.candidates(domain_id)) {
      json members = json::array();
      for (const Id id : c.snippet_ids) members.push_back(snippet_ref.at(id));
      doc["candidates"].push_back({{"rank", c.rank},
                                   {"name", c.name},
                                   {"name_pending", c.name_pending},
                                   {"size", c.size},
                                   {"top_ranked", c.top_ranked},
                                   {"representatives", c.representative_ids.size()},
                                   {"centroid", c.centroid.values},
                                   {"members", members}});
    }
    return doc;
  });
}

}  // namespace planmine
