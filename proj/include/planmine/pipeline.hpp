#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "planmine/clustering.hpp"
#include "planmine/embedding.hpp"
#include "planmine/llm.hpp"
#include "planmine/store.hpp"

namespace planmine {

/// One candidate per cluster, members ordered by distance to the centroid
/// (ties by snippet id), the first R of them as representatives. Candidates
/// are ranked by size, largest first, and the L largest are flagged.
/// Names are left empty.
[[nodiscard]] std::vector<PlanCandidate> assemble_candidates(const std::vector<Id>& snippet_ids,
                                                             const PointSet& reduced,
                                                             const ClusteringResult& clustering,
                                                             int n_representatives, int top_clusters);

/// Snippets that take part in fragment extraction, embedding and clustering:
/// those introduced by a subgoal comment with non-blank code.
[[nodiscard]] bool is_plan_snippet(const Snippet& snippet);

struct PipelineOptions {
  std::string domain_name;
  std::string library;
  std::string language = "python";
  PipelineConfig config;
  int workers = 4;  // concurrent provider calls per stage
};

struct StageRecord {
  Stage stage = Stage::use_cases;
  bool skipped = false;
  double seconds = 0.0;
};

struct RunManifest {
  std::string domain;
  Id domain_id = 0;
  std::string library;
  std::string provider_id;
  std::string embedding_id;
  PipelineConfig config;
  std::size_t use_cases = 0;
  std::size_t programs = 0;
  std::size_t valid_programs = 0;
  std::size_t snippets = 0;
  std::size_t embedded_snippets = 0;
  std::size_t clusters = 0;
  std::size_t discarded_fragments = 0;
  std::size_t pca_components = 0;
  std::vector<StageRecord> stages;

  [[nodiscard]] nlohmann::json to_json() const;
};

/// Runs every unfinished stage for the domain (created on first run). Each
/// stage commits atomically; a failure aborts with the stage name and leaves
/// earlier stages in place for the next run to resume from.
RunManifest run_pipeline(Store& store, Gateway& gateway, EmbeddingProvider& embedder, const PipelineOptions& options);

/// Counts as they stand in the store, for manifests and consistency checks.
void fill_counts(Store& store, Id domain_id, RunManifest& manifest);

/// `<store>.manifest.json`
[[nodiscard]] std::filesystem::path manifest_path(const std::filesystem::path& store_path);

/// Deterministic dump of everything the pipeline produced for a domain
/// (no ids or timestamps), for reproducibility checks.
[[nodiscard]] nlohmann::json snapshot_domain(Store& store, Id domain_id);

}  // namespace planmine
