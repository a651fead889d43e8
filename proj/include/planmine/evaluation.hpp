#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "planmine/distances.hpp"
#include "planmine/metrics.hpp"
#include "planmine/store.hpp"
#include "planmine/tokenizer.hpp"

namespace planmine {

struct EvaluationCorpus {
  std::string label;
  std::vector<std::string> codes;
  std::vector<Vector> embeddings;  // empty, or one per code
};

struct MetricMeans {
  double loc = 0.0;
  double cyclomatic = 0.0;
  double halstead_volume = 0.0;
  double cognitive = 0.0;
  bool operator==(const MetricMeans&) const = default;
};

struct CorpusSummary {
  std::string label;
  std::size_t members = 0;
  MetricMeans means;
  std::set<std::string> methods;
  bool operator==(const CorpusSummary&) const = default;
};

struct PairReport {
  std::string a;
  std::string b;
  std::optional<double> hausdorff;  // absent when embeddings are missing
  std::optional<double> wasserstein;
  std::size_t shared_methods = 0;
  std::vector<std::string> only_a;
  std::vector<std::string> only_b;
  bool operator==(const PairReport&) const = default;
};

enum class DistanceSpace { pca, raw };

struct EvalOptions {
  DistanceSpace space = DistanceSpace::pca;
  double pca_variance = 0.90;
  WassersteinOptions wasserstein;
  LexerOptions lexer;
};

struct EvaluationReport {
  std::vector<CorpusSummary> corpora;
  std::vector<PairReport> pairs;
  std::string distance_space;  // "pca", "raw", or "raw (pca unavailable: ...)"
  int pca_components = 0;
  bool operator==(const EvaluationReport&) const = default;

  [[nodiscard]] nlohmann::json to_json() const;
  [[nodiscard]] static EvaluationReport from_json(const nlohmann::json& doc);

  /// Aligned text: one row per corpus with columns Lines of Code,
  /// Cyclomatic Complexity, Halstead Volume, Cognitive Complexity; then a
  /// distance block with one column per pair and rows Hausdorff, Wasserstein.
  [[nodiscard]] std::string table() const;
};

/// Metric means and method sets per corpus; distances for every pair. When
/// distances are requested, one PCA is fitted on the pooled embeddings of the
/// corpora involved and both distances are measured in that space.
[[nodiscard]] EvaluationReport evaluate(const std::vector<EvaluationCorpus>& corpora,
                                        const std::vector<std::pair<std::string, std::string>>& pairs,
                                        const EvalOptions& options = {});

/// Codes of every clustered snippet of a domain, or with `star` only the
/// representatives of the L largest candidates.
[[nodiscard]] EvaluationCorpus domain_corpus(Store& store, Id domain_id, const std::string& label, bool star);

}  // namespace planmine
