#include "planmine/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "planmine/clustering.hpp"
#include "planmine/error.hpp"
#include "planmine/pipeline.hpp"

namespace planmine {

using nlohmann::json;

namespace {

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

std::string pad(const std::string& s, std::size_t width, bool left_align) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return left_align ? s + fill : fill + s;
}

// Column-aligned rendering of a small grid; the first column is left-aligned.
std::string render_grid(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      line += pad(row[c], width[c], c == 0);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

json optional_number(const std::optional<double>& value) { return value ? json(*value) : json(nullptr); }

std::optional<double> number_or_null(const json& value) {
  if (value.is_null()) return std::nullopt;
  return value.get<double>();
}

}  // namespace

EvaluationReport evaluate(const std::vector<EvaluationCorpus>& corpora,
                          const std::vector<std::pair<std::string, std::string>>& pairs, const EvalOptions& options) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < corpora.size(); ++i) {
    if (!index.emplace(corpora[i].label, i).second) {
      fail(ErrorKind::usage, "corpus label '" + corpora[i].label + "' is used twice");
    }
    if (!corpora[i].embeddings.empty() && corpora[i].embeddings.size() != corpora[i].codes.size()) {
      fail(ErrorKind::precondition, "corpus '" + corpora[i].label + "' has a partial set of embeddings");
    }
  }
  for (const auto& [a, b] : pairs) {
    for (const auto& label : {a, b}) {
      if (!index.contains(label)) fail(ErrorKind::usage, "pair refers to unknown corpus label '" + label + "'");
    }
  }

  EvaluationReport report;
  for (const auto& corpus : corpora) {
    if (corpus.codes.empty()) fail(ErrorKind::precondition, "corpus '" + corpus.label + "' has no members");
    CorpusSummary summary;
    summary.label = corpus.label;
    summary.members = corpus.codes.size();
    for (const auto& code : corpus.codes) {
      const auto record = measure(code, options.lexer);
      summary.means.loc += record.loc;
      summary.means.cyclomatic += record.cyclomatic;
      summary.means.halstead_volume += record.halstead_volume;
      summary.means.cognitive += record.cognitive;
      const auto methods = distinct_methods(code, options.lexer);
      summary.methods.insert(methods.begin(), methods.end());
    }
    const auto n = static_cast<double>(summary.members);
    summary.means.loc /= n;
    summary.means.cyclomatic /= n;
    summary.means.halstead_volume /= n;
    summary.means.cognitive /= n;
    report.corpora.push_back(std::move(summary));
  }

  // Distances use only corpora that appear in a pair and carry embeddings.
  std::vector<bool> needed(corpora.size(), false);
  for (const auto& [a, b] : pairs) {
    for (const auto& label : {a, b}) {
      const auto i = index.at(label);
      if (!corpora[i].embeddings.empty()) needed[i] = true;
    }
  }
  std::map<std::size_t, PointSet> space;
  for (std::size_t i = 0; i < corpora.size(); ++i) {
    if (needed[i]) space[i] = to_point_set(corpora[i].embeddings);
  }

  report.distance_space = "raw";
  if (options.space == DistanceSpace::pca && !space.empty()) {
    Eigen::Index rows = 0;
    Eigen::Index dim = space.begin()->second.cols();
    for (const auto& [i, points] : space) {
      if (points.cols() != dim) fail(ErrorKind::precondition, "corpora have embeddings of different dimension");
      rows += points.rows();
    }
    PointSet pooled(rows, dim);
    Eigen::Index at = 0;
    for (const auto& [i, points] : space) {
      pooled.middleRows(at, points.rows()) = points;
      at += points.rows();
    }
    try {
      if (rows < 2) fail(ErrorKind::degenerate_data, "fewer than two pooled points");
      const PcaModel pca = fit_pca(pooled, options.pca_variance);
      for (auto& [i, points] : space) points = pca.project(points);
      report.distance_space = "pca";
      report.pca_components = pca.retained;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate_data) throw;
      report.distance_space = std::string("raw (pca unavailable: ") + e.what() + ")";
    }
  }

  for (const auto& [a, b] : pairs) {
    const auto ia = index.at(a);
    const auto ib = index.at(b);
    PairReport pair;
    pair.a = a;
    pair.b = b;
    if (space.contains(ia) && space.contains(ib)) {
      pair.hausdorff = hausdorff(space.at(ia), space.at(ib));
      pair.wasserstein = wasserstein(space.at(ia), space.at(ib), options.wasserstein);
    }
    const auto& ma = report.corpora[ia].methods;
    const auto& mb = report.corpora[ib].methods;
    std::set_difference(ma.begin(), ma.end(), mb.begin(), mb.end(), std::back_inserter(pair.only_a));
    std::set_difference(mb.begin(), mb.end(), ma.begin(), ma.end(), std::back_inserter(pair.only_b));
    pair.shared_methods = ma.size() - pair.only_a.size();
    report.pairs.push_back(std::move(pair));
  }
  return report;
}

json EvaluationReport::to_json() const {
  json doc;
  doc["metrics"] = json::array({"loc", "cyclomatic", "halstead_volume", "cognitive"});
  doc["corpora"] = json::array();
  for (const auto& c : corpora) {
    doc["corpora"].push_back({{"label", c.label},
                              {"members", c.members},
                              {"means",
                               {{"loc", c.means.loc},
                                {"cyclomatic", c.means.cyclomatic},
                                {"halstead_volume", c.means.halstead_volume},
                                {"cognitive", c.means.cognitive}}},
                              {"distinct_methods", c.methods}});
  }
  doc["distance_space"] = distance_space;
  doc["pca_components"] = pca_components;
  doc["pairs"] = json::array();
  for (const auto& p : pairs) {
    doc["pairs"].push_back({{"a", p.a},
                            {"b", p.b},
                            {"hausdorff", optional_number(p.hausdorff)},
                            {"wasserstein", optional_number(p.wasserstein)},
                            {"shared_methods", p.shared_methods},
                            {"only_a", p.only_a},
                            {"only_b", p.only_b}});
  }
  return doc;
}

EvaluationReport EvaluationReport::from_json(const json& doc) {
  EvaluationReport report;
  try {
    for (const auto& c : doc.at("corpora")) {
      CorpusSummary s;
      s.label = c.at("label").get<std::string>();
      s.members = c.at("members").get<std::size_t>();
      const auto& m = c.at("means");
      s.means = MetricMeans{m.at("loc").get<double>(), m.at("cyclomatic").get<double>(),
                            m.at("halstead_volume").get<double>(), m.at("cognitive").get<double>()};
      s.methods = c.at("distinct_methods").get<std::set<std::string>>();
      report.corpora.push_back(std::move(s));
    }
    report.distance_space = doc.at("distance_space").get<std::string>();
    report.pca_components = doc.at("pca_components").get<int>();
    for (const auto& p : doc.at("pairs")) {
      PairReport pair;
      pair.a = p.at("a").get<std::string>();
      pair.b = p.at("b").get<std::string>();
      pair.hausdorff = number_or_null(p.at("hausdorff"));
      pair.wasserstein = number_or_null(p.at("wasserstein"));
      pair.shared_methods = p.at("shared_methods").get<std::size_t>();
      pair.only_a = p.at("only_a").get<std::vector<std::string>>();
      pair.only_b = p.at("only_b").get<std::vector<std::string>>();
      report.pairs.push_back(std::move(pair));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed evaluation report: ") + e.what());
  }
  return report;
}

std::string EvaluationReport::table() const {
  std::vector<std::vector<std::string>> metrics = {
      {"Corpus", "n", "Lines of Code", "Cyclomatic Complexity", "Halstead Volume", "Cognitive Complexity", "Methods"}};
  for (const auto& c : corpora) {
    metrics.push_back({c.label, std::to_string(c.members), fixed(c.means.loc, 2), fixed(c.means.cyclomatic, 2),
                       fixed(c.means.halstead_volume, 2), fixed(c.means.cognitive, 3),
                       std::to_string(c.methods.size())});
  }
  std::string out = render_grid(metrics);
  if (pairs.empty()) return out;

  std::vector<std::vector<std::string>> distances = {{"Distance (" + distance_space + ")"}};
  std::vector<std::string> hausdorff_row = {"Hausdorff"};
  std::vector<std::string> wasserstein_row = {"Wasserstein"};
  for (const auto& p : pairs) {
    distances[0].push_back(p.a + ":" + p.b);
    hausdorff_row.push_back(p.hausdorff ? fixed(*p.hausdorff, 4) : "n/a");
    wasserstein_row.push_back(p.wasserstein ? fixed(*p.wasserstein, 4) : "n/a");
  }
  distances.push_back(std::move(hausdorff_row));
  distances.push_back(std::move(wasserstein_row));
  return out + "\n" + render_grid(distances);
}

EvaluationCorpus domain_corpus(Store& store, Id domain_id, const std::string& label, bool star) {
  EvaluationCorpus corpus;
  corpus.label = label;
  store.transact([&] {
    (void)store.domain(domain_id);
    if (!star) {
      for (const auto& s : store.snippets_for_domain(domain_id)) {
        if (!is_plan_snippet(s)) continue;
        corpus.codes.push_back(s.code);
        if (s.embedding) corpus.embeddings.push_back(*s.embedding);
      }
      if (corpus.embeddings.size() != corpus.codes.size()) corpus.embeddings.clear();
      return;
    }
    const auto candidates = store.candidates(domain_id);
    if (candidates.empty()) fail(ErrorKind::precondition, "domain has no plan candidates; run the pipeline first");
    for (const auto& c : candidates) {
      if (!c.top_ranked) continue;
      for (const Id id : c.representative_ids) {
        const auto s = store.find_snippet(id);
        corpus.codes.push_back(s->code);
        if (s->embedding) corpus.embeddings.push_back(*s->embedding);
      }
    }
    if (corpus.embeddings.size() != corpus.codes.size()) corpus.embeddings.clear();
  });
  return corpus;
}

}  // namespace planmine
