#include "planmine/types.hpp"

#include "planmine/error.hpp"

namespace planmine {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::io: return "io_error";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::precondition: return "precondition_failed";
    case ErrorKind::validation: return "invalid";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::gone: return "gone";
    case ErrorKind::transport: return "transport_error";
    case ErrorKind::malformed_response: return "malformed_response";
    case ErrorKind::degenerate_data: return "degenerate_data";
    case ErrorKind::usage: return "usage_error";
  }
  return "error";
}

void PipelineConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::validation, std::string("invalid pipeline config: ") + what);
  };
  check(n_use_cases >= 1, "n_use_cases must be >= 1");
  check(pca_variance > 0.0 && pca_variance <= 1.0, "pca_variance must lie in (0, 1]");
  check(k_min >= 2, "k_min must be >= 2");
  check(k_min <= k_max, "k_min must not exceed k_max");
  check(n_init >= 1, "n_init must be >= 1");
  check(max_iters >= 1, "max_iters must be >= 1");
  check(tol >= 0.0, "tol must be >= 0");
  check(top_clusters >= 1, "top_clusters must be >= 1");
  check(n_representatives >= 1, "n_representatives must be >= 1");
  check(embedding_dim >= 1, "embedding_dim must be >= 1");
}

const char* to_string(ProgramOrigin origin) noexcept {
  return origin == ProgramOrigin::generated ? "generated" : "ingested";
}

ProgramOrigin program_origin_from_string(const std::string& text) {
  if (text == "generated") return ProgramOrigin::generated;
  if (text == "ingested") return ProgramOrigin::ingested;
  fail(ErrorKind::validation, "unknown program origin '" + text + "'");
}

const char* to_string(Provenance provenance) noexcept {
  switch (provenance) {
    case Provenance::empty: return "empty";
    case Provenance::from_selection: return "from_selection";
    case Provenance::from_program: return "from_program";
    case Provenance::from_candidate: return "from_candidate";
  }
  return "empty";
}

Provenance provenance_from_string(const std::string& text) {
  if (text == "empty") return Provenance::empty;
  if (text == "from_selection") return Provenance::from_selection;
  if (text == "from_program") return Provenance::from_program;
  if (text == "from_candidate") return Provenance::from_candidate;
  fail(ErrorKind::validation, "unknown plan mode '" + text + "'");
}

bool spans_well_formed(const std::vector<CodeSpan>& spans, std::size_t limit) {
  std::size_t previous_end = 0;
  for (const auto& span : spans) {
    if (span.start >= span.end || span.end > limit) return false;
    if (span.start < previous_end) return false;
    previous_end = span.end;
  }
  return true;
}

}  // namespace planmine
