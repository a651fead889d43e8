#include "planmine/embedding.hpp"

#include <cmath>

#include "planmine/error.hpp"
#include "planmine/text.hpp"

namespace planmine {

HashingEmbedder::HashingEmbedder(int dim, LexerOptions options) : dim_(dim), options_(std::move(options)) {
  require(dim_ >= 1, "embedding dimension must be >= 1");
}

std::string HashingEmbedder::id() const { return "hashing-" + std::to_string(dim_); }

std::size_t HashingEmbedder::bucket(std::string_view token) const {
  return static_cast<std::size_t>(text::fnv1a64(token) % static_cast<std::uint64_t>(dim_));
}

Vector HashingEmbedder::embed(std::string_view code) const {
  std::vector<double> counts(static_cast<std::size_t>(dim_), 0.0);
  for (const auto& token : tokenize(code, options_)) {
    if (token.kind == TokenKind::newline || token.kind == TokenKind::indent_marker || token.kind == TokenKind::comment) {
      continue;
    }
    counts[bucket(token.text)] += 1.0;
  }
  double norm = 0.0;
  for (const double c : counts) norm += c * c;
  norm = std::sqrt(norm);
  Vector out;
  out.values.resize(counts.size(), 0.0F);
  if (norm > 0.0) {
    for (std::size_t i = 0; i < counts.size(); ++i) out.values[i] = static_cast<float>(counts[i] / norm);
  }
  return out;
}

std::vector<Vector> HashingEmbedder::embed_batch(const std::vector<std::string>& codes) {
  std::vector<Vector> out;
  out.reserve(codes.size());
  for (const auto& code : codes) out.push_back(embed(code));
  return out;
}

std::vector<Vector> embed_cached(Store& store, EmbeddingProvider& provider, const std::vector<std::string>& codes) {
  const std::string pid = provider.id();
  std::vector<Vector> out(codes.size());
  std::vector<std::string> missing;
  std::vector<std::size_t> missing_index;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (auto hit = store.cached_embedding(pid, text::hex64(text::fnv1a64(codes[i])))) {
      out[i] = std::move(*hit);
    } else {
      missing.push_back(codes[i]);
      missing_index.push_back(i);
    }
  }
  if (missing.empty()) return out;

  auto fresh = provider.embed_batch(missing);
  if (fresh.size() != missing.size()) fail(ErrorKind::malformed_response, "embedding count mismatch");
  store.transact([&] {
    for (std::size_t j = 0; j < fresh.size(); ++j) {
      if (static_cast<int>(fresh[j].dim()) != provider.dim()) {
        fail(ErrorKind::malformed_response, "embedding has dimension " + std::to_string(fresh[j].dim()));
      }
      for (const float v : fresh[j].values) {
        if (!std::isfinite(v)) fail(ErrorKind::malformed_response, "embedding has a non-finite entry");
      }
      store.cache_embedding(pid, text::hex64(text::fnv1a64(missing[j])), fresh[j]);
      out[missing_index[j]] = std::move(fresh[j]);
    }
  });
  return out;
}

}  // namespace planmine
