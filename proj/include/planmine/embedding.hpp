#pragma once

#include <string>
#include <vector>

#include "planmine/store.hpp"
#include "planmine/tokenizer.hpp"
#include "planmine/types.hpp"

namespace planmine {

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual int dim() const = 0;
  virtual std::vector<Vector> embed_batch(const std::vector<std::string>& codes) = 0;
};

/// Offline embedding: token term frequencies hashed into `dim` buckets and
/// L2-normalized. Layout tokens (newlines, indentation) and comments are
/// ignored; code with no other tokens maps to the zero vector.
class HashingEmbedder final : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(int dim = 256, LexerOptions options = {});
  [[nodiscard]] std::string id() const override;
  [[nodiscard]] int dim() const override { return dim_; }
  std::vector<Vector> embed_batch(const std::vector<std::string>& codes) override;

  [[nodiscard]] Vector embed(std::string_view code) const;
  [[nodiscard]] std::size_t bucket(std::string_view token) const;

 private:
  int dim_;
  LexerOptions options_;
};

struct RemoteEmbedderConfig {
  std::string endpoint = "https://api.openai.com";
  std::string path = "/v1/embeddings";
  std::string model = "text-embedding-3-small";
  int dim = 1536;
  std::string api_key_env = "OPENAI_API_KEY";
  int batch_size = 64;
  int timeout_seconds = 120;
};

/// Batch embedding client (OpenAI wire format).
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);
  [[nodiscard]] std::string id() const override { return "remote:" + config_.model; }
  [[nodiscard]] int dim() const override { return config_.dim; }
  std::vector<Vector> embed_batch(const std::vector<std::string>& codes) override;

 private:
  RemoteEmbedderConfig config_;
  std::string api_key_;
};

/// Embeds through the store cache keyed by (provider id, content hash);
/// only cache misses reach the provider.
std::vector<Vector> embed_cached(Store& store, EmbeddingProvider& provider, const std::vector<std::string>& codes);

}  // namespace planmine
