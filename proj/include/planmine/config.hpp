#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "planmine/embedding.hpp"
#include "planmine/llm.hpp"
#include "planmine/types.hpp"

namespace planmine {

/// Settings shared by the CLI commands. Files are flat `key = value` lines;
/// '#' starts a comment. Relative paths resolve against the file's folder.
struct AppConfig {
  std::filesystem::path store = "planmine.db";
  std::string host = "127.0.0.1";
  int port = 8080;

  std::string provider = "mock";  // mock | remote
  std::filesystem::path fixtures = "fixtures";
  std::optional<std::filesystem::path> record_dir;
  RemoteProviderConfig remote;
  GatewayOptions gateway;

  std::string embedding = "hashing";  // hashing | remote
  RemoteEmbedderConfig remote_embedding;

  PipelineConfig pipeline;
  std::string language = "python";
  int workers = 4;

  int session_ttl_seconds = 1800;
  std::string cors_origin = "*";
};

/// Throws ErrorKind::usage for an unreadable file, unknown key or bad value.
[[nodiscard]] AppConfig load_config(const std::filesystem::path& path);

void apply_setting(AppConfig& config, const std::string& key, const std::string& value,
                   const std::filesystem::path& base_dir = {});

[[nodiscard]] std::shared_ptr<CompletionProvider> make_provider(const AppConfig& config);
[[nodiscard]] std::unique_ptr<EmbeddingProvider> make_embedder(const AppConfig& config);

}  // namespace planmine
