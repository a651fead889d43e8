#include "planmine/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>

#include "planmine/error.hpp"
#include "planmine/text.hpp"

namespace planmine {

namespace fs = std::filesystem;

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) fail(ErrorKind::usage, "config key '" + key + "' expects a number, got '" + value + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used == value.size()) return out;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::usage, "config key '" + key + "' expects a number, got '" + value + "'");
}

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

void apply_setting(AppConfig& c, const std::string& key, const std::string& value, const fs::path& base) {
  using Setter = std::function<void(const std::string&)>;
  auto integer = [&](int& field) { return Setter([&field, key](const std::string& v) { field = parse_number<int>(key, v); }); };
  auto real = [&](double& field) { return Setter([&field, key](const std::string& v) { field = parse_double(key, v); }); };
  auto str = [](std::string& field) { return Setter([&field](const std::string& v) { field = v; }); };
  auto path = [&base](fs::path& field) { return Setter([&field, &base](const std::string& v) { field = resolve(base, v); }); };

  const std::map<std::string, Setter> table = {
      {"store", path(c.store)},
      {"host", str(c.host)},
      {"port", integer(c.port)},
      {"provider", str(c.provider)},
      {"fixtures", path(c.fixtures)},
      {"record_dir", [&](const std::string& v) { c.record_dir = resolve(base, v); }},
      {"endpoint", str(c.remote.endpoint)},
      {"completion_path", str(c.remote.path)},
      {"model", str(c.remote.model)},
      {"temperature", real(c.remote.temperature)},
      {"api_key_env", [&](const std::string& v) { c.remote.api_key_env = v; c.remote_embedding.api_key_env = v; }},
      {"timeout_seconds", [&](const std::string& v) {
         c.remote.timeout_seconds = parse_number<int>(key, v);
         c.remote_embedding.timeout_seconds = c.remote.timeout_seconds;
       }},
      {"max_in_flight", integer(c.gateway.max_in_flight)},
      {"retries", integer(c.gateway.retries)},
      {"backoff_ms", [&](const std::string& v) { c.gateway.backoff = std::chrono::milliseconds(parse_number<int>(key, v)); }},
      {"embedding", str(c.embedding)},
      {"embedding_endpoint", str(c.remote_embedding.endpoint)},
      {"embedding_path", str(c.remote_embedding.path)},
      {"embedding_model", str(c.remote_embedding.model)},
      {"embedding_batch_size", integer(c.remote_embedding.batch_size)},
      {"embedding_dim", [&](const std::string& v) {
         c.pipeline.embedding_dim = parse_number<int>(key, v);
         c.remote_embedding.dim = c.pipeline.embedding_dim;
       }},
      {"n_use_cases", integer(c.pipeline.n_use_cases)},
      {"pca_variance", real(c.pipeline.pca_variance)},
      {"k_min", integer(c.pipeline.k_min)},
      {"k_max", integer(c.pipeline.k_max)},
      {"n_init", integer(c.pipeline.n_init)},
      {"max_iters", integer(c.pipeline.max_iters)},
      {"tol", real(c.pipeline.tol)},
      {"top_clusters", integer(c.pipeline.top_clusters)},
      {"n_representatives", integer(c.pipeline.n_representatives)},
      {"seed", [&](const std::string& v) { c.pipeline.seed = parse_number<std::uint64_t>(key, v); }},
      {"language", str(c.language)},
      {"workers", integer(c.workers)},
      {"session_ttl_seconds", integer(c.session_ttl_seconds)},
      {"cors_origin", str(c.cors_origin)},
  };
  const auto it = table.find(key);
  if (it == table.end()) fail(ErrorKind::usage, "unknown config key '" + key + "'");
  it->second(value);
}

AppConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::usage, "cannot read config file " + path.string());
  AppConfig config;
  const fs::path base = path.parent_path();
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::usage, path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    apply_setting(config, std::string(text::trim(body.substr(0, eq))), std::string(text::trim(body.substr(eq + 1))),
                  base);
  }
  try {
    config.pipeline.validate();
  } catch (const Error& e) {
    fail(ErrorKind::usage, e.what());
  }
  return config;
}

std::shared_ptr<CompletionProvider> make_provider(const AppConfig& config) {
  if (config.provider == "mock") return std::make_shared<MockProvider>(config.fixtures, config.record_dir);
  if (config.provider == "remote") return std::make_shared<RemoteProvider>(config.remote);
  fail(ErrorKind::usage, "unknown provider '" + config.provider + "' (expected mock or remote)");
}

std::unique_ptr<EmbeddingProvider> make_embedder(const AppConfig& config) {
  if (config.embedding == "hashing") return std::make_unique<HashingEmbedder>(config.pipeline.embedding_dim);
  if (config.embedding == "remote") return std::make_unique<RemoteEmbedder>(config.remote_embedding);
  fail(ErrorKind::usage, "unknown embedding provider '" + config.embedding + "' (expected hashing or remote)");
}

}  // namespace planmine
