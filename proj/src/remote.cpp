#include "httplib.h"
#include "json.hpp"

#include <cstdlib>

#include "planmine/embedding.hpp"
#include "planmine/error.hpp"
#include "planmine/llm.hpp"

namespace planmine {

using nlohmann::json;

namespace {

std::string key_from_env(const std::string& variable) {
  const char* value = std::getenv(variable.c_str());
  if (value == nullptr || *value == '\0') fail(ErrorKind::usage, "environment variable " + variable + " is not set");
  return value;
}

json post_json(const std::string& endpoint, const std::string& path, const std::string& api_key, const json& body,
               int timeout_seconds) {
  httplib::Client client(endpoint);
  if (!client.is_valid()) fail(ErrorKind::usage, "invalid provider endpoint " + endpoint);
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_write_timeout(timeout_seconds, 0);
  client.set_bearer_token_auth(api_key);

  const auto result = client.Post(path, body.dump(), "application/json");
  if (!result) fail(ErrorKind::transport, endpoint + path + ": " + httplib::to_string(result.error()));
  if (result->status != 200) {
    fail(ErrorKind::transport,
         endpoint + path + " returned HTTP " + std::to_string(result->status) + ": " + result->body.substr(0, 300));
  }
  try {
    return json::parse(result->body);
  } catch (const json::exception& e) {
    fail(ErrorKind::malformed_response, std::string("provider returned invalid JSON: ") + e.what());
  }
}

}  // namespace

RemoteProvider::RemoteProvider(RemoteProviderConfig config)
    : config_(std::move(config)), api_key_(key_from_env(config_.api_key_env)) {}

std::string RemoteProvider::complete(const PromptRequest& request) {
  const json body = {{"model", config_.model},
                     {"temperature", config_.temperature},
                     {"messages", json::array({{{"role", "user"}, {"content", request.text}}})}};
  const json reply = post_json(config_.endpoint, config_.path, api_key_, body, config_.timeout_seconds);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorKind::malformed_response, std::string("unexpected completion payload: ") + e.what());
  }
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config)
    : config_(std::move(config)), api_key_(key_from_env(config_.api_key_env)) {
  require(config_.dim >= 1 && config_.batch_size >= 1, "embedding dim and batch size must be >= 1");
}

std::vector<Vector> RemoteEmbedder::embed_batch(const std::vector<std::string>& codes) {
  std::vector<Vector> out;
  out.reserve(codes.size());
  for (std::size_t start = 0; start < codes.size(); start += static_cast<std::size_t>(config_.batch_size)) {
    const std::size_t stop = std::min(codes.size(), start + static_cast<std::size_t>(config_.batch_size));
    json input = json::array();
    for (std::size_t i = start; i < stop; ++i) input.push_back(codes[i]);
    const json reply = post_json(config_.endpoint, config_.path, api_key_, {{"model", config_.model}, {"input", input}},
                                 config_.timeout_seconds);
    try {
      const auto& data = reply.at("data");
      if (data.size() != stop - start) fail(ErrorKind::malformed_response, "embedding count mismatch");
      std::vector<Vector> batch(stop - start);
      for (const auto& item : data) {
        const auto index = item.value("index", std::size_t{0});
        if (index >= batch.size()) fail(ErrorKind::malformed_response, "embedding index out of range");
        batch[index].values = item.at("embedding").get<std::vector<float>>();
      }
      for (auto& v : batch) out.push_back(std::move(v));
    } catch (const json::exception& e) {
      fail(ErrorKind::malformed_response, std::string("unexpected embedding payload: ") + e.what());
    }
  }
  return out;
}

}  // namespace planmine
