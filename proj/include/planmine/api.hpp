#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include "json.hpp"
#include "planmine/llm.hpp"
#include "planmine/store.hpp"

namespace httplib {
class Server;
}

namespace planmine {

struct ApiOptions {
  std::chrono::seconds session_ttl{1800};
  std::string cors_origin = "*";
};

/// JSON-over-HTTP front for browsing corpora, pulling candidates and
/// authoring plans. Errors are {"code", "message"} with a matching status.
/// Every request that touches the store runs in one store transaction.
class ApiService {
 public:
  ApiService(Store& store, Gateway& gateway, ApiOptions options = {});

  /// Registers every route (plus CORS preflight) on `server`.
  void install(httplib::Server& server);

  [[nodiscard]] std::size_t session_count();

  static constexpr const char* kSessionHeader = "X-Session-Token";

 private:
  struct Session {
    std::map<Id, std::set<Id>> shown;  // domain -> candidate ids already suggested
    std::chrono::steady_clock::time_point last_used;
  };

  std::string touch_session(const std::string& token);  // returns the live token
  std::set<Id>& shown_for(const std::string& token, Id domain_id);

  std::optional<std::string> cached(const std::string& key);
  void remember(const std::string& key, const std::string& value);

  Store& store_;
  Gateway& gateway_;
  ApiOptions options_;

  std::mutex sessions_mutex_;
  std::map<std::string, Session> sessions_;

  std::mutex cache_mutex_;
  std::map<std::string, std::string> cache_;

  std::shared_ptr<void> routes_keepalive_;

  friend class ApiRoutes;
};

/// Grid cell origin for the n-th canvas slot.
[[nodiscard]] std::pair<double, double> canvas_slot(std::size_t n);

nlohmann::json plan_to_json(const Plan& plan);

}  // namespace planmine
