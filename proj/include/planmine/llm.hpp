#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "planmine/types.hpp"

namespace planmine {

enum class PromptKind {
  use_cases,
  code_for_use_case,
  subgoal_annotate,
  changeable_areas,
  cluster_name,
  explain_selection,
  predict_output,
};

[[nodiscard]] const char* to_string(PromptKind kind) noexcept;
[[nodiscard]] PromptKind prompt_kind_from_string(const std::string& text);

/// Template body with `{NAME}` placeholders.
[[nodiscard]] const std::string& template_body(PromptKind kind);

/// Placeholder names used by a template, in first-appearance order.
[[nodiscard]] std::vector<std::string> template_placeholders(PromptKind kind);

struct PromptRequest {
  PromptKind kind = PromptKind::use_cases;
  std::map<std::string, std::string> values;
  std::string text;  // rendered prompt

  /// Stable fixture key over the substituted values.
  [[nodiscard]] std::string key() const;
};

/// Substitutes every placeholder in one pass (values are never rescanned).
/// Missing or unknown placeholder names are a precondition error.
[[nodiscard]] PromptRequest render_prompt(PromptKind kind, std::map<std::string, std::string> values);

class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  [[nodiscard]] virtual std::string id() const = 0;
  /// Throws Error(transport) when the provider cannot answer.
  virtual std::string complete(const PromptRequest& request) = 0;
};

/// Replays responses from `<dir>/<kind>/<key>.txt`, falling back to
/// `<dir>/<kind>/_default.txt`. With a record directory, every miss writes
/// the rendered prompt to `<record>/<kind>/<key>.prompt.txt` first.
class MockProvider final : public CompletionProvider {
 public:
  explicit MockProvider(std::filesystem::path fixture_dir, std::optional<std::filesystem::path> record_dir = {});
  [[nodiscard]] std::string id() const override { return "mock"; }
  std::string complete(const PromptRequest& request) override;

 private:
  std::filesystem::path dir_;
  std::optional<std::filesystem::path> record_dir_;
  std::mutex record_mutex_;
};

struct RemoteProviderConfig {
  std::string endpoint = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4o-2024-05-13";
  double temperature = 0.0;
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 120;
};

/// Chat-completion client (OpenAI wire format).
class RemoteProvider final : public CompletionProvider {
 public:
  explicit RemoteProvider(RemoteProviderConfig config);
  [[nodiscard]] std::string id() const override { return "remote:" + config_.model; }
  std::string complete(const PromptRequest& request) override;

 private:
  RemoteProviderConfig config_;
  std::string api_key_;
};

struct GatewayOptions {
  int max_in_flight = 4;
  int retries = 2;
  std::chrono::milliseconds backoff{250};
};

/// Rate-limited, retrying front for a provider plus the typed operations
/// built on it. Shareable across threads.
class Gateway {
 public:
  Gateway(std::shared_ptr<CompletionProvider> provider, GatewayOptions options = {});

  [[nodiscard]] std::string provider_id() const { return provider_->id(); }

  /// Raw completion. Transport errors are retried with exponential backoff.
  std::string complete(const PromptRequest& request);

  std::vector<std::string> generate_use_cases(const std::string& library, int n);
  std::string generate_program(const std::string& library, const std::string& use_case);
  std::string annotate_subgoals(const std::string& full_program);
  std::vector<std::string> extract_changeable_fragments(const std::string& snippet_code);
  std::string name_cluster(const std::string& programs_in_cluster);
  std::string explain_selection(const std::string& code, const CodeSpan& selection);
  std::string predict_output(const std::string& code);

  [[nodiscard]] int peak_in_flight() const { return peak_.load(); }
  [[nodiscard]] long calls() const { return calls_.load(); }

 private:
  std::shared_ptr<CompletionProvider> provider_;
  GatewayOptions options_;
  std::mutex mutex_;
  std::condition_variable slot_free_;
  int in_flight_ = 0;
  std::atomic<int> peak_{0};
  std::atomic<long> calls_{0};
};

// Response parsers. Each returns a value or throws Error(malformed_response).

/// Numbered or bulleted list, blanks dropped, truncated to `n`; fewer than
/// half of `n` items is malformed.
[[nodiscard]] std::vector<std::string> parse_use_cases(std::string_view response, int n);

/// Removes one outermost fence pair (with optional language tag) if present.
[[nodiscard]] std::string strip_code_fence(std::string_view response);

/// Contents of every fenced block, in order. Unterminated blocks are ignored.
[[nodiscard]] std::vector<std::string> parse_fenced_blocks(std::string_view response);

/// Remainder of the first line that starts with "Name:", trimmed.
[[nodiscard]] std::string parse_cluster_name(std::string_view response);

/// Everything after the last "OUTPUT:" delimiter.
[[nodiscard]] std::string parse_predicted_output(std::string_view response);

/// Member listing for the cluster-naming prompt: each member's goal as a
/// comment line followed by its code, members separated by a blank line.
[[nodiscard]] std::string programs_in_cluster(const std::vector<std::pair<std::string, std::string>>& goal_code);

/// Whole lines of `code` touched by `selection`.
[[nodiscard]] std::string selected_lines(std::string_view code, const CodeSpan& selection);

}  // namespace planmine
