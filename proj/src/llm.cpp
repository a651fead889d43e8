#include "planmine/llm.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "planmine/error.hpp"
#include "planmine/text.hpp"

namespace planmine {

namespace fs = std::filesystem;

namespace {

const std::string kUseCases =
    "Give me 100 use cases of {DOMAIN_NAME}. A use case describes a task you can achieve with the given library. "
    "For example, for the math library in Python, calculating the area of a circle would be an appropriately "
    "specific use case, but doing calculations would be too general. List these use cases without any comments "
    "before or after. Basically, just give me a list of use cases and no other text. In addition, these use cases "
    "should be appropriate for instruction for novices.";

const std::string kCodeForUseCase =
    "Write code to use {DOMAIN_NAME} to achieve the task I give to you. Return the code block without any text "
    "before or after. Basically, just give me the code block and no other text. \n"
    "\n"
    "Write code to do the following: {USE_CASE}.";

const std::string kSubgoalAnnotate =
    "For this piece of code, instead of putting a comment for every line, could you combine comments to add "
    "subgoals? Subgoals should describe small chunks of code that achieve a task that can be explained in natural "
    "language, rather than describing the code on a single line. Each subgoal should be put as a comment before the "
    "code starts. \n"
    "\n"
    "Here is the code: {FULL_PROGRAM}.";

const std::string kChangeableAreas =
    "We define a domain-specific programming plan as a piece of code common in programs from a particular "
    "application area (e.g., web parsing) that achieves a specific goal. I am providing you with a piece of code. "
    "Based on this definition, can you highlight the changeable areas?  Changeable areas are the parts of the idiom "
    "that would change when it is used in different scenarios. Could you give me the exact block of code from the "
    "line that would change. Don't give me the whole line. Just give me the part of the line that would change. For "
    "example, if just the URL changes in a line, give me just the URL. Give me each of these in a code block. List "
    "these code blocks without any comments before or after. Basically, just give me a list of code blocks of code "
    "parts that would change and no other text. \n"
    "\n"
    "Here is the code: {CODE_SNIPPET}";

const std::string kClusterName =
    "I am giving you a cluster with comments which are the goals of some pieces of code along with the code. Come "
    "up with a name for this cluster of plans. Programming plans are pieces of code common in programs from a "
    "particular application area that are used to achieve a given goal. A name is reflective of what that plan "
    "achieves. So produce a name that would help me understand what goal the code  will be achieving. To reiterate, "
    "be very specific, and consider what each subgoal is doing. Do not consider the context. Just consider what the "
    "code is doing. Return the result to me in the form of the following string, \"Name: \". \n"
    "\n"
    "Here is the cluster: {PROGRAMS_IN_CLUSTER}";

const std::string kExplainSelection =
    "I am reading the following code with novice programmers:\n"
    "\n"
    "{CODE_SNIPPET}\n"
    "\n"
    "Explain in two or three plain sentences what the selected line(s) below do in the context of this code. Do not "
    "repeat the code and do not explain the rest of the program.\n"
    "\n"
    "Selected line(s):\n"
    "\n"
    "{SELECTION}";

const std::string kPredictOutput =
    "Here is a piece of code:\n"
    "\n"
    "{CODE_SNIPPET}\n"
    "\n"
    "Walk through the code step by step and work out what it prints to standard output when it runs. Reason about "
    "each statement in order before deciding. After your reasoning, write a line containing only \"OUTPUT:\" and "
    "then the exact predicted output with nothing after it.";

constexpr std::string_view kBullet = "\xE2\x80\xA2";

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string_view strip_list_marker(std::string_view line) {
  std::size_t digits = 0;
  while (digits < line.size() && line[digits] >= '0' && line[digits] <= '9') ++digits;
  if (digits > 0 && digits < line.size() && (line[digits] == '.' || line[digits] == ')')) {
    return text::trim(line.substr(digits + 1));
  }
  if (line.starts_with(kBullet)) return text::trim(line.substr(kBullet.size()));
  if (!line.empty() && (line[0] == '-' || line[0] == '*') && (line.size() == 1 || line[1] == ' ' || line[1] == '\t')) {
    return text::trim(line.substr(1));
  }
  return line;
}

bool is_fence_line(std::string_view line) { return text::trim_left(line).starts_with("```"); }

}  // namespace

const char* to_string(PromptKind kind) noexcept {
  switch (kind) {
    case PromptKind::use_cases: return "use_cases";
    case PromptKind::code_for_use_case: return "code_for_use_case";
    case PromptKind::subgoal_annotate: return "subgoal_annotate";
    case PromptKind::changeable_areas: return "changeable_areas";
    case PromptKind::cluster_name: return "cluster_name";
    case PromptKind::explain_selection: return "explain_selection";
    case PromptKind::predict_output: return "predict_output";
  }
  return "?";
}

PromptKind prompt_kind_from_string(const std::string& text) {
  for (const auto kind : {PromptKind::use_cases, PromptKind::code_for_use_case, PromptKind::subgoal_annotate,
                          PromptKind::changeable_areas, PromptKind::cluster_name, PromptKind::explain_selection,
                          PromptKind::predict_output}) {
    if (text == to_string(kind)) return kind;
  }
  fail(ErrorKind::validation, "unknown prompt kind '" + text + "'");
}

const std::string& template_body(PromptKind kind) {
  switch (kind) {
    case PromptKind::use_cases: return kUseCases;
    case PromptKind::code_for_use_case: return kCodeForUseCase;
    case PromptKind::subgoal_annotate: return kSubgoalAnnotate;
    case PromptKind::changeable_areas: return kChangeableAreas;
    case PromptKind::cluster_name: return kClusterName;
    case PromptKind::explain_selection: return kExplainSelection;
    case PromptKind::predict_output: return kPredictOutput;
  }
  fail(ErrorKind::precondition, "bad prompt kind");
}

std::vector<std::string> template_placeholders(PromptKind kind) {
  const std::string& body = template_body(kind);
  std::vector<std::string> names;
  for (std::size_t open = body.find('{'); open != std::string::npos; open = body.find('{', open + 1)) {
    const std::size_t close = body.find('}', open);
    if (close == std::string::npos) break;
    std::string name = body.substr(open + 1, close - open - 1);
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(std::move(name));
  }
  return names;
}

std::string PromptRequest::key() const {
  std::string material;
  for (const auto& [name, value] : values) {
    material += name;
    material += '\x1f';
    material += value;
    material += '\x1e';
  }
  return text::hex64(text::fnv1a64(material));
}

PromptRequest render_prompt(PromptKind kind, std::map<std::string, std::string> values) {
  const auto names = template_placeholders(kind);
  for (const auto& name : names) {
    if (!values.contains(name)) fail(ErrorKind::precondition, "missing placeholder " + name + " for " + to_string(kind));
  }
  for (const auto& [name, value] : values) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      fail(ErrorKind::precondition, "placeholder " + name + " is not used by " + to_string(kind));
    }
  }

  const std::string& body = template_body(kind);
  std::string out;
  std::size_t pos = 0;
  while (pos < body.size()) {
    const std::size_t open = body.find('{', pos);
    if (open == std::string::npos) break;
    const std::size_t close = body.find('}', open);
    out.append(body, pos, open - pos);
    out += values.at(body.substr(open + 1, close - open - 1));
    pos = close + 1;
  }
  if (pos < body.size()) out.append(body, pos);
  return PromptRequest{kind, std::move(values), std::move(out)};
}

// MockProvider ---------------------------------------------------------------

MockProvider::MockProvider(fs::path fixture_dir, std::optional<fs::path> record_dir)
    : dir_(std::move(fixture_dir)), record_dir_(std::move(record_dir)) {}

std::string MockProvider::complete(const PromptRequest& request) {
  const fs::path kind_dir = dir_ / to_string(request.kind);
  const fs::path exact = kind_dir / (request.key() + ".txt");
  std::error_code ec;
  if (fs::is_regular_file(exact, ec)) return read_text(exact);

  if (record_dir_) {
    std::lock_guard lock(record_mutex_);
    const fs::path out_dir = *record_dir_ / to_string(request.kind);
    fs::create_directories(out_dir);
    std::ofstream(out_dir / (request.key() + ".prompt.txt"), std::ios::binary) << request.text;
  }
  const fs::path fallback = kind_dir / "_default.txt";
  if (fs::is_regular_file(fallback, ec)) return read_text(fallback);
  fail(ErrorKind::transport, "no mock fixture for " + std::string(to_string(request.kind)) + "/" + request.key());
}

// Gateway --------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<CompletionProvider> provider, GatewayOptions options)
    : provider_(std::move(provider)), options_(options) {
  require(provider_ != nullptr, "gateway needs a provider");
  require(options_.max_in_flight >= 1, "max_in_flight must be >= 1");
  require(options_.retries >= 0, "retries must be >= 0");
}

std::string Gateway::complete(const PromptRequest& request) {
  for (int attempt = 0;; ++attempt) {
    {
      std::unique_lock lock(mutex_);
      slot_free_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
      ++in_flight_;
      peak_.store(std::max(peak_.load(), in_flight_));
    }
    ++calls_;
    try {
      std::string response = provider_->complete(request);
      {
        std::lock_guard lock(mutex_);
        --in_flight_;
      }
      slot_free_.notify_one();
      return response;
    } catch (const Error& e) {
      {
        std::lock_guard lock(mutex_);
        --in_flight_;
      }
      slot_free_.notify_one();
      if (e.kind() != ErrorKind::transport || attempt >= options_.retries) throw;
    } catch (...) {
      {
        std::lock_guard lock(mutex_);
        --in_flight_;
      }
      slot_free_.notify_one();
      throw;
    }
    std::this_thread::sleep_for(options_.backoff * (1 << attempt));
  }
}

std::vector<std::string> Gateway::generate_use_cases(const std::string& library, int n) {
  require(!library.empty(), "library name must be non-empty");
  return parse_use_cases(complete(render_prompt(PromptKind::use_cases, {{"DOMAIN_NAME", library}})), n);
}

std::string Gateway::generate_program(const std::string& library, const std::string& use_case) {
  const auto request = render_prompt(PromptKind::code_for_use_case, {{"DOMAIN_NAME", library}, {"USE_CASE", use_case}});
  std::string code = strip_code_fence(complete(request));
  if (text::trim(code).empty()) fail(ErrorKind::malformed_response, "empty program for use case: " + use_case);
  return code;
}

std::string Gateway::annotate_subgoals(const std::string& full_program) {
  std::string code = strip_code_fence(complete(render_prompt(PromptKind::subgoal_annotate, {{"FULL_PROGRAM", full_program}})));
  if (text::trim(code).empty()) fail(ErrorKind::malformed_response, "empty subgoal annotation");
  return code;
}

std::vector<std::string> Gateway::extract_changeable_fragments(const std::string& snippet_code) {
  require(!text::trim(snippet_code).empty(), "snippet code must be non-empty");
  return parse_fenced_blocks(complete(render_prompt(PromptKind::changeable_areas, {{"CODE_SNIPPET", snippet_code}})));
}

std::string Gateway::name_cluster(const std::string& members) {
  require(!members.empty(), "cluster must have members");
  return parse_cluster_name(complete(render_prompt(PromptKind::cluster_name, {{"PROGRAMS_IN_CLUSTER", members}})));
}

std::string Gateway::explain_selection(const std::string& code, const CodeSpan& selection) {
  const std::string lines = selected_lines(code, selection);
  const std::string reply =
      complete(render_prompt(PromptKind::explain_selection, {{"CODE_SNIPPET", code}, {"SELECTION", lines}}));
  const auto explanation = text::trim(reply);
  if (explanation.empty()) fail(ErrorKind::malformed_response, "empty explanation");
  return std::string(explanation);
}

std::string Gateway::predict_output(const std::string& code) {
  require(!text::trim(code).empty(), "code must be non-empty");
  return parse_predicted_output(complete(render_prompt(PromptKind::predict_output, {{"CODE_SNIPPET", code}})));
}

// Parsers --------------------------------------------------------------------

std::vector<std::string> parse_use_cases(std::string_view response, int n) {
  require(n >= 1, "n must be >= 1");
  std::vector<std::string> items;
  for (const auto line : text::split_lines_keep(response)) {
    const auto item = strip_list_marker(text::trim(line));
    if (item.empty()) continue;
    items.emplace_back(item);
    if (static_cast<int>(items.size()) == n) break;
  }
  if (2 * static_cast<int>(items.size()) < n) {
    fail(ErrorKind::malformed_response,
         "expected " + std::to_string(n) + " use cases, parsed " + std::to_string(items.size()));
  }
  return items;
}

std::string strip_code_fence(std::string_view response) {
  const auto trimmed = text::trim(response);
  if (!trimmed.starts_with("```")) return std::string(response);
  const std::size_t first_newline = trimmed.find('\n');
  if (first_newline == std::string_view::npos) return std::string(response);
  const auto body_and_close = trimmed.substr(first_newline + 1);
  if (!body_and_close.ends_with("```")) return std::string(response);
  const std::size_t close = body_and_close.rfind('\n');
  // The closing fence must sit on its own line.
  std::string_view body;
  if (close == std::string_view::npos) {
    if (text::trim(body_and_close) != "```") return std::string(response);
    body = {};
  } else {
    if (text::trim(body_and_close.substr(close + 1)).find_first_not_of('`') != std::string_view::npos) {
      return std::string(response);
    }
    body = body_and_close.substr(0, close);
  }
  return std::string(body);
}

std::vector<std::string> parse_fenced_blocks(std::string_view response) {
  std::vector<std::string> blocks;
  const auto lines = text::split_lines_keep(response);
  std::size_t i = 0;
  while (i < lines.size()) {
    const auto line = text::trim(lines[i]);
    if (!line.starts_with("```")) {
      ++i;
      continue;
    }
    const auto rest = line.substr(3);
    const std::size_t same_line_close = rest.find("```");
    if (same_line_close != std::string_view::npos) {
      blocks.emplace_back(rest.substr(0, same_line_close));
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < lines.size() && !is_fence_line(lines[j])) ++j;
    if (j == lines.size()) break;  // unterminated
    std::string body;
    for (std::size_t k = i + 1; k < j; ++k) body.append(lines[k]);
    if (body.ends_with("\r\n")) {
      body.resize(body.size() - 2);
    } else if (body.ends_with('\n')) {
      body.pop_back();
    }
    blocks.push_back(std::move(body));
    i = j + 1;
  }
  return blocks;
}

std::string parse_cluster_name(std::string_view response) {
  for (const auto line : text::split_lines_keep(response)) {
    const auto stripped = text::trim_left(line);
    if (!stripped.starts_with("Name:")) continue;
    auto name = text::trim(stripped.substr(5));
    if (name.size() >= 2 && (name.front() == '"' || name.front() == '\'') && name.back() == name.front()) {
      name = text::trim(name.substr(1, name.size() - 2));
    }
    if (name.empty()) fail(ErrorKind::malformed_response, "empty cluster name");
    return std::string(name);
  }
  fail(ErrorKind::malformed_response, "no 'Name:' line in cluster naming response");
}

std::string parse_predicted_output(std::string_view response) {
  const auto lines = text::split_lines_keep(response);
  std::optional<std::size_t> marker;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim_left(lines[i]).starts_with("OUTPUT:")) marker = i;
  }
  if (!marker) fail(ErrorKind::malformed_response, "no OUTPUT: delimiter in prediction");

  std::string out;
  const auto head = text::trim_left(lines[*marker]).substr(7);
  const auto inline_part = text::trim(head);
  if (!inline_part.empty()) {
    out.append(text::trim_left(text::chomp(head)));
    out.push_back('\n');
  }
  for (std::size_t i = *marker + 1; i < lines.size(); ++i) out.append(lines[i]);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  out = strip_code_fence(out);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  // Leading blank lines between the delimiter and the output are not output.
  while (!out.empty() && out.front() == '\n') out.erase(out.begin());
  return out;
}

std::string programs_in_cluster(const std::vector<std::pair<std::string, std::string>>& goal_code) {
  std::string out;
  for (const auto& [goal, code] : goal_code) {
    if (!out.empty()) out += "\n\n";
    if (!goal.empty()) out += "# " + goal + "\n";
    std::string_view body = code;
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);
    out.append(body);
  }
  return out;
}

std::string selected_lines(std::string_view code, const CodeSpan& selection) {
  if (selection.start >= selection.end) fail(ErrorKind::precondition, "selection must be non-empty");
  if (selection.end > code.size()) fail(ErrorKind::precondition, "selection exceeds the code");
  std::size_t begin = selection.start;
  while (begin > 0 && code[begin - 1] != '\n') --begin;
  std::size_t end = code.find('\n', selection.end - 1);
  if (end == std::string_view::npos) end = code.size();
  return std::string(code.substr(begin, end - begin));
}

}  // namespace planmine
