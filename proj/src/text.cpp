#include "planmine/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

namespace planmine::text {

namespace {
bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
char lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}
}  // namespace

std::string_view trim_left(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  return s;
}

std::string_view trim_right(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string_view trim(std::string_view s) noexcept { return trim_right(trim_left(s)); }

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), lower);
  return out;
}

std::size_t count_occurrences_icase(std::string_view haystack, std::string_view needle) {
  if (needle.empty() || needle.size() > haystack.size()) return 0;
  const std::string h = to_lower(haystack);
  const std::string n = to_lower(needle);
  std::size_t count = 0;
  for (std::size_t pos = h.find(n); pos != std::string::npos; pos = h.find(n, pos + n.size())) {
    ++count;
  }
  return count;
}

std::vector<std::string_view> split_lines_keep(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t begin = 0;
  while (begin < s.size()) {
    const std::size_t nl = s.find('\n', begin);
    const std::size_t end = nl == std::string_view::npos ? s.size() : nl + 1;
    lines.push_back(s.substr(begin, end - begin));
    begin = end;
  }
  return lines;
}

std::string_view chomp(std::string_view line) noexcept {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool is_utf8_boundary(std::string_view s, std::size_t offset) noexcept {
  if (offset == 0 || offset >= s.size()) return offset <= s.size();
  const auto byte = static_cast<unsigned char>(s[offset]);
  return (byte & 0xC0) != 0x80;
}

std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : data) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace planmine::text
