#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace planmine::text {

[[nodiscard]] std::string_view trim(std::string_view s) noexcept;
[[nodiscard]] std::string_view trim_left(std::string_view s) noexcept;
[[nodiscard]] std::string_view trim_right(std::string_view s) noexcept;
[[nodiscard]] std::string to_lower(std::string_view s);

/// Case-insensitive (ASCII) occurrence count, non-overlapping.
[[nodiscard]] std::size_t count_occurrences_icase(std::string_view haystack,
                                                  std::string_view needle);

/// Splits into lines that keep their terminating '\n'; the last line may
/// lack one. Concatenating the result gives back the input.
[[nodiscard]] std::vector<std::string_view> split_lines_keep(std::string_view s);

/// Strips a trailing "\n" or "\r\n" from a single line.
[[nodiscard]] std::string_view chomp(std::string_view line) noexcept;

[[nodiscard]] bool is_utf8_boundary(std::string_view s, std::size_t offset) noexcept;

/// 64-bit FNV-1a. Stable across platforms; used for fixture keys,
/// embedding buckets and cache keys.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view data) noexcept;
[[nodiscard]] std::string hex64(std::uint64_t value);

}  // namespace planmine::text
