#pragma once

#include <set>
#include <string>
#include <string_view>

#include "planmine/tokenizer.hpp"

namespace planmine {

struct ComplexityRecord {
  int loc = 0;         // non-comment, non-blank lines
  int cyclomatic = 1;  // >= 1
  double halstead_volume = 0.0;
  int cognitive = 0;

  bool operator==(const ComplexityRecord&) const = default;
};

/// Raw Halstead counts; volume = (n1_total + n2_total) * log2(n1_distinct + n2_distinct).
struct HalsteadCounts {
  std::size_t operators_total = 0;
  std::size_t operands_total = 0;
  std::size_t operators_distinct = 0;
  std::size_t operands_distinct = 0;

  [[nodiscard]] double volume() const;
};

[[nodiscard]] int loc(std::string_view source, const LexerOptions& options = {});

/// 1 + number of decision keywords (if, elif, while, for, except, and, or).
/// Token-based, so keywords inside strings and comments never count.
[[nodiscard]] int cyclomatic(std::string_view source, const LexerOptions& options = {});

/// Operators are operator, delimiter and keyword tokens; operands are
/// identifiers and literals. Comments, newlines and indentation are ignored.
[[nodiscard]] HalsteadCounts halstead_counts(std::string_view source, const LexerOptions& options = {});
[[nodiscard]] double halstead_volume(std::string_view source, const LexerOptions& options = {});

/// Indentation-nesting variant of cognitive complexity:
///   if/for/while/except at statement start   +1 + nesting depth
///   elif/else at statement start             +1
///   each `and` / `or`                        +1
/// Nesting depth counts enclosing if/elif/else/for/while/except blocks.
[[nodiscard]] int cognitive(std::string_view source, const LexerOptions& options = {});

[[nodiscard]] ComplexityRecord measure(std::string_view source, const LexerOptions& options = {});

/// Names used as `.name(`: an identifier directly after a '.' delimiter and
/// directly before a '(' delimiter.
[[nodiscard]] std::set<std::string> distinct_methods(std::string_view source,
                                                     const LexerOptions& options = {});

}  // namespace planmine
