#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace planmine {

enum class TokenKind {
  identifier,
  number_literal,
  string_literal,
  operator_,
  delimiter,
  keyword,
  comment,
  newline,
  indent_marker,
};

[[nodiscard]] const char* to_string(TokenKind kind) noexcept;

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t begin = 0;  // byte offsets into the source
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

struct LexerOptions {
  std::string comment_marker = "#";
};

/// Python-flavoured longest-match lexer. Total: every byte of the input is
/// either inside exactly one token or is inter-token whitespace (spaces,
/// tabs, form feeds, stray carriage returns and backslash continuations).
/// Bytes that fit no class become one-byte delimiter tokens.
[[nodiscard]] std::vector<Token> tokenize(std::string_view source,
                                          const LexerOptions& options = {});

[[nodiscard]] bool is_python_keyword(std::string_view word) noexcept;

enum class LineKind { blank, comment_only, code };

/// Classification of each physical line. Lines covered by a multi-line
/// string token count as code, so a '#' inside a docstring never makes a
/// comment line.
[[nodiscard]] std::vector<LineKind> classify_lines(std::string_view source,
                                                   const std::vector<Token>& tokens);

}  // namespace planmine
