#include "planmine/tokenizer.hpp"

#include <algorithm>
#include <array>

#include "planmine/text.hpp"

namespace planmine {

const char* to_string(TokenKind kind) noexcept {
  switch (kind) {
    case TokenKind::identifier: return "identifier";
    case TokenKind::number_literal: return "number";
    case TokenKind::string_literal: return "string";
    case TokenKind::operator_: return "operator";
    case TokenKind::delimiter: return "delimiter";
    case TokenKind::keyword: return "keyword";
    case TokenKind::comment: return "comment";
    case TokenKind::newline: return "newline";
    case TokenKind::indent_marker: return "indent";
  }
  return "?";
}

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",
    "await", "break",  "class",   "continue", "def",      "del",    "elif",
    "else",  "except", "finally", "for",      "from",     "global", "if",
    "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};

// Longest first within each length class.
constexpr std::array<std::string_view, 37> kOperators = {
    "**=", "//=", ">>=", "<<=", "**", "//", ">>", "<<", "<=", ">=", "==", "!=", ":=",
    "+=",  "-=",  "*=",  "/=",  "%=", "&=", "|=", "^=", "@=", "+",  "-",  "*",  "/",
    "%",   "@",   "&",   "|",   "^",  "~",  "<",  ">",  "=",  "->", "..."};

bool is_ident_start(unsigned char c) {
  return c == '_' || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}
bool is_ident_char(unsigned char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

class Lexer {
 public:
  Lexer(std::string_view src, const LexerOptions& options) : src_(src), options_(options) {}

  std::vector<Token> run() {
    bool at_line_start = true;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (at_line_start) {
        at_line_start = false;
        const std::size_t ws_end = skip_blanks(pos_);
        if (ws_end > pos_ && ws_end < src_.size() && src_[ws_end] != '\n' &&
            !(src_[ws_end] == '\r' && ws_end + 1 < src_.size() && src_[ws_end + 1] == '\n')) {
          emit(TokenKind::indent_marker, pos_, ws_end);
        }
        pos_ = ws_end;
        continue;
      }
      if (c == '\n') {
        emit(TokenKind::newline, pos_, pos_ + 1);
        ++pos_;
        at_line_start = true;
        continue;
      }
      if (c == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
        emit(TokenKind::newline, pos_, pos_ + 2);
        pos_ += 2;
        at_line_start = true;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
        ++pos_;
        continue;
      }
      if (c == '\\' && continuation_at(pos_)) {
        pos_ += src_[pos_ + 1] == '\n' ? 2 : 3;
        continue;
      }
      if (!options_.comment_marker.empty() && src_.substr(pos_).starts_with(options_.comment_marker)) {
        lex_comment();
        continue;
      }
      if (lex_string()) continue;
      if (is_digit(static_cast<unsigned char>(c)) ||
          (c == '.' && pos_ + 1 < src_.size() && is_digit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        lex_number();
        continue;
      }
      if (is_ident_start(static_cast<unsigned char>(c))) {
        lex_identifier();
        continue;
      }
      lex_punctuation();
    }
    return std::move(tokens_);
  }

 private:
  std::size_t skip_blanks(std::size_t at) const {
    while (at < src_.size() && (src_[at] == ' ' || src_[at] == '\t' || src_[at] == '\f')) ++at;
    return at;
  }

  bool continuation_at(std::size_t at) const {
    if (at + 1 < src_.size() && src_[at + 1] == '\n') return true;
    return at + 2 < src_.size() && src_[at + 1] == '\r' && src_[at + 2] == '\n';
  }

  void emit(TokenKind kind, std::size_t begin, std::size_t end) {
    tokens_.push_back(Token{kind, std::string(src_.substr(begin, end - begin)), begin, end});
  }

  void lex_comment() {
    std::size_t end = src_.find('\n', pos_);
    if (end == std::string_view::npos) end = src_.size();
    if (end > pos_ && src_[end - 1] == '\r') --end;
    emit(TokenKind::comment, pos_, std::max(end, pos_ + options_.comment_marker.size()));
    pos_ = std::max(end, pos_ + options_.comment_marker.size());
  }

  // String with an optional prefix such as r, b, f, rb, Rb, fr.
  bool lex_string() {
    std::size_t at = pos_;
    std::size_t prefix = 0;
    while (prefix < 2 && at < src_.size() && std::string_view("rRbBuUfF").find(src_[at]) != std::string_view::npos) {
      ++at;
      ++prefix;
    }
    if (at >= src_.size() || (src_[at] != '\'' && src_[at] != '"')) return false;
    const char quote = src_[at];
    const bool triple = at + 2 < src_.size() && src_[at + 1] == quote && src_[at + 2] == quote;
    std::size_t cur = at + (triple ? 3 : 1);
    std::size_t end = src_.size();
    while (cur < src_.size()) {
      const char ch = src_[cur];
      if (ch == '\\') {
        cur += 2;
        continue;
      }
      if (triple) {
        if (ch == quote && cur + 2 < src_.size() && src_[cur + 1] == quote && src_[cur + 2] == quote) {
          end = cur + 3;
          break;
        }
      } else {
        if (ch == quote) {
          end = cur + 1;
          break;
        }
        if (ch == '\n') {  // unterminated single-line string stops at the line end
          end = cur > at && src_[cur - 1] == '\r' ? cur - 1 : cur;
          break;
        }
      }
      ++cur;
    }
    end = std::min(end, src_.size());
    emit(TokenKind::string_literal, pos_, end);
    pos_ = end;
    return true;
  }

  void lex_number() {
    std::size_t at = pos_;
    const bool hex_like = src_[at] == '0' && at + 1 < src_.size() &&
                          std::string_view("xXbBoO").find(src_[at + 1]) != std::string_view::npos;
    while (at < src_.size()) {
      const auto ch = static_cast<unsigned char>(src_[at]);
      if (is_ident_char(ch) && ch < 0x80) {
        ++at;
        continue;
      }
      if (ch == '.') {
        // "1..2" is not a thing in Python; a second dot ends the literal.
        if (src_.substr(pos_, at - pos_).find('.') != std::string_view::npos) break;
        ++at;
        continue;
      }
      if ((ch == '+' || ch == '-') && !hex_like && at > pos_ &&
          (src_[at - 1] == 'e' || src_[at - 1] == 'E') && at + 1 < src_.size() &&
          is_digit(static_cast<unsigned char>(src_[at + 1]))) {
        ++at;
        continue;
      }
      break;
    }
    emit(TokenKind::number_literal, pos_, at);
    pos_ = at;
  }

  void lex_identifier() {
    std::size_t at = pos_;
    while (at < src_.size() && is_ident_char(static_cast<unsigned char>(src_[at]))) ++at;
    const auto word = src_.substr(pos_, at - pos_);
    emit(is_python_keyword(word) ? TokenKind::keyword : TokenKind::identifier, pos_, at);
    pos_ = at;
  }

  void lex_punctuation() {
    const auto rest = src_.substr(pos_);
    std::string_view best;
    for (const auto op : kOperators) {
      if (op.size() > best.size() && rest.starts_with(op)) best = op;
    }
    if (!best.empty()) {
      const bool delimiter = best == "->" || best == "...";
      emit(delimiter ? TokenKind::delimiter : TokenKind::operator_, pos_, pos_ + best.size());
      pos_ += best.size();
      return;
    }
    // Single delimiter or an unknown byte; both become one-byte delimiters.
    emit(TokenKind::delimiter, pos_, pos_ + 1);
    ++pos_;
  }

  std::string_view src_;
  const LexerOptions& options_;
  std::size_t pos_ = 0;
  std::vector<Token> tokens_;
};

}  // namespace

bool is_python_keyword(std::string_view word) noexcept {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::vector<Token> tokenize(std::string_view source, const LexerOptions& options) {
  return Lexer(source, options).run();
}

std::vector<LineKind> classify_lines(std::string_view source, const std::vector<Token>& tokens) {
  const auto lines = text::split_lines_keep(source);
  std::vector<std::size_t> starts;
  starts.reserve(lines.size());
  std::size_t offset = 0;
  for (const auto line : lines) {
    starts.push_back(offset);
    offset += line.size();
  }
  auto line_of = [&](std::size_t byte) {
    const auto it = std::upper_bound(starts.begin(), starts.end(), byte);
    return static_cast<std::size_t>(std::distance(starts.begin(), it)) - 1;
  };

  std::vector<bool> has_code(lines.size(), false);
  std::vector<bool> has_comment(lines.size(), false);
  for (const auto& tok : tokens) {
    if (tok.kind == TokenKind::newline || tok.kind == TokenKind::indent_marker || tok.begin == tok.end) continue;
    const std::size_t first = line_of(tok.begin);
    if (tok.kind == TokenKind::comment) {
      has_comment[first] = true;
      continue;
    }
    const std::size_t last = line_of(tok.end - 1);
    for (std::size_t l = first; l <= last; ++l) has_code[l] = true;
  }

  std::vector<LineKind> kinds(lines.size(), LineKind::blank);
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (text::trim(lines[l]).empty()) continue;
    if (has_code[l]) {
      kinds[l] = LineKind::code;
    } else if (has_comment[l]) {
      kinds[l] = LineKind::comment_only;
    } else {
      kinds[l] = LineKind::code;  // e.g. a lone backslash continuation
    }
  }
  return kinds;
}

}  // namespace planmine
