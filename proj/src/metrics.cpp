#include "planmine/metrics.hpp"

#include <cmath>
#include <unordered_set>
#include <vector>

namespace planmine {

namespace {

bool is_significant(const Token& tok) {
  return tok.kind != TokenKind::comment && tok.kind != TokenKind::newline &&
         tok.kind != TokenKind::indent_marker;
}

bool is_keyword(const Token& tok, std::string_view word) {
  return tok.kind == TokenKind::keyword && tok.text == word;
}

std::size_t indent_width(std::string_view ws) {
  std::size_t width = 0;
  for (const char c : ws) width = c == '\t' ? (width / 8 + 1) * 8 : width + 1;
  return width;
}

struct LogicalLine {
  std::size_t indent = 0;
  std::vector<const Token*> tokens;  // significant tokens only
};

std::vector<LogicalLine> logical_lines(const std::vector<Token>& tokens) {
  std::vector<LogicalLine> lines;
  LogicalLine current;
  int depth = 0;
  std::size_t pending_indent = 0;
  for (const auto& tok : tokens) {
    if (tok.kind == TokenKind::indent_marker) {
      if (current.tokens.empty()) pending_indent = indent_width(tok.text);
      continue;
    }
    if (tok.kind == TokenKind::newline) {
      if (depth == 0) {
        if (!current.tokens.empty()) lines.push_back(std::move(current));
        current = LogicalLine{};
        pending_indent = 0;
      }
      continue;
    }
    if (!is_significant(tok)) continue;
    if (current.tokens.empty()) current.indent = pending_indent;
    current.tokens.push_back(&tok);
    if (tok.kind == TokenKind::delimiter) {
      if (tok.text == "(" || tok.text == "[" || tok.text == "{") ++depth;
      if ((tok.text == ")" || tok.text == "]" || tok.text == "}") && depth > 0) --depth;
    }
  }
  if (!current.tokens.empty()) lines.push_back(std::move(current));
  return lines;
}

}  // namespace

double HalsteadCounts::volume() const {
  const std::size_t vocabulary = operators_distinct + operands_distinct;
  if (vocabulary == 0) return 0.0;
  const auto length = static_cast<double>(operators_total + operands_total);
  return length * std::log2(static_cast<double>(vocabulary));
}

int loc(std::string_view source, const LexerOptions& options) {
  const auto kinds = classify_lines(source, tokenize(source, options));
  int count = 0;
  for (const auto kind : kinds) count += kind == LineKind::code ? 1 : 0;
  return count;
}

int cyclomatic(std::string_view source, const LexerOptions& options) {
  static const std::unordered_set<std::string> kDecisions = {"if",     "elif", "while", "for",
                                                             "except", "and",  "or"};
  int score = 1;
  for (const auto& tok : tokenize(source, options)) {
    if (tok.kind == TokenKind::keyword && kDecisions.contains(tok.text)) ++score;
  }
  return score;
}

HalsteadCounts halstead_counts(std::string_view source, const LexerOptions& options) {
  HalsteadCounts counts;
  std::unordered_set<std::string> operators;
  std::unordered_set<std::string> operands;
  for (const auto& tok : tokenize(source, options)) {
    switch (tok.kind) {
      case TokenKind::operator_:
      case TokenKind::delimiter:
      case TokenKind::keyword:
        ++counts.operators_total;
        operators.insert(tok.text);
        break;
      case TokenKind::identifier:
      case TokenKind::number_literal:
      case TokenKind::string_literal:
        ++counts.operands_total;
        operands.insert(tok.text);
        break;
      default:
        break;
    }
  }
  counts.operators_distinct = operators.size();
  counts.operands_distinct = operands.size();
  return counts;
}

double halstead_volume(std::string_view source, const LexerOptions& options) {
  return halstead_counts(source, options).volume();
}

int cognitive(std::string_view source, const LexerOptions& options) {
  static const std::unordered_set<std::string> kNesting = {"if", "elif", "else", "for", "while", "except"};
  static const std::unordered_set<std::string> kBlocks = {"if",  "elif",    "else",  "for", "while", "except",
                                                          "try", "finally", "with",  "def", "class"};
  struct Block {
    std::size_t indent;
    bool control;
  };

  const auto tokens = tokenize(source, options);
  int score = 0;
  std::vector<Block> stack;
  for (const auto& line : logical_lines(tokens)) {
    while (!stack.empty() && stack.back().indent >= line.indent) stack.pop_back();
    int depth = 0;
    for (const auto& block : stack) depth += block.control ? 1 : 0;

    std::size_t head = 0;
    if (is_keyword(*line.tokens[0], "async") && line.tokens.size() > 1) head = 1;
    const Token& first = *line.tokens[head];
    if (first.kind == TokenKind::keyword) {
      if (first.text == "if" || first.text == "for" || first.text == "while" || first.text == "except") {
        score += 1 + depth;
      } else if (first.text == "elif" || first.text == "else") {
        score += 1;
      }
      if (kBlocks.contains(first.text)) stack.push_back({line.indent, kNesting.contains(first.text)});
    }
    for (const Token* tok : line.tokens) {
      if (is_keyword(*tok, "and") || is_keyword(*tok, "or")) ++score;
    }
  }
  return score;
}

ComplexityRecord measure(std::string_view source, const LexerOptions& options) {
  return ComplexityRecord{loc(source, options), cyclomatic(source, options),
                          halstead_volume(source, options), cognitive(source, options)};
}

std::set<std::string> distinct_methods(std::string_view source, const LexerOptions& options) {
  const auto tokens = tokenize(source, options);
  std::set<std::string> names;
  for (std::size_t i = 1; i + 1 < tokens.size(); ++i) {
    const auto& tok = tokens[i];
    if (tok.kind != TokenKind::identifier) continue;
    const auto& before = tokens[i - 1];
    const auto& after = tokens[i + 1];
    if (before.kind == TokenKind::delimiter && before.text == "." && after.kind == TokenKind::delimiter &&
        after.text == "(") {
      names.insert(tok.text);
    }
  }
  return names;
}

}  // namespace planmine
