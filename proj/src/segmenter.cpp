#include "planmine/segmenter.hpp"

#include <algorithm>

#include "planmine/text.hpp"

namespace planmine {

namespace {

struct Boundary {
  std::size_t header_line;
  std::size_t code_line;
};

std::string join_lines(const std::vector<std::string_view>& lines, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) out.append(lines[i]);
  return out;
}

}  // namespace

std::string goal_from_comments(std::string_view comment_lines, std::string_view marker) {
  std::string goal;
  for (auto line : text::split_lines_keep(comment_lines)) {
    line = text::trim(line);
    if (!marker.empty()) {
      while (line.starts_with(marker)) line.remove_prefix(marker.size());
    }
    line = text::trim(line);
    if (line.empty()) continue;
    if (!goal.empty()) goal.push_back(' ');
    goal.append(line);
  }
  return goal;
}

SegmentedProgram segment(std::string_view annotated_source, const LexerOptions& options) {
  const auto lines = text::split_lines_keep(annotated_source);
  const auto kinds = classify_lines(annotated_source, tokenize(annotated_source, options));

  std::vector<Boundary> boundaries;
  std::size_t i = 0;
  while (i < lines.size()) {
    if (kinds[i] != LineKind::comment_only) {
      ++i;
      continue;
    }
    const std::size_t run_start = i;
    while (i < lines.size() && kinds[i] == LineKind::comment_only) ++i;
    std::size_t next = i;
    while (next < lines.size() && kinds[next] == LineKind::blank) ++next;
    if (next < lines.size() && kinds[next] == LineKind::code) {
      boundaries.push_back({run_start, next});
      i = next;
    }
  }

  SegmentedProgram program;
  const std::size_t first_header = boundaries.empty() ? lines.size() : boundaries.front().header_line;
  if (first_header > 0) {
    program.preamble = Segment{"", "", join_lines(lines, 0, first_header)};
  }
  for (std::size_t b = 0; b < boundaries.size(); ++b) {
    const std::size_t code_end = b + 1 < boundaries.size() ? boundaries[b + 1].header_line : lines.size();
    Segment seg;
    seg.header = join_lines(lines, boundaries[b].header_line, boundaries[b].code_line);
    seg.goal = goal_from_comments(seg.header, options.comment_marker);
    seg.code = join_lines(lines, boundaries[b].code_line, code_end);
    program.snippets.push_back(std::move(seg));
  }
  return program;
}

std::string render(const SegmentedProgram& program) {
  std::string out;
  if (program.preamble) out.append(program.preamble->code);
  for (const auto& seg : program.snippets) {
    out.append(seg.header);
    out.append(seg.code);
  }
  return out;
}

std::vector<CodeSpan> snippet_code_ranges(const SegmentedProgram& program) {
  std::vector<CodeSpan> ranges;
  std::size_t offset = program.preamble ? program.preamble->code.size() : 0;
  for (const auto& seg : program.snippets) {
    offset += seg.header.size();
    ranges.push_back(CodeSpan{offset, offset + seg.code.size(), ""});
    offset += seg.code.size();
  }
  return ranges;
}

LocalizedFragments localize_fragments(std::string_view code, const std::vector<std::string>& fragments) {
  LocalizedFragments result;
  std::vector<CodeSpan> raw;
  for (const auto& fragment : fragments) {
    bool placed = false;
    if (!fragment.empty()) {
      for (std::size_t pos = code.find(fragment); pos != std::string_view::npos; pos = code.find(fragment, pos + 1)) {
        const std::size_t end = pos + fragment.size();
        if (text::is_utf8_boundary(code, pos) && text::is_utf8_boundary(code, end)) {
          raw.push_back(CodeSpan{pos, end, ""});
          placed = true;
          break;
        }
      }
    }
    if (!placed) result.discarded.push_back(fragment);
  }

  std::sort(raw.begin(), raw.end(), [](const CodeSpan& a, const CodeSpan& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
  for (const auto& span : raw) {
    if (!result.spans.empty() && span.start < result.spans.back().end) {
      result.spans.back().end = std::max(result.spans.back().end, span.end);
    } else {
      result.spans.push_back(span);
    }
  }
  return result;
}

}  // namespace planmine
