#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "planmine/tokenizer.hpp"
#include "planmine/types.hpp"

namespace planmine {

/// One subgoal-delimited chunk. `header` holds the comment lines (plus any
/// blank lines between them and the code) exactly as written, so rendering
/// is lossless; `goal` is the readable form of the same comments.
struct Segment {
  std::string goal;
  std::string header;
  std::string code;

  bool operator==(const Segment&) const = default;
};

struct SegmentedProgram {
  std::optional<Segment> preamble;  // empty goal and header
  std::vector<Segment> snippets;

  bool operator==(const SegmentedProgram&) const = default;
};

/// Splits annotated source at subgoal comments. A boundary is a maximal run
/// of comment-only lines whose next non-blank line is code; the run (and the
/// blank lines after it) becomes the header and the lines up to the next
/// boundary become the code. Text before the first boundary is the preamble.
/// Line classes come from the tokenizer, so '#' inside strings never splits.
[[nodiscard]] SegmentedProgram segment(std::string_view annotated_source,
                                       const LexerOptions& options = {});

/// Inverse of segment(): render(segment(s)) == s for every s.
[[nodiscard]] std::string render(const SegmentedProgram& program);

/// Byte range of each snippet's code inside the rendered program, in
/// snippet order (preamble excluded).
[[nodiscard]] std::vector<CodeSpan> snippet_code_ranges(const SegmentedProgram& program);

/// Comment text with markers and surrounding whitespace removed, lines
/// joined with single spaces.
[[nodiscard]] std::string goal_from_comments(std::string_view comment_lines,
                                             std::string_view marker = "#");

struct LocalizedFragments {
  std::vector<CodeSpan> spans;         // sorted, merged, non-overlapping
  std::vector<std::string> discarded;  // fragments with no occurrence
};

/// First exact occurrence of each fragment (on UTF-8 boundaries) becomes a
/// span; overlapping spans are merged and the result is sorted by start.
[[nodiscard]] LocalizedFragments localize_fragments(std::string_view code,
                                                    const std::vector<std::string>& fragments);

}  // namespace planmine
