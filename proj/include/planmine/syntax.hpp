#pragma once

#include <string_view>

namespace planmine {

/// True iff `source` parses as a Python module. Parse only: the text is
/// turned into an AST by the embedded CPython parser and never compiled to
/// bytecode or executed. Thread-safe.
[[nodiscard]] bool validate_syntax(std::string_view source);

}  // namespace planmine
