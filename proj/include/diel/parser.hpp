#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "diel/ast.hpp"

namespace diel {

/// First syntax error in a DIEL source.
class ParseError : public std::runtime_error {
   public:
    ParseError(std::string source_name, ast::Span span, std::vector<std::string> expected,
               std::string found);

    std::string source_name;
    ast::Span span;
    /// What the grammar would have accepted at this point, e.g. {"SELECT"}.
    std::vector<std::string> expected;
    /// Description of the offending token, e.g. `'SELEC'`.
    std::string found;

    [[nodiscard]] auto line() const -> std::size_t { return span.line; }
    [[nodiscard]] auto column() const -> std::size_t { return span.column; }
};

/// Parses a complete DIEL program. Keywords are case-insensitive;
/// identifiers keep their spelling. Throws ParseError on the first error.
auto parse_program(std::string_view text, std::string source_name = "<input>") -> ast::Program;

/// Parses a single SELECT query (no trailing ';' required).
auto parse_select(std::string_view text, std::string source_name = "<input>")
    -> ast::SelectQuery;

/// `name:line:col: error: expected X, found Y`, then the offending line and
/// a caret under the error column.
auto format_error(const ParseError& err, std::string_view text) -> std::string;

/// Same layout for any diagnostic anchored at a span.
auto format_diagnostic(std::string_view source_name, const ast::Span& span,
                       std::string_view message, std::string_view text) -> std::string;

}  // namespace diel
