#pragma once

#include <string>

#include "diel/ast.hpp"

namespace diel {

/// Renders an AST back to DIEL source. Parenthesization is minimal but
/// always sufficient: re-parsing the output yields a structurally equal AST.
auto to_source(const ast::Program& program) -> std::string;
auto to_source(const ast::Statement& statement) -> std::string;
auto to_source(const ast::SelectQuery& query) -> std::string;
auto to_source(const ast::Expr& expr) -> std::string;

/// Identifier as it must be written to survive re-parsing (quoted when it
/// collides with a keyword or contains unusual characters).
auto quote_identifier(const std::string& name) -> std::string;

}  // namespace diel
