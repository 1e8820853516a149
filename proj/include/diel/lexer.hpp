#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "diel/ast.hpp"

namespace diel {

enum class TokenKind {
    Identifier,
    QuotedIdentifier,
    Keyword,
    Integer,
    Real,
    String,
    Symbol,
    End,
    Error,
};

struct Token {
    TokenKind kind = TokenKind::End;
    /// Keywords are upper-cased; string literals are unescaped; everything
    /// else is the raw lexeme.
    std::string text;
    ast::Span span;
};

auto is_keyword(std::string_view word) -> bool;

/// Splits DIEL source into tokens. `--` starts a comment running to end of
/// line. An unterminated string or stray character yields a single Error
/// token followed by End.
auto tokenize(std::string_view source) -> std::vector<Token>;

/// Human-readable form of a token for diagnostics (`'SELEC'`, `end of input`).
auto describe(const Token& token) -> std::string;

}  // namespace diel
