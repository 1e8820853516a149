#include "diel/lexer.hpp"

#include <array>
#include <cctype>

#include "util.hpp"

namespace diel {

namespace {

constexpr std::array kKeywords = {
    "AFTER",  "AND",    "AS",     "ASC",    "BEGIN",   "BY",     "CHECK",  "CREATE",
    "CROSS",  "DESC",   "DISTINCT", "END",  "EXISTS",  "FALSE",  "FROM",   "GROUP",
    "IN",     "INNER",  "INPUT",  "INSERT", "INTO",    "IS",     "JOIN",   "LATEST",
    "LIMIT",  "MATCH",  "NOT",    "NULL",   "ON",      "OR",     "ORDER",  "OUTPUT",
    "PROGRAM", "SELECT", "TABLE", "TRUE",   "UNIQUE",  "VALUES", "VIEW",   "WHERE",
};

auto is_ident_start(char c) -> bool {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
           static_cast<unsigned char>(c) >= 0x80;
}

auto is_ident_char(char c) -> bool {
    return is_ident_start(c) || std::isdigit(static_cast<unsigned char>(c));
}

auto to_upper(std::string_view s) -> std::string {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

class Lexer {
   public:
    explicit Lexer(std::string_view src) : src_(src) {}

    auto run() -> std::vector<Token> {
        std::vector<Token> tokens;
        while (true) {
            skip_trivia();
            Token tok = next();
            const bool stop = tok.kind == TokenKind::End || tok.kind == TokenKind::Error;
            tokens.push_back(std::move(tok));
            if (stop) break;
        }
        if (tokens.back().kind == TokenKind::Error) {
            Token end;
            end.kind = TokenKind::End;
            end.span = {pos_, 0, line_, column_};
            tokens.push_back(end);
        }
        return tokens;
    }

   private:
    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t column_ = 1;

    [[nodiscard]] auto peek(std::size_t ahead = 0) const -> char {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    void advance() {
        const char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
            ++column_;
        }
    }

    void skip_trivia() {
        while (pos_ < src_.size()) {
            const char c = peek();
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '-' && peek(1) == '-') {
                while (pos_ < src_.size() && peek() != '\n') advance();
            } else {
                break;
            }
        }
    }

    auto make(TokenKind kind, std::string text, std::size_t start, std::size_t line,
              std::size_t col) const -> Token {
        return Token{kind, std::move(text), {start, pos_ - start, line, col}};
    }

    auto next() -> Token {
        const std::size_t start = pos_;
        const std::size_t line = line_;
        const std::size_t col = column_;
        if (pos_ >= src_.size()) return make(TokenKind::End, "", start, line, col);

        const char c = peek();
        if (is_ident_start(c)) {
            while (pos_ < src_.size() && is_ident_char(peek())) advance();
            const auto word = src_.substr(start, pos_ - start);
            if (is_keyword(word)) return make(TokenKind::Keyword, to_upper(word), start, line, col);
            return make(TokenKind::Identifier, std::string(word), start, line, col);
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
            return number(start, line, col);
        }
        if (c == '\'') return string_literal(start, line, col);
        if (c == '"') return quoted_identifier(start, line, col);

        static constexpr std::array two = {"<=", ">=", "<>", "!="};
        for (const char* sym : two) {
            if (c == sym[0] && peek(1) == sym[1]) {
                advance();
                advance();
                return make(TokenKind::Symbol, sym, start, line, col);
            }
        }
        if (std::string_view("(),;.*+-/%=<>").find(c) != std::string_view::npos) {
            advance();
            return make(TokenKind::Symbol, std::string(1, c), start, line, col);
        }
        advance();
        return make(TokenKind::Error, std::string(src_.substr(start, pos_ - start)), start, line,
                    col);
    }

    auto number(std::size_t start, std::size_t line, std::size_t col) -> Token {
        bool real = false;
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
        if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
            real = true;
            advance();
            while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
        } else if (peek() == '.' && !is_ident_start(peek(1))) {
            // "1." is a real
            real = true;
            advance();
        }
        if (peek() == 'e' || peek() == 'E') {
            const char sign = peek(1);
            const std::size_t digits_at = (sign == '+' || sign == '-') ? 2 : 1;
            if (std::isdigit(static_cast<unsigned char>(peek(digits_at)))) {
                real = true;
                for (std::size_t i = 0; i < digits_at; ++i) advance();
                while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
            }
        }
        return make(real ? TokenKind::Real : TokenKind::Integer,
                    std::string(src_.substr(start, pos_ - start)), start, line, col);
    }

    auto string_literal(std::size_t start, std::size_t line, std::size_t col) -> Token {
        advance();
        std::string text;
        while (true) {
            if (pos_ >= src_.size()) {
                return make(TokenKind::Error, "unterminated string", start, line, col);
            }
            const char c = peek();
            advance();
            if (c == '\'') {
                if (peek() == '\'') {
                    text += '\'';
                    advance();
                    continue;
                }
                break;
            }
            text += c;
        }
        return make(TokenKind::String, std::move(text), start, line, col);
    }

    auto quoted_identifier(std::size_t start, std::size_t line, std::size_t col) -> Token {
        advance();
        std::string text;
        while (true) {
            if (pos_ >= src_.size()) {
                return make(TokenKind::Error, "unterminated identifier", start, line, col);
            }
            const char c = peek();
            advance();
            if (c == '"') {
                if (peek() == '"') {
                    text += '"';
                    advance();
                    continue;
                }
                break;
            }
            text += c;
        }
        return make(TokenKind::QuotedIdentifier, std::move(text), start, line, col);
    }
};

}  // namespace

auto is_keyword(std::string_view word) -> bool {
    for (const char* kw : kKeywords) {
        if (iequals(word, kw)) return true;
    }
    return false;
}

auto tokenize(std::string_view source) -> std::vector<Token> { return Lexer(source).run(); }

auto describe(const Token& token) -> std::string {
    switch (token.kind) {
        case TokenKind::End:
            return "end of input";
        case TokenKind::String:
            return "string " + Value(token.text).to_sql();
        case TokenKind::Error:
            return token.text == "unterminated string" || token.text == "unterminated identifier"
                       ? token.text
                       : "invalid character '" + token.text + "'";
        default:
            return "'" + token.text + "'";
    }
}

}  // namespace diel
