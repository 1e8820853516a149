#include "diel/parser.hpp"

#include <charconv>
#include <sstream>

#include "diel/lexer.hpp"
#include "util.hpp"

namespace diel {

namespace {

auto join_expected(const std::vector<std::string>& expected) -> std::string {
    std::string out;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i > 0) out += (i + 1 == expected.size()) ? " or " : ", ";
        out += expected[i];
    }
    return out;
}

auto build_message(const std::string& source_name, const ast::Span& span,
                   const std::vector<std::string>& expected, const std::string& found)
    -> std::string {
    std::ostringstream os;
    os << source_name << ':' << span.line << ':' << span.column << ": error: ";
    if (!expected.empty()) {
        os << "expected " << join_expected(expected) << ", found " << found;
    } else {
        os << found;
    }
    return os.str();
}

using namespace ast;

class Parser {
   public:
    Parser(std::string_view text, std::string source_name)
        : tokens_(tokenize(text)), source_name_(std::move(source_name)) {}

    auto program() -> Program {
        Program prog;
        prog.source_name = source_name_;
        while (!at_end()) {
            prog.statements.push_back(statement());
        }
        return prog;
    }

    auto standalone_select() -> SelectQuery {
        auto q = select();
        accept_symbol(";");
        if (!at_end()) fail({"end of input"});
        return q;
    }

   private:
    std::vector<Token> tokens_;
    std::string source_name_;
    std::size_t pos_ = 0;

    // --- token helpers -------------------------------------------------

    [[nodiscard]] auto peek(std::size_t ahead = 0) const -> const Token& {
        const std::size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
        return tokens_[i];
    }
    [[nodiscard]] auto at_end() const -> bool { return peek().kind == TokenKind::End; }
    auto advance() -> const Token& {
        const Token& t = tokens_[pos_];
        if (pos_ + 1 < tokens_.size()) ++pos_;
        return t;
    }
    [[nodiscard]] auto previous() const -> const Token& { return tokens_[pos_ == 0 ? 0 : pos_ - 1]; }

    [[noreturn]] void fail(std::vector<std::string> expected) const {
        const Token& t = peek();
        if (t.kind == TokenKind::Error) {
            throw ParseError(source_name_, t.span, {}, describe(t));
        }
        throw ParseError(source_name_, t.span, std::move(expected), describe(t));
    }

    [[noreturn]] void fail_at(const Span& span, std::string message) const {
        throw ParseError(source_name_, span, {}, std::move(message));
    }

    [[nodiscard]] auto check_keyword(const char* kw) const -> bool {
        return peek().kind == TokenKind::Keyword && peek().text == kw;
    }
    [[nodiscard]] auto check_symbol(const char* sym) const -> bool {
        return peek().kind == TokenKind::Symbol && peek().text == sym;
    }
    auto accept_keyword(const char* kw) -> bool {
        if (!check_keyword(kw)) return false;
        advance();
        return true;
    }
    auto accept_symbol(const char* sym) -> bool {
        if (!check_symbol(sym)) return false;
        advance();
        return true;
    }
    void expect_keyword(const char* kw) {
        if (!accept_keyword(kw)) fail({kw});
    }
    void expect_symbol(const char* sym) {
        if (!accept_symbol(sym)) fail({std::string("'") + sym + "'"});
    }

    [[nodiscard]] auto check_identifier() const -> bool {
        return peek().kind == TokenKind::Identifier || peek().kind == TokenKind::QuotedIdentifier;
    }
    auto identifier(const char* what = "identifier") -> std::string {
        if (!check_identifier()) fail({what});
        return advance().text;
    }

    /// Span from `start` through the last consumed token.
    [[nodiscard]] auto span_from(const Span& start) const -> Span {
        const Span& last = previous().span;
        Span s = start;
        const std::size_t end = last.offset + last.length;
        s.length = end > start.offset ? end - start.offset : 0;
        return s;
    }

    // --- statements ----------------------------------------------------

    auto statement() -> Statement {
        const Span start = peek().span;
        if (!accept_keyword("CREATE")) fail({"CREATE"});
        if (accept_keyword("INPUT")) {
            InputDef def;
            def.name = identifier("input name");
            def.columns = column_list();
            expect_symbol(";");
            def.span = span_from(start);
            return def;
        }
        if (accept_keyword("TABLE")) {
            HistoryTableDef def;
            def.name = identifier("table name");
            def.columns = column_list();
            expect_symbol(";");
            def.span = span_from(start);
            return def;
        }
        if (accept_keyword("VIEW")) {
            ViewDef def;
            view_body(def.name, def.query, def.checks);
            def.span = span_from(start);
            return def;
        }
        if (accept_keyword("OUTPUT")) {
            OutputDef def;
            view_body(def.name, def.query, def.checks);
            def.span = span_from(start);
            return def;
        }
        if (accept_keyword("PROGRAM")) {
            return program_def(start);
        }
        fail({"INPUT", "TABLE", "VIEW", "OUTPUT", "PROGRAM"});
    }

    void view_body(std::string& name, SelectQuery& query, std::vector<Expr>& checks) {
        name = identifier("view name");
        expect_keyword("AS");
        query = select();
        while (accept_keyword("CHECK")) {
            expect_symbol("(");
            checks.push_back(expr());
            expect_symbol(")");
        }
        if (!accept_symbol(";")) fail({"CHECK", "';'"});
    }

    auto column_list() -> std::vector<ColumnDef> {
        std::vector<ColumnDef> cols;
        expect_symbol("(");
        if (accept_symbol(")")) return cols;
        do {
            cols.push_back(column_def());
        } while (accept_symbol(","));
        expect_symbol(")");
        return cols;
    }

    auto column_def() -> ColumnDef {
        ColumnDef col;
        const Span start = peek().span;
        col.name = identifier("column name");
        const Token& type_tok = peek();
        if (type_tok.kind != TokenKind::Identifier) fail({"column type"});
        const auto type = parse_type_name(type_tok.text);
        if (!type) fail({"column type"});
        advance();
        col.type = *type;
        while (true) {
            const Span cstart = peek().span;
            if (accept_keyword("NOT")) {
                expect_keyword("NULL");
                col.constraints.push_back({span_from(cstart), ConstraintKind::NotNull, {}});
            } else if (accept_keyword("UNIQUE")) {
                col.constraints.push_back({span_from(cstart), ConstraintKind::Unique, {}});
            } else if (accept_keyword("CHECK")) {
                expect_symbol("(");
                Expr e = expr();
                expect_symbol(")");
                col.constraints.push_back({span_from(cstart), ConstraintKind::Check, std::move(e)});
            } else {
                break;
            }
        }
        col.span = span_from(start);
        return col;
    }

    auto program_def(const Span& start) -> StateProgramDef {
        StateProgramDef def;
        if (accept_keyword("AFTER")) {
            std::vector<std::string> names;
            if (accept_symbol("(")) {
                do {
                    names.push_back(identifier("input name"));
                } while (accept_symbol(","));
                expect_symbol(")");
            } else {
                names.push_back(identifier("input name"));
            }
            def.after = std::move(names);
        }
        expect_keyword("BEGIN");
        while (!check_keyword("END")) {
            if (!check_keyword("INSERT")) fail({"INSERT", "END"});
            def.body.push_back(insert());
            expect_symbol(";");
        }
        expect_keyword("END");
        expect_symbol(";");
        def.span = span_from(start);
        return def;
    }

    auto insert() -> InsertStatement {
        InsertStatement ins;
        const Span start = peek().span;
        expect_keyword("INSERT");
        expect_keyword("INTO");
        ins.table = identifier("table name");
        if (accept_symbol("(")) {
            do {
                ins.columns.push_back(identifier("column name"));
            } while (accept_symbol(","));
            expect_symbol(")");
        }
        if (accept_keyword("VALUES")) {
            expect_symbol("(");
            std::vector<Expr> values;
            do {
                values.push_back(expr());
            } while (accept_symbol(","));
            expect_symbol(")");
            ins.values = std::move(values);
        } else if (check_keyword("SELECT")) {
            ins.select = select();
        } else {
            fail({"VALUES", "SELECT"});
        }
        ins.span = span_from(start);
        return ins;
    }

    // --- queries -------------------------------------------------------

    auto select() -> SelectQuery {
        SelectQuery q;
        const Span start = peek().span;
        expect_keyword("SELECT");
        q.distinct = accept_keyword("DISTINCT");
        do {
            q.projection.push_back(select_item());
        } while (accept_symbol(","));

        if (accept_keyword("FROM")) {
            q.from.push_back({JoinKind::First, table_ref(), std::nullopt});
            while (true) {
                if (accept_symbol(",")) {
                    q.from.push_back({JoinKind::Comma, table_ref(), std::nullopt});
                } else if (check_keyword("JOIN") || check_keyword("INNER")) {
                    if (accept_keyword("INNER")) {
                        if (!check_keyword("JOIN")) fail({"JOIN"});
                    }
                    expect_keyword("JOIN");
                    FromItem item{JoinKind::Inner, table_ref(), std::nullopt};
                    expect_keyword("ON");
                    item.on = expr();
                    q.from.push_back(std::move(item));
                } else if (accept_keyword("CROSS")) {
                    expect_keyword("JOIN");
                    q.from.push_back({JoinKind::Cross, table_ref(), std::nullopt});
                } else {
                    break;
                }
            }
        }
        if (accept_keyword("WHERE")) q.where = expr();
        if (check_keyword("MATCH")) {
            const Span mstart = peek().span;
            advance();
            MatchClause m;
            m.column = identifier("column name");
            expect_keyword("ON");
            if (peek().kind != TokenKind::String) fail({"pattern string"});
            m.pattern = advance().text;
            m.span = span_from(mstart);
            q.match = std::move(m);
        }
        if (accept_keyword("GROUP")) {
            expect_keyword("BY");
            do {
                q.group_by.push_back(expr());
            } while (accept_symbol(","));
        }
        if (accept_keyword("ORDER")) {
            expect_keyword("BY");
            do {
                OrderItem item{expr(), false};
                if (accept_keyword("DESC")) {
                    item.descending = true;
                } else {
                    accept_keyword("ASC");
                }
                q.order_by.push_back(std::move(item));
            } while (accept_symbol(","));
        }
        if (accept_keyword("LIMIT")) {
            if (peek().kind != TokenKind::Integer) fail({"non-negative integer"});
            q.limit = integer_value(advance());
        }
        q.span = span_from(start);
        return q;
    }

    auto select_item() -> SelectItem {
        SelectItem item;
        const Span start = peek().span;
        if (accept_symbol("*")) {
            item.star = true;
            item.span = span_from(start);
            return item;
        }
        if (check_identifier() && peek(1).kind == TokenKind::Symbol && peek(1).text == "." &&
            peek(2).kind == TokenKind::Symbol && peek(2).text == "*") {
            item.star = true;
            item.star_table = advance().text;
            advance();
            advance();
            item.span = span_from(start);
            return item;
        }
        item.expr = expr();
        if (accept_keyword("AS")) {
            item.alias = identifier("alias");
        } else if (check_identifier()) {
            item.alias = advance().text;
        }
        item.span = span_from(start);
        return item;
    }

    auto table_ref() -> TableRef {
        TableRef ref;
        const Span start = peek().span;
        ref.latest = accept_keyword("LATEST");
        ref.name = identifier("table name");
        if (accept_keyword("AS")) {
            ref.alias = identifier("alias");
        } else if (check_identifier()) {
            ref.alias = advance().text;
        }
        ref.span = span_from(start);
        return ref;
    }

    // --- expressions ---------------------------------------------------

    auto expr() -> Expr { return or_expr(); }

    auto or_expr() -> Expr {
        Expr lhs = and_expr();
        while (check_keyword("OR")) {
            advance();
            Expr rhs = and_expr();
            const Span s = span_from(lhs.span);
            lhs = Expr::binary(BinaryOp::Or, std::move(lhs), std::move(rhs), s);
        }
        return lhs;
    }

    auto and_expr() -> Expr {
        Expr lhs = not_expr();
        while (check_keyword("AND")) {
            advance();
            Expr rhs = not_expr();
            const Span s = span_from(lhs.span);
            lhs = Expr::binary(BinaryOp::And, std::move(lhs), std::move(rhs), s);
        }
        return lhs;
    }

    auto not_expr() -> Expr {
        const Span start = peek().span;
        if (check_keyword("NOT")) {
            advance();
            if (check_keyword("EXISTS")) {
                Expr e = exists();
                e.negated = true;
                e.span = span_from(start);
                return e;
            }
            Expr operand = not_expr();
            return Expr::unary(UnaryOp::Not, std::move(operand), span_from(start));
        }
        return comparison();
    }

    auto comparison() -> Expr {
        Expr lhs = additive();
        while (true) {
            const Token& t = peek();
            if (t.kind == TokenKind::Symbol) {
                std::optional<BinaryOp> op;
                if (t.text == "=") op = BinaryOp::Eq;
                if (t.text == "<>" || t.text == "!=") op = BinaryOp::Ne;
                if (t.text == "<") op = BinaryOp::Lt;
                if (t.text == "<=") op = BinaryOp::Le;
                if (t.text == ">") op = BinaryOp::Gt;
                if (t.text == ">=") op = BinaryOp::Ge;
                if (!op) return lhs;
                advance();
                Expr rhs = additive();
                const Span s = span_from(lhs.span);
                lhs = Expr::binary(*op, std::move(lhs), std::move(rhs), s);
                continue;
            }
            if (check_keyword("IS")) {
                advance();
                Expr e;
                e.kind = ExprKind::IsNull;
                e.negated = accept_keyword("NOT");
                expect_keyword("NULL");
                e.args.push_back(std::move(lhs));
                e.span = span_from(e.args[0].span);
                lhs = std::move(e);
                continue;
            }
            const bool not_in = check_keyword("NOT") && peek(1).kind == TokenKind::Keyword &&
                                peek(1).text == "IN";
            if (check_keyword("IN") || not_in) {
                if (not_in) advance();
                advance();
                lhs = in_tail(std::move(lhs), not_in);
                continue;
            }
            return lhs;
        }
    }

    auto in_tail(Expr lhs, bool negated) -> Expr {
        Expr e;
        e.negated = negated;
        expect_symbol("(");
        if (check_keyword("SELECT")) {
            e.kind = ExprKind::InSubquery;
            e.query = std::make_shared<const SelectQuery>(select());
            e.args.push_back(std::move(lhs));
        } else {
            e.kind = ExprKind::InList;
            e.args.push_back(std::move(lhs));
            do {
                e.args.push_back(expr());
            } while (accept_symbol(","));
        }
        expect_symbol(")");
        e.span = span_from(e.args[0].span);
        return e;
    }

    auto additive() -> Expr {
        Expr lhs = multiplicative();
        while (check_symbol("+") || check_symbol("-")) {
            const BinaryOp op = advance().text == "+" ? BinaryOp::Add : BinaryOp::Sub;
            Expr rhs = multiplicative();
            const Span s = span_from(lhs.span);
            lhs = Expr::binary(op, std::move(lhs), std::move(rhs), s);
        }
        return lhs;
    }

    auto multiplicative() -> Expr {
        Expr lhs = unary();
        while (check_symbol("*") || check_symbol("/") || check_symbol("%")) {
            const std::string& sym = advance().text;
            const BinaryOp op = sym == "*" ? BinaryOp::Mul : sym == "/" ? BinaryOp::Div : BinaryOp::Mod;
            Expr rhs = unary();
            const Span s = span_from(lhs.span);
            lhs = Expr::binary(op, std::move(lhs), std::move(rhs), s);
        }
        return lhs;
    }

    auto unary() -> Expr {
        const Span start = peek().span;
        if (accept_symbol("-")) {
            Expr operand = unary();
            return Expr::unary(UnaryOp::Negate, std::move(operand), span_from(start));
        }
        return primary();
    }

    auto exists() -> Expr {
        const Span start = peek().span;
        expect_keyword("EXISTS");
        expect_symbol("(");
        Expr e;
        e.kind = ExprKind::Exists;
        e.query = std::make_shared<const SelectQuery>(select());
        expect_symbol(")");
        e.span = span_from(start);
        return e;
    }

    auto integer_value(const Token& t) const -> std::int64_t {
        std::int64_t v = 0;
        const auto* first = t.text.data();
        const auto* last = first + t.text.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last) fail_at(t.span, "integer literal out of range");
        return v;
    }

    auto primary() -> Expr {
        const Token& t = peek();
        const Span start = t.span;
        switch (t.kind) {
            case TokenKind::Integer: {
                advance();
                return Expr::literal(Value(integer_value(t)), span_from(start));
            }
            case TokenKind::Real: {
                const std::string text = advance().text;
                return Expr::literal(Value(std::stod(text)), span_from(start));
            }
            case TokenKind::String: {
                std::string text = advance().text;
                return Expr::literal(Value(std::move(text)), span_from(start));
            }
            case TokenKind::Keyword:
                if (t.text == "NULL") {
                    advance();
                    return Expr::literal(Value(), span_from(start));
                }
                if (t.text == "TRUE" || t.text == "FALSE") {
                    const bool b = advance().text == "TRUE";
                    return Expr::literal(Value(b), span_from(start));
                }
                if (t.text == "EXISTS") return exists();
                break;
            case TokenKind::Identifier:
            case TokenKind::QuotedIdentifier: {
                std::string name = advance().text;
                if (t.kind == TokenKind::Identifier && check_symbol("(")) {
                    return call(std::move(name), start);
                }
                if (accept_symbol(".")) {
                    std::string col = identifier("column name");
                    return Expr::column(std::move(name), std::move(col), span_from(start));
                }
                return Expr::column("", std::move(name), span_from(start));
            }
            case TokenKind::Symbol:
                if (t.text == "(") {
                    advance();
                    if (check_keyword("SELECT")) {
                        SelectQuery q = select();
                        expect_symbol(")");
                        return Expr::subquery(std::move(q), span_from(start));
                    }
                    Expr inner = expr();
                    expect_symbol(")");
                    return inner;
                }
                break;
            default:
                break;
        }
        fail({"expression"});
    }

    auto call(std::string name, const Span& start) -> Expr {
        expect_symbol("(");
        Expr e = Expr::call(std::move(name), {});
        if (accept_symbol("*")) {
            e.star = true;
        } else if (!check_symbol(")")) {
            do {
                e.args.push_back(expr());
            } while (accept_symbol(","));
        }
        expect_symbol(")");
        e.span = span_from(start);
        return e;
    }
};

}  // namespace

ParseError::ParseError(std::string source_name_in, ast::Span span_in,
                       std::vector<std::string> expected_in, std::string found_in)
    : std::runtime_error(build_message(source_name_in, span_in, expected_in, found_in)),
      source_name(std::move(source_name_in)),
      span(span_in),
      expected(std::move(expected_in)),
      found(std::move(found_in)) {}

auto parse_program(std::string_view text, std::string source_name) -> ast::Program {
    return Parser(text, std::move(source_name)).program();
}

auto parse_select(std::string_view text, std::string source_name) -> ast::SelectQuery {
    return Parser(text, std::move(source_name)).standalone_select();
}

auto format_diagnostic(std::string_view source_name, const ast::Span& span,
                       std::string_view message, std::string_view text) -> std::string {
    std::ostringstream os;
    os << source_name << ':' << span.line << ':' << span.column << ": error: " << message << '\n';
    // Locate the line by offset so spans stay exact even for CRLF input.
    std::size_t begin = std::min(span.offset, text.size());
    while (begin > 0 && text[begin - 1] != '\n') --begin;
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view src_line = text.substr(begin, end - begin);
    if (!src_line.empty() && src_line.back() == '\r') src_line.remove_suffix(1);
    os << src_line << '\n';
    std::string caret;
    for (std::size_t i = begin; i < std::min(span.offset, end); ++i) {
        const auto c = static_cast<unsigned char>(text[i]);
        if ((c & 0xC0) == 0x80) continue;
        caret += (c == '\t') ? '\t' : ' ';
    }
    os << caret << '^';
    return os.str();
}

auto format_error(const ParseError& err, std::string_view text) -> std::string {
    std::string message;
    if (!err.expected.empty()) {
        message = "expected " + join_expected(err.expected) + ", found " + err.found;
    } else {
        message = err.found;
    }
    return format_diagnostic(err.source_name, err.span, message, text);
}

}  // namespace diel
