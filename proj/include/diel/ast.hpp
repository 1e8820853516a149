#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "diel/value.hpp"

namespace diel::ast {

/// Location of a node in the source text. `line`/`column` are 1-based;
/// columns count UTF-8 code points. `offset`/`length` are in bytes.
struct Span {
    std::size_t offset = 0;
    std::size_t length = 0;
    std::size_t line = 1;
    std::size_t column = 1;
};

struct SelectQuery;

enum class UnaryOp { Negate, Not };
enum class BinaryOp { Add, Sub, Mul, Div, Mod, Eq, Ne, Lt, Le, Gt, Ge, And, Or };

auto op_text(UnaryOp op) -> const char*;
auto op_text(BinaryOp op) -> const char*;
auto is_comparison(BinaryOp op) -> bool;
auto is_arithmetic(BinaryOp op) -> bool;

enum class ExprKind {
    Literal,
    Column,      // [table.]name
    Unary,       // op args[0]
    Binary,      // args[0] op args[1]
    IsNull,      // args[0] IS [NOT] NULL
    Call,        // name(args...), `star` for COUNT(*); COALESCE lives here too
    InList,      // args[0] [NOT] IN (args[1..])
    InSubquery,  // args[0] [NOT] IN (query)
    Exists,      // [NOT] EXISTS (query)
    Subquery,    // (query) used as a scalar
};

/// Expression node. One shape covers every kind; unused fields stay empty.
struct Expr {
    ExprKind kind = ExprKind::Literal;
    Span span;
    Value value;          // Literal
    std::string table;    // Column qualifier, may be empty
    std::string name;     // Column name or function name
    UnaryOp unary_op = UnaryOp::Not;
    BinaryOp binary_op = BinaryOp::Eq;
    bool negated = false;  // NOT IN, NOT EXISTS, IS NOT NULL
    bool star = false;     // COUNT(*)
    std::vector<Expr> args;
    std::shared_ptr<const SelectQuery> query;

    static auto literal(Value v, Span span = {}) -> Expr;
    static auto column(std::string table, std::string name, Span span = {}) -> Expr;
    static auto unary(UnaryOp op, Expr operand, Span span = {}) -> Expr;
    static auto binary(BinaryOp op, Expr lhs, Expr rhs, Span span = {}) -> Expr;
    static auto call(std::string name, std::vector<Expr> args, Span span = {}) -> Expr;
    static auto subquery(SelectQuery q, Span span = {}) -> Expr;
};

struct SelectItem {
    Span span;
    /// `*` or `alias.*` when set; `expr` is then unused.
    bool star = false;
    std::string star_table;
    Expr expr;
    std::string alias;
};

struct TableRef {
    Span span;
    std::string name;
    std::string alias;
    bool latest = false;

    /// Name other parts of the query use to qualify this ref's columns.
    [[nodiscard]] auto effective_name() const -> const std::string& {
        return alias.empty() ? name : alias;
    }
};

enum class JoinKind { First, Comma, Inner, Cross };

struct FromItem {
    JoinKind join = JoinKind::First;
    TableRef ref;
    std::optional<Expr> on;
};

struct OrderItem {
    Expr expr;
    bool descending = false;
};

struct MatchClause {
    Span span;
    std::string column;
    std::string pattern;
};

struct SelectQuery {
    Span span;
    bool distinct = false;
    std::vector<SelectItem> projection;
    std::vector<FromItem> from;
    std::optional<Expr> where;
    std::optional<MatchClause> match;
    std::vector<Expr> group_by;
    std::vector<OrderItem> order_by;
    std::optional<std::int64_t> limit;
};

enum class ConstraintKind { NotNull, Unique, Check };

struct ColumnConstraint {
    Span span;
    ConstraintKind kind = ConstraintKind::NotNull;
    std::optional<Expr> check;
};

struct ColumnDef {
    Span span;
    std::string name;
    ValueType type = ValueType::Integer;
    std::vector<ColumnConstraint> constraints;
};

struct InputDef {
    Span span;
    std::string name;
    std::vector<ColumnDef> columns;
};

struct HistoryTableDef {
    Span span;
    std::string name;
    std::vector<ColumnDef> columns;
};

struct ViewDef {
    Span span;
    std::string name;
    SelectQuery query;
    std::vector<Expr> checks;
};

struct OutputDef {
    Span span;
    std::string name;
    SelectQuery query;
    std::vector<Expr> checks;
};

/// `INSERT INTO t [(cols)] VALUES (...)` or `INSERT INTO t [(cols)] SELECT ...`.
struct InsertStatement {
    Span span;
    std::string table;
    std::vector<std::string> columns;
    std::optional<std::vector<Expr>> values;
    std::optional<SelectQuery> select;
};

struct StateProgramDef {
    Span span;
    std::optional<std::vector<std::string>> after;
    std::vector<InsertStatement> body;
};

using Statement = std::variant<InputDef, HistoryTableDef, ViewDef, OutputDef, StateProgramDef>;

auto statement_span(const Statement& stmt) -> const Span&;

struct Program {
    std::string source_name;
    std::vector<Statement> statements;
};

/// Structural equality ignoring source spans.
auto structurally_equal(const Expr& a, const Expr& b) -> bool;
auto structurally_equal(const SelectQuery& a, const SelectQuery& b) -> bool;
auto structurally_equal(const Program& a, const Program& b) -> bool;

/// Deterministic line-oriented tree dump (the `--emit ast` format).
auto dump(const Program& program) -> std::string;

}  // namespace diel::ast
