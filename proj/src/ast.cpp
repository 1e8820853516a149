#include "diel/ast.hpp"

#include <sstream>

#include "util.hpp"

namespace diel::ast {

auto op_text(UnaryOp op) -> const char* { return op == UnaryOp::Negate ? "-" : "NOT"; }

auto op_text(BinaryOp op) -> const char* {
    switch (op) {
        case BinaryOp::Add:
            return "+";
        case BinaryOp::Sub:
            return "-";
        case BinaryOp::Mul:
            return "*";
        case BinaryOp::Div:
            return "/";
        case BinaryOp::Mod:
            return "%";
        case BinaryOp::Eq:
            return "=";
        case BinaryOp::Ne:
            return "<>";
        case BinaryOp::Lt:
            return "<";
        case BinaryOp::Le:
            return "<=";
        case BinaryOp::Gt:
            return ">";
        case BinaryOp::Ge:
            return ">=";
        case BinaryOp::And:
            return "AND";
        case BinaryOp::Or:
            return "OR";
    }
    return "?";
}

auto is_comparison(BinaryOp op) -> bool {
    switch (op) {
        case BinaryOp::Eq:
        case BinaryOp::Ne:
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge:
            return true;
        default:
            return false;
    }
}

auto is_arithmetic(BinaryOp op) -> bool {
    switch (op) {
        case BinaryOp::Add:
        case BinaryOp::Sub:
        case BinaryOp::Mul:
        case BinaryOp::Div:
        case BinaryOp::Mod:
            return true;
        default:
            return false;
    }
}

auto Expr::literal(Value v, Span span) -> Expr {
    Expr e;
    e.kind = ExprKind::Literal;
    e.value = std::move(v);
    e.span = span;
    return e;
}

auto Expr::column(std::string table, std::string name, Span span) -> Expr {
    Expr e;
    e.kind = ExprKind::Column;
    e.table = std::move(table);
    e.name = std::move(name);
    e.span = span;
    return e;
}

auto Expr::unary(UnaryOp op, Expr operand, Span span) -> Expr {
    Expr e;
    e.kind = ExprKind::Unary;
    e.unary_op = op;
    e.args.push_back(std::move(operand));
    e.span = span;
    return e;
}

auto Expr::binary(BinaryOp op, Expr lhs, Expr rhs, Span span) -> Expr {
    Expr e;
    e.kind = ExprKind::Binary;
    e.binary_op = op;
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    e.span = span;
    return e;
}

auto Expr::call(std::string name, std::vector<Expr> args, Span span) -> Expr {
    Expr e;
    e.kind = ExprKind::Call;
    e.name = std::move(name);
    e.args = std::move(args);
    e.span = span;
    return e;
}

auto Expr::subquery(SelectQuery q, Span span) -> Expr {
    Expr e;
    e.kind = ExprKind::Subquery;
    e.query = std::make_shared<const SelectQuery>(std::move(q));
    e.span = span;
    return e;
}

auto statement_span(const Statement& stmt) -> const Span& {
    return std::visit([](const auto& s) -> const Span& { return s.span; }, stmt);
}

namespace {

template <typename T, typename F>
auto all_equal(const std::vector<T>& a, const std::vector<T>& b, F eq) -> bool {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!eq(a[i], b[i])) return false;
    }
    return true;
}

auto names_equal(const std::vector<std::string>& a, const std::vector<std::string>& b) -> bool {
    return all_equal(a, b, [](const auto& x, const auto& y) { return iequals(x, y); });
}

auto opt_expr_equal(const std::optional<Expr>& a, const std::optional<Expr>& b) -> bool {
    if (a.has_value() != b.has_value()) return false;
    return !a || structurally_equal(*a, *b);
}

auto exprs_equal(const std::vector<Expr>& a, const std::vector<Expr>& b) -> bool {
    return all_equal(a, b, [](const Expr& x, const Expr& y) { return structurally_equal(x, y); });
}

auto columns_equal(const std::vector<ColumnDef>& a, const std::vector<ColumnDef>& b) -> bool {
    return all_equal(a, b, [](const ColumnDef& x, const ColumnDef& y) {
        return iequals(x.name, y.name) && x.type == y.type &&
               all_equal(x.constraints, y.constraints,
                         [](const ColumnConstraint& p, const ColumnConstraint& q) {
                             return p.kind == q.kind && opt_expr_equal(p.check, q.check);
                         });
    });
}

auto insert_equal(const InsertStatement& a, const InsertStatement& b) -> bool {
    if (!iequals(a.table, b.table) || !names_equal(a.columns, b.columns)) return false;
    if (a.values.has_value() != b.values.has_value()) return false;
    if (a.values && !exprs_equal(*a.values, *b.values)) return false;
    if (a.select.has_value() != b.select.has_value()) return false;
    return !a.select || structurally_equal(*a.select, *b.select);
}

struct StatementEqual {
    auto operator()(const InputDef& a, const InputDef& b) const -> bool {
        return iequals(a.name, b.name) && columns_equal(a.columns, b.columns);
    }
    auto operator()(const HistoryTableDef& a, const HistoryTableDef& b) const -> bool {
        return iequals(a.name, b.name) && columns_equal(a.columns, b.columns);
    }
    auto operator()(const ViewDef& a, const ViewDef& b) const -> bool {
        return iequals(a.name, b.name) && structurally_equal(a.query, b.query) &&
               exprs_equal(a.checks, b.checks);
    }
    auto operator()(const OutputDef& a, const OutputDef& b) const -> bool {
        return iequals(a.name, b.name) && structurally_equal(a.query, b.query) &&
               exprs_equal(a.checks, b.checks);
    }
    auto operator()(const StateProgramDef& a, const StateProgramDef& b) const -> bool {
        if (a.after.has_value() != b.after.has_value()) return false;
        if (a.after && !names_equal(*a.after, *b.after)) return false;
        return all_equal(a.body, b.body, insert_equal);
    }
    template <typename A, typename B>
    auto operator()(const A&, const B&) const -> bool {
        return false;
    }
};

}  // namespace

auto structurally_equal(const Expr& a, const Expr& b) -> bool {
    if (a.kind != b.kind || a.negated != b.negated || a.star != b.star) return false;
    switch (a.kind) {
        case ExprKind::Literal:
            return a.value == b.value;
        case ExprKind::Column:
            return iequals(a.table, b.table) && iequals(a.name, b.name);
        case ExprKind::Unary:
            if (a.unary_op != b.unary_op) return false;
            break;
        case ExprKind::Binary:
            if (a.binary_op != b.binary_op) return false;
            break;
        case ExprKind::Call:
            if (!iequals(a.name, b.name)) return false;
            break;
        default:
            break;
    }
    if (!exprs_equal(a.args, b.args)) return false;
    if ((a.query == nullptr) != (b.query == nullptr)) return false;
    return a.query == nullptr || structurally_equal(*a.query, *b.query);
}

auto structurally_equal(const SelectQuery& a, const SelectQuery& b) -> bool {
    if (a.distinct != b.distinct || a.limit != b.limit) return false;
    const bool items = all_equal(a.projection, b.projection,
                                 [](const SelectItem& x, const SelectItem& y) {
                                     if (x.star != y.star) return false;
                                     if (x.star) return iequals(x.star_table, y.star_table);
                                     return iequals(x.alias, y.alias) &&
                                            structurally_equal(x.expr, y.expr);
                                 });
    if (!items) return false;
    const bool from = all_equal(a.from, b.from, [](const FromItem& x, const FromItem& y) {
        return x.join == y.join && iequals(x.ref.name, y.ref.name) &&
               iequals(x.ref.alias, y.ref.alias) && x.ref.latest == y.ref.latest &&
               opt_expr_equal(x.on, y.on);
    });
    if (!from || !opt_expr_equal(a.where, b.where)) return false;
    if (a.match.has_value() != b.match.has_value()) return false;
    if (a.match &&
        (!iequals(a.match->column, b.match->column) || a.match->pattern != b.match->pattern)) {
        return false;
    }
    if (!exprs_equal(a.group_by, b.group_by)) return false;
    return all_equal(a.order_by, b.order_by, [](const OrderItem& x, const OrderItem& y) {
        return x.descending == y.descending && structurally_equal(x.expr, y.expr);
    });
}

auto structurally_equal(const Program& a, const Program& b) -> bool {
    return all_equal(a.statements, b.statements, [](const Statement& x, const Statement& y) {
        return std::visit(StatementEqual{}, x, y);
    });
}

namespace {

class Dumper {
   public:
    auto str() const -> std::string { return out_.str(); }

    void program(const Program& p) {
        for (const auto& stmt : p.statements) {
            std::visit([this](const auto& s) { statement(s); }, stmt);
        }
    }

   private:
    std::ostringstream out_;
    int depth_ = 0;

    void line(const std::string& text, const Span& span) {
        out_ << std::string(static_cast<std::size_t>(depth_) * 2, ' ') << text << " @"
             << span.line << ':' << span.column << '\n';
    }

    struct Indent {
        int& d;
        explicit Indent(int& depth) : d(depth) { ++d; }
        ~Indent() { --d; }
    };

    void columns(const std::vector<ColumnDef>& cols) {
        Indent in(depth_);
        for (const auto& c : cols) {
            std::string text = "Column " + c.name + " " + std::string(type_name(c.type));
            for (const auto& k : c.constraints) {
                if (k.kind == ConstraintKind::NotNull) text += " NOT_NULL";
                if (k.kind == ConstraintKind::Unique) text += " UNIQUE";
                if (k.kind == ConstraintKind::Check) text += " CHECK";
            }
            line(text, c.span);
            Indent in2(depth_);
            for (const auto& k : c.constraints) {
                if (k.check) expr(*k.check);
            }
        }
    }

    void statement(const InputDef& s) {
        line("InputDef " + s.name, s.span);
        columns(s.columns);
    }
    void statement(const HistoryTableDef& s) {
        line("HistoryTableDef " + s.name, s.span);
        columns(s.columns);
    }
    void statement(const ViewDef& s) {
        line("ViewDef " + s.name, s.span);
        Indent in(depth_);
        select(s.query);
        checks(s.checks);
    }
    void statement(const OutputDef& s) {
        line("OutputDef " + s.name, s.span);
        Indent in(depth_);
        select(s.query);
        checks(s.checks);
    }
    void statement(const StateProgramDef& s) {
        std::string text = "StateProgramDef";
        if (s.after) {
            text += " after";
            for (const auto& n : *s.after) text += " " + n;
        }
        line(text, s.span);
        Indent in(depth_);
        for (const auto& ins : s.body) {
            std::string head = "Insert " + ins.table;
            if (!ins.columns.empty()) {
                head += " (";
                for (std::size_t i = 0; i < ins.columns.size(); ++i) {
                    head += (i ? ", " : "") + ins.columns[i];
                }
                head += ")";
            }
            line(head, ins.span);
            Indent in2(depth_);
            if (ins.values) {
                for (const auto& v : *ins.values) expr(v);
            }
            if (ins.select) select(*ins.select);
        }
    }

    void checks(const std::vector<Expr>& cs) {
        for (const auto& c : cs) {
            line("Check", c.span);
            Indent in(depth_);
            expr(c);
        }
    }

    void select(const SelectQuery& q) {
        line(q.distinct ? "Select distinct" : "Select", q.span);
        Indent in(depth_);
        for (const auto& item : q.projection) {
            if (item.star) {
                line(item.star_table.empty() ? "Star" : "Star " + item.star_table, item.span);
            } else {
                line(item.alias.empty() ? "Item" : "Item as " + item.alias, item.span);
                Indent in2(depth_);
                expr(item.expr);
            }
        }
        for (const auto& f : q.from) {
            static constexpr const char* kinds[] = {"From", "Comma", "InnerJoin", "CrossJoin"};
            std::string text = std::string(kinds[static_cast<int>(f.join)]) + " " +
                               (f.ref.latest ? "LATEST " : "") + f.ref.name;
            if (!f.ref.alias.empty()) text += " as " + f.ref.alias;
            line(text, f.ref.span);
            if (f.on) {
                Indent in2(depth_);
                expr(*f.on);
            }
        }
        if (q.where) {
            line("Where", q.where->span);
            Indent in2(depth_);
            expr(*q.where);
        }
        if (q.match) {
            line("Match " + q.match->column + " on " + Value(q.match->pattern).to_sql(),
                 q.match->span);
        }
        for (const auto& g : q.group_by) {
            line("GroupBy", g.span);
            Indent in2(depth_);
            expr(g);
        }
        for (const auto& o : q.order_by) {
            line(o.descending ? "OrderBy desc" : "OrderBy asc", o.expr.span);
            Indent in2(depth_);
            expr(o.expr);
        }
        if (q.limit) line("Limit " + std::to_string(*q.limit), q.span);
    }

    void expr(const Expr& e) {
        switch (e.kind) {
            case ExprKind::Literal:
                line("Literal " + e.value.to_sql(), e.span);
                return;
            case ExprKind::Column:
                line("Column " + (e.table.empty() ? e.name : e.table + "." + e.name), e.span);
                return;
            case ExprKind::Unary:
                line(std::string("Unary ") + op_text(e.unary_op), e.span);
                break;
            case ExprKind::Binary:
                line(std::string("Binary ") + op_text(e.binary_op), e.span);
                break;
            case ExprKind::IsNull:
                line(e.negated ? "IsNotNull" : "IsNull", e.span);
                break;
            case ExprKind::Call:
                line("Call " + e.name + (e.star ? "(*)" : ""), e.span);
                break;
            case ExprKind::InList:
                line(e.negated ? "NotInList" : "InList", e.span);
                break;
            case ExprKind::InSubquery:
                line(e.negated ? "NotInSubquery" : "InSubquery", e.span);
                break;
            case ExprKind::Exists:
                line(e.negated ? "NotExists" : "Exists", e.span);
                break;
            case ExprKind::Subquery:
                line("Subquery", e.span);
                break;
        }
        Indent in(depth_);
        for (const auto& a : e.args) expr(a);
        if (e.query) select(*e.query);
    }
};

}  // namespace

auto dump(const Program& program) -> std::string {
    Dumper d;
    d.program(program);
    return d.str();
}

}  // namespace diel::ast
