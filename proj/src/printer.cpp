#include "diel/printer.hpp"

#include <cctype>

#include "diel/lexer.hpp"

namespace diel {

using namespace ast;

namespace {

// Binding strength, loosest first. Mirrors the parser's descent order.
constexpr int kOr = 1;
constexpr int kAnd = 2;
constexpr int kNot = 3;
constexpr int kCompare = 4;
constexpr int kAdd = 5;
constexpr int kMul = 6;
constexpr int kNegate = 7;
constexpr int kPrimary = 8;

auto precedence(const Expr& e) -> int {
    switch (e.kind) {
        case ExprKind::Binary:
            switch (e.binary_op) {
                case BinaryOp::Or:
                    return kOr;
                case BinaryOp::And:
                    return kAnd;
                case BinaryOp::Add:
                case BinaryOp::Sub:
                    return kAdd;
                case BinaryOp::Mul:
                case BinaryOp::Div:
                case BinaryOp::Mod:
                    return kMul;
                default:
                    return kCompare;
            }
        case ExprKind::Unary:
            return e.unary_op == UnaryOp::Not ? kNot : kNegate;
        case ExprKind::IsNull:
        case ExprKind::InList:
        case ExprKind::InSubquery:
            return kCompare;
        case ExprKind::Exists:
            return e.negated ? kNot : kPrimary;
        default:
            return kPrimary;
    }
}

void print_expr(std::string& out, const Expr& e, int min_prec);

void print_wrapped(std::string& out, const Expr& e, int min_prec) {
    if (precedence(e) < min_prec) {
        out += '(';
        print_expr(out, e, 0);
        out += ')';
    } else {
        print_expr(out, e, min_prec);
    }
}

void print_select(std::string& out, const SelectQuery& q);

void print_expr(std::string& out, const Expr& e, int /*min_prec*/) {
    switch (e.kind) {
        case ExprKind::Literal:
            out += e.value.to_sql();
            return;
        case ExprKind::Column:
            if (!e.table.empty()) out += quote_identifier(e.table) + ".";
            out += quote_identifier(e.name);
            return;
        case ExprKind::Unary:
            if (e.unary_op == UnaryOp::Not) {
                out += "NOT ";
                const Expr& operand = e.args[0];
                if (operand.kind == ExprKind::Exists && !operand.negated) {
                    out += '(';
                    print_expr(out, operand, 0);
                    out += ')';
                } else {
                    print_wrapped(out, operand, kNot);
                }
            } else {
                out += '-';
                std::string inner;
                print_wrapped(inner, e.args[0], kNegate);
                if (!inner.empty() && inner.front() == '-') out += ' ';
                out += inner;
            }
            return;
        case ExprKind::Binary: {
            const int p = precedence(e);
            print_wrapped(out, e.args[0], p);
            out += ' ';
            out += op_text(e.binary_op);
            out += ' ';
            print_wrapped(out, e.args[1], p + 1);
            return;
        }
        case ExprKind::IsNull:
            print_wrapped(out, e.args[0], kCompare);
            out += e.negated ? " IS NOT NULL" : " IS NULL";
            return;
        case ExprKind::Call:
            out += e.name;
            out += '(';
            if (e.star) {
                out += '*';
            } else {
                for (std::size_t i = 0; i < e.args.size(); ++i) {
                    if (i) out += ", ";
                    print_expr(out, e.args[i], 0);
                }
            }
            out += ')';
            return;
        case ExprKind::InList:
            print_wrapped(out, e.args[0], kCompare);
            out += e.negated ? " NOT IN (" : " IN (";
            for (std::size_t i = 1; i < e.args.size(); ++i) {
                if (i > 1) out += ", ";
                print_expr(out, e.args[i], 0);
            }
            out += ')';
            return;
        case ExprKind::InSubquery:
            print_wrapped(out, e.args[0], kCompare);
            out += e.negated ? " NOT IN (" : " IN (";
            print_select(out, *e.query);
            out += ')';
            return;
        case ExprKind::Exists:
            out += e.negated ? "NOT EXISTS (" : "EXISTS (";
            print_select(out, *e.query);
            out += ')';
            return;
        case ExprKind::Subquery:
            out += '(';
            print_select(out, *e.query);
            out += ')';
            return;
    }
}

void print_ref(std::string& out, const TableRef& ref) {
    if (ref.latest) out += "LATEST ";
    out += quote_identifier(ref.name);
    if (!ref.alias.empty()) out += " " + quote_identifier(ref.alias);
}

void print_select(std::string& out, const SelectQuery& q) {
    out += q.distinct ? "SELECT DISTINCT " : "SELECT ";
    for (std::size_t i = 0; i < q.projection.size(); ++i) {
        if (i) out += ", ";
        const auto& item = q.projection[i];
        if (item.star) {
            if (!item.star_table.empty()) out += quote_identifier(item.star_table) + ".";
            out += '*';
            continue;
        }
        print_expr(out, item.expr, 0);
        if (!item.alias.empty()) out += " AS " + quote_identifier(item.alias);
    }
    for (const auto& f : q.from) {
        switch (f.join) {
            case JoinKind::First:
                out += " FROM ";
                break;
            case JoinKind::Comma:
                out += ", ";
                break;
            case JoinKind::Inner:
                out += " JOIN ";
                break;
            case JoinKind::Cross:
                out += " CROSS JOIN ";
                break;
        }
        print_ref(out, f.ref);
        if (f.on) {
            out += " ON ";
            print_expr(out, *f.on, 0);
        }
    }
    if (q.where) {
        out += " WHERE ";
        print_expr(out, *q.where, 0);
    }
    if (q.match) {
        out += " MATCH " + quote_identifier(q.match->column) + " ON " +
               Value(q.match->pattern).to_sql();
    }
    if (!q.group_by.empty()) {
        out += " GROUP BY ";
        for (std::size_t i = 0; i < q.group_by.size(); ++i) {
            if (i) out += ", ";
            print_expr(out, q.group_by[i], 0);
        }
    }
    if (!q.order_by.empty()) {
        out += " ORDER BY ";
        for (std::size_t i = 0; i < q.order_by.size(); ++i) {
            if (i) out += ", ";
            print_expr(out, q.order_by[i].expr, 0);
            if (q.order_by[i].descending) out += " DESC";
        }
    }
    if (q.limit) out += " LIMIT " + std::to_string(*q.limit);
}

void print_columns(std::string& out, const std::vector<ColumnDef>& cols) {
    out += " (";
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) out += ", ";
        out += quote_identifier(cols[i].name);
        out += ' ';
        out += type_name(cols[i].type);
        for (const auto& c : cols[i].constraints) {
            switch (c.kind) {
                case ConstraintKind::NotNull:
                    out += " NOT NULL";
                    break;
                case ConstraintKind::Unique:
                    out += " UNIQUE";
                    break;
                case ConstraintKind::Check:
                    out += " CHECK (";
                    print_expr(out, *c.check, 0);
                    out += ')';
                    break;
            }
        }
    }
    out += ')';
}

void print_checks(std::string& out, const std::vector<Expr>& checks) {
    for (const auto& c : checks) {
        out += " CHECK (";
        print_expr(out, c, 0);
        out += ')';
    }
}

struct StatementPrinter {
    std::string& out;

    void operator()(const InputDef& s) const {
        out += "CREATE INPUT " + quote_identifier(s.name);
        print_columns(out, s.columns);
        out += ';';
    }
    void operator()(const HistoryTableDef& s) const {
        out += "CREATE TABLE " + quote_identifier(s.name);
        print_columns(out, s.columns);
        out += ';';
    }
    void operator()(const ViewDef& s) const {
        out += "CREATE VIEW " + quote_identifier(s.name) + " AS ";
        print_select(out, s.query);
        print_checks(out, s.checks);
        out += ';';
    }
    void operator()(const OutputDef& s) const {
        out += "CREATE OUTPUT " + quote_identifier(s.name) + " AS ";
        print_select(out, s.query);
        print_checks(out, s.checks);
        out += ';';
    }
    void operator()(const StateProgramDef& s) const {
        out += "CREATE PROGRAM";
        if (s.after) {
            out += " AFTER ";
            if (s.after->size() == 1) {
                out += quote_identifier(s.after->front());
            } else {
                out += '(';
                for (std::size_t i = 0; i < s.after->size(); ++i) {
                    if (i) out += ", ";
                    out += quote_identifier((*s.after)[i]);
                }
                out += ')';
            }
        }
        out += " BEGIN\n";
        for (const auto& ins : s.body) {
            out += "  INSERT INTO " + quote_identifier(ins.table);
            if (!ins.columns.empty()) {
                out += " (";
                for (std::size_t i = 0; i < ins.columns.size(); ++i) {
                    if (i) out += ", ";
                    out += quote_identifier(ins.columns[i]);
                }
                out += ')';
            }
            if (ins.values) {
                out += " VALUES (";
                for (std::size_t i = 0; i < ins.values->size(); ++i) {
                    if (i) out += ", ";
                    print_expr(out, (*ins.values)[i], 0);
                }
                out += ')';
            } else {
                out += ' ';
                print_select(out, *ins.select);
            }
            out += ";\n";
        }
        out += "END;";
    }
};

}  // namespace

auto quote_identifier(const std::string& name) -> std::string {
    bool plain = !name.empty() && !is_keyword(name) &&
                 (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_');
    for (char c : name) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') plain = false;
    }
    if (plain) return name;
    std::string out = "\"";
    for (char c : name) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

auto to_source(const Expr& expr) -> std::string {
    std::string out;
    print_expr(out, expr, 0);
    return out;
}

auto to_source(const SelectQuery& query) -> std::string {
    std::string out;
    print_select(out, query);
    return out;
}

auto to_source(const Statement& statement) -> std::string {
    std::string out;
    std::visit(StatementPrinter{out}, statement);
    return out;
}

auto to_source(const Program& program) -> std::string {
    std::string out;
    for (const auto& stmt : program.statements) {
        std::visit(StatementPrinter{out}, stmt);
        out += '\n';
    }
    return out;
}

}  // namespace diel
