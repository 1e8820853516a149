#include "diel/plan.hpp"

#include <sstream>

#include "util.hpp"

namespace diel {

auto aggregate_name(AggregateFn fn) -> const char* {
    switch (fn) {
        case AggregateFn::Count:
        case AggregateFn::CountStar:
            return "COUNT";
        case AggregateFn::Min:
            return "MIN";
        case AggregateFn::Max:
            return "MAX";
        case AggregateFn::Sum:
            return "SUM";
        case AggregateFn::Avg:
            return "AVG";
    }
    return "?";
}

namespace {

class PlanDumper {
   public:
    auto str() const -> std::string { return out_.str(); }

    void node(const PlanNode& n, int depth) {
        std::vector<const PlanNode*> subqueries;
        std::string head = header(n, subqueries);
        out_ << std::string(static_cast<std::size_t>(depth) * 2, ' ') << head << '\n';
        for (const PlanNode* sq : subqueries) {
            out_ << std::string(static_cast<std::size_t>(depth + 1) * 2, ' ') << "subquery:\n";
            node(*sq, depth + 2);
        }
        for (const auto& child : n.children) node(*child, depth + 1);
    }

    static auto expr(const BoundExpr& e, std::vector<const PlanNode*>& subs) -> std::string {
        using K = BoundExpr::Kind;
        switch (e.kind) {
            case K::Literal:
                return e.value.to_sql();
            case K::Column: {
                std::string s = e.label.empty() ? "$" + std::to_string(e.index) : e.label;
                if (e.depth > 0) s = "outer" + std::to_string(e.depth) + "." + s;
                return s;
            }
            case K::Unary:
                return std::string(ast::op_text(e.unary_op)) +
                       (e.unary_op == ast::UnaryOp::Not ? " " : "") + expr(e.args[0], subs);
            case K::Binary: {
                const std::string lhs = expr(e.args[0], subs);
                const std::string rhs = expr(e.args[1], subs);
                return "(" + lhs + " " + ast::op_text(e.binary_op) + " " + rhs + ")";
            }
            case K::IsNull:
                return "(" + expr(e.args[0], subs) + (e.negated ? " IS NOT NULL)" : " IS NULL)");
            case K::Call:
            case K::Coalesce: {
                std::string s = e.kind == K::Coalesce ? "COALESCE(" : e.function->name + "(";
                for (std::size_t i = 0; i < e.args.size(); ++i) {
                    if (i) s += ", ";
                    s += expr(e.args[i], subs);
                }
                return s + ")";
            }
            case K::InList: {
                std::string s = "(" + expr(e.args[0], subs) + (e.negated ? " NOT IN (" : " IN (");
                for (std::size_t i = 1; i < e.args.size(); ++i) {
                    if (i > 1) s += ", ";
                    s += expr(e.args[i], subs);
                }
                return s + "))";
            }
            case K::InSubquery:
            case K::Exists:
            case K::ScalarSubquery: {
                const std::string operand =
                    e.kind == K::InSubquery ? expr(e.args[0], subs) : std::string();
                subs.push_back(e.subquery.get());
                std::string tag = "<subquery " + std::to_string(subs.size()) +
                                  (e.correlated ? " correlated>" : ">");
                if (e.kind == K::InSubquery) {
                    return "(" + operand + (e.negated ? " NOT IN " : " IN ") + tag + ")";
                }
                if (e.kind == K::Exists) return (e.negated ? "NOT EXISTS " : "EXISTS ") + tag;
                return tag;
            }
        }
        return "?";
    }

   private:
    std::ostringstream out_;

    static auto column_list(const Schema& schema) -> std::string {
        std::string s = "[";
        for (std::size_t i = 0; i < schema.size(); ++i) {
            if (i) s += ", ";
            s += schema[i].name;
        }
        return s + "]";
    }

    static auto header(const PlanNode& n, std::vector<const PlanNode*>& subs) -> std::string {
        using K = PlanNode::Kind;
        switch (n.kind) {
            case K::Scan:
                return "Scan " + n.relation +
                       (n.alias.empty() || iequals(n.alias, n.relation) ? "" : " as " + n.alias);
            case K::Values:
                return "Values (1 row)";
            case K::Filter:
                return "Filter " + expr(*n.predicate, subs);
            case K::Project: {
                std::string s = "Project ";
                for (std::size_t i = 0; i < n.exprs.size(); ++i) {
                    if (i) s += ", ";
                    s += expr(n.exprs[i], subs) + " AS " + n.schema[i].name;
                }
                return s;
            }
            case K::Join:
                return n.predicate ? "Join inner " + expr(*n.predicate, subs) : "Join cross";
            case K::Aggregate: {
                std::string s = "Aggregate group=[";
                for (std::size_t i = 0; i < n.exprs.size(); ++i) {
                    if (i) s += ", ";
                    s += expr(n.exprs[i], subs);
                }
                s += "] aggs=[";
                for (std::size_t i = 0; i < n.aggregates.size(); ++i) {
                    if (i) s += ", ";
                    const auto& a = n.aggregates[i];
                    s += std::string(aggregate_name(a.fn)) + "(" +
                         (a.arg ? expr(*a.arg, subs) : std::string("*")) + ")";
                }
                return s + "]";
            }
            case K::Sort: {
                std::string s = "Sort ";
                for (std::size_t i = 0; i < n.keys.size(); ++i) {
                    if (i) s += ", ";
                    s += expr(n.keys[i].expr, subs) + (n.keys[i].descending ? " DESC" : " ASC");
                }
                return s;
            }
            case K::Limit:
                return "Limit " + std::to_string(n.limit);
            case K::Distinct:
                return "Distinct " + column_list(n.schema);
            case K::Match:
                return "Match " + n.children.front()->schema[n.match_index].name + " on " +
                       Value(n.nfa->source).to_sql();
        }
        return "?";
    }
};

void collect_scans(const PlanNode& n, std::vector<std::string>& out);

void collect_expr_scans(const BoundExpr& e, std::vector<std::string>& out) {
    if (e.subquery) collect_scans(*e.subquery, out);
    for (const auto& a : e.args) collect_expr_scans(a, out);
}

void collect_scans(const PlanNode& n, std::vector<std::string>& out) {
    if (n.kind == PlanNode::Kind::Scan) {
        bool seen = false;
        for (const auto& s : out) seen = seen || iequals(s, n.relation);
        if (!seen) out.push_back(n.relation);
    }
    if (n.predicate) collect_expr_scans(*n.predicate, out);
    for (const auto& e : n.exprs) collect_expr_scans(e, out);
    for (const auto& a : n.aggregates) {
        if (a.arg) collect_expr_scans(*a.arg, out);
    }
    for (const auto& k : n.keys) collect_expr_scans(k.expr, out);
    for (const auto& c : n.children) collect_scans(*c, out);
}

}  // namespace

auto dump(const PlanNode& plan) -> std::string {
    PlanDumper d;
    d.node(plan, 0);
    return d.str();
}

auto dump(const BoundExpr& e) -> std::string {
    std::vector<const PlanNode*> subs;
    return PlanDumper::expr(e, subs);
}

auto scanned_relations(const PlanNode& plan) -> std::vector<std::string> {
    std::vector<std::string> out;
    collect_scans(plan, out);
    return out;
}

}  // namespace diel
