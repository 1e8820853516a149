#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "diel/compile.hpp"
#include "diel/eval.hpp"
#include "diel/parser.hpp"
#include "diel/printer.hpp"

namespace diel::oracle {

// ---------------------------------------------------------------------------
// value semantics, restated independently
// ---------------------------------------------------------------------------

namespace {

using ast::BinaryOp;

auto rank(const Value& v) -> int {
    if (v.is_null()) return 0;
    if (v.is_bool()) return 1;
    if (v.is_integer() || v.is_real()) return 2;
    return 3;
}

auto num(const Value& v) -> double {
    return v.is_integer() ? static_cast<double>(v.as_integer()) : v.as_real();
}

// Sort order: null < boolean < number < text; integer before an equal real.
auto order(const Value& a, const Value& b) -> int {
    const int ra = rank(a);
    const int rb = rank(b);
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (ra) {
        case 0:
            return 0;
        case 1:
            return int(a.as_bool()) - int(b.as_bool());
        case 2: {
            const double x = num(a);
            const double y = num(b);
            if (x < y) return -1;
            if (x > y) return 1;
            if (a.is_integer() != b.is_integer()) return a.is_integer() ? -1 : 1;
            return 0;
        }
        default:
            return a.as_text() < b.as_text() ? -1 : (a.as_text() > b.as_text() ? 1 : 0);
    }
}

auto row_order(const Row& a, const Row& b) -> int {
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        if (int c = order(a[i], b[i])) return c;
    }
    return a.size() < b.size() ? -1 : (a.size() > b.size() ? 1 : 0);
}

auto truth(bool b) -> Value { return Value(b); }

// nullopt = unknown
auto sql_cmp(const Value& a, const Value& b) -> std::optional<int> {
    if (a.is_null() || b.is_null()) return std::nullopt;
    if ((a.is_integer() || a.is_real()) && (b.is_integer() || b.is_real())) {
        const double x = num(a);
        const double y = num(b);
        return x < y ? -1 : (x > y ? 1 : 0);
    }
    if (a.is_text() && b.is_text()) return a.as_text() < b.as_text() ? -1 : (a.as_text() > b.as_text() ? 1 : 0);
    if (a.is_bool() && b.is_bool()) return int(a.as_bool()) - int(b.as_bool());
    throw std::logic_error("oracle: incomparable values");
}

auto wrap(std::uint64_t v) -> std::int64_t { return static_cast<std::int64_t>(v); }

auto arith(BinaryOp op, const Value& a, const Value& b) -> Value {
    if (a.is_null() || b.is_null()) return Value();
    if (a.is_integer() && b.is_integer()) {
        const std::int64_t x = a.as_integer();
        const std::int64_t y = b.as_integer();
        const auto ux = static_cast<std::uint64_t>(x);
        const auto uy = static_cast<std::uint64_t>(y);
        switch (op) {
            case BinaryOp::Add:
                return Value(wrap(ux + uy));
            case BinaryOp::Sub:
                return Value(wrap(ux - uy));
            case BinaryOp::Mul:
                return Value(wrap(ux * uy));
            case BinaryOp::Div:
                if (y == 0) return Value();
                if (y == -1) return Value(wrap(0 - ux));
                return Value(x / y);
            case BinaryOp::Mod:
                if (y == 0) return Value();
                if (y == -1) return Value(0);
                return Value(x % y);
            default:
                break;
        }
    }
    const double x = num(a);
    const double y = num(b);
    switch (op) {
        case BinaryOp::Add:
            return Value(x + y);
        case BinaryOp::Sub:
            return Value(x - y);
        case BinaryOp::Mul:
            return Value(x * y);
        case BinaryOp::Div:
            return y == 0 ? Value() : Value(x / y);
        case BinaryOp::Mod:
            return y == 0 ? Value() : Value(std::fmod(x, y));
        default:
            break;
    }
    throw std::logic_error("oracle: bad arithmetic");
}

auto logic_and(const Value& a, const Value& b) -> Value {
    if ((a.is_bool() && !a.as_bool()) || (b.is_bool() && !b.as_bool())) return truth(false);
    if (a.is_null() || b.is_null()) return Value();
    return truth(true);
}

auto logic_or(const Value& a, const Value& b) -> Value {
    if ((a.is_bool() && a.as_bool()) || (b.is_bool() && b.as_bool())) return truth(true);
    if (a.is_null() || b.is_null()) return Value();
    return truth(false);
}

auto logic_not(const Value& a) -> Value { return a.is_null() ? Value() : truth(!a.as_bool()); }

auto holds(const Value& v) -> bool { return v.is_bool() && v.as_bool(); }

// x IN (candidates) under three-valued logic.
auto membership(const Value& x, const std::vector<Value>& candidates) -> Value {
    if (candidates.empty()) return truth(false);
    if (x.is_null()) return Value();
    bool unknown = false;
    for (const auto& c : candidates) {
        auto r = sql_cmp(x, c);
        if (!r) {
            unknown = true;
        } else if (*r == 0) {
            return truth(true);
        }
    }
    return unknown ? Value() : truth(false);
}

auto op_sql(BinaryOp op) -> const char* {
    switch (op) {
        case BinaryOp::Add: return "+";
        case BinaryOp::Sub: return "-";
        case BinaryOp::Mul: return "*";
        case BinaryOp::Div: return "/";
        case BinaryOp::Mod: return "%";
        case BinaryOp::Eq: return "=";
        case BinaryOp::Ne: return "<>";
        case BinaryOp::Lt: return "<";
        case BinaryOp::Le: return "<=";
        case BinaryOp::Gt: return ">";
        case BinaryOp::Ge: return ">=";
        case BinaryOp::And: return "AND";
        case BinaryOp::Or: return "OR";
    }
    return "?";
}

auto literal_sql(const Value& v) -> std::string {
    if (v.is_null()) return "NULL";
    if (v.is_bool()) return v.as_bool() ? "TRUE" : "FALSE";
    if (v.is_integer()) {
        const auto s = std::to_string(v.as_integer());
        return v.as_integer() < 0 ? "(" + s + ")" : s;
    }
    if (v.is_real()) {
        std::ostringstream os;
        os.precision(17);
        os << v.as_real();
        std::string s = os.str();
        if (s.find_first_of(".e") == std::string::npos) s += ".0";
        return v.as_real() < 0 ? "(" + s + ")" : s;
    }
    std::string out = "'";
    for (char c : v.as_text()) {
        out += c;
        if (c == '\'') out += '\'';
    }
    return out + "'";
}

auto fn_sql(AggregateFn fn) -> const char* {
    switch (fn) {
        case AggregateFn::Count:
        case AggregateFn::CountStar: return "COUNT";
        case AggregateFn::Min: return "MIN";
        case AggregateFn::Max: return "MAX";
        case AggregateFn::Sum: return "SUM";
        case AggregateFn::Avg: return "AVG";
    }
    return "?";
}

}  // namespace

// ---------------------------------------------------------------------------
// rendering
// ---------------------------------------------------------------------------

auto render(const Expr& e) -> std::string {
    using K = Expr::Kind;
    switch (e.kind) {
        case K::Literal:
            return literal_sql(e.value);
        case K::Column:
            return e.alias + "." + e.column;
        case K::Negate:
            return "(-" + render(e.args[0]) + ")";
        case K::Not:
            return "(NOT " + render(e.args[0]) + ")";
        case K::Binary:
            return "(" + render(e.args[0]) + " " + op_sql(e.op) + " " + render(e.args[1]) + ")";
        case K::IsNull:
            return "(" + render(e.args[0]) + (e.negated ? " IS NOT NULL)" : " IS NULL)");
        case K::Coalesce:
        case K::WithinBox: {
            std::string s = e.kind == K::Coalesce ? "COALESCE(" : "is_within_box(";
            for (std::size_t i = 0; i < e.args.size(); ++i) s += (i ? ", " : "") + render(e.args[i]);
            return s + ")";
        }
        case K::InList: {
            std::string s = "(" + render(e.args[0]) + (e.negated ? " NOT IN (" : " IN (");
            for (std::size_t i = 1; i < e.args.size(); ++i) s += (i > 1 ? ", " : "") + render(e.args[i]);
            return s + "))";
        }
        case K::Exists:
            return std::string("(") + (e.negated ? "NOT EXISTS (" : "EXISTS (") + render(*e.query) + "))";
        case K::InQuery:
            return "(" + render(e.args[0]) + (e.negated ? " NOT IN (" : " IN (") + render(*e.query) + "))";
        case K::Scalar:
            return "(" + render(*e.query) + ")";
        case K::Aggregate:
            if (e.fn == AggregateFn::CountStar) return "COUNT(*)";
            return std::string(fn_sql(e.fn)) + "(" + render(e.args[0]) + ")";
    }
    return "?";
}

auto render(const Query& q) -> std::string {
    std::string s = q.distinct ? "SELECT DISTINCT " : "SELECT ";
    if (q.star) {
        s += "*";
    } else {
        for (std::size_t i = 0; i < q.items.size(); ++i) {
            s += (i ? ", " : "") + render(q.items[i].expr);
            if (!q.items[i].name.empty()) s += " AS " + q.items[i].name;
        }
    }
    for (std::size_t i = 0; i < q.from.size(); ++i) {
        const auto& f = q.from[i];
        switch (f.join) {
            case ast::JoinKind::First:
                s += " FROM ";
                break;
            case ast::JoinKind::Comma:
                s += ", ";
                break;
            case ast::JoinKind::Inner:
                s += " INNER JOIN ";
                break;
            case ast::JoinKind::Cross:
                s += " CROSS JOIN ";
                break;
        }
        s += f.table + " " + f.alias;
        if (f.on) s += " ON " + render(*f.on);
    }
    if (q.where) s += " WHERE " + render(*q.where);
    if (!q.group_by.empty()) {
        s += " GROUP BY ";
        for (std::size_t i = 0; i < q.group_by.size(); ++i) s += (i ? ", " : "") + render(q.group_by[i]);
    }
    if (!q.order_by.empty()) {
        s += " ORDER BY ";
        for (std::size_t i = 0; i < q.order_by.size(); ++i) {
            s += (i ? ", " : "") + q.order_by[i].name + (q.order_by[i].descending ? " DESC" : "");
        }
    }
    if (q.limit) s += " LIMIT " + std::to_string(*q.limit);
    return s;
}

// ---------------------------------------------------------------------------
// nested-loop evaluation
// ---------------------------------------------------------------------------

namespace {

struct Binding {
    std::string alias;
    const TableShape* shape = nullptr;
    const Row* row = nullptr;
};

using Env = std::vector<Binding>;

class Evaluator {
   public:
    Evaluator(const std::vector<TableShape>& tables, const Database& db) : tables_(tables), db_(db) {}

    auto run(const Query& q, const Env& outer) -> std::vector<Row> {
        std::vector<Env> combos = {outer};
        for (const auto& f : q.from) {
            const TableShape& shape = shape_of(f.table);
            const auto& rows = db_.table(f.table).rows();
            std::vector<Env> next;
            for (const auto& env : combos) {
                for (const auto& row : rows) {
                    Env extended = env;
                    extended.push_back({f.alias, &shape, &row});
                    if (f.on && !holds(eval(*f.on, extended, nullptr))) continue;
                    next.push_back(std::move(extended));
                }
            }
            combos = std::move(next);
        }
        if (q.where) {
            std::vector<Env> kept;
            for (auto& env : combos) {
                if (holds(eval(*q.where, env, nullptr))) kept.push_back(std::move(env));
            }
            combos = std::move(kept);
        }

        std::vector<Row> out;
        if (q.aggregated) {
            std::vector<std::pair<Row, std::vector<Env>>> groups;
            for (auto& env : combos) {
                Row key;
                for (const auto& k : q.group_by) key.push_back(eval(k, env, nullptr));
                auto it = std::find_if(groups.begin(), groups.end(),
                                       [&](const auto& g) { return row_order(g.first, key) == 0; });
                if (it == groups.end()) {
                    groups.emplace_back(std::move(key), std::vector<Env>{});
                    it = groups.end() - 1;
                }
                it->second.push_back(std::move(env));
            }
            if (groups.empty() && q.group_by.empty()) groups.emplace_back(Row{}, std::vector<Env>{});
            for (const auto& [key, members] : groups) {
                const Env& rep = members.empty() ? outer : members.front();
                Row row;
                for (const auto& item : q.items) row.push_back(eval(item.expr, rep, &members));
                out.push_back(std::move(row));
            }
        } else {
            for (const auto& env : combos) {
                Row row;
                if (!q.star) {
                    for (const auto& item : q.items) row.push_back(eval(item.expr, env, nullptr));
                }
                out.push_back(std::move(row));
            }
        }

        if (q.distinct) {
            std::vector<Row> unique;
            for (auto& row : out) {
                bool seen = std::any_of(unique.begin(), unique.end(),
                                        [&](const Row& u) { return row_order(u, row) == 0; });
                if (!seen) unique.push_back(std::move(row));
            }
            out = std::move(unique);
        }
        if (!q.order_by.empty()) {
            std::vector<std::pair<std::size_t, bool>> keys;
            for (const auto& k : q.order_by) {
                for (std::size_t i = 0; i < q.items.size(); ++i) {
                    if (q.items[i].name == k.name) keys.emplace_back(i, k.descending);
                }
            }
            std::stable_sort(out.begin(), out.end(), [&](const Row& a, const Row& b) {
                for (const auto& [i, desc] : keys) {
                    int c = order(a[i], b[i]);
                    if (c != 0) return desc ? c > 0 : c < 0;
                }
                return false;
            });
        }
        if (q.limit && static_cast<std::size_t>(*q.limit) < out.size()) {
            out.resize(static_cast<std::size_t>(*q.limit));
        }
        return out;
    }

   private:
    const std::vector<TableShape>& tables_;
    const Database& db_;

    auto shape_of(const std::string& name) const -> const TableShape& {
        for (const auto& t : tables_) {
            if (t.name == name) return t;
        }
        throw std::logic_error("oracle: no table " + name);
    }

    static auto column(const Expr& e, const Env& env) -> Value {
        for (auto it = env.rbegin(); it != env.rend(); ++it) {
            if (it->alias != e.alias) continue;
            for (std::size_t i = 0; i < it->shape->columns.size(); ++i) {
                if (it->shape->columns[i].first == e.column) return (*it->row)[i];
            }
        }
        throw std::logic_error("oracle: unbound column " + e.alias + "." + e.column);
    }

    auto aggregate(const Expr& e, const std::vector<Env>& members) -> Value {
        if (e.fn == AggregateFn::CountStar) return Value(static_cast<std::int64_t>(members.size()));
        std::vector<Value> vals;
        for (const auto& m : members) {
            Value v = eval(e.args[0], m, nullptr);
            if (!v.is_null()) vals.push_back(std::move(v));
        }
        switch (e.fn) {
            case AggregateFn::Count:
                return Value(static_cast<std::int64_t>(vals.size()));
            case AggregateFn::Min:
            case AggregateFn::Max: {
                if (vals.empty()) return Value();
                Value best = vals[0];
                for (const auto& v : vals) {
                    const int c = *sql_cmp(v, best);
                    if (e.fn == AggregateFn::Min ? c < 0 : c > 0) best = v;
                }
                return best;
            }
            case AggregateFn::Sum:
            case AggregateFn::Avg: {
                if (vals.empty()) return Value();
                bool any_real = false;
                std::uint64_t isum = 0;
                double rsum = 0;
                for (const auto& v : vals) {
                    if (v.is_real()) any_real = true;
                }
                for (const auto& v : vals) {
                    if (any_real) {
                        rsum += num(v);
                    } else {
                        isum += static_cast<std::uint64_t>(v.as_integer());
                    }
                }
                if (e.fn == AggregateFn::Sum) return any_real ? Value(rsum) : Value(wrap(isum));
                const double total = any_real ? rsum : static_cast<double>(wrap(isum));
                return Value(total / static_cast<double>(vals.size()));
            }
            default:
                break;
        }
        throw std::logic_error("oracle: bad aggregate");
    }

    auto eval(const Expr& e, const Env& env, const std::vector<Env>* group) -> Value {
        using K = Expr::Kind;
        switch (e.kind) {
            case K::Literal:
                return e.value;
            case K::Column:
                return column(e, env);
            case K::Negate: {
                Value v = eval(e.args[0], env, group);
                if (v.is_null()) return v;
                if (v.is_integer()) return Value(wrap(0 - static_cast<std::uint64_t>(v.as_integer())));
                return Value(-v.as_real());
            }
            case K::Not:
                return logic_not(eval(e.args[0], env, group));
            case K::Binary: {
                if (e.op == BinaryOp::And || e.op == BinaryOp::Or) {
                    Value l = eval(e.args[0], env, group);
                    Value r = eval(e.args[1], env, group);
                    return e.op == BinaryOp::And ? logic_and(l, r) : logic_or(l, r);
                }
                Value l = eval(e.args[0], env, group);
                Value r = eval(e.args[1], env, group);
                if (ast::is_arithmetic(e.op)) return arith(e.op, l, r);
                auto c = sql_cmp(l, r);
                if (!c) return Value();
                switch (e.op) {
                    case BinaryOp::Eq: return truth(*c == 0);
                    case BinaryOp::Ne: return truth(*c != 0);
                    case BinaryOp::Lt: return truth(*c < 0);
                    case BinaryOp::Le: return truth(*c <= 0);
                    case BinaryOp::Gt: return truth(*c > 0);
                    case BinaryOp::Ge: return truth(*c >= 0);
                    default: break;
                }
                throw std::logic_error("oracle: bad comparison");
            }
            case K::IsNull: {
                const bool n = eval(e.args[0], env, group).is_null();
                return truth(e.negated ? !n : n);
            }
            case K::Coalesce:
                for (const auto& a : e.args) {
                    Value v = eval(a, env, group);
                    if (!v.is_null()) return v;
                }
                return Value();
            case K::WithinBox: {
                std::vector<Value> a;
                for (const auto& x : e.args) a.push_back(eval(x, env, group));
                for (const auto& v : a) {
                    if (v.is_null()) return Value();
                }
                return truth(num(a[0]) <= num(a[4]) && num(a[4]) <= num(a[2]) &&
                             num(a[1]) <= num(a[5]) && num(a[5]) <= num(a[3]));
            }
            case K::InList: {
                Value x = eval(e.args[0], env, group);
                std::vector<Value> cands;
                for (std::size_t i = 1; i < e.args.size(); ++i) cands.push_back(eval(e.args[i], env, group));
                Value r = membership(x, cands);
                return e.negated ? logic_not(r) : r;
            }
            case K::Exists: {
                const bool any = !run(*e.query, env).empty();
                return truth(e.negated ? !any : any);
            }
            case K::InQuery: {
                Value x = eval(e.args[0], env, group);
                std::vector<Value> cands;
                for (auto& row : run(*e.query, env)) cands.push_back(row[0]);
                Value r = membership(x, cands);
                return e.negated ? logic_not(r) : r;
            }
            case K::Scalar: {
                auto rows = run(*e.query, env);
                if (rows.size() > 1) throw std::logic_error("oracle: scalar subquery returned rows");
                return rows.empty() ? Value() : rows[0][0];
            }
            case K::Aggregate:
                if (!group) throw std::logic_error("oracle: aggregate outside a group");
                return aggregate(e, *group);
        }
        throw std::logic_error("oracle: bad expression");
    }
};

}  // namespace

auto evaluate(const Query& q, const std::vector<TableShape>& tables, const Database& db)
    -> std::vector<Row> {
    Evaluator ev(tables, db);
    return ev.run(q, {});
}

auto same_bag(std::vector<Row> a, std::vector<Row> b) -> bool {
    if (a.size() != b.size()) return false;
    auto less = [](const Row& x, const Row& y) { return row_order(x, y) < 0; };
    std::sort(a.begin(), a.end(), less);
    std::sort(b.begin(), b.end(), less);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) return false;
        for (std::size_t j = 0; j < a[i].size(); ++j) {
            const Value& x = a[i][j];
            const Value& y = b[i][j];
            if (rank(x) != rank(y) || x.is_integer() != y.is_integer() || order(x, y) != 0) return false;
        }
    }
    return true;
}

auto plan_depth(const PlanNode& plan) -> std::size_t {
    if (plan.kind == PlanNode::Kind::Scan || plan.kind == PlanNode::Kind::Values) return 0;
    std::size_t deepest = 0;
    for (const auto& c : plan.children) deepest = std::max(deepest, plan_depth(*c));
    return deepest + 1;
}

// ---------------------------------------------------------------------------
// random queries
// ---------------------------------------------------------------------------

namespace {

const char* const kOracleProgram =
    "CREATE TABLE r (a INTEGER, b REAL, s TEXT);\n"
    "CREATE TABLE q (a INTEGER, c INTEGER, s TEXT);\n"
    "CREATE TABLE p (b REAL, f BOOLEAN, a INTEGER);\n";

auto oracle_tables() -> std::vector<TableShape> {
    const std::pair<std::string, Ty> ts = {"timestep", Ty::Int};
    const std::pair<std::string, Ty> tm = {"timestamp", Ty::Real};
    return {
        {"r", {{"a", Ty::Int}, {"b", Ty::Real}, {"s", Ty::Text}, ts, tm}},
        {"q", {{"a", Ty::Int}, {"c", Ty::Int}, {"s", Ty::Text}, ts, tm}},
        {"p", {{"b", Ty::Real}, {"f", Ty::Bool}, {"a", Ty::Int}, ts, tm}},
    };
}

class QueryGenerator {
   public:
    QueryGenerator(std::mt19937& rng, const std::vector<TableShape>& tables) : rng_(rng), tables_(tables) {}

    auto top_level() -> Query {
        alias_counter_ = 0;
        Query q;
        Ctx ctx;
        ctx.levels.emplace_back();
        const int nfrom = pick({50, 35, 15}) + 1;
        for (int i = 0; i < nfrom; ++i) {
            FromItem f;
            const TableShape& t = tables_[uniform(0, int(tables_.size()) - 1)];
            f.table = t.name;
            f.alias = "t" + std::to_string(i);
            ctx.levels.back().push_back({f.alias, &t});
            if (i > 0) {
                const int kind = pick({50, 30, 20});
                f.join = kind == 0 ? ast::JoinKind::Comma : (kind == 1 ? ast::JoinKind::Inner : ast::JoinKind::Cross);
                if (f.join == ast::JoinKind::Inner) {
                    Ctx on = ctx;
                    on.allow_sub = false;
                    f.on = gen(Ty::Bool, uniform(1, 2), on);
                }
            }
            q.from.push_back(std::move(f));
        }
        if (chance(75)) q.where = gen(Ty::Bool, uniform(1, 3), ctx);

        const int mode = pick({25, 15, 60});
        if (mode == 0) {
            q.aggregated = true;
            const int nkeys = uniform(1, 2);
            std::vector<Expr> keys;
            for (int i = 0; i < nkeys; ++i) {
                auto col = any_column(ctx.levels.back());
                bool dup = std::any_of(keys.begin(), keys.end(), [&](const Expr& k) {
                    return k.alias == col.alias && k.column == col.column;
                });
                if (!dup) keys.push_back(col);
            }
            q.group_by = keys;
            Ctx g = ctx;
            g.group_keys = &q.group_by;
            g.allow_agg = true;
            g.allow_sub = false;
            for (const auto& k : keys) {
                if (chance(70)) q.items.push_back({k, ""});
            }
            const int naggs = uniform(1, 2);
            for (int i = 0; i < naggs; ++i) q.items.push_back({aggregate_expr(random_type(false), g, 1), ""});
        } else if (mode == 1) {
            q.aggregated = true;
            Ctx g = ctx;
            g.group_keys = &no_keys_;
            g.allow_agg = true;
            g.allow_sub = false;
            const int n = uniform(1, 3);
            for (int i = 0; i < n; ++i) q.items.push_back({aggregate_expr(random_type(false), g, 1), ""});
        } else {
            Ctx plain = ctx;
            plain.allow_sub = chance(30);
            const int n = uniform(1, 3);
            for (int i = 0; i < n; ++i) q.items.push_back({gen(random_type(true), uniform(0, 2), plain), ""});
        }
        for (std::size_t i = 0; i < q.items.size(); ++i) q.items[i].name = "c" + std::to_string(i);
        q.distinct = chance(20);
        if (chance(35)) {
            std::vector<std::size_t> idx(q.items.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            std::shuffle(idx.begin(), idx.end(), rng_);
            for (auto i : idx) q.order_by.push_back({q.items[i].name, chance(50)});
            if (chance(80)) q.limit = uniform(0, 4);
        }
        return q;
    }

   private:
    using Level = std::vector<std::pair<std::string, const TableShape*>>;
    struct Ctx {
        std::vector<Level> levels;
        const std::vector<Expr>* group_keys = nullptr;
        bool allow_agg = false;
        bool allow_sub = true;
        int nesting = 0;
    };

    std::mt19937& rng_;
    const std::vector<TableShape>& tables_;
    int alias_counter_ = 0;
    std::vector<Expr> no_keys_;

    auto uniform(int lo, int hi) -> int { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    auto chance(int percent) -> bool { return uniform(1, 100) <= percent; }
    auto pick(std::initializer_list<int> weights) -> int {
        std::discrete_distribution<int> d(weights.begin(), weights.end());
        return d(rng_);
    }
    auto random_type(bool with_bool) -> Ty {
        return with_bool ? static_cast<Ty>(pick({35, 30, 20, 15})) : static_cast<Ty>(pick({40, 35, 25}));
    }

    static auto make(Expr::Kind kind, Ty type, std::vector<Expr> args = {}) -> Expr {
        Expr e;
        e.kind = kind;
        e.type = type;
        e.args = std::move(args);
        return e;
    }

    auto literal(Ty t) -> Expr {
        Expr e = make(Expr::Kind::Literal, t);
        switch (t) {
            case Ty::Int:
                e.value = Value(uniform(-2, 3));
                break;
            case Ty::Real: {
                static const double reals[] = {-1.0, 0.0, 0.5, 1.0, 2.5};
                e.value = Value(reals[uniform(0, 4)]);
                break;
            }
            case Ty::Text: {
                static const char* texts[] = {"a", "b", "c", ""};
                e.value = Value(texts[uniform(0, 3)]);
                break;
            }
            case Ty::Bool:
                e.value = Value(chance(50));
                break;
        }
        return e;
    }

    auto any_column(const Level& level) -> Expr {
        const auto& [alias, shape] = level[uniform(0, int(level.size()) - 1)];
        const auto& col = shape->columns[uniform(0, int(shape->columns.size()) - 1)];
        Expr e = make(Expr::Kind::Column, col.second);
        e.alias = alias;
        e.column = col.first;
        return e;
    }

    auto column_of(Ty t, const Ctx& ctx) -> std::optional<Expr> {
        std::vector<Expr> cands;
        if (ctx.group_keys) {
            for (const auto& k : *ctx.group_keys) {
                if (k.type == t) cands.push_back(k);
            }
        } else {
            for (std::size_t li = 0; li < ctx.levels.size(); ++li) {
                // favour the innermost level; outer levels make correlated refs
                const bool inner = li + 1 == ctx.levels.size();
                for (const auto& [alias, shape] : ctx.levels[li]) {
                    for (const auto& [name, type] : shape->columns) {
                        if (type != t) continue;
                        Expr e = make(Expr::Kind::Column, t);
                        e.alias = alias;
                        e.column = name;
                        cands.push_back(e);
                        if (inner) cands.push_back(e);
                    }
                }
            }
        }
        if (cands.empty()) return std::nullopt;
        return cands[uniform(0, int(cands.size()) - 1)];
    }

    auto leaf(Ty t, const Ctx& ctx) -> Expr {
        if (chance(65)) {
            if (auto c = column_of(t, ctx)) return *c;
        }
        return literal(t);
    }

    auto numeric_operand(int depth, const Ctx& ctx) -> Expr {
        return gen(chance(55) ? Ty::Int : Ty::Real, depth, ctx);
    }

    auto gen(Ty t, int depth, const Ctx& ctx) -> Expr {
        if (depth <= 0) {
            if (t == Ty::Bool && chance(60)) return comparison(0, ctx);
            return leaf(t, ctx);
        }
        switch (t) {
            case Ty::Int:
                switch (pick({25, 10, 35, 10, ctx.allow_agg ? 15 : 0, ctx.allow_sub ? 8 : 0})) {
                    case 0: return leaf(t, ctx);
                    case 1: return make(Expr::Kind::Negate, t, {gen(t, depth - 1, ctx)});
                    case 2: {
                        static const BinaryOp ops[] = {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul,
                                                       BinaryOp::Div, BinaryOp::Mod};
                        Expr e = make(Expr::Kind::Binary, t, {gen(t, depth - 1, ctx), gen(t, depth - 1, ctx)});
                        e.op = ops[uniform(0, 4)];
                        return e;
                    }
                    case 3: return make(Expr::Kind::Coalesce, t, {gen(t, depth - 1, ctx), gen(t, depth - 1, ctx)});
                    case 4: return aggregate_expr(t, ctx, depth - 1);
                    default: return scalar_subquery(t, ctx);
                }
            case Ty::Real:
                switch (pick({30, 10, 40, ctx.allow_agg ? 15 : 0, ctx.allow_sub ? 8 : 0})) {
                    case 0: return leaf(t, ctx);
                    case 1: return make(Expr::Kind::Negate, t, {gen(t, depth - 1, ctx)});
                    case 2: {
                        static const BinaryOp ops[] = {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul,
                                                       BinaryOp::Div, BinaryOp::Mod};
                        Expr real = gen(t, depth - 1, ctx);
                        Expr other = numeric_operand(depth - 1, ctx);
                        Expr e = chance(50) ? make(Expr::Kind::Binary, t, {real, other})
                                            : make(Expr::Kind::Binary, t, {other, real});
                        e.op = ops[pick({30, 25, 25, 15, 5})];
                        return e;
                    }
                    case 3: return aggregate_expr(t, ctx, depth - 1);
                    default: return scalar_subquery(t, ctx);
                }
            case Ty::Text:
                switch (pick({55, 20, ctx.allow_agg ? 15 : 0, ctx.allow_sub ? 10 : 0})) {
                    case 0: return leaf(t, ctx);
                    case 1: return make(Expr::Kind::Coalesce, t, {gen(t, depth - 1, ctx), gen(t, depth - 1, ctx)});
                    case 2: return aggregate_expr(t, ctx, depth - 1);
                    default: return scalar_subquery(t, ctx);
                }
            case Ty::Bool:
                break;
        }
        switch (pick({30, 20, 8, 8, 8, 6, 5, ctx.allow_sub ? 8 : 0, ctx.allow_sub ? 7 : 0})) {
            case 0: return comparison(depth - 1, ctx);
            case 1: {
                Expr e = make(Expr::Kind::Binary, Ty::Bool, {gen(Ty::Bool, depth - 1, ctx), gen(Ty::Bool, depth - 1, ctx)});
                e.op = chance(50) ? BinaryOp::And : BinaryOp::Or;
                return e;
            }
            case 2: return make(Expr::Kind::Not, Ty::Bool, {gen(Ty::Bool, depth - 1, ctx)});
            case 3: {
                Expr e = make(Expr::Kind::IsNull, Ty::Bool, {gen(random_type(true), depth - 1, ctx)});
                e.negated = chance(50);
                return e;
            }
            case 4: {
                const Ty lt = chance(60) ? Ty::Int : Ty::Text;
                Expr e = make(Expr::Kind::InList, Ty::Bool, {gen(lt, depth - 1, ctx)});
                const int n = uniform(1, 3);
                for (int i = 0; i < n; ++i) {
                    if (chance(15)) {
                        e.args.push_back(make(Expr::Kind::Literal, lt));
                    } else {
                        e.args.push_back(literal(lt));
                    }
                }
                e.negated = chance(40);
                return e;
            }
            case 5: {
                Expr e = make(Expr::Kind::WithinBox, Ty::Bool);
                for (int i = 0; i < 6; ++i) e.args.push_back(numeric_operand(depth > 1 ? 1 : 0, ctx));
                return e;
            }
            case 6: return leaf(Ty::Bool, ctx);
            case 7: return exists_subquery(ctx);
            default: return in_subquery(depth, ctx);
        }
    }

    auto comparison(int depth, const Ctx& ctx) -> Expr {
        static const BinaryOp ops[] = {BinaryOp::Eq, BinaryOp::Ne, BinaryOp::Lt,
                                       BinaryOp::Le, BinaryOp::Gt, BinaryOp::Ge};
        Expr e;
        const int kind = pick({65, 25, 10});
        if (kind == 0) {
            e = make(Expr::Kind::Binary, Ty::Bool, {numeric_operand(depth, ctx), numeric_operand(depth, ctx)});
            e.op = ops[uniform(0, 5)];
        } else if (kind == 1) {
            e = make(Expr::Kind::Binary, Ty::Bool, {gen(Ty::Text, depth, ctx), gen(Ty::Text, depth, ctx)});
            e.op = ops[uniform(0, 5)];
        } else {
            e = make(Expr::Kind::Binary, Ty::Bool, {leaf(Ty::Bool, ctx), leaf(Ty::Bool, ctx)});
            e.op = chance(50) ? BinaryOp::Eq : BinaryOp::Ne;
        }
        if (chance(5)) e.args[1] = make(Expr::Kind::Literal, e.args[0].type);  // compare with NULL
        return e;
    }

    auto aggregate_expr(Ty t, const Ctx& ctx, int depth) -> Expr {
        Ctx inner = ctx;
        inner.group_keys = nullptr;
        inner.allow_agg = false;
        inner.allow_sub = false;
        Expr e = make(Expr::Kind::Aggregate, t);
        switch (t) {
            case Ty::Int: {
                const int k = pick({25, 20, 25, 15, 15});
                static const AggregateFn fns[] = {AggregateFn::CountStar, AggregateFn::Count, AggregateFn::Sum,
                                                  AggregateFn::Min, AggregateFn::Max};
                e.fn = fns[k];
                if (e.fn == AggregateFn::Count) {
                    e.args.push_back(gen(random_type(true), std::max(depth, 0), inner));
                } else if (e.fn != AggregateFn::CountStar) {
                    e.args.push_back(gen(Ty::Int, std::max(depth, 0), inner));
                }
                break;
            }
            case Ty::Real: {
                static const AggregateFn fns[] = {AggregateFn::Avg, AggregateFn::Sum, AggregateFn::Min, AggregateFn::Max};
                e.fn = fns[uniform(0, 3)];
                const Ty arg = e.fn == AggregateFn::Avg && chance(50) ? Ty::Int : Ty::Real;
                e.args.push_back(gen(arg, std::max(depth, 0), inner));
                break;
            }
            default:
                e.fn = chance(50) ? AggregateFn::Min : AggregateFn::Max;
                e.type = Ty::Text;
                e.args.push_back(gen(Ty::Text, std::max(depth, 0), inner));
                break;
        }
        if (chance(20) && t != Ty::Text) {
            Expr wrapped = make(Expr::Kind::Binary, t, {e, literal(t)});
            wrapped.op = chance(50) ? BinaryOp::Add : BinaryOp::Mul;
            return wrapped;
        }
        return e;
    }

    // One-table subquery that may reference every enclosing level.
    auto sub_frame(const Ctx& ctx, Query& sub) -> Ctx {
        const TableShape& t = tables_[uniform(0, int(tables_.size()) - 1)];
        FromItem f;
        f.table = t.name;
        f.alias = "u" + std::to_string(alias_counter_++);
        Ctx inner;
        inner.levels = ctx.levels;
        inner.levels.push_back({{f.alias, &t}});
        inner.nesting = ctx.nesting + 1;
        inner.allow_sub = inner.nesting < 2;
        sub.from.push_back(std::move(f));
        if (chance(80)) sub.where = gen(Ty::Bool, uniform(0, 2), inner);
        return inner;
    }

    auto exists_subquery(const Ctx& ctx) -> Expr {
        auto sub = std::make_shared<Query>();
        sub_frame(ctx, *sub);
        sub->star = true;
        Expr e = make(Expr::Kind::Exists, Ty::Bool);
        e.negated = chance(40);
        e.query = sub;
        return e;
    }

    auto in_subquery(int depth, const Ctx& ctx) -> Expr {
        auto sub = std::make_shared<Query>();
        Ctx inner = sub_frame(ctx, *sub);
        const Ty t = chance(70) ? Ty::Int : Ty::Text;
        inner.allow_sub = false;
        sub->items.push_back({gen(t, 0, inner), ""});
        sub->distinct = chance(20);
        Expr e = make(Expr::Kind::InQuery, Ty::Bool, {gen(t, std::max(depth - 1, 0), ctx)});
        e.negated = chance(40);
        e.query = sub;
        return e;
    }

    auto scalar_subquery(Ty t, const Ctx& ctx) -> Expr {
        auto sub = std::make_shared<Query>();
        Ctx inner = sub_frame(ctx, *sub);
        inner.group_keys = &no_keys_;
        inner.allow_agg = true;
        inner.allow_sub = false;
        sub->aggregated = true;
        sub->items.push_back({aggregate_expr(t, inner, 0), ""});
        Expr e = make(Expr::Kind::Scalar, sub->items[0].expr.type);
        e.query = sub;
        return e;
    }
};

auto random_database(std::mt19937& rng, const Catalog& catalog, std::size_t max_rows) -> Database {
    Database db;
    auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    for (const auto& t : catalog.tables) {
        auto& table = db.create_table(t.name, t.kind, t.schema);
        const int n = uniform(0, int(max_rows));
        std::vector<Row> rows;
        for (int i = 0; i < n; ++i) {
            Row row;
            for (std::size_t c = 0; c < t.schema.size(); ++c) {
                const auto& col = t.schema[c];
                if (col.name == kTimestepColumn) {
                    row.emplace_back(uniform(1, 5));
                    continue;
                }
                if (col.name == kTimestampColumn) {
                    row.emplace_back(static_cast<double>(uniform(0, 4) * 100));
                    continue;
                }
                if (uniform(1, 100) <= 15) {
                    row.emplace_back();
                    continue;
                }
                switch (col.type) {
                    case ValueType::Integer:
                        row.emplace_back(uniform(-2, 3));
                        break;
                    case ValueType::Real: {
                        static const double reals[] = {-1.0, 0.0, 0.5, 1.0, 2.5, 4.0};
                        row.emplace_back(reals[uniform(0, 5)]);
                        break;
                    }
                    case ValueType::Text: {
                        static const char* texts[] = {"a", "b", "c", ""};
                        row.emplace_back(texts[uniform(0, 3)]);
                        break;
                    }
                    case ValueType::Boolean:
                        row.emplace_back(uniform(0, 1) == 1);
                        break;
                }
            }
            rows.push_back(std::move(row));
        }
        table.append_rows(rows);
    }
    return db;
}

auto has_subquery(const Expr& e) -> bool {
    if (e.query) return true;
    return std::any_of(e.args.begin(), e.args.end(), has_subquery);
}

auto query_has_subquery(const Query& q) -> bool {
    if (q.where && has_subquery(*q.where)) return true;
    for (const auto& i : q.items) {
        if (has_subquery(i.expr)) return true;
    }
    return false;
}

auto show_rows(const std::vector<Row>& rows) -> std::string {
    std::string s;
    for (const auto& r : rows) {
        s += "  (";
        for (std::size_t i = 0; i < r.size(); ++i) s += (i ? ", " : "") + r[i].to_sql();
        s += ")\n";
    }
    return s.empty() ? "  (none)\n" : s;
}

auto show_database(const Database& db) -> std::string {
    std::string s;
    for (const auto& [name, table] : db.tables()) {
        s += table.name() + ":\n" + show_rows(table.rows());
    }
    return s;
}

}  // namespace

auto random_query(std::mt19937& rng) -> Query {
    static const auto tables = oracle_tables();
    QueryGenerator gen(rng, tables);
    return gen.top_level();
}

auto run_evaluator_oracle(std::uint32_t seed, std::size_t cases) -> EvaluatorReport {
    EvaluatorReport report;
    std::mt19937 rng(seed);
    const auto catalog = validate(parse_program(kOracleProgram, "oracle"));
    const auto tables = oracle_tables();
    QueryGenerator gen(rng, tables);
    while (report.cases < cases) {
        Database db = random_database(rng, catalog, 8);
        Query q = gen.top_level();
        const std::string sql = render(q);
        PlanPtr plan;
        try {
            plan = lower_select(parse_select(sql, "oracle"), catalog);
        } catch (const std::exception& e) {
            ++report.mismatches;
            if (report.first_failure.empty()) {
                report.first_failure = "generated query rejected: " + sql + "\n" + e.what();
            }
            ++report.cases;
            continue;
        }
        const std::size_t depth = plan_depth(*plan);
        if (depth > 4) continue;
        ++report.cases;
        report.max_depth = std::max(report.max_depth, depth);
        report.max_tables = std::max(report.max_tables, q.from.size());
        for (const auto& [name, t] : db.tables()) report.max_rows = std::max(report.max_rows, t.size());
        if (query_has_subquery(q)) ++report.with_subquery;
        if (q.aggregated) ++report.aggregated;

        std::vector<Row> expected;
        std::string failure;
        try {
            expected = evaluate(q, tables, db);
        } catch (const std::exception& e) {
            failure = std::string("oracle failed: ") + e.what();
        }
        Relation got;
        if (failure.empty()) {
            try {
                got = evaluate_plan(*plan, db);
            } catch (const std::exception& e) {
                failure = std::string("engine failed: ") + e.what();
            }
        }
        if (failure.empty() && !same_bag(got.rows, expected)) {
            failure = "result mismatch\nengine:\n" + show_rows(got.rows) + "oracle:\n" + show_rows(expected);
        }
        if (!failure.empty()) {
            ++report.mismatches;
            if (report.first_failure.empty()) {
                report.first_failure = failure + "\nquery: " + sql + "\n" + show_database(db);
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// match references
// ---------------------------------------------------------------------------

namespace {

auto is_quantifier(const Pattern& p) -> bool {
    return p.kind == Pattern::Kind::Star || p.kind == Pattern::Kind::Plus ||
           p.kind == Pattern::Kind::Optional;
}

enum class Slot { Top, InConcat, Quantified };

auto render_pattern(const Pattern& p, Slot slot, bool posix) -> std::string {
    using K = Pattern::Kind;
    const std::string open_group = posix ? "(" : "(?:";
    switch (p.kind) {
        case K::Symbol:
            return std::string(1, p.symbol);
        case K::Concat: {
            std::string s;
            for (std::size_t i = 0; i < p.children.size(); ++i) {
                if (i && !posix) s += " ";
                s += render_pattern(p.children[i], Slot::InConcat, posix);
            }
            return slot == Slot::Quantified ? open_group + s + ")" : s;
        }
        case K::Alternation: {
            std::string s;
            for (std::size_t i = 0; i < p.children.size(); ++i) {
                if (i) s += "|";
                s += render_pattern(p.children[i], Slot::Top, posix);
            }
            return slot == Slot::Top ? s : open_group + s + ")";
        }
        case K::Star:
        case K::Plus:
        case K::Optional: {
            const char op = p.kind == K::Star ? '*' : (p.kind == K::Plus ? '+' : '?');
            const auto& child = p.children[0];
            std::string inner = render_pattern(child, Slot::Quantified, posix);
            if (is_quantifier(child)) inner = open_group + inner + ")";
            return inner + op;
        }
        case K::Capture:
            return "(" + render_pattern(p.children[0], Slot::Top, posix) + ")";
        case K::Group:
            return open_group + render_pattern(p.children[0], Slot::Top, posix) + ")";
    }
    return "";
}

// Continuation-passing enumeration of every parse in preference order.
class Backtracker {
   public:
    Backtracker(const std::string& text, std::size_t budget) : text_(text), budget_(budget) {}

    using Cont = std::function<void(std::size_t, std::uint32_t)>;

    void walk(const Pattern& p, std::size_t pos, std::uint32_t caps, bool captured, const Cont& k) {
        if (exhausted()) return;
        using K = Pattern::Kind;
        switch (p.kind) {
            case K::Symbol:
                if (pos < text_.size() && text_[pos] == p.symbol) {
                    k(pos + 1, captured ? caps | (1u << pos) : caps);
                }
                return;
            case K::Concat:
                concat(p, 0, pos, caps, captured, k);
                return;
            case K::Alternation:
                for (const auto& c : p.children) walk(c, pos, caps, captured, k);
                return;
            case K::Star:
                star(p.children[0], pos, caps, captured, k);
                return;
            case K::Plus:
                walk(p.children[0], pos, caps, captured, [&, pos](std::size_t end, std::uint32_t c) {
                    if (end == pos) {
                        k(end, c);
                        return;
                    }
                    star(p.children[0], end, c, captured, k);
                });
                return;
            case K::Optional:
                walk(p.children[0], pos, caps, captured, k);
                k(pos, caps);
                return;
            case K::Capture:
                walk(p.children[0], pos, caps, true, k);
                return;
            case K::Group:
                walk(p.children[0], pos, caps, captured, k);
                return;
        }
    }

    [[nodiscard]] auto exhausted() -> bool { return ++steps_ > budget_; }
    [[nodiscard]] auto over_budget() const -> bool { return steps_ > budget_; }

   private:
    const std::string& text_;
    std::size_t budget_;
    std::size_t steps_ = 0;

    void concat(const Pattern& p, std::size_t i, std::size_t pos, std::uint32_t caps, bool captured,
                const Cont& k) {
        if (i == p.children.size()) {
            k(pos, caps);
            return;
        }
        walk(p.children[i], pos, caps, captured,
             [&, i](std::size_t end, std::uint32_t c) { concat(p, i + 1, end, c, captured, k); });
    }

    // Greedy: another iteration first, but only if it consumed something.
    void star(const Pattern& body, std::size_t pos, std::uint32_t caps, bool captured, const Cont& k) {
        walk(body, pos, caps, captured, [&, pos](std::size_t end, std::uint32_t c) {
            if (end == pos) return;
            star(body, end, c, captured, k);
        });
        k(pos, caps);
    }
};

}  // namespace

auto render_diel(const Pattern& p) -> std::string { return render_pattern(p, Slot::Top, false); }
auto render_posix(const Pattern& p) -> std::string { return render_pattern(p, Slot::Top, true); }

auto regex_spans(const Pattern& p, const std::string& text) -> MatchOutcome {
    MatchOutcome out;
    const std::regex re(render_posix(p), std::regex::extended);
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::smatch m;
        const bool found = std::regex_search(text.begin() + static_cast<std::ptrdiff_t>(pos), text.end(), m, re,
                                             std::regex_constants::match_continuous);
        if (found && m.length(0) > 0) {
            const auto len = static_cast<std::size_t>(m.length(0));
            out.spans.emplace_back(pos, pos + len);
            pos += len;
        } else {
            ++pos;
        }
    }
    return out;
}

auto backtracking_matches(const Pattern& p, const std::string& text) -> std::optional<MatchOutcome> {
    MatchOutcome out;
    Backtracker bt(text, 4'000'000);
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::optional<std::size_t> best_end;
        std::uint32_t best_caps = 0;
        bt.walk(p, pos, 0, false, [&](std::size_t end, std::uint32_t caps) {
            if (!best_end || end > *best_end) {
                best_end = end;
                best_caps = caps;
            }
        });
        if (bt.over_budget()) return std::nullopt;
        if (best_end && *best_end > pos) {
            const std::size_t occurrence = out.spans.size();
            out.spans.emplace_back(pos, *best_end);
            for (std::size_t i = pos; i < *best_end; ++i) {
                if (best_caps & (1u << i)) out.captured.emplace_back(occurrence, i);
            }
            pos = *best_end;
        } else {
            ++pos;
        }
    }
    return out;
}

namespace {

class PatternGenerator {
   public:
    explicit PatternGenerator(std::mt19937& rng) : rng_(rng) {}

    auto pattern(int depth) -> Pattern {
        using K = Pattern::Kind;
        if (depth == 0 || chance(25)) return symbol();
        Pattern p;
        switch (std::discrete_distribution<int>({22, 16, 14, 10, 10, 18, 10})(rng_)) {
            case 0: {
                p.kind = K::Concat;
                const int n = uniform(2, 3);
                for (int i = 0; i < n; ++i) p.children.push_back(pattern(depth - 1));
                break;
            }
            case 1: {
                p.kind = K::Alternation;
                const int n = uniform(2, 3);
                for (int i = 0; i < n; ++i) p.children.push_back(pattern(depth - 1));
                break;
            }
            case 2: p.kind = K::Star; p.children.push_back(pattern(depth - 1)); break;
            case 3: p.kind = K::Plus; p.children.push_back(pattern(depth - 1)); break;
            case 4: p.kind = K::Optional; p.children.push_back(pattern(depth - 1)); break;
            case 5: p.kind = K::Capture; p.children.push_back(pattern(depth - 1)); break;
            default: p.kind = K::Group; p.children.push_back(pattern(depth - 1)); break;
        }
        return p;
    }

    auto sequence() -> std::string {
        const int n = uniform(0, 12);
        std::string s;
        for (int i = 0; i < n; ++i) s += "abc"[uniform(0, 2)];
        return s;
    }

    auto uniform(int lo, int hi) -> int { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    auto chance(int percent) -> bool { return uniform(1, 100) <= percent; }

   private:
    std::mt19937& rng_;

    auto symbol() -> Pattern {
        Pattern p;
        p.symbol = "abc"[uniform(0, 2)];
        return p;
    }
};

auto has_capture(const Pattern& p) -> bool {
    if (p.kind == Pattern::Kind::Capture) return true;
    return std::any_of(p.children.begin(), p.children.end(), has_capture);
}

}  // namespace

auto run_match_oracle(std::uint32_t seed, std::size_t cases) -> MatchReport {
    MatchReport report;
    std::mt19937 rng(seed);
    PatternGenerator gen(rng);
    while (report.cases < cases) {
        Pattern p = gen.pattern(3);
        if (!has_capture(p) && gen.chance(80)) {
            Pattern cap;
            cap.kind = Pattern::Kind::Capture;
            cap.children.push_back(std::move(p));
            p = std::move(cap);
        }
        const std::string text = gen.sequence();
        auto reference = backtracking_matches(p, text);
        if (!reference) continue;
        ++report.cases;

        std::vector<std::optional<std::string>> symbols;
        for (char c : text) symbols.emplace_back(std::string(1, c));
        const auto spans = match::find_matches(match::compile_pattern(render_diel(p)), symbols);
        MatchOutcome engine;
        for (std::size_t i = 0; i < spans.size(); ++i) {
            engine.spans.emplace_back(spans[i].begin, spans[i].end);
            for (auto pos : spans[i].captured) engine.captured.emplace_back(i, pos);
        }
        report.matches_seen += engine.spans.size();

        const auto posix = regex_spans(p, text);
        auto describe = [&](const std::string& what) {
            std::ostringstream os;
            os << what << "\npattern: " << render_diel(p) << "  (posix " << render_posix(p) << ")\ntext: '"
               << text << "'\nengine spans:";
            for (auto [b, e] : engine.spans) os << " [" << b << "," << e << ")";
            os << "\nregex spans:";
            for (auto [b, e] : posix.spans) os << " [" << b << "," << e << ")";
            os << "\nengine captured:";
            for (auto [o, i] : engine.captured) os << " " << o << ":" << i;
            os << "\nreference captured:";
            for (auto [o, i] : reference->captured) os << " " << o << ":" << i;
            return os.str();
        };
        if (engine.spans != posix.spans || reference->spans != posix.spans) {
            ++report.span_mismatches;
            if (report.first_failure.empty()) report.first_failure = describe("span mismatch");
        } else if (engine.captured != reference->captured) {
            ++report.capture_mismatches;
            if (report.first_failure.empty()) report.first_failure = describe("capture mismatch");
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// desugaring
// ---------------------------------------------------------------------------

namespace {

auto shadow_name(const std::string& table) -> std::string { return "latest__" + table; }

void redirect_latest(ast::SelectQuery& q);

void redirect_latest(ast::Expr& e) {
    if (e.query) {
        auto copy = *e.query;
        redirect_latest(copy);
        e.query = std::make_shared<const ast::SelectQuery>(std::move(copy));
    }
    for (auto& a : e.args) redirect_latest(a);
}

void redirect_latest(ast::SelectQuery& q) {
    for (auto& item : q.from) {
        if (item.ref.latest) {
            if (item.ref.alias.empty()) item.ref.alias = item.ref.name;
            item.ref.name = shadow_name(item.ref.name);
            item.ref.latest = false;
        }
        if (item.on) redirect_latest(*item.on);
    }
    for (auto& p : q.projection) {
        if (!p.star) redirect_latest(p.expr);
    }
    if (q.where) redirect_latest(*q.where);
    for (auto& g : q.group_by) redirect_latest(g);
    for (auto& o : q.order_by) redirect_latest(o.expr);
}

auto random_state(std::mt19937& rng, const Catalog& catalog) -> Database {
    Database db;
    auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    for (const auto& t : catalog.tables) {
        auto& table = db.create_table(t.name, t.kind, t.schema);
        const int n = uniform(0, 6);
        std::vector<Row> rows;
        for (int i = 0; i < n; ++i) {
            Row row;
            for (const auto& col : t.schema) {
                if (col.name == kTimestepColumn && t.kind != TableKind::Static) {
                    row.emplace_back(uniform(1, 5));
                } else if (col.name == kTimestampColumn && t.kind != TableKind::Static) {
                    static const double stamps[] = {0, 100, 150, 250, 1000, 1150, 1250};
                    row.emplace_back(stamps[uniform(0, 6)]);
                } else if (uniform(1, 100) <= 10) {
                    row.emplace_back();
                } else {
                    switch (col.type) {
                        case ValueType::Integer:
                            row.emplace_back(uniform(-1, 4));
                            break;
                        case ValueType::Real: {
                            static const double reals[] = {0.0, 5.0, 10.0, 12.0, 15.0, 20.0, 50.0};
                            row.emplace_back(reals[uniform(0, 6)]);
                            break;
                        }
                        case ValueType::Text: {
                            static const char* texts[] = {"down", "move", "up", "add", "delete", "A", "B", "C"};
                            row.emplace_back(texts[uniform(0, 7)]);
                            break;
                        }
                        case ValueType::Boolean:
                            row.emplace_back(uniform(0, 1) == 1);
                            break;
                    }
                }
            }
            rows.push_back(std::move(row));
        }
        table.append_rows(rows);
    }
    return db;
}

auto max_timestep_rows(const Table& table) -> std::vector<Row> {
    const std::size_t col = find_column(table.schema(), kTimestepColumn);
    std::optional<std::int64_t> best;
    for (const auto& row : table.rows()) {
        if (!row[col].is_null() && (!best || row[col].as_integer() > *best)) best = row[col].as_integer();
    }
    std::vector<Row> out;
    for (const auto& row : table.rows()) {
        if (best && !row[col].is_null() && row[col].as_integer() == *best) out.push_back(row);
    }
    return out;
}

}  // namespace

auto latest_stress_program() -> std::string {
    return "CREATE INPUT brushEvent (latMin REAL, latMax REAL, lonMin REAL, lonMax REAL, mouseEvent TEXT);\n"
           "CREATE INPUT mapEvent (latMin REAL, latMax REAL, lonMin REAL, lonMax REAL);\n"
           "CREATE TABLE h (v INTEGER, s TEXT);\n"
           "CREATE VIEW joined AS SELECT b.latMin, m.latMax FROM LATEST brushEvent b, LATEST mapEvent m"
           " WHERE b.latMin <= m.latMax;\n"
           "CREATE VIEW plain AS SELECT * FROM LATEST h WHERE v > 0;\n"
           "CREATE VIEW agg AS SELECT COUNT(*) AS n, MAX(v) AS mx FROM LATEST h;\n"
           "CREATE VIEW nested AS SELECT s FROM h WHERE EXISTS"
           " (SELECT * FROM LATEST mapEvent m WHERE m.latMin < h.v * 5);\n"
           "CREATE VIEW self AS SELECT b.mouseEvent FROM LATEST brushEvent b"
           " INNER JOIN LATEST brushEvent c ON b.latMin = c.latMin;\n"
           "CREATE VIEW mixed AS SELECT h.s, l.v FROM h, LATEST h l WHERE h.timestep < l.timestep;\n"
           "CREATE VIEW grouped AS SELECT mouseEvent, COUNT(*) AS n FROM LATEST brushEvent"
           " GROUP BY mouseEvent;\n"
           "CREATE VIEW scalar AS SELECT v FROM h WHERE v = (SELECT MAX(v) FROM LATEST h);\n";
}

auto run_desugar_oracle(const std::vector<std::string>& programs, std::uint32_t seed, std::size_t states)
    -> DesugarReport {
    DesugarReport report;
    std::mt19937 rng(seed);
    for (const auto& text : programs) {
        const auto program = parse_program(text, "desugar");
        const auto catalog = validate(program);
        std::string shadows;
        for (const auto& t : catalog.tables) {
            if (t.kind == TableKind::Static) continue;
            shadows += "CREATE TABLE " + shadow_name(t.name) + " (";
            for (std::size_t i = 0; i < t.user_columns; ++i) {
                shadows += (i ? ", " : "") + quote_identifier(t.schema[i].name) + " " +
                           std::string(type_name(t.schema[i].type));
            }
            shadows += ");\n";
        }
        const auto shadow_catalog = validate(parse_program(text + "\n" + shadows, "desugar-shadow"));
        std::vector<PlanPtr> direct_plans;
        for (const auto& v : catalog.views) {
            auto redirected = v.query;
            redirect_latest(redirected);
            direct_plans.push_back(lower_select(redirected, shadow_catalog));
        }
        ++report.programs;
        report.views += catalog.views.size();

        for (std::size_t s = 0; s < states; ++s) {
            Database sugared = random_state(rng, catalog);
            Database direct;
            for (const auto& t : shadow_catalog.tables) direct.create_table(t.name, t.kind, t.schema);
            for (const auto& [name, table] : sugared.tables()) {
                direct.table(table.name()).append_rows(table.rows());
                if (table.kind() != TableKind::Static) {
                    direct.table(shadow_name(table.name())).append_rows(max_timestep_rows(table));
                }
            }
            ++report.states;
            for (std::size_t idx : catalog.evaluation_order) {
                const auto& view = catalog.views[idx];
                std::optional<Relation> a;
                std::optional<Relation> b;
                std::string err_a;
                std::string err_b;
                try {
                    a = evaluate_plan(*view.plan, sugared);
                } catch (const EvalError& e) {
                    err_a = e.what();
                }
                try {
                    b = evaluate_plan(*direct_plans[idx], direct);
                } catch (const EvalError& e) {
                    err_b = e.what();
                }
                ++report.comparisons;
                sugared.set_view(view.name, a.value_or(Relation{view.plan->schema, {}}));
                direct.set_view(view.name, b.value_or(Relation{view.plan->schema, {}}));
                if (!a && !b) {
                    ++report.both_failed;
                    continue;
                }
                if (a && b && multiset_equal(*a, *b)) continue;
                ++report.mismatches;
                if (report.first_failure.empty()) {
                    report.first_failure = "view " + view.name + " differs\nsugared: " +
                                           (a ? show_rows(a->rows) : err_a + "\n") + "direct: " +
                                           (b ? show_rows(b->rows) : err_b + "\n") + show_database(sugared);
                }
            }
        }
    }
    return report;
}

}  // namespace diel::oracle
