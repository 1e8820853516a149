#include "diel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace diel {

namespace {

struct RowLess {
    auto operator()(const Row& a, const Row& b) const -> bool { return compare_rows(a, b) < 0; }
};

auto wrap_add(std::int64_t a, std::int64_t b) -> std::int64_t {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}

auto wrap_sub(std::int64_t a, std::int64_t b) -> std::int64_t {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}

auto wrap_mul(std::int64_t a, std::int64_t b) -> std::int64_t {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

auto arithmetic(ast::BinaryOp op, const Value& l, const Value& r) -> Value {
    using ast::BinaryOp;
    if (l.is_null() || r.is_null()) return Value();
    if (!l.is_numeric() || !r.is_numeric()) {
        throw EvalError(std::string("arithmetic on non-numeric values: ") + l.to_sql() + " " +
                        ast::op_text(op) + " " + r.to_sql());
    }
    if (l.is_integer() && r.is_integer()) {
        const std::int64_t a = l.as_integer();
        const std::int64_t b = r.as_integer();
        switch (op) {
            case BinaryOp::Add:
                return Value(wrap_add(a, b));
            case BinaryOp::Sub:
                return Value(wrap_sub(a, b));
            case BinaryOp::Mul:
                return Value(wrap_mul(a, b));
            case BinaryOp::Div:
                if (b == 0) return Value();
                if (b == -1) return Value(wrap_sub(0, a));
                return Value(a / b);
            case BinaryOp::Mod:
                if (b == 0) return Value();
                if (b == -1) return Value(std::int64_t{0});
                return Value(a % b);
            default:
                break;
        }
    }
    const double a = l.as_double();
    const double b = r.as_double();
    switch (op) {
        case BinaryOp::Add:
            return Value(a + b);
        case BinaryOp::Sub:
            return Value(a - b);
        case BinaryOp::Mul:
            return Value(a * b);
        case BinaryOp::Div:
            if (b == 0.0) return Value();
            return Value(a / b);
        case BinaryOp::Mod:
            if (b == 0.0) return Value();
            return Value(std::fmod(a, b));
        default:
            break;
    }
    throw EvalError("bad arithmetic operator");
}

auto compare_op(ast::BinaryOp op, const Value& l, const Value& r) -> Value {
    using ast::BinaryOp;
    const auto c = sql_compare(l, r);
    if (!c) return Value();
    switch (op) {
        case BinaryOp::Eq:
            return Value(*c == 0);
        case BinaryOp::Ne:
            return Value(*c != 0);
        case BinaryOp::Lt:
            return Value(*c < 0);
        case BinaryOp::Le:
            return Value(*c <= 0);
        case BinaryOp::Gt:
            return Value(*c > 0);
        case BinaryOp::Ge:
            return Value(*c >= 0);
        default:
            break;
    }
    throw EvalError("bad comparison operator");
}

// Three-valued membership: true on a match, null if any comparison was
// unknown, false otherwise.
template <class Range>
auto membership(const Value& needle, const Range& candidates) -> Value {
    if (needle.is_null()) {
        return std::begin(candidates) == std::end(candidates) ? Value(false) : Value();
    }
    bool unknown = false;
    for (const Value& c : candidates) {
        const auto cmp = sql_compare(needle, c);
        if (!cmp) {
            unknown = true;
        } else if (*cmp == 0) {
            return Value(true);
        }
    }
    return unknown ? Value() : Value(false);
}

auto negate(const Value& v) -> Value { return v.is_null() ? v : Value(!v.as_bool()); }

struct Accumulator {
    std::int64_t count = 0;
    std::int64_t int_sum = 0;
    double real_sum = 0.0;
    bool saw_real = false;
    Value best;
};

class Evaluator {
   public:
    explicit Evaluator(const Database& db) : db_(db) {}

    auto run(const PlanNode& n) -> Relation {
        using K = PlanNode::Kind;
        Relation out;
        out.schema = n.schema;
        switch (n.kind) {
            case K::Scan: {
                const Relation* rel = db_.find_relation(n.relation);
                if (!rel) throw EvalError("relation '" + n.relation + "' is not available");
                out.rows = rel->rows;
                break;
            }
            case K::Values:
                out.rows.emplace_back();
                break;
            case K::Filter: {
                Relation in = run(*n.children[0]);
                for (auto& row : in.rows) {
                    if (is_true(eval(*n.predicate, row))) out.rows.push_back(std::move(row));
                }
                break;
            }
            case K::Project: {
                Relation in = run(*n.children[0]);
                out.rows.reserve(in.rows.size());
                for (const auto& row : in.rows) {
                    Row r;
                    r.reserve(n.exprs.size());
                    for (std::size_t i = 0; i < n.exprs.size(); ++i) {
                        Value v = eval(n.exprs[i], row);
                        if (v.is_integer() && n.schema[i].type == ValueType::Real) {
                            v = Value(static_cast<double>(v.as_integer()));
                        }
                        r.push_back(std::move(v));
                    }
                    out.rows.push_back(std::move(r));
                }
                break;
            }
            case K::Join: {
                Relation left = run(*n.children[0]);
                Relation right = run(*n.children[1]);
                for (const auto& l : left.rows) {
                    for (const auto& r : right.rows) {
                        Row row = l;
                        row.insert(row.end(), r.begin(), r.end());
                        if (n.predicate && !is_true(eval(*n.predicate, row))) continue;
                        out.rows.push_back(std::move(row));
                    }
                }
                break;
            }
            case K::Aggregate:
                out.rows = aggregate(n, run(*n.children[0]));
                break;
            case K::Sort: {
                Relation in = run(*n.children[0]);
                std::vector<std::pair<Row, Row>> keyed;
                keyed.reserve(in.rows.size());
                for (auto& row : in.rows) {
                    Row key;
                    for (const auto& k : n.keys) key.push_back(eval(k.expr, row));
                    keyed.emplace_back(std::move(key), std::move(row));
                }
                std::stable_sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
                    for (std::size_t i = 0; i < n.keys.size(); ++i) {
                        int c = canonical_compare(a.first[i], b.first[i]);
                        if (n.keys[i].descending) c = -c;
                        if (c != 0) return c < 0;
                    }
                    return false;
                });
                for (auto& [key, row] : keyed) out.rows.push_back(std::move(row));
                break;
            }
            case K::Limit: {
                Relation in = run(*n.children[0]);
                const auto keep = std::min<std::size_t>(in.rows.size(),
                                                        static_cast<std::size_t>(std::max<std::int64_t>(n.limit, 0)));
                in.rows.resize(keep);
                out.rows = std::move(in.rows);
                break;
            }
            case K::Distinct: {
                Relation in = run(*n.children[0]);
                std::map<Row, bool, RowLess> seen;
                for (auto& row : in.rows) {
                    if (seen.emplace(row, true).second) out.rows.push_back(std::move(row));
                }
                break;
            }
            case K::Match:
                out.rows = match(n, run(*n.children[0]));
                break;
        }
        return out;
    }

    auto eval(const BoundExpr& e, const Row& row) -> Value {
        using K = BoundExpr::Kind;
        switch (e.kind) {
            case K::Literal:
                return e.value;
            case K::Column: {
                const Row* source = &row;
                if (e.depth > 0) {
                    if (e.depth > outer_.size()) throw EvalError("unbound outer reference");
                    source = outer_[outer_.size() - e.depth];
                }
                if (e.index >= source->size()) throw EvalError("column slot out of range");
                return (*source)[e.index];
            }
            case K::Unary: {
                Value v = eval(e.args[0], row);
                if (v.is_null()) return v;
                if (e.unary_op == ast::UnaryOp::Not) {
                    if (!v.is_bool()) throw EvalError("NOT applied to " + v.to_sql());
                    return Value(!v.as_bool());
                }
                if (v.is_integer()) return Value(wrap_sub(0, v.as_integer()));
                if (v.is_real()) return Value(-v.as_real());
                throw EvalError("cannot negate " + v.to_sql());
            }
            case K::Binary:
                return binary(e, row);
            case K::IsNull: {
                const bool null = eval(e.args[0], row).is_null();
                return Value(e.negated ? !null : null);
            }
            case K::Call: {
                std::vector<Value> args;
                args.reserve(e.args.size());
                for (const auto& a : e.args) args.push_back(eval(a, row));
                try {
                    return e.function->fn(args);
                } catch (const EvalError&) {
                    throw;
                } catch (const std::exception& ex) {
                    throw EvalError(e.function->name + ": " + ex.what());
                }
            }
            case K::Coalesce:
                for (const auto& a : e.args) {
                    Value v = eval(a, row);
                    if (!v.is_null()) return v;
                }
                return Value();
            case K::InList: {
                Value needle = eval(e.args[0], row);
                std::vector<Value> candidates;
                for (std::size_t i = 1; i < e.args.size(); ++i) candidates.push_back(eval(e.args[i], row));
                Value v = membership(needle, candidates);
                return e.negated ? negate(v) : v;
            }
            case K::InSubquery: {
                Value needle = eval(e.args[0], row);
                const Relation& sub = subquery(e, row);
                std::vector<Value> candidates;
                candidates.reserve(sub.rows.size());
                for (const auto& r : sub.rows) candidates.push_back(r[0]);
                Value v = membership(needle, candidates);
                return e.negated ? negate(v) : v;
            }
            case K::Exists: {
                const bool any = !subquery(e, row).rows.empty();
                return Value(e.negated ? !any : any);
            }
            case K::ScalarSubquery: {
                const Relation& sub = subquery(e, row);
                if (sub.rows.empty()) return Value();
                if (sub.rows.size() > 1) {
                    throw EvalError("scalar subquery returned " + std::to_string(sub.rows.size()) +
                                    " rows");
                }
                return sub.rows[0][0];
            }
        }
        throw EvalError("bad expression");
    }

   private:
    const Database& db_;
    std::vector<const Row*> outer_;
    std::map<const PlanNode*, Relation> memo_;
    Relation scratch_;

    auto subquery(const BoundExpr& e, const Row& row) -> const Relation& {
        if (!e.correlated) {
            auto it = memo_.find(e.subquery.get());
            if (it != memo_.end()) return it->second;
        }
        outer_.push_back(&row);
        Relation result;
        try {
            result = run(*e.subquery);
        } catch (...) {
            outer_.pop_back();
            throw;
        }
        outer_.pop_back();
        if (!e.correlated) return memo_.emplace(e.subquery.get(), std::move(result)).first->second;
        scratch_ = std::move(result);
        return scratch_;
    }

    auto binary(const BoundExpr& e, const Row& row) -> Value {
        using ast::BinaryOp;
        if (e.binary_op == BinaryOp::And || e.binary_op == BinaryOp::Or) {
            const bool is_and = e.binary_op == BinaryOp::And;
            Value l = eval(e.args[0], row);
            if (l.is_bool() && l.as_bool() != is_and) return l;  // short circuit
            Value r = eval(e.args[1], row);
            if (r.is_bool() && r.as_bool() != is_and) return r;
            if (l.is_null() || r.is_null()) return Value();
            return Value(is_and);
        }
        Value l = eval(e.args[0], row);
        Value r = eval(e.args[1], row);
        if (ast::is_comparison(e.binary_op)) return compare_op(e.binary_op, l, r);
        return arithmetic(e.binary_op, l, r);
    }

    auto aggregate(const PlanNode& n, const Relation& in) -> std::vector<Row> {
        std::map<Row, std::size_t, RowLess> index;
        std::vector<Row> keys;
        std::vector<std::vector<Accumulator>> accs;
        for (const auto& row : in.rows) {
            Row key;
            for (const auto& k : n.exprs) key.push_back(eval(k, row));
            auto [it, inserted] = index.emplace(key, keys.size());
            if (inserted) {
                keys.push_back(std::move(key));
                accs.emplace_back(n.aggregates.size());
            }
            auto& group = accs[it->second];
            for (std::size_t j = 0; j < n.aggregates.size(); ++j) {
                const auto& spec = n.aggregates[j];
                Accumulator& acc = group[j];
                if (spec.fn == AggregateFn::CountStar) {
                    ++acc.count;
                    continue;
                }
                Value v = eval(*spec.arg, row);
                if (v.is_null()) continue;
                ++acc.count;
                switch (spec.fn) {
                    case AggregateFn::Sum:
                    case AggregateFn::Avg:
                        if (!v.is_numeric()) throw EvalError("SUM/AVG over " + v.to_sql());
                        if (v.is_integer() && !acc.saw_real) {
                            acc.int_sum = wrap_add(acc.int_sum, v.as_integer());
                        } else {
                            if (!acc.saw_real) acc.real_sum = static_cast<double>(acc.int_sum);
                            acc.saw_real = true;
                            acc.real_sum += v.as_double();
                        }
                        break;
                    case AggregateFn::Min:
                        if (acc.count == 1 || canonical_compare(v, acc.best) < 0) acc.best = v;
                        break;
                    case AggregateFn::Max:
                        if (acc.count == 1 || canonical_compare(v, acc.best) > 0) acc.best = v;
                        break;
                    default:
                        break;
                }
            }
        }
        if (keys.empty() && n.exprs.empty()) {
            keys.emplace_back();
            accs.emplace_back(n.aggregates.size());
        }
        std::vector<Row> out;
        for (std::size_t g = 0; g < keys.size(); ++g) {
            Row row = keys[g];
            for (std::size_t j = 0; j < n.aggregates.size(); ++j) {
                const Accumulator& acc = accs[g][j];
                switch (n.aggregates[j].fn) {
                    case AggregateFn::Count:
                    case AggregateFn::CountStar:
                        row.emplace_back(acc.count);
                        break;
                    case AggregateFn::Sum:
                        if (acc.count == 0) {
                            row.emplace_back();
                        } else if (acc.saw_real) {
                            row.emplace_back(acc.real_sum);
                        } else {
                            row.emplace_back(acc.int_sum);
                        }
                        break;
                    case AggregateFn::Avg:
                        if (acc.count == 0) {
                            row.emplace_back();
                        } else {
                            const double sum =
                                acc.saw_real ? acc.real_sum : static_cast<double>(acc.int_sum);
                            row.emplace_back(sum / static_cast<double>(acc.count));
                        }
                        break;
                    case AggregateFn::Min:
                    case AggregateFn::Max:
                        row.push_back(acc.best);
                        break;
                }
            }
            out.push_back(std::move(row));
        }
        return out;
    }

    static auto match(const PlanNode& n, Relation in) -> std::vector<Row> {
        if (n.order_index) {
            const std::size_t k = *n.order_index;
            std::stable_sort(in.rows.begin(), in.rows.end(), [k](const Row& a, const Row& b) {
                return canonical_compare(a[k], b[k]) < 0;
            });
        }
        std::vector<std::optional<std::string>> symbols;
        symbols.reserve(in.rows.size());
        for (const auto& row : in.rows) {
            const Value& v = row[n.match_index];
            symbols.push_back(v.is_null() ? std::nullopt : std::optional<std::string>(v.to_string()));
        }
        std::vector<Row> out;
        const auto matches = match::find_matches(*n.nfa, symbols);
        for (std::size_t occurrence = 0; occurrence < matches.size(); ++occurrence) {
            for (std::size_t pos : matches[occurrence].captured) {
                Row row;
                row.reserve(in.rows[pos].size() + 1);
                row.emplace_back(static_cast<std::int64_t>(occurrence));
                row.insert(row.end(), in.rows[pos].begin(), in.rows[pos].end());
                out.push_back(std::move(row));
            }
        }
        return out;
    }
};

}  // namespace

auto evaluate_plan(const PlanNode& plan, const Database& db) -> Relation {
    return Evaluator(db).run(plan);
}

auto evaluate_expr(const BoundExpr& expr, const Row& row, const Database& db) -> Value {
    return Evaluator(db).eval(expr, row);
}

}  // namespace diel
