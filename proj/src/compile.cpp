#include "diel/compile.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "diel/match.hpp"
#include "diel/parser.hpp"
#include "diel/printer.hpp"
#include "util.hpp"

namespace diel {

using ast::Expr;
using ast::ExprKind;
using ast::SelectQuery;

auto category_name(SemanticCategory category) -> std::string_view {
    switch (category) {
        case SemanticCategory::UndefinedRelation:
            return "undefined relation";
        case SemanticCategory::UndefinedColumn:
            return "undefined column";
        case SemanticCategory::AmbiguousColumn:
            return "ambiguous column";
        case SemanticCategory::ReadOnlyInput:
            return "write to read-only input";
        case SemanticCategory::StaticWrite:
            return "write to static table";
        case SemanticCategory::DuplicateRelation:
            return "duplicate relation";
        case SemanticCategory::DuplicateColumn:
            return "duplicate column";
        case SemanticCategory::IllegalLatest:
            return "LATEST on non-event relation";
        case SemanticCategory::Cycle:
            return "cyclic view dependency";
        case SemanticCategory::TypeMismatch:
            return "type mismatch";
        case SemanticCategory::InvalidAfter:
            return "AFTER names a non-input";
        case SemanticCategory::InvalidAggregate:
            return "invalid aggregate";
        case SemanticCategory::InvalidFunction:
            return "invalid function call";
        case SemanticCategory::InvalidPattern:
            return "invalid MATCH pattern";
        case SemanticCategory::InvalidQuery:
            return "invalid query";
    }
    return "error";
}

namespace {

auto join_messages(const std::vector<SemanticError>& errors) -> std::string {
    std::string out;
    for (const auto& e : errors) {
        if (!out.empty()) out += "; ";
        out += std::to_string(e.span.line) + ":" + std::to_string(e.span.column) + ": " +
               e.message;
    }
    return out;
}

struct CompileFailure {
    SemanticError error;
};

// A view whose dependency failed; its own errors would only be noise.
struct SkipDependent {};

[[noreturn]] void fail(SemanticCategory category, const ast::Span& span,
                       const std::string& detail = {}) {
    std::string message(category_name(category));
    if (!detail.empty()) message += ": " + detail;
    throw CompileFailure{{category, span, std::move(message)}};
}

auto is_numeric(std::optional<ValueType> t) -> bool {
    return t == ValueType::Integer || t == ValueType::Real;
}

auto comparable(std::optional<ValueType> a, std::optional<ValueType> b) -> bool {
    if (!a || !b) return true;
    return *a == *b || (is_numeric(a) && is_numeric(b));
}

// Common type of two branches (COALESCE, IN lists); nullopt when unknown.
auto unify(std::optional<ValueType> a, std::optional<ValueType> b) -> std::optional<ValueType> {
    if (!a) return b;
    if (!b) return a;
    if (*a == *b) return a;
    return ValueType::Real;  // numeric widening; callers check comparable()
}

auto type_label(std::optional<ValueType> t) -> std::string {
    return t ? std::string(type_name(*t)) : "null";
}

auto is_aggregate_call(const Expr& e) -> bool {
    return e.kind == ExprKind::Call && is_aggregate_name(e.name);
}

// Aggregates at this query level (subqueries own theirs).
auto contains_aggregate(const Expr& e) -> bool {
    if (is_aggregate_call(e)) return true;
    return std::any_of(e.args.begin(), e.args.end(),
                       [](const Expr& a) { return contains_aggregate(a); });
}

auto contains_subquery(const Expr& e) -> bool {
    if (e.query) return true;
    return std::any_of(e.args.begin(), e.args.end(),
                       [](const Expr& a) { return contains_subquery(a); });
}

/// Shape of a relation visible to the binder.
struct RelationShape {
    std::string name;
    Schema schema;
    std::size_t star_count = 0;
};

using RelationLookup = std::function<std::optional<RelationShape>(std::string_view)>;

struct ScopeColumn {
    std::string qualifier;
    std::string name;
    ValueType type = ValueType::Integer;
    std::size_t slot = 0;
    bool in_star = true;
};

using Scope = std::vector<ScopeColumn>;

struct AggState {
    Scope input_scope;
    std::vector<BoundExpr> keys;
    std::vector<std::string> key_dumps;
    std::vector<AggregateSpec> specs;
    std::vector<std::string> spec_dumps;
    std::vector<std::string> spec_labels;
    std::vector<std::optional<ValueType>> spec_types;
};

struct Level {
    Scope scope;
    AggState* agg = nullptr;
    bool correlated = false;
};

auto make_column(std::size_t depth, const ScopeColumn& c) -> BoundExpr {
    BoundExpr b;
    b.kind = BoundExpr::Kind::Column;
    b.depth = depth;
    b.index = c.slot;
    b.label = c.qualifier.empty() ? c.name : c.qualifier + "." + c.name;
    b.type = c.type;
    return b;
}

auto make_node(PlanNode::Kind kind, Schema schema, std::vector<PlanPtr> children = {})
    -> std::shared_ptr<PlanNode> {
    auto n = std::make_shared<PlanNode>();
    n->kind = kind;
    n->schema = std::move(schema);
    n->children = std::move(children);
    return n;
}

auto column_type(const BoundExpr& e) -> ValueType { return e.type.value_or(ValueType::Integer); }

class Binder {
   public:
    explicit Binder(const FunctionRegistry& functions, RelationLookup lookup)
        : functions_(functions), lookup_(std::move(lookup)) {}

    /// Binds a query at the top level (no enclosing rows).
    auto bind_top(const SelectQuery& q) -> PlanPtr {
        levels_.clear();
        bool correlated = false;
        return bind_query(q, correlated);
    }

    /// Binds a predicate against a single row with the given scope.
    auto bind_row_predicate(const Expr& e, Scope scope) -> BoundExpr {
        levels_.clear();
        levels_.push_back(std::make_unique<Level>());
        levels_.back()->scope = std::move(scope);
        BoundExpr b = bind(e);
        require_boolean(b, e.span, "CHECK");
        levels_.pop_back();
        return b;
    }

   private:
    const FunctionRegistry& functions_;
    RelationLookup lookup_;
    std::vector<std::unique_ptr<Level>> levels_;

    auto current() -> Level& { return *levels_.back(); }

    void require_boolean(const BoundExpr& b, const ast::Span& span, const char* where) {
        if (b.type && *b.type != ValueType::Boolean) {
            fail(SemanticCategory::TypeMismatch, span,
                 std::string(where) + " condition has type " + type_label(b.type) +
                     ", expected boolean");
        }
    }

    auto bind_query(const SelectQuery& q, bool& correlated) -> PlanPtr {
        levels_.push_back(std::make_unique<Level>());
        PlanPtr plan = bind_query_body(q);
        correlated = current().correlated;
        levels_.pop_back();
        return plan;
    }

    auto bind_from(const SelectQuery& q) -> PlanPtr {
        if (q.from.empty()) return make_node(PlanNode::Kind::Values, {});
        PlanPtr plan;
        std::vector<std::string> qualifiers;
        for (const auto& item : q.from) {
            const auto& ref = item.ref;
            if (ref.latest) fail(SemanticCategory::IllegalLatest, ref.span, "LATEST not desugared");
            auto shape = lookup_(ref.name);
            if (!shape) fail(SemanticCategory::UndefinedRelation, ref.span, ref.name);
            const std::string qualifier = ref.alias.empty() ? shape->name : ref.alias;
            for (const auto& existing : qualifiers) {
                if (iequals(existing, qualifier)) {
                    fail(SemanticCategory::InvalidQuery, ref.span,
                         "table name '" + qualifier + "' used more than once in FROM");
                }
            }
            qualifiers.push_back(qualifier);

            auto scan = make_node(PlanNode::Kind::Scan, shape->schema);
            scan->relation = shape->name;
            scan->alias = qualifier;
            Scope& scope = current().scope;
            const std::size_t offset = scope.size();
            for (std::size_t i = 0; i < shape->schema.size(); ++i) {
                scope.push_back({qualifier, shape->schema[i].name, shape->schema[i].type,
                                 offset + i, i < shape->star_count});
            }
            if (!plan) {
                plan = scan;
                continue;
            }
            Schema joined = plan->schema;
            joined.insert(joined.end(), scan->schema.begin(), scan->schema.end());
            auto join = make_node(PlanNode::Kind::Join, std::move(joined), {plan, scan});
            if (item.on) {
                reject_aggregates(*item.on, "JOIN condition");
                BoundExpr on = bind(*item.on);
                require_boolean(on, item.on->span, "JOIN");
                join->predicate = std::move(on);
            }
            plan = join;
        }
        return plan;
    }

    void reject_aggregates(const Expr& e, const char* where) {
        if (contains_aggregate(e)) {
            fail(SemanticCategory::InvalidAggregate, e.span,
                 std::string("aggregate functions are not allowed in ") + where);
        }
    }

    auto bind_match(const ast::MatchClause& m, PlanPtr child) -> PlanPtr {
        Scope& scope = current().scope;
        const ScopeColumn* target = nullptr;
        for (const auto& c : scope) {
            if (iequals(c.name, m.column)) {
                if (target) fail(SemanticCategory::AmbiguousColumn, m.span, m.column);
                target = &c;
            }
        }
        if (!target) fail(SemanticCategory::UndefinedColumn, m.span, m.column);
        match::CompiledNfa nfa;
        try {
            nfa = match::compile_pattern(m.pattern);
        } catch (const match::PatternError& err) {
            fail(SemanticCategory::InvalidPattern, m.span,
                 std::string(err.what()) + " at offset " + std::to_string(err.position));
        }
        auto node = make_node(PlanNode::Kind::Match, {}, {child});
        node->match_index = target->slot;
        for (const auto& c : scope) {
            if (iequals(c.name, kTimestepColumn) && iequals(c.qualifier, target->qualifier)) {
                node->order_index = c.slot;
            }
        }
        node->nfa = std::make_shared<const match::CompiledNfa>(std::move(nfa));
        node->schema.push_back({"mg", ValueType::Integer});
        node->schema.insert(node->schema.end(), child->schema.begin(), child->schema.end());

        Scope shifted;
        shifted.push_back({"", "mg", ValueType::Integer, 0, true});
        for (auto c : scope) {
            ++c.slot;
            shifted.push_back(std::move(c));
        }
        scope = std::move(shifted);
        return node;
    }

    static auto output_name(const ast::SelectItem& item) -> std::string {
        if (!item.alias.empty()) return item.alias;
        if (item.expr.kind == ExprKind::Column) return item.expr.name;
        return to_source(item.expr);
    }

    auto bind_query_body(const SelectQuery& q) -> PlanPtr {
        PlanPtr plan = bind_from(q);

        if (q.where) {
            reject_aggregates(*q.where, "WHERE");
            BoundExpr where = bind(*q.where);
            require_boolean(where, q.where->span, "WHERE");
            auto filter = make_node(PlanNode::Kind::Filter, plan->schema, {plan});
            filter->predicate = std::move(where);
            plan = filter;
        }

        if (q.match) plan = bind_match(*q.match, plan);

        bool grouped = !q.group_by.empty();
        for (const auto& item : q.projection) {
            if (!item.star && contains_aggregate(item.expr)) grouped = true;
        }
        for (const auto& o : q.order_by) {
            if (contains_aggregate(o.expr)) grouped = true;
        }

        AggState agg;
        if (grouped) {
            agg.input_scope = current().scope;
            Scope post;
            for (const auto& g : q.group_by) {
                reject_aggregates(g, "GROUP BY");
                BoundExpr key = bind(g);
                if (key.kind == BoundExpr::Kind::Column && key.depth == 0) {
                    for (const auto& c : agg.input_scope) {
                        if (c.slot == key.index) {
                            ScopeColumn pc = c;
                            pc.slot = agg.keys.size();
                            pc.in_star = false;
                            post.push_back(pc);
                            break;
                        }
                    }
                }
                agg.key_dumps.push_back(dump(key));
                agg.keys.push_back(std::move(key));
            }
            current().scope = std::move(post);
            current().agg = &agg;
        }

        // Projection.
        std::vector<BoundExpr> exprs;
        Schema out_schema;
        for (const auto& item : q.projection) {
            if (item.star) {
                if (grouped) {
                    fail(SemanticCategory::InvalidAggregate, item.span,
                         "'*' cannot be combined with GROUP BY or aggregates");
                }
                bool any_qualifier = item.star_table.empty();
                for (const auto& c : current().scope) {
                    if (!item.star_table.empty()) {
                        if (!iequals(c.qualifier, item.star_table)) continue;
                        any_qualifier = true;
                    }
                    if (!c.in_star) continue;
                    exprs.push_back(make_column(0, c));
                    out_schema.push_back({c.name, c.type});
                }
                if (!any_qualifier) {
                    fail(SemanticCategory::UndefinedRelation, item.span, item.star_table);
                }
                continue;
            }
            BoundExpr e = bind(item.expr);
            out_schema.push_back({output_name(item), column_type(e)});
            exprs.push_back(std::move(e));
        }
        for (std::size_t i = 0; i < out_schema.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                if (iequals(out_schema[i].name, out_schema[j].name)) {
                    fail(SemanticCategory::DuplicateColumn, q.span,
                         "output column '" + out_schema[i].name + "' appears more than once");
                }
            }
        }

        // ORDER BY terms resolve to output columns, adding hidden ones if needed.
        const std::size_t visible = exprs.size();
        std::vector<SortKey> sort_keys;
        for (const auto& o : q.order_by) {
            std::optional<std::size_t> index;
            if (o.expr.kind == ExprKind::Column && o.expr.table.empty()) {
                for (std::size_t i = 0; i < visible; ++i) {
                    if (iequals(out_schema[i].name, o.expr.name)) {
                        index = i;
                        break;
                    }
                }
            }
            if (!index) {
                BoundExpr e = bind(o.expr);
                const std::string d = dump(e);
                for (std::size_t i = 0; i < exprs.size(); ++i) {
                    if (dump(exprs[i]) == d) {
                        index = i;
                        break;
                    }
                }
                if (!index) {
                    if (q.distinct) {
                        fail(SemanticCategory::InvalidQuery, o.expr.span,
                             "ORDER BY expression must appear in the select list of a DISTINCT "
                             "query");
                    }
                    index = exprs.size();
                    out_schema.push_back({"#order" + std::to_string(*index), column_type(e)});
                    exprs.push_back(std::move(e));
                }
            }
            BoundExpr key;
            key.kind = BoundExpr::Kind::Column;
            key.index = *index;
            key.label = out_schema[*index].name;
            key.type = out_schema[*index].type;
            sort_keys.push_back({std::move(key), o.descending});
        }

        if (grouped) {
            Schema agg_schema;
            for (const auto& k : agg.keys) agg_schema.push_back({dump(k), column_type(k)});
            for (std::size_t j = 0; j < agg.specs.size(); ++j) {
                agg_schema.push_back({agg.spec_labels[j], agg.spec_types[j].value_or(ValueType::Integer)});
            }
            auto node = make_node(PlanNode::Kind::Aggregate, std::move(agg_schema), {plan});
            node->exprs = agg.keys;
            node->aggregates = agg.specs;
            plan = node;
            current().agg = nullptr;
        }

        auto project = make_node(PlanNode::Kind::Project, out_schema, {plan});
        project->exprs = std::move(exprs);
        plan = project;

        if (q.distinct) plan = make_node(PlanNode::Kind::Distinct, plan->schema, {plan});
        if (!sort_keys.empty()) {
            auto sort = make_node(PlanNode::Kind::Sort, plan->schema, {plan});
            sort->keys = std::move(sort_keys);
            plan = sort;
        }
        if (q.limit) {
            if (*q.limit < 0) fail(SemanticCategory::InvalidQuery, q.span, "negative LIMIT");
            auto limit = make_node(PlanNode::Kind::Limit, plan->schema, {plan});
            limit->limit = *q.limit;
            plan = limit;
        }
        if (out_schema.size() > visible) {
            Schema trimmed(out_schema.begin(), out_schema.begin() + static_cast<long>(visible));
            auto trim = make_node(PlanNode::Kind::Project, trimmed, {plan});
            for (std::size_t i = 0; i < visible; ++i) {
                ScopeColumn c{"", out_schema[i].name, out_schema[i].type, i, true};
                trim->exprs.push_back(make_column(0, c));
            }
            plan = trim;
        }
        return plan;
    }

    auto resolve(const Expr& e) -> BoundExpr {
        const std::string shown = e.table.empty() ? e.name : e.table + "." + e.name;
        auto find_in = [&](const Scope& scope) -> const ScopeColumn* {
            const ScopeColumn* found = nullptr;
            for (const auto& c : scope) {
                if (!iequals(c.name, e.name)) continue;
                if (!e.table.empty() && !iequals(c.qualifier, e.table)) continue;
                if (found && found->slot != c.slot) {
                    fail(SemanticCategory::AmbiguousColumn, e.span, shown);
                }
                found = &c;
            }
            return found;
        };
        for (std::size_t d = 0; d < levels_.size(); ++d) {
            Level& level = *levels_[levels_.size() - 1 - d];
            if (const ScopeColumn* c = find_in(level.scope)) {
                for (std::size_t k = 0; k < d; ++k) levels_[levels_.size() - 1 - k]->correlated = true;
                return make_column(d, *c);
            }
            if (level.agg && find_in(level.agg->input_scope)) {
                fail(SemanticCategory::InvalidAggregate, e.span,
                     "column '" + shown + "' must appear in GROUP BY or be used in an aggregate");
            }
        }
        fail(SemanticCategory::UndefinedColumn, e.span, shown);
    }

    auto bind_subquery(const SelectQuery& q, const ast::Span& span, bool one_column) -> BoundExpr {
        BoundExpr b;
        bool correlated = false;
        b.subquery = bind_query(q, correlated);
        b.correlated = correlated;
        if (one_column && b.subquery->schema.size() != 1) {
            fail(SemanticCategory::InvalidQuery, span,
                 "subquery must return exactly one column, got " +
                     std::to_string(b.subquery->schema.size()));
        }
        if (one_column) b.type = b.subquery->schema[0].type;
        return b;
    }

    auto bind_aggregate(const Expr& e) -> BoundExpr {
        Level& level = current();
        AggState* agg = level.agg;
        if (!agg) {
            fail(SemanticCategory::InvalidAggregate, e.span,
                 "aggregate function " + e.name + " is not allowed here");
        }
        const std::string name = to_lower(e.name);
        AggregateSpec spec;
        std::optional<ValueType> type;
        if (e.star) {
            if (name != "count") {
                fail(SemanticCategory::InvalidAggregate, e.span, e.name + "(*) is not supported");
            }
            spec.fn = AggregateFn::CountStar;
            type = ValueType::Integer;
        } else {
            if (e.args.size() != 1) {
                fail(SemanticCategory::InvalidAggregate, e.span,
                     e.name + " expects 1 argument, got " + std::to_string(e.args.size()));
            }
            // The argument sees input rows, not groups.
            Scope saved = std::move(level.scope);
            level.scope = agg->input_scope;
            level.agg = nullptr;
            BoundExpr arg;
            try {
                arg = bind(e.args[0]);
            } catch (...) {
                level.scope = std::move(saved);
                level.agg = agg;
                throw;
            }
            level.scope = std::move(saved);
            level.agg = agg;
            if (name == "count") {
                spec.fn = AggregateFn::Count;
                type = ValueType::Integer;
            } else if (name == "sum" || name == "avg") {
                if (arg.type && !is_numeric(arg.type)) {
                    fail(SemanticCategory::TypeMismatch, e.span,
                         e.name + " of " + type_label(arg.type));
                }
                spec.fn = name == "sum" ? AggregateFn::Sum : AggregateFn::Avg;
                type = name == "avg" ? std::optional<ValueType>(ValueType::Real) : arg.type;
            } else {
                spec.fn = name == "min" ? AggregateFn::Min : AggregateFn::Max;
                type = arg.type;
            }
            spec.arg = std::move(arg);
        }
        const std::string key = std::string(aggregate_name(spec.fn)) +
                                (spec.fn == AggregateFn::CountStar ? "*" : "") + "(" +
                                (spec.arg ? dump(*spec.arg) : std::string()) + ")";
        std::size_t slot = agg->spec_dumps.size();
        for (std::size_t j = 0; j < agg->spec_dumps.size(); ++j) {
            if (agg->spec_dumps[j] == key) slot = j;
        }
        if (slot == agg->spec_dumps.size()) {
            agg->spec_dumps.push_back(key);
            agg->specs.push_back(std::move(spec));
            agg->spec_labels.push_back(to_source(e));
            agg->spec_types.push_back(type);
        }
        BoundExpr b;
        b.kind = BoundExpr::Kind::Column;
        b.index = agg->keys.size() + slot;
        b.label = agg->spec_labels[slot];
        b.type = agg->spec_types[slot];
        return b;
    }

    // In a grouped query, an expression equal to a group key reads the key.
    auto match_group_key(const Expr& e) -> std::optional<BoundExpr> {
        Level& level = current();
        AggState* agg = level.agg;
        if (!agg || agg->keys.empty() || contains_aggregate(e) || contains_subquery(e) ||
            e.kind == ExprKind::Literal) {
            return std::nullopt;
        }
        Scope saved = std::move(level.scope);
        level.scope = agg->input_scope;
        level.agg = nullptr;
        std::optional<BoundExpr> bound;
        try {
            bound = bind(e);
        } catch (const CompileFailure&) {
        }
        level.scope = std::move(saved);
        level.agg = agg;
        if (!bound) return std::nullopt;
        const std::string d = dump(*bound);
        for (std::size_t i = 0; i < agg->key_dumps.size(); ++i) {
            if (agg->key_dumps[i] == d) {
                BoundExpr b;
                b.kind = BoundExpr::Kind::Column;
                b.index = i;
                b.label = d;
                b.type = agg->keys[i].type;
                return b;
            }
        }
        return std::nullopt;
    }

    auto bind(const Expr& e) -> BoundExpr {
        using K = BoundExpr::Kind;
        if (is_aggregate_call(e)) return bind_aggregate(e);
        if (auto key = match_group_key(e)) return *key;

        BoundExpr b;
        switch (e.kind) {
            case ExprKind::Literal:
                b.kind = K::Literal;
                b.value = e.value;
                b.type = e.value.type();
                return b;
            case ExprKind::Column:
                return resolve(e);
            case ExprKind::Unary: {
                b.kind = K::Unary;
                b.unary_op = e.unary_op;
                b.args.push_back(bind(e.args[0]));
                const auto t = b.args[0].type;
                if (e.unary_op == ast::UnaryOp::Negate) {
                    if (t && !is_numeric(t)) {
                        fail(SemanticCategory::TypeMismatch, e.span, "cannot negate " + type_label(t));
                    }
                    b.type = t;
                } else {
                    if (t && *t != ValueType::Boolean) {
                        fail(SemanticCategory::TypeMismatch, e.span, "NOT applied to " + type_label(t));
                    }
                    b.type = ValueType::Boolean;
                }
                return b;
            }
            case ExprKind::Binary: {
                b.kind = K::Binary;
                b.binary_op = e.binary_op;
                b.args.push_back(bind(e.args[0]));
                b.args.push_back(bind(e.args[1]));
                const auto l = b.args[0].type;
                const auto r = b.args[1].type;
                const std::string types = type_label(l) + " " + ast::op_text(e.binary_op) + " " +
                                          type_label(r);
                if (ast::is_arithmetic(e.binary_op)) {
                    if ((l && !is_numeric(l)) || (r && !is_numeric(r))) {
                        fail(SemanticCategory::TypeMismatch, e.span, types);
                    }
                    b.type = unify(l, r);
                } else if (ast::is_comparison(e.binary_op)) {
                    if (!comparable(l, r)) fail(SemanticCategory::TypeMismatch, e.span, types);
                    b.type = ValueType::Boolean;
                } else {
                    if ((l && *l != ValueType::Boolean) || (r && *r != ValueType::Boolean)) {
                        fail(SemanticCategory::TypeMismatch, e.span, types);
                    }
                    b.type = ValueType::Boolean;
                }
                return b;
            }
            case ExprKind::IsNull:
                b.kind = K::IsNull;
                b.negated = e.negated;
                b.args.push_back(bind(e.args[0]));
                b.type = ValueType::Boolean;
                return b;
            case ExprKind::Call:
                return bind_call(e);
            case ExprKind::InList: {
                b.kind = K::InList;
                b.negated = e.negated;
                for (const auto& a : e.args) b.args.push_back(bind(a));
                for (std::size_t i = 1; i < b.args.size(); ++i) {
                    if (!comparable(b.args[0].type, b.args[i].type)) {
                        fail(SemanticCategory::TypeMismatch, e.args[i].span,
                             type_label(b.args[0].type) + " IN list containing " +
                                 type_label(b.args[i].type));
                    }
                }
                b.type = ValueType::Boolean;
                return b;
            }
            case ExprKind::InSubquery: {
                BoundExpr lhs = bind(e.args[0]);
                b = bind_subquery(*e.query, e.span, true);
                if (!comparable(lhs.type, b.type)) {
                    fail(SemanticCategory::TypeMismatch, e.span,
                         type_label(lhs.type) + " IN subquery of " + type_label(b.type));
                }
                b.kind = K::InSubquery;
                b.negated = e.negated;
                b.args.push_back(std::move(lhs));
                b.type = ValueType::Boolean;
                return b;
            }
            case ExprKind::Exists:
                b = bind_subquery(*e.query, e.span, false);
                b.kind = K::Exists;
                b.negated = e.negated;
                b.type = ValueType::Boolean;
                return b;
            case ExprKind::Subquery:
                b = bind_subquery(*e.query, e.span, true);
                b.kind = K::ScalarSubquery;
                return b;
        }
        fail(SemanticCategory::InvalidQuery, e.span, "unsupported expression");
    }

    auto bind_call(const Expr& e) -> BoundExpr {
        BoundExpr b;
        if (e.star) {
            fail(SemanticCategory::InvalidFunction, e.span, e.name + "(*) is not supported");
        }
        if (iequals(e.name, "coalesce")) {
            if (e.args.empty()) {
                fail(SemanticCategory::InvalidFunction, e.span, "COALESCE needs at least one argument");
            }
            b.kind = BoundExpr::Kind::Coalesce;
            for (const auto& a : e.args) {
                b.args.push_back(bind(a));
                if (!comparable(b.type, b.args.back().type)) {
                    fail(SemanticCategory::TypeMismatch, a.span,
                         "COALESCE of " + type_label(b.type) + " and " +
                             type_label(b.args.back().type));
                }
                b.type = unify(b.type, b.args.back().type);
            }
            return b;
        }
        auto fn = functions_.find(e.name);
        if (!fn) fail(SemanticCategory::InvalidFunction, e.span, "unknown function '" + e.name + "'");
        if (fn->arity != e.args.size()) {
            fail(SemanticCategory::InvalidFunction, e.span,
                 fn->name + " expects " + std::to_string(fn->arity) + " arguments, got " +
                     std::to_string(e.args.size()));
        }
        b.kind = BoundExpr::Kind::Call;
        b.function = fn;
        for (const auto& a : e.args) b.args.push_back(bind(a));
        b.type = fn->result_type;
        return b;
    }
};

// LATEST rewriting ---------------------------------------------------------

auto desugar_expr(const Expr& e) -> Expr;

auto desugar_query(const SelectQuery& q) -> SelectQuery {
    SelectQuery out = q;
    for (auto& item : out.projection) {
        if (!item.star) item.expr = desugar_expr(item.expr);
    }
    std::vector<Expr> conjuncts;
    for (auto& item : out.from) {
        if (item.on) item.on = desugar_expr(*item.on);
        if (!item.ref.latest) continue;
        item.ref.latest = false;
        const ast::Span span = item.ref.span;
        SelectQuery max_q;
        max_q.span = span;
        ast::SelectItem max_item;
        max_item.span = span;
        max_item.expr = Expr::call("MAX", {Expr::column("", kTimestepColumn, span)}, span);
        max_q.projection.push_back(std::move(max_item));
        ast::FromItem from;
        from.ref.span = span;
        from.ref.name = item.ref.name;
        max_q.from.push_back(std::move(from));
        const std::string qualifier = q.from.size() > 1 ? item.ref.effective_name() : "";
        conjuncts.push_back(Expr::binary(ast::BinaryOp::Eq,
                                         Expr::column(qualifier, kTimestepColumn, span),
                                         Expr::subquery(std::move(max_q), span), span));
    }
    if (out.where) out.where = desugar_expr(*out.where);
    for (auto& c : conjuncts) {
        if (out.where) {
            out.where = Expr::binary(ast::BinaryOp::And, std::move(*out.where), std::move(c),
                                     out.where->span);
        } else {
            out.where = std::move(c);
        }
    }
    for (auto& g : out.group_by) g = desugar_expr(g);
    for (auto& o : out.order_by) o.expr = desugar_expr(o.expr);
    return out;
}

auto desugar_expr(const Expr& e) -> Expr {
    Expr out = e;
    for (auto& a : out.args) a = desugar_expr(a);
    if (out.query) out.query = std::make_shared<const SelectQuery>(desugar_query(*out.query));
    return out;
}

void collect_refs(const SelectQuery& q, std::vector<std::string>& out);

void collect_expr_refs(const Expr& e, std::vector<std::string>& out) {
    if (e.query) collect_refs(*e.query, out);
    for (const auto& a : e.args) collect_expr_refs(a, out);
}

void collect_refs(const SelectQuery& q, std::vector<std::string>& out) {
    for (const auto& item : q.from) {
        const bool seen = std::any_of(out.begin(), out.end(),
                                      [&](const std::string& s) { return iequals(s, item.ref.name); });
        if (!seen) out.push_back(item.ref.name);
        if (item.on) collect_expr_refs(*item.on, out);
    }
    for (const auto& item : q.projection) {
        if (!item.star) collect_expr_refs(item.expr, out);
    }
    if (q.where) collect_expr_refs(*q.where, out);
    for (const auto& g : q.group_by) collect_expr_refs(g, out);
    for (const auto& o : q.order_by) collect_expr_refs(o.expr, out);
}

void collect_latest(const SelectQuery& q, std::vector<const ast::TableRef*>& out);

void collect_expr_latest(const Expr& e, std::vector<const ast::TableRef*>& out) {
    if (e.query) collect_latest(*e.query, out);
    for (const auto& a : e.args) collect_expr_latest(a, out);
}

void collect_latest(const SelectQuery& q, std::vector<const ast::TableRef*>& out) {
    for (const auto& item : q.from) {
        if (item.ref.latest) out.push_back(&item.ref);
        if (item.on) collect_expr_latest(*item.on, out);
    }
    for (const auto& item : q.projection) {
        if (!item.star) collect_expr_latest(item.expr, out);
    }
    if (q.where) collect_expr_latest(*q.where, out);
    for (const auto& g : q.group_by) collect_expr_latest(g, out);
    for (const auto& o : q.order_by) collect_expr_latest(o.expr, out);
}

auto implicit_columns() -> Schema {
    return {{kTimestepColumn, ValueType::Integer}, {kTimestampColumn, ValueType::Real}};
}

auto constraint_text(const ast::ColumnConstraint& c) -> std::string {
    switch (c.kind) {
        case ast::ConstraintKind::NotNull:
            return "NOT NULL";
        case ast::ConstraintKind::Unique:
            return "UNIQUE";
        case ast::ConstraintKind::Check:
            return "CHECK (" + to_source(*c.check) + ")";
    }
    return "";
}

auto shape_lookup(const Catalog& catalog, const std::set<std::string>* failed)
    -> RelationLookup {
    return [&catalog, failed](std::string_view name) -> std::optional<RelationShape> {
        if (const TableInfo* t = catalog.find_table(name)) {
            return RelationShape{t->name, t->schema, t->user_columns};
        }
        if (const ViewInfo* v = catalog.find_view(name)) {
            if (!v->plan) {
                if (failed && failed->count(to_lower(name)) > 0) throw SkipDependent{};
                return std::nullopt;
            }
            return RelationShape{v->name, v->plan->schema, v->plan->schema.size()};
        }
        return std::nullopt;
    };
}

class Validator {
   public:
    Validator(const ast::Program& program, const std::vector<StaticTableSpec>& statics,
              std::shared_ptr<const FunctionRegistry> functions)
        : program_(program), statics_(statics) {
        catalog_.source_name = program.source_name;
        catalog_.functions =
            functions ? std::move(functions) : std::make_shared<const FunctionRegistry>();
    }

    auto run() -> Catalog {
        declare_relations();
        order_views();
        bind_views();
        bind_programs();
        if (!errors_.empty()) {
            std::stable_sort(errors_.begin(), errors_.end(),
                             [](const SemanticError& a, const SemanticError& b) {
                                 return a.span.offset < b.span.offset;
                             });
            throw SemanticErrors(program_.source_name, std::move(errors_));
        }
        return std::move(catalog_);
    }

   private:
    const ast::Program& program_;
    const std::vector<StaticTableSpec>& statics_;
    Catalog catalog_;
    std::vector<SemanticError> errors_;
    std::set<std::string> declared_;  // lower-cased relation names
    std::set<std::string> failed_;    // views that did not bind
    std::vector<std::size_t> view_statement_;

    template <class F>
    void guarded(F&& f) {
        try {
            f();
        } catch (const CompileFailure& failure) {
            errors_.push_back(failure.error);
        }
    }

    auto declare(const std::string& name, const ast::Span& span) -> bool {
        if (!declared_.insert(to_lower(name)).second) {
            errors_.push_back({SemanticCategory::DuplicateRelation, span,
                               std::string(category_name(SemanticCategory::DuplicateRelation)) +
                                   ": " + name});
            return false;
        }
        return true;
    }

    void declare_table(const std::string& name, TableKind kind, const ast::Span& span,
                       const std::vector<ast::ColumnDef>& columns) {
        if (!declare(name, span)) return;
        TableInfo info;
        info.name = name;
        info.kind = kind;
        info.span = span;
        guarded([&] {
            for (std::size_t i = 0; i < columns.size(); ++i) {
                const auto& c = columns[i];
                if (iequals(c.name, kTimestepColumn) || iequals(c.name, kTimestampColumn)) {
                    fail(SemanticCategory::DuplicateColumn, c.span,
                         "'" + c.name + "' is an implicit column");
                }
                if (find_column(info.schema, c.name) != std::string::npos) {
                    fail(SemanticCategory::DuplicateColumn, c.span, name + "." + c.name);
                }
                info.schema.push_back({c.name, c.type});
            }
        });
        info.user_columns = info.schema.size();
        for (auto& c : implicit_columns()) {
            if (find_column(info.schema, c.name) == std::string::npos) info.schema.push_back(c);
        }
        Scope scope;
        for (std::size_t i = 0; i < info.schema.size(); ++i) {
            scope.push_back({name, info.schema[i].name, info.schema[i].type, i, true});
        }
        for (std::size_t i = 0; i < columns.size() && i < info.user_columns; ++i) {
            for (const auto& constraint : columns[i].constraints) {
                ColumnRule rule;
                rule.column = i;
                rule.kind = constraint.kind;
                rule.text = constraint_text(constraint);
                if (constraint.kind == ast::ConstraintKind::Check) {
                    bool ok = false;
                    guarded([&] {
                        if (contains_subquery(*constraint.check)) {
                            fail(SemanticCategory::InvalidQuery, constraint.check->span,
                                 "subqueries are not allowed in column CHECK constraints");
                        }
                        if (contains_aggregate(*constraint.check)) {
                            fail(SemanticCategory::InvalidAggregate, constraint.check->span,
                                 "aggregate functions are not allowed in CHECK");
                        }
                        Binder binder(*catalog_.functions, [](std::string_view) {
                            return std::optional<RelationShape>();
                        });
                        rule.check = binder.bind_row_predicate(*constraint.check, scope);
                        ok = true;
                    });
                    if (!ok) continue;
                }
                info.rules.push_back(std::move(rule));
            }
        }
        catalog_.tables.push_back(std::move(info));
    }

    void declare_relations() {
        for (const auto& s : statics_) {
            if (!declare(s.name, {})) continue;
            TableInfo info;
            info.name = s.name;
            info.kind = TableKind::Static;
            info.schema = s.schema;
            info.user_columns = s.schema.size();
            catalog_.tables.push_back(std::move(info));
        }
        for (std::size_t i = 0; i < program_.statements.size(); ++i) {
            const auto& stmt = program_.statements[i];
            if (const auto* in = std::get_if<ast::InputDef>(&stmt)) {
                declare_table(in->name, TableKind::Input, in->span, in->columns);
            } else if (const auto* h = std::get_if<ast::HistoryTableDef>(&stmt)) {
                declare_table(h->name, TableKind::History, h->span, h->columns);
            } else if (const auto* v = std::get_if<ast::ViewDef>(&stmt)) {
                add_view(v->name, false, v->span, v->query, i);
            } else if (const auto* o = std::get_if<ast::OutputDef>(&stmt)) {
                add_view(o->name, true, o->span, o->query, i);
            }
        }
    }

    void add_view(const std::string& name, bool is_output, const ast::Span& span,
                  const SelectQuery& query, std::size_t statement) {
        if (!declare(name, span)) return;
        ViewInfo info;
        info.name = name;
        info.is_output = is_output;
        info.span = span;
        info.declaration_index = catalog_.views.size();
        info.query = query;
        info.reads = referenced_relations(query);
        catalog_.views.push_back(std::move(info));
        view_statement_.push_back(statement);
    }

    void order_views() {
        const auto& views = catalog_.views;
        const std::size_t n = views.size();
        std::vector<std::vector<std::size_t>> deps(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto& r : views[i].reads) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (iequals(views[j].name, r)) deps[i].push_back(j);
                }
            }
        }
        std::vector<bool> placed(n, false);
        std::vector<std::size_t>& order = catalog_.evaluation_order;
        bool progress = true;
        while (progress) {
            progress = false;
            for (std::size_t i = 0; i < n; ++i) {
                if (placed[i]) continue;
                const bool ready = std::all_of(deps[i].begin(), deps[i].end(),
                                               [&](std::size_t j) { return placed[j]; });
                if (ready) {
                    placed[i] = true;
                    order.push_back(i);
                    progress = true;
                    break;  // restart so ties go to the earliest declaration
                }
            }
        }
        if (order.size() == n) return;

        // Report each cycle once, starting from its earliest member.
        std::vector<bool> reported(n, false);
        for (std::size_t start = 0; start < n; ++start) {
            if (placed[start] || reported[start]) continue;
            std::vector<std::size_t> path{start};
            std::vector<int> seen_at(n, -1);
            seen_at[start] = 0;
            std::size_t cur = start;
            std::optional<std::size_t> cycle_begin;
            while (!cycle_begin) {
                std::optional<std::size_t> next;
                for (std::size_t j : deps[cur]) {
                    if (!placed[j]) {
                        next = j;
                        break;
                    }
                }
                if (!next) break;
                if (seen_at[*next] >= 0) {
                    cycle_begin = static_cast<std::size_t>(seen_at[*next]);
                    path.push_back(*next);
                    break;
                }
                seen_at[*next] = static_cast<int>(path.size());
                path.push_back(*next);
                cur = *next;
            }
            if (!cycle_begin) continue;
            std::string text;
            bool already = false;
            for (std::size_t k = *cycle_begin; k < path.size(); ++k) {
                if (k + 1 < path.size() && reported[path[k]]) already = true;
                if (!text.empty()) text += " -> ";
                text += views[path[k]].name;
            }
            for (std::size_t k = *cycle_begin; k < path.size(); ++k) reported[path[k]] = true;
            if (already) continue;
            const ViewInfo& first = views[path[*cycle_begin]];
            errors_.push_back({SemanticCategory::Cycle, first.span,
                               std::string(category_name(SemanticCategory::Cycle)) + ": " + text});
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!placed[i]) failed_.insert(to_lower(views[i].name));
        }
    }

    auto view_checks(std::size_t statement) -> const std::vector<Expr>& {
        const auto& stmt = program_.statements[statement];
        if (const auto* v = std::get_if<ast::ViewDef>(&stmt)) return v->checks;
        return std::get<ast::OutputDef>(stmt).checks;
    }

    void check_latest(const SelectQuery& query) {
        std::vector<const ast::TableRef*> refs;
        collect_latest(query, refs);
        for (const auto* ref : refs) {
            const TableInfo* t = catalog_.find_table(ref->name);
            if (t && t->kind != TableKind::Static) continue;
            if (t) {
                fail(SemanticCategory::IllegalLatest, ref->span,
                     "LATEST " + ref->name + " names a static table");
            }
            if (catalog_.find_view(ref->name)) {
                fail(SemanticCategory::IllegalLatest, ref->span,
                     "LATEST " + ref->name + " names a view");
            }
            fail(SemanticCategory::UndefinedRelation, ref->span, ref->name);
        }
    }

    void bind_views() {
        for (std::size_t idx : catalog_.evaluation_order) {
            ViewInfo& view = catalog_.views[idx];
            bool ok = false;
            try {
                guarded([&] {
                    check_latest(view.query);
                    view.desugared = desugar_latest(view.query, catalog_);
                    Binder binder(*catalog_.functions, shape_lookup(catalog_, &failed_));
                    PlanPtr plan = binder.bind_top(view.desugared);
                    Scope scope;
                    for (std::size_t i = 0; i < plan->schema.size(); ++i) {
                        scope.push_back({view.name, plan->schema[i].name, plan->schema[i].type, i,
                                         true});
                    }
                    std::vector<ViewCheck> checks;
                    for (const auto& c : view_checks(view_statement_[idx])) {
                        if (contains_aggregate(c)) {
                            fail(SemanticCategory::InvalidAggregate, c.span,
                                 "aggregate functions are not allowed in CHECK");
                        }
                        Expr desugared = desugar_expr(c);
                        checks.push_back({binder.bind_row_predicate(desugared, scope),
                                          "CHECK (" + to_source(c) + ")"});
                    }
                    view.plan = std::move(plan);
                    view.checks = std::move(checks);
                    ok = true;
                });
            } catch (const SkipDependent&) {
            }
            if (!ok) failed_.insert(to_lower(view.name));
        }
    }

    auto bind_insert(const ast::InsertStatement& ins) -> InsertPlan {
        InsertPlan plan;
        plan.span = ins.span;
        const TableInfo* table = catalog_.find_table(ins.table);
        if (!table) {
            if (catalog_.find_view(ins.table)) {
                fail(SemanticCategory::InvalidQuery, ins.span,
                     "cannot insert into view '" + ins.table + "'");
            }
            fail(SemanticCategory::UndefinedRelation, ins.span, ins.table);
        }
        if (table->kind == TableKind::Input) {
            fail(SemanticCategory::ReadOnlyInput, ins.span, table->name);
        }
        if (table->kind == TableKind::Static) {
            fail(SemanticCategory::StaticWrite, ins.span, table->name);
        }
        plan.table = table->name;
        if (ins.columns.empty()) {
            for (std::size_t i = 0; i < table->user_columns; ++i) plan.targets.push_back(i);
        } else {
            for (const auto& c : ins.columns) {
                const std::size_t i = find_column(table->schema, c);
                if (i == std::string::npos) {
                    fail(SemanticCategory::UndefinedColumn, ins.span, table->name + "." + c);
                }
                if (i >= table->user_columns) {
                    fail(SemanticCategory::InvalidQuery, ins.span,
                         "implicit column '" + c + "' is assigned automatically");
                }
                if (std::find(plan.targets.begin(), plan.targets.end(), i) != plan.targets.end()) {
                    fail(SemanticCategory::DuplicateColumn, ins.span, c);
                }
                plan.targets.push_back(i);
            }
        }
        Binder binder(*catalog_.functions, shape_lookup(catalog_, &failed_));
        if (ins.select) {
            check_latest(*ins.select);
            plan.source = binder.bind_top(desugar_latest(*ins.select, catalog_));
        } else {
            SelectQuery q;
            q.span = ins.span;
            for (std::size_t i = 0; i < ins.values->size(); ++i) {
                ast::SelectItem item;
                item.expr = desugar_expr((*ins.values)[i]);
                item.alias = "#" + std::to_string(i);
                q.projection.push_back(std::move(item));
            }
            plan.source = binder.bind_top(q);
        }
        if (plan.source->schema.size() != plan.targets.size()) {
            fail(SemanticCategory::InvalidQuery, ins.span,
                 "INSERT into " + table->name + " has " + std::to_string(plan.targets.size()) +
                     " target columns but the source yields " +
                     std::to_string(plan.source->schema.size()));
        }
        for (std::size_t i = 0; i < plan.targets.size(); ++i) {
            const Column& target = table->schema[plan.targets[i]];
            const ValueType source = plan.source->schema[i].type;
            if (!comparable(source, target.type)) {
                fail(SemanticCategory::TypeMismatch, ins.span,
                     "cannot insert " + std::string(type_name(source)) + " into " + table->name +
                         "." + target.name + " (" + std::string(type_name(target.type)) + ")");
            }
        }
        return plan;
    }

    void bind_programs() {
        for (const auto& stmt : program_.statements) {
            const auto* p = std::get_if<ast::StateProgramDef>(&stmt);
            if (!p) continue;
            ProgramInfo info;
            info.span = p->span;
            bool ok = true;
            if (p->after) {
                info.after.emplace();
                for (const auto& name : *p->after) {
                    const TableInfo* t = catalog_.find_table(name);
                    if (!t || t->kind != TableKind::Input) {
                        errors_.push_back(
                            {SemanticCategory::InvalidAfter, p->span,
                             std::string(category_name(SemanticCategory::InvalidAfter)) + ": " +
                                 name});
                        ok = false;
                        continue;
                    }
                    info.after->push_back(t->name);
                }
            }
            for (const auto& ins : p->body) {
                try {
                    guarded([&] { info.body.push_back(bind_insert(ins)); });
                } catch (const SkipDependent&) {
                    ok = false;
                }
            }
            if (ok) catalog_.programs.push_back(std::move(info));
        }
    }
};

}  // namespace

SemanticErrors::SemanticErrors(std::string source_name_in, std::vector<SemanticError> errors_in)
    : std::runtime_error(join_messages(errors_in)),
      source_name(std::move(source_name_in)),
      errors(std::move(errors_in)) {}

auto format_errors(const SemanticErrors& err, std::string_view text) -> std::string {
    std::string out;
    for (const auto& e : err.errors) {
        if (!out.empty()) out += '\n';
        out += format_diagnostic(err.source_name, e.span, e.message, text);
    }
    return out;
}

auto Catalog::find_table(std::string_view name) const -> const TableInfo* {
    for (const auto& t : tables) {
        if (iequals(t.name, name)) return &t;
    }
    return nullptr;
}

auto Catalog::find_view(std::string_view name) const -> const ViewInfo* {
    for (const auto& v : views) {
        if (iequals(v.name, name)) return &v;
    }
    return nullptr;
}

auto validate(const ast::Program& program, const std::vector<StaticTableSpec>& statics,
              std::shared_ptr<const FunctionRegistry> functions) -> Catalog {
    return Validator(program, statics, std::move(functions)).run();
}

auto desugar_latest(const ast::SelectQuery& query, const Catalog& /*catalog*/)
    -> ast::SelectQuery {
    return desugar_query(query);
}

auto lower_select(const ast::SelectQuery& query, const Catalog& catalog) -> PlanPtr {
    Binder binder(*catalog.functions, shape_lookup(catalog, nullptr));
    try {
        return binder.bind_top(desugar_query(query));
    } catch (const CompileFailure& failure) {
        throw SemanticErrors(catalog.source_name, {failure.error});
    }
}

auto dependency_order(const Catalog& catalog) -> std::vector<std::string> {
    std::vector<std::string> out;
    for (std::size_t i : catalog.evaluation_order) out.push_back(catalog.views[i].name);
    return out;
}

auto dependency_graph(const Catalog& catalog) -> DependencyGraph {
    DependencyGraph g;
    for (const auto& t : catalog.tables) g.nodes.push_back(t.name);
    for (const auto& v : catalog.views) g.nodes.push_back(v.name);
    for (const auto& v : catalog.views) {
        for (const auto& r : v.plan ? scanned_relations(*v.plan) : v.reads) {
            g.edges.emplace_back(v.name, r);
        }
    }
    return g;
}

auto referenced_relations(const ast::SelectQuery& query) -> std::vector<std::string> {
    std::vector<std::string> out;
    collect_refs(query, out);
    return out;
}

auto emit_sql(const ast::Program& program, const Catalog& catalog) -> std::string {
    std::string out;
    for (auto stmt : program.statements) {
        if (auto* v = std::get_if<ast::ViewDef>(&stmt)) {
            v->query = desugar_latest(v->query, catalog);
            for (auto& c : v->checks) c = desugar_expr(c);
        } else if (auto* o = std::get_if<ast::OutputDef>(&stmt)) {
            o->query = desugar_latest(o->query, catalog);
            for (auto& c : o->checks) c = desugar_expr(c);
        } else if (auto* p = std::get_if<ast::StateProgramDef>(&stmt)) {
            for (auto& ins : p->body) {
                if (ins.select) ins.select = desugar_latest(*ins.select, catalog);
                if (ins.values) {
                    for (auto& e : *ins.values) e = desugar_expr(e);
                }
            }
        }
        out += to_source(stmt);
        out += '\n';
    }
    return out;
}

auto emit_plan(const Catalog& catalog) -> std::string {
    std::ostringstream os;
    for (std::size_t i : catalog.evaluation_order) {
        const ViewInfo& v = catalog.views[i];
        os << (v.is_output ? "output " : "view ") << v.name << ":\n";
        std::istringstream lines(dump(*v.plan));
        for (std::string line; std::getline(lines, line);) os << "  " << line << '\n';
        for (const auto& c : v.checks) os << "  " << c.text << '\n';
    }
    for (std::size_t i = 0; i < catalog.programs.size(); ++i) {
        const ProgramInfo& p = catalog.programs[i];
        os << "program " << i + 1;
        if (p.after) {
            os << " after";
            for (std::size_t k = 0; k < p.after->size(); ++k) os << (k ? ", " : " ") << (*p.after)[k];
        }
        os << ":\n";
        for (const auto& ins : p.body) {
            const TableInfo* t = catalog.find_table(ins.table);
            os << "  insert into " << ins.table << " (";
            for (std::size_t k = 0; k < ins.targets.size(); ++k) {
                os << (k ? ", " : "") << t->schema[ins.targets[k]].name;
            }
            os << "):\n";
            std::istringstream lines(dump(*ins.source));
            for (std::string line; std::getline(lines, line);) os << "    " << line << '\n';
        }
    }
    return os.str();
}

auto emit_deps(const Catalog& catalog) -> std::string {
    std::ostringstream os;
    const DependencyGraph g = dependency_graph(catalog);
    for (const auto& [from, to] : g.edges) os << from << " -> " << to << '\n';
    os << "order:";
    for (const auto& name : dependency_order(catalog)) os << ' ' << name;
    os << '\n';
    return os.str();
}

}  // namespace diel
