#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "diel/ast.hpp"
#include "diel/functions.hpp"
#include "diel/match.hpp"
#include "diel/relation.hpp"

namespace diel {

struct PlanNode;
using PlanPtr = std::shared_ptr<const PlanNode>;

enum class AggregateFn { Count, CountStar, Min, Max, Sum, Avg };

auto aggregate_name(AggregateFn fn) -> const char*;

/// Expression with every column reference resolved to a slot.
struct BoundExpr {
    enum class Kind {
        Literal,
        Column,
        Unary,
        Binary,
        IsNull,
        Call,
        Coalesce,
        InList,
        InSubquery,
        Exists,
        ScalarSubquery,
    };
    Kind kind = Kind::Literal;
    Value value;
    /// Column: `depth` query levels outward (0 = current row), slot `index`.
    std::size_t depth = 0;
    std::size_t index = 0;
    std::string label;  // display name for dumps
    ast::UnaryOp unary_op = ast::UnaryOp::Not;
    ast::BinaryOp binary_op = ast::BinaryOp::Eq;
    bool negated = false;
    std::vector<BoundExpr> args;
    std::shared_ptr<const ScalarFunction> function;
    PlanPtr subquery;
    /// Subquery reads columns of an enclosing row; evaluated per row.
    bool correlated = false;
    /// Static result type; nullopt for an untyped NULL.
    std::optional<ValueType> type;
};

struct AggregateSpec {
    AggregateFn fn = AggregateFn::CountStar;
    std::optional<BoundExpr> arg;
};

struct SortKey {
    BoundExpr expr;
    bool descending = false;
};

/// A relational operator. Children are immutable and may be shared.
struct PlanNode {
    enum class Kind { Scan, Values, Filter, Project, Join, Aggregate, Sort, Limit, Distinct, Match };
    Kind kind = Kind::Scan;
    Schema schema;                 // output columns
    std::vector<PlanPtr> children;  // Join: [left, right]; others: [child] or none

    std::string relation;  // Scan: table or view name
    std::string alias;     // Scan: qualifier in dumps
    std::optional<BoundExpr> predicate;     // Filter; Join (absent = cross)
    std::vector<BoundExpr> exprs;           // Project; Aggregate group keys
    std::vector<AggregateSpec> aggregates;  // Aggregate
    std::vector<SortKey> keys;              // Sort
    std::int64_t limit = 0;                 // Limit
    // Match: rows sorted on `order_index` (if any) then run through `nfa`
    // on `match_index`; output is mg followed by the child's columns.
    std::shared_ptr<const match::CompiledNfa> nfa;
    std::size_t match_index = 0;
    std::optional<std::size_t> order_index;
};

/// Indented operator tree, one node per line (`--emit plan` format).
auto dump(const PlanNode& plan) -> std::string;
auto dump(const BoundExpr& expr) -> std::string;

/// Names of scanned relations, in first-visit order, including subqueries.
auto scanned_relations(const PlanNode& plan) -> std::vector<std::string>;

}  // namespace diel
