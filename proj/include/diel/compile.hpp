#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diel/ast.hpp"
#include "diel/functions.hpp"
#include "diel/plan.hpp"
#include "diel/relation.hpp"

namespace diel {

enum class SemanticCategory {
    UndefinedRelation,
    UndefinedColumn,
    AmbiguousColumn,
    ReadOnlyInput,
    StaticWrite,
    DuplicateRelation,
    DuplicateColumn,
    IllegalLatest,
    Cycle,
    TypeMismatch,
    InvalidAfter,
    InvalidAggregate,
    InvalidFunction,
    InvalidPattern,
    InvalidQuery,
};

/// Short message prefix for a category, e.g. "write to read-only input".
auto category_name(SemanticCategory category) -> std::string_view;

struct SemanticError {
    SemanticCategory category = SemanticCategory::InvalidQuery;
    ast::Span span;
    std::string message;
};

/// Thrown by validate: every semantic error found in the program.
class SemanticErrors : public std::runtime_error {
   public:
    SemanticErrors(std::string source_name, std::vector<SemanticError> errors);
    std::string source_name;
    std::vector<SemanticError> errors;
};

/// All errors as caret diagnostics, one block per error.
auto format_errors(const SemanticErrors& err, std::string_view text) -> std::string;

inline constexpr const char* kTimestepColumn = "timestep";
inline constexpr const char* kTimestampColumn = "timestamp";

struct StaticTableSpec {
    std::string name;
    Schema schema;
};

struct ColumnRule {
    std::size_t column = 0;
    ast::ConstraintKind kind = ast::ConstraintKind::NotNull;
    std::optional<BoundExpr> check;  // Check only; bound over the table's row
    std::string text;                // e.g. "NOT NULL", "CHECK (x > 20)"
};

struct TableInfo {
    std::string name;
    TableKind kind = TableKind::Input;
    ast::Span span;
    /// User columns followed by timestep and timestamp for input and
    /// history tables.
    Schema schema;
    std::size_t user_columns = 0;
    std::vector<ColumnRule> rules;
};

struct ViewCheck {
    BoundExpr predicate;  // bound over one row of the view
    std::string text;
};

struct ViewInfo {
    std::string name;
    bool is_output = false;
    ast::Span span;
    std::size_t declaration_index = 0;
    ast::SelectQuery query;      // as written
    ast::SelectQuery desugared;  // LATEST rewritten
    PlanPtr plan;
    std::vector<ViewCheck> checks;
    /// Relations read, first-visit order.
    std::vector<std::string> reads;
};

/// One lowered INSERT. `source` yields rows of `targets.size()` columns;
/// `targets[i]` is the user-column index the i-th source column lands in.
struct InsertPlan {
    std::string table;
    ast::Span span;
    std::vector<std::size_t> targets;
    PlanPtr source;
};

struct ProgramInfo {
    ast::Span span;
    std::optional<std::vector<std::string>> after;
    std::vector<InsertPlan> body;
};

struct DependencyGraph {
    std::vector<std::string> nodes;
    /// (view, relation it reads); views in declaration order.
    std::vector<std::pair<std::string, std::string>> edges;
};

/// Validated, lowered program. Immutable once built.
struct Catalog {
    std::string source_name;
    std::shared_ptr<const FunctionRegistry> functions;
    std::vector<TableInfo> tables;    // declaration order; statics first
    std::vector<ViewInfo> views;      // declaration order
    std::vector<ProgramInfo> programs;
    /// Indices into `views`, dependency order.
    std::vector<std::size_t> evaluation_order;

    [[nodiscard]] auto find_table(std::string_view name) const -> const TableInfo*;
    [[nodiscard]] auto find_view(std::string_view name) const -> const ViewInfo*;
};

/// Checks the program and builds the catalog. Throws SemanticErrors listing
/// every problem found.
auto validate(const ast::Program& program, const std::vector<StaticTableSpec>& statics = {},
              std::shared_ptr<const FunctionRegistry> functions = nullptr) -> Catalog;

/// Rewrites each `LATEST R` to R plus `timestep = (SELECT MAX(timestep) FROM R)`
/// conjoined into WHERE, recursively through subqueries.
auto desugar_latest(const ast::SelectQuery& query, const Catalog& catalog) -> ast::SelectQuery;

/// Lowers a desugared query against the catalog's relations. Throws
/// SemanticErrors on unresolvable references.
auto lower_select(const ast::SelectQuery& query, const Catalog& catalog) -> PlanPtr;

/// View names, each after every view it reads; ties by declaration order.
auto dependency_order(const Catalog& catalog) -> std::vector<std::string>;

auto dependency_graph(const Catalog& catalog) -> DependencyGraph;

/// Relation names a query mentions in FROM clauses, including subqueries.
auto referenced_relations(const ast::SelectQuery& query) -> std::vector<std::string>;

/// `--emit` renderings.
auto emit_sql(const ast::Program& program, const Catalog& catalog) -> std::string;
auto emit_plan(const Catalog& catalog) -> std::string;
auto emit_deps(const Catalog& catalog) -> std::string;

}  // namespace diel
