#pragma once

#include <stdexcept>

#include "diel/plan.hpp"
#include "diel/relation.hpp"

namespace diel {

class EvalError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Interprets a plan against the store. Bag semantics except Distinct;
/// three-valued logic; division by zero yields null.
auto evaluate_plan(const PlanNode& plan, const Database& db) -> Relation;

/// Evaluates a row-level expression (column slots index `row`).
auto evaluate_expr(const BoundExpr& expr, const Row& row, const Database& db) -> Value;

/// True only for a boolean true; null and false are both "not true".
inline auto is_true(const Value& v) -> bool { return v.is_bool() && v.as_bool(); }

}  // namespace diel
