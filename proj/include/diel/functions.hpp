#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "diel/value.hpp"

namespace diel {

using ScalarFn = std::function<Value(std::span<const Value>)>;

struct ScalarFunction {
    std::string name;
    std::size_t arity = 0;
    /// Result type for type checking; nullopt when it depends on the inputs.
    std::optional<ValueType> result_type;
    ScalarFn fn;
};

class DuplicateFunction : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// Scalar functions callable from DIEL expressions. Lookups are
/// case-insensitive. A fresh registry has the built-ins pre-registered.
class FunctionRegistry {
   public:
    FunctionRegistry();

    /// Throws DuplicateFunction when `name` is taken (including built-ins and
    /// aggregate names).
    void register_scalar_function(std::string name, std::size_t arity, ScalarFn fn,
                                  std::optional<ValueType> result_type = std::nullopt);

    [[nodiscard]] auto find(std::string_view name) const
        -> std::shared_ptr<const ScalarFunction>;

   private:
    std::map<std::string, std::shared_ptr<const ScalarFunction>> functions_;
};

/// latMin <= lat <= latMax AND lonMin <= lon <= lonMax, boundary inclusive;
/// null if any argument is null.
auto is_within_box(std::span<const Value> args) -> Value;

/// Aggregate function names recognised by the compiler.
auto is_aggregate_name(std::string_view name) -> bool;

}  // namespace diel
