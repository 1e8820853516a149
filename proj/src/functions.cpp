#include "diel/functions.hpp"

#include <cmath>

#include "util.hpp"

namespace diel {

auto is_within_box(std::span<const Value> args) -> Value {
    for (const Value& v : args) {
        if (v.is_null()) return Value();
        if (!v.is_numeric()) throw std::invalid_argument("is_within_box expects numeric arguments");
    }
    const double lat_min = args[0].as_double();
    const double lon_min = args[1].as_double();
    const double lat_max = args[2].as_double();
    const double lon_max = args[3].as_double();
    const double lat = args[4].as_double();
    const double lon = args[5].as_double();
    return Value(lat_min <= lat && lat <= lat_max && lon_min <= lon && lon <= lon_max);
}

auto is_aggregate_name(std::string_view name) -> bool {
    const auto n = to_lower(name);
    return n == "count" || n == "min" || n == "max" || n == "sum" || n == "avg";
}

FunctionRegistry::FunctionRegistry() {
    register_scalar_function("is_within_box", 6, is_within_box, ValueType::Boolean);
    register_scalar_function(
        "abs", 1,
        [](std::span<const Value> a) -> Value {
            if (a[0].is_null()) return Value();
            if (a[0].is_integer()) return Value(a[0].as_integer() < 0 ? -a[0].as_integer() : a[0].as_integer());
            return Value(std::fabs(a[0].as_double()));
        });
}

void FunctionRegistry::register_scalar_function(std::string name, std::size_t arity, ScalarFn fn,
                                                std::optional<ValueType> result_type) {
    auto key = to_lower(name);
    if (is_aggregate_name(key) || key == "coalesce" || functions_.count(key) > 0) {
        throw DuplicateFunction("function " + name + " is already registered");
    }
    functions_.emplace(std::move(key),
                       std::make_shared<const ScalarFunction>(
                           ScalarFunction{std::move(name), arity, result_type, std::move(fn)}));
}

auto FunctionRegistry::find(std::string_view name) const -> std::shared_ptr<const ScalarFunction> {
    auto it = functions_.find(to_lower(name));
    return it == functions_.end() ? nullptr : it->second;
}

}  // namespace diel
