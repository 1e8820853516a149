#include "diel/value.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "util.hpp"

namespace diel {

auto type_name(ValueType type) -> std::string_view {
    switch (type) {
        case ValueType::Integer:
            return "integer";
        case ValueType::Real:
            return "real";
        case ValueType::Text:
            return "text";
        case ValueType::Boolean:
            return "boolean";
    }
    return "?";
}

auto parse_type_name(std::string_view name) -> std::optional<ValueType> {
    const auto lower = to_lower(name);
    if (lower == "integer" || lower == "int" || lower == "bigint") {
        return ValueType::Integer;
    }
    if (lower == "real" || lower == "float" || lower == "double" || lower == "numeric") {
        return ValueType::Real;
    }
    if (lower == "text" || lower == "string" || lower == "varchar") {
        return ValueType::Text;
    }
    if (lower == "boolean" || lower == "bool") {
        return ValueType::Boolean;
    }
    return std::nullopt;
}

auto Value::type() const -> std::optional<ValueType> {
    if (is_integer()) return ValueType::Integer;
    if (is_real()) return ValueType::Real;
    if (is_text()) return ValueType::Text;
    if (is_bool()) return ValueType::Boolean;
    return std::nullopt;
}

auto format_real(double d) -> std::string {
    if (std::isnan(d)) return "nan";
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), d);
    std::string out(buf.data(), end);
    if (out.find_first_of(".en") == std::string::npos) {
        out += ".0";
    }
    return out;
}

auto Value::to_string() const -> std::string {
    if (is_null()) return "NULL";
    if (is_bool()) return as_bool() ? "true" : "false";
    if (is_integer()) return std::to_string(as_integer());
    if (is_real()) return format_real(as_real());
    return as_text();
}

auto Value::to_sql() const -> std::string {
    if (is_null()) return "NULL";
    if (is_bool()) return as_bool() ? "TRUE" : "FALSE";
    if (is_text()) {
        std::string out = "'";
        for (char c : as_text()) {
            if (c == '\'') out += '\'';
            out += c;
        }
        out += '\'';
        return out;
    }
    return to_string();
}

namespace {

auto kind_rank(const Value& v) -> int {
    if (v.is_null()) return 0;
    if (v.is_bool()) return 1;
    if (v.is_numeric()) return 2;
    return 3;
}

template <typename T>
auto three_way(const T& a, const T& b) -> int {
    return a < b ? -1 : (b < a ? 1 : 0);
}

auto compare_numeric(const Value& a, const Value& b) -> int {
    if (a.is_integer() && b.is_integer()) {
        return three_way(a.as_integer(), b.as_integer());
    }
    return three_way(a.as_double(), b.as_double());
}

}  // namespace

auto canonical_compare(const Value& a, const Value& b) -> int {
    const int ka = kind_rank(a);
    const int kb = kind_rank(b);
    if (ka != kb) return ka < kb ? -1 : 1;
    switch (ka) {
        case 0:
            return 0;
        case 1:
            return three_way(a.as_bool(), b.as_bool());
        case 2: {
            const int c = compare_numeric(a, b);
            if (c != 0) return c;
            // 1 before 1.0
            return three_way(a.is_real(), b.is_real());
        }
        default:
            return a.as_text().compare(b.as_text()) < 0 ? -1
                   : a.as_text() == b.as_text()         ? 0
                                                        : 1;
    }
}

auto sql_compare(const Value& a, const Value& b) -> std::optional<int> {
    if (a.is_null() || b.is_null()) return std::nullopt;
    if (a.is_numeric() && b.is_numeric()) return compare_numeric(a, b);
    return canonical_compare(a, b);
}

auto coerce(const Value& v, ValueType type) -> std::optional<Value> {
    if (v.is_null()) return v;
    switch (type) {
        case ValueType::Integer:
            if (v.is_integer()) return v;
            if (v.is_real()) {
                const double d = v.as_real();
                if (std::trunc(d) == d && std::abs(d) < 9.2e18) {
                    return Value(static_cast<std::int64_t>(d));
                }
            }
            return std::nullopt;
        case ValueType::Real:
            if (v.is_real()) return v;
            if (v.is_integer()) return Value(static_cast<double>(v.as_integer()));
            return std::nullopt;
        case ValueType::Text:
            if (v.is_text()) return v;
            return std::nullopt;
        case ValueType::Boolean:
            if (v.is_bool()) return v;
            return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace diel
