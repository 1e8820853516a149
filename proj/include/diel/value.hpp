#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace diel {

enum class ValueType { Integer, Real, Text, Boolean };

auto type_name(ValueType type) -> std::string_view;

/// Parses a declared column type (`INTEGER`, `INT`, `REAL`, `TEXT`, ...).
/// Case-insensitive. Returns nullopt for unknown names.
auto parse_type_name(std::string_view name) -> std::optional<ValueType>;

struct Null {
    friend auto operator==(Null, Null) -> bool { return true; }
};

/// A tagged scalar: null, 64-bit integer, 64-bit real, text or boolean.
class Value {
   public:
    Value() = default;
    Value(Null) {}
    Value(bool b) : data_(b) {}
    Value(std::int64_t i) : data_(i) {}
    Value(int i) : data_(static_cast<std::int64_t>(i)) {}
    Value(double d) : data_(d) {}
    Value(std::string s) : data_(std::move(s)) {}
    Value(const char* s) : data_(std::string(s)) {}

    [[nodiscard]] auto is_null() const -> bool { return std::holds_alternative<Null>(data_); }
    [[nodiscard]] auto is_bool() const -> bool { return std::holds_alternative<bool>(data_); }
    [[nodiscard]] auto is_integer() const -> bool {
        return std::holds_alternative<std::int64_t>(data_);
    }
    [[nodiscard]] auto is_real() const -> bool { return std::holds_alternative<double>(data_); }
    [[nodiscard]] auto is_numeric() const -> bool { return is_integer() || is_real(); }
    [[nodiscard]] auto is_text() const -> bool { return std::holds_alternative<std::string>(data_); }

    [[nodiscard]] auto as_bool() const -> bool { return std::get<bool>(data_); }
    [[nodiscard]] auto as_integer() const -> std::int64_t { return std::get<std::int64_t>(data_); }
    [[nodiscard]] auto as_real() const -> double { return std::get<double>(data_); }
    [[nodiscard]] auto as_text() const -> const std::string& { return std::get<std::string>(data_); }
    /// Numeric value widened to double. Precondition: is_numeric().
    [[nodiscard]] auto as_double() const -> double {
        return is_integer() ? static_cast<double>(as_integer()) : as_real();
    }

    /// Kind of a non-null value; nullopt for null.
    [[nodiscard]] auto type() const -> std::optional<ValueType>;

    /// Rendering used for MATCH symbols, CSV output and diagnostics.
    /// Null renders as `NULL`; reals use shortest round-trip form.
    [[nodiscard]] auto to_string() const -> std::string;

    /// SQL literal form (`'it''s'`, `NULL`, `TRUE`, `1.5`).
    [[nodiscard]] auto to_sql() const -> std::string;

    /// Exact representational equality (1 and 1.0 differ).
    friend auto operator==(const Value& a, const Value& b) -> bool { return a.data_ == b.data_; }

   private:
    std::variant<Null, bool, std::int64_t, double, std::string> data_;
};

/// Total canonical order used for sorting, DISTINCT and bag comparison:
/// null < boolean < numeric < text. Integers and reals compare numerically;
/// a numerically equal integer sorts before the real so the order stays strict.
/// Text compares by bytes.
auto canonical_compare(const Value& a, const Value& b) -> int;

/// Three-valued SQL comparison: nullopt when either side is null,
/// otherwise <0, 0, >0. Integers and reals compare numerically (1 = 1.0).
auto sql_compare(const Value& a, const Value& b) -> std::optional<int>;

/// Coerces `v` into a column of type `type`. Integers widen to reals; reals
/// with an integral value narrow to integers. Returns nullopt when the value
/// cannot be stored in the column. Null always coerces.
auto coerce(const Value& v, ValueType type) -> std::optional<Value>;

/// Shortest round-trip decimal form of a double that always reads back as a
/// real (contains '.', 'e' or is inf/nan).
auto format_real(double d) -> std::string;

}  // namespace diel
