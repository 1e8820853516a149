#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "diel/relation.hpp"

namespace diel::csv {

class CsvError : public std::runtime_error {
   public:
    CsvError(std::size_t line, const std::string& message);
    std::size_t line;
};

/// RFC 4180 records. An empty unquoted field is nullopt; `""` is an empty
/// string. Blank lines are skipped.
auto parse_records(std::string_view text) -> std::vector<std::vector<std::optional<std::string>>>;

/// Header cells are `name` or `name:type`. Untyped columns take the
/// narrowest type that fits every non-empty value (integer, real, boolean,
/// else text). Empty fields become null.
auto parse_table(std::string_view text) -> Relation;

/// Header plus one line per row; null as an empty field.
auto write_table(const Relation& relation) -> std::string;

}  // namespace diel::csv
