#include "diel/relation.hpp"

#include <algorithm>

#include "util.hpp"

namespace diel {

auto find_column(const Schema& schema, std::string_view name) -> std::size_t {
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (iequals(schema[i].name, name)) return i;
    }
    return std::string::npos;
}

auto compare_rows(const Row& a, const Row& b) -> int {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (const int c = canonical_compare(a[i], b[i]); c != 0) return c;
    }
    if (a.size() == b.size()) return 0;
    return a.size() < b.size() ? -1 : 1;
}

auto canonical_rows(const Relation& rel) -> std::vector<Row> {
    std::vector<Row> rows = rel.rows;
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return compare_rows(a, b) < 0; });
    return rows;
}

auto multiset_equal(const Relation& a, const Relation& b) -> bool {
    if (a.schema.size() != b.schema.size() || a.rows.size() != b.rows.size()) return false;
    for (std::size_t i = 0; i < a.schema.size(); ++i) {
        if (!iequals(a.schema[i].name, b.schema[i].name) || a.schema[i].type != b.schema[i].type) {
            return false;
        }
    }
    const auto ra = canonical_rows(a);
    const auto rb = canonical_rows(b);
    for (std::size_t i = 0; i < ra.size(); ++i) {
        if (compare_rows(ra[i], rb[i]) != 0) return false;
    }
    return true;
}

auto kind_name(TableKind kind) -> std::string_view {
    switch (kind) {
        case TableKind::Input:
            return "input";
        case TableKind::History:
            return "history";
        case TableKind::Static:
            return "static";
    }
    return "?";
}

Table::Table(std::string name, TableKind kind, Schema schema)
    : name_(std::move(name)), kind_(kind), relation_{std::move(schema), {}} {}

auto Table::append_rows(std::span<const Row> rows) -> std::size_t {
    const Schema& schema = relation_.schema;
    for (const Row& row : rows) {
        if (row.size() != schema.size()) {
            throw TypeError("table " + name_ + ": row has " + std::to_string(row.size()) +
                            " values, schema has " + std::to_string(schema.size()) + " columns");
        }
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (!row[i].is_null() && row[i].type() != schema[i].type) {
                throw TypeError("table " + name_ + ": column " + schema[i].name + " expects " +
                                std::string(type_name(schema[i].type)) + ", got " +
                                row[i].to_sql());
            }
        }
    }
    relation_.rows.insert(relation_.rows.end(), rows.begin(), rows.end());
    return rows.size();
}

auto Database::create_table(std::string name, TableKind kind, Schema schema) -> Table& {
    auto key = to_lower(name);
    auto [it, inserted] =
        tables_.try_emplace(key, Table(std::move(name), kind, std::move(schema)));
    if (!inserted) throw std::invalid_argument("table " + it->second.name() + " already exists");
    return it->second;
}

auto Database::find_table(std::string_view name) const -> const Table* {
    auto it = tables_.find(to_lower(name));
    return it == tables_.end() ? nullptr : &it->second;
}

auto Database::find_table(std::string_view name) -> Table* {
    auto it = tables_.find(to_lower(name));
    return it == tables_.end() ? nullptr : &it->second;
}

auto Database::table(std::string_view name) const -> const Table& {
    const Table* t = find_table(name);
    if (t == nullptr) throw std::out_of_range("no table named " + std::string(name));
    return *t;
}

auto Database::table(std::string_view name) -> Table& {
    Table* t = find_table(name);
    if (t == nullptr) throw std::out_of_range("no table named " + std::string(name));
    return *t;
}

void Database::set_view(std::string_view name, Relation contents) {
    views_.insert_or_assign(to_lower(name), std::move(contents));
}

auto Database::find_view(std::string_view name) const -> const Relation* {
    auto it = views_.find(to_lower(name));
    return it == views_.end() ? nullptr : &it->second;
}

auto Database::find_relation(std::string_view name) const -> const Relation* {
    if (const Table* t = find_table(name)) return &t->relation();
    return find_view(name);
}

Database::Savepoint::Savepoint(Database& db) : db_(db) {
    for (const auto& [key, table] : db.tables_) sizes_[key] = table.size();
}

Database::Savepoint::~Savepoint() {
    if (active_) rollback();
}

void Database::Savepoint::rollback() {
    for (auto& [key, table] : db_.tables_) {
        auto it = sizes_.find(key);
        if (it != sizes_.end()) table.truncate(it->second);
    }
    active_ = false;
}

}  // namespace diel
