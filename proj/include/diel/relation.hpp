#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "diel/value.hpp"

namespace diel {

struct Column {
    std::string name;
    ValueType type = ValueType::Integer;

    friend auto operator==(const Column&, const Column&) -> bool = default;
};

using Schema = std::vector<Column>;
using Row = std::vector<Value>;

/// Index of `name` in `schema` (case-insensitive), or npos.
auto find_column(const Schema& schema, std::string_view name) -> std::size_t;

/// Schema-carrying bag of rows.
struct Relation {
    Schema schema;
    std::vector<Row> rows;

    [[nodiscard]] auto size() const -> std::size_t { return rows.size(); }
    [[nodiscard]] auto empty() const -> bool { return rows.empty(); }
};

/// Lexicographic row comparison under canonical_compare.
auto compare_rows(const Row& a, const Row& b) -> int;

/// Rows sorted in canonical order (stable; used for snapshots and comparisons).
auto canonical_rows(const Relation& rel) -> std::vector<Row>;

/// True iff the schemas are equal and the row bags are equal, ignoring order.
auto multiset_equal(const Relation& a, const Relation& b) -> bool;

class TypeError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

enum class TableKind { Input, History, Static };

auto kind_name(TableKind kind) -> std::string_view;

/// Append-only stored relation.
class Table {
   public:
    Table(std::string name, TableKind kind, Schema schema);

    [[nodiscard]] auto name() const -> const std::string& { return name_; }
    [[nodiscard]] auto kind() const -> TableKind { return kind_; }
    [[nodiscard]] auto schema() const -> const Schema& { return relation_.schema; }
    [[nodiscard]] auto relation() const -> const Relation& { return relation_; }
    [[nodiscard]] auto rows() const -> const std::vector<Row>& { return relation_.rows; }
    [[nodiscard]] auto size() const -> std::size_t { return relation_.rows.size(); }

    /// Appends rows in order after checking arity and per-column types.
    /// All-or-nothing: throws TypeError before appending anything.
    auto append_rows(std::span<const Row> rows) -> std::size_t;

   private:
    friend class Database;
    void truncate(std::size_t size) { relation_.rows.resize(size); }

    std::string name_;
    TableKind kind_;
    Relation relation_;
};

/// The store: stored tables plus the most recently computed view contents.
/// Names are case-insensitive.
class Database {
   public:
    auto create_table(std::string name, TableKind kind, Schema schema) -> Table&;

    [[nodiscard]] auto find_table(std::string_view name) const -> const Table*;
    [[nodiscard]] auto find_table(std::string_view name) -> Table*;
    [[nodiscard]] auto table(std::string_view name) const -> const Table&;
    [[nodiscard]] auto table(std::string_view name) -> Table&;

    /// Views are evaluated by the runtime and parked here so plans that read
    /// them can scan the result.
    void set_view(std::string_view name, Relation contents);
    [[nodiscard]] auto find_view(std::string_view name) const -> const Relation*;
    void clear_views() { views_.clear(); }

    /// Relation for a scan: a stored table or a parked view.
    [[nodiscard]] auto find_relation(std::string_view name) const -> const Relation*;

    [[nodiscard]] auto tables() const -> const std::map<std::string, Table>& { return tables_; }

    /// Marks the current table sizes; `rollback` drops every row appended
    /// since. Only the runtime uses this, to discard a rejected event's
    /// uncommitted rows.
    class Savepoint {
       public:
        explicit Savepoint(Database& db);
        Savepoint(const Savepoint&) = delete;
        auto operator=(const Savepoint&) -> Savepoint& = delete;
        ~Savepoint();
        void commit() { active_ = false; }
        void rollback();

       private:
        Database& db_;
        std::map<std::string, std::size_t> sizes_;
        bool active_ = true;
    };

   private:
    std::map<std::string, Table> tables_;
    std::map<std::string, Relation> views_;
};

}  // namespace diel
