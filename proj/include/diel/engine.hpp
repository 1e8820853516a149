#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diel/ast.hpp"
#include "diel/compile.hpp"
#include "diel/relation.hpp"

namespace diel {

enum class Mode { Dev, Deploy };

auto mode_name(Mode mode) -> std::string_view;
auto parse_mode(std::string_view text) -> std::optional<Mode>;

/// Column values by name, in the order given.
using Fields = std::vector<std::pair<std::string, Value>>;

struct Event {
    std::string input;
    Fields values;  // user columns only; missing columns are null
    double wallclock_ms = 0.0;
};

struct LoggedEvent {
    std::int64_t timestep = 0;
    Event event;  // normalized: every user column, declared order
};

struct Violation {
    std::string relation;
    std::string column;      // empty for view-level checks
    std::string constraint;  // "NOT NULL", "UNIQUE", "CHECK (...)", "type real"
    std::string row;         // "(latMin=NULL, latMax=10.0)"

    [[nodiscard]] auto to_string() const -> std::string;
};

struct IngestResult {
    bool committed = false;
    std::int64_t timestep = 0;  // the event's timestep, or the unchanged one
    std::vector<std::string> changed_outputs;
    std::vector<Violation> violations;
};

class ConstraintViolation : public std::runtime_error {
   public:
    explicit ConstraintViolation(std::vector<Violation> violations);
    std::vector<Violation> violations;
};

class UnknownInput : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

class UnknownOutput : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// Event names a column the input does not declare.
class UnknownColumn : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// A callback tried to ingest while the engine was delivering upcalls.
class ReentrantIngest : public std::logic_error {
   public:
    using std::logic_error::logic_error;
};

struct StaticData {
    std::string name;
    std::string csv;
};

using OutputCallback = std::function<void(const Relation&)>;

/// One DIEL program instance: the store, the logical clock and the output
/// bindings. Single writer; not safe for concurrent use.
class Engine {
   public:
    /// Parses, validates and lowers `program_text`, loads the statics and
    /// evaluates every view once. Throws ParseError, SemanticErrors or
    /// csv::CsvError.
    static auto load(std::string_view program_text, const std::vector<StaticData>& statics = {},
                     Mode mode = Mode::Dev, std::string source_name = "<input>",
                     std::shared_ptr<const FunctionRegistry> functions = nullptr) -> Engine;

    Engine(Engine&&) noexcept;
    auto operator=(Engine&&) noexcept -> Engine&;
    Engine(const Engine&) = delete;
    auto operator=(const Engine&) -> Engine& = delete;
    ~Engine();

    /// Runs one event cycle. Dev mode throws ConstraintViolation on a
    /// violation; deploy mode returns a rejected result. Either way the
    /// state is left exactly as before the call.
    auto ingest(const Event& event) -> IngestResult;

    /// The callback fires after each committed event that changes the
    /// output relative to what this binding last saw.
    void bind_output(std::string_view output, OutputCallback callback);

    /// Current contents of a view, output or table.
    [[nodiscard]] auto query_output(std::string_view name) const -> Relation;

    [[nodiscard]] auto export_log() const -> const std::vector<LoggedEvent>&;
    [[nodiscard]] auto timestep() const -> std::int64_t;
    [[nodiscard]] auto mode() const -> Mode;
    [[nodiscard]] auto catalog() const -> const Catalog&;
    [[nodiscard]] auto database() const -> const Database&;
    [[nodiscard]] auto program() const -> const ast::Program&;

    [[nodiscard]] auto input_names() const -> std::vector<std::string>;
    [[nodiscard]] auto output_names() const -> std::vector<std::string>;

   private:
    struct State;
    explicit Engine(std::unique_ptr<State> state);
    std::unique_ptr<State> state_;
};

}  // namespace diel
