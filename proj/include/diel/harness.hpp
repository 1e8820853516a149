#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "diel/engine.hpp"
#include "diel/relation.hpp"

namespace diel::harness {

using json = nlohmann::ordered_json;

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCompile = 1;
inline constexpr int kExitConstraint = 2;
inline constexpr int kExitIo = 3;

class FormatError : public std::runtime_error {
   public:
    FormatError(std::size_t line, const std::string& message);
    std::size_t line;
};

auto value_to_json(const Value& v) -> json;
auto value_from_json(const json& j) -> Value;

/// Rows in canonical order, each an object keyed by column name.
auto rows_to_json(const Relation& relation) -> json;

struct TraceLine {
    std::size_t line = 0;  // 1-based line in the trace file
    Event event;
};

/// Parses JSON Lines `{"input", "values", "timestamp"}`. Blank lines are
/// skipped. Decreasing timestamps are reported through `warnings`.
auto parse_trace(std::string_view text, std::vector<std::string>* warnings = nullptr)
    -> std::vector<TraceLine>;

auto trace_line(const Event& event) -> std::string;
auto write_trace(const std::vector<LoggedEvent>& log) -> std::string;

/// `{"timestep", "output", "rows"}` followed by a newline.
auto snapshot_line(std::int64_t timestep, const std::string& output, const Relation& rows)
    -> std::string;

struct SnapshotEntry {
    std::int64_t timestep = 0;
    std::string output;
    std::vector<std::string> rows;  // each row object serialized compactly
};

auto parse_snapshots(std::string_view text) -> std::vector<SnapshotEntry>;

/// Difference report for the first differing (timestep, output); empty
/// when the streams are identical.
auto diff_snapshots(const std::vector<SnapshotEntry>& a, const std::vector<SnapshotEntry>& b)
    -> std::string;

struct RunSummary {
    std::size_t committed = 0;
    std::size_t rejected = 0;
    int exit_code = kExitOk;
};

/// Binds `outputs` (all outputs when empty), replays `trace` and writes one
/// snapshot line per changed output per timestep to `snapshots`.
/// Diagnostics go to `diagnostics`.
auto replay(Engine& engine, const std::vector<TraceLine>& trace,
            const std::vector<std::string>& outputs, std::ostream& snapshots,
            std::ostream& diagnostics) -> RunSummary;

auto read_file(const std::string& path) -> std::string;  // throws std::runtime_error

/// `name=path` pairs for static tables.
auto load_statics(const std::vector<std::string>& specs) -> std::vector<StaticData>;

struct RunOptions {
    std::string program;
    std::string trace;
    std::vector<std::string> statics;  // name=path
    Mode mode = Mode::Dev;
    std::string out;                   // "" or "-" = stdout; *.jsonl = file; else directory
    std::vector<std::string> outputs;  // empty = all
    std::string export_log;            // optional path for the committed trace
};

auto cmd_compile(const std::string& file, const std::string& emit,
                 const std::vector<std::string>& statics, std::ostream& out, std::ostream& err)
    -> int;
auto cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) -> int;
auto cmd_diff(const std::string& a, const std::string& b, std::ostream& out, std::ostream& err)
    -> int;
auto cmd_match(const std::string& csv_file, const std::string& column, const std::string& pattern,
               const std::vector<std::string>& projection, std::ostream& out, std::ostream& err)
    -> int;

}  // namespace diel::harness
