#include "diel/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "diel/compile.hpp"
#include "diel/csv.hpp"
#include "diel/eval.hpp"
#include "diel/match.hpp"
#include "diel/parser.hpp"

namespace diel::harness {

FormatError::FormatError(std::size_t line_in, const std::string& message)
    : std::runtime_error("line " + std::to_string(line_in) + ": " + message), line(line_in) {}

auto value_to_json(const Value& v) -> json {
    if (v.is_null()) return nullptr;
    if (v.is_bool()) return v.as_bool();
    if (v.is_integer()) return v.as_integer();
    if (v.is_real()) return v.as_real();
    return v.as_text();
}

auto value_from_json(const json& j) -> Value {
    if (j.is_null()) return Value();
    if (j.is_boolean()) return Value(j.get<bool>());
    if (j.is_number_integer()) return Value(j.get<std::int64_t>());
    if (j.is_number()) return Value(j.get<double>());
    if (j.is_string()) return Value(j.get<std::string>());
    throw std::invalid_argument("unsupported JSON value " + j.dump());
}

auto rows_to_json(const Relation& relation) -> json {
    json rows = json::array();
    for (const auto& row : canonical_rows(relation)) {
        json obj = json::object();
        for (std::size_t i = 0; i < relation.schema.size(); ++i) {
            obj[relation.schema[i].name] = value_to_json(row[i]);
        }
        rows.push_back(std::move(obj));
    }
    return rows;
}

namespace {

template <class F>
void for_each_line(std::string_view text, F&& f) {
    std::size_t line = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        ++line;
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view content = text.substr(pos, end - pos);
        if (!content.empty() && content.back() == '\r') content.remove_suffix(1);
        pos = end + 1;
        if (content.find_first_not_of(" \t") == std::string_view::npos) continue;
        f(line, content);
    }
}

auto parse_json_line(std::size_t line, std::string_view content) -> json {
    try {
        return json::parse(content);
    } catch (const json::parse_error& err) {
        throw FormatError(line, std::string("invalid JSON: ") + err.what());
    }
}

auto plural(std::size_t n, const char* word) -> std::string {
    return std::to_string(n) + " " + word + (n == 1 ? "" : "s");
}

}  // namespace

auto parse_trace(std::string_view text, std::vector<std::string>* warnings)
    -> std::vector<TraceLine> {
    std::vector<TraceLine> out;
    std::optional<double> last;
    for_each_line(text, [&](std::size_t line, std::string_view content) {
        const json j = parse_json_line(line, content);
        if (!j.is_object()) throw FormatError(line, "expected a JSON object");
        TraceLine t;
        t.line = line;
        if (!j.contains("input") || !j["input"].is_string()) {
            throw FormatError(line, "missing string field \"input\"");
        }
        t.event.input = j["input"].get<std::string>();
        if (j.contains("values")) {
            if (!j["values"].is_object()) throw FormatError(line, "\"values\" must be an object");
            for (const auto& [k, v] : j["values"].items()) {
                try {
                    t.event.values.emplace_back(k, value_from_json(v));
                } catch (const std::invalid_argument& err) {
                    throw FormatError(line, err.what());
                }
            }
        }
        if (!j.contains("timestamp") || !j["timestamp"].is_number()) {
            throw FormatError(line, "missing numeric field \"timestamp\"");
        }
        t.event.wallclock_ms = j["timestamp"].get<double>();
        if (last && t.event.wallclock_ms < *last && warnings) {
            warnings->push_back("line " + std::to_string(line) + ": timestamp decreases");
        }
        last = t.event.wallclock_ms;
        out.push_back(std::move(t));
    });
    return out;
}

auto trace_line(const Event& event) -> std::string {
    json j = json::object();
    j["input"] = event.input;
    json values = json::object();
    for (const auto& [k, v] : event.values) values[k] = value_to_json(v);
    j["values"] = std::move(values);
    j["timestamp"] = event.wallclock_ms;
    return j.dump() + "\n";
}

auto write_trace(const std::vector<LoggedEvent>& log) -> std::string {
    std::string out;
    for (const auto& e : log) out += trace_line(e.event);
    return out;
}

auto snapshot_line(std::int64_t timestep, const std::string& output, const Relation& rows)
    -> std::string {
    json j = json::object();
    j["timestep"] = timestep;
    j["output"] = output;
    j["rows"] = rows_to_json(rows);
    return j.dump() + "\n";
}

auto parse_snapshots(std::string_view text) -> std::vector<SnapshotEntry> {
    std::vector<SnapshotEntry> out;
    for_each_line(text, [&](std::size_t line, std::string_view content) {
        const json j = parse_json_line(line, content);
        if (!j.is_object() || !j.contains("timestep") || !j["timestep"].is_number_integer() ||
            !j.contains("output") || !j["output"].is_string() || !j.contains("rows") ||
            !j["rows"].is_array()) {
            throw FormatError(line, "expected {\"timestep\", \"output\", \"rows\"}");
        }
        SnapshotEntry e;
        e.timestep = j["timestep"].get<std::int64_t>();
        e.output = j["output"].get<std::string>();
        for (const auto& r : j["rows"]) e.rows.push_back(r.dump());
        out.push_back(std::move(e));
    });
    return out;
}

auto diff_snapshots(const std::vector<SnapshotEntry>& a, const std::vector<SnapshotEntry>& b)
    -> std::string {
    using Key = std::pair<std::int64_t, std::string>;
    auto index = [](const std::vector<SnapshotEntry>& entries) {
        std::map<Key, const SnapshotEntry*> m;
        for (const auto& e : entries) m.emplace(Key{e.timestep, e.output}, &e);
        return m;
    };
    const auto ia = index(a);
    const auto ib = index(b);
    // Keys in stream order: by timestep, then first appearance.
    std::vector<Key> keys;
    std::map<Key, std::size_t> rank;
    for (const auto* stream : {&a, &b}) {
        for (const auto& e : *stream) {
            Key k{e.timestep, e.output};
            if (rank.emplace(k, rank.size()).second) keys.push_back(k);
        }
    }
    std::stable_sort(keys.begin(), keys.end(),
                     [](const Key& x, const Key& y) { return x.first < y.first; });

    for (const auto& k : keys) {
        const auto fa = ia.find(k);
        const auto fb = ib.find(k);
        std::vector<std::string> ra = fa == ia.end() ? std::vector<std::string>{} : fa->second->rows;
        std::vector<std::string> rb = fb == ib.end() ? std::vector<std::string>{} : fb->second->rows;
        const bool both = fa != ia.end() && fb != ib.end();
        std::sort(ra.begin(), ra.end());
        std::sort(rb.begin(), rb.end());
        if (both && ra == rb) continue;
        std::vector<std::string> only_a;
        std::vector<std::string> only_b;
        std::set_difference(ra.begin(), ra.end(), rb.begin(), rb.end(), std::back_inserter(only_a));
        std::set_difference(rb.begin(), rb.end(), ra.begin(), ra.end(), std::back_inserter(only_b));
        std::ostringstream os;
        os << "timestep " << k.first << ", output " << k.second << ": +"
           << plural(only_b.size(), "row") << ", -" << plural(only_a.size(), "row");
        if (fa == ia.end()) os << " (missing from first stream)";
        if (fb == ib.end()) os << " (missing from second stream)";
        os << '\n';
        for (const auto& r : only_a) os << "- " << r << '\n';
        for (const auto& r : only_b) os << "+ " << r << '\n';
        return os.str();
    }
    return {};
}

auto replay(Engine& engine, const std::vector<TraceLine>& trace,
            const std::vector<std::string>& outputs, std::ostream& snapshots,
            std::ostream& diagnostics) -> RunSummary {
    RunSummary summary;
    std::vector<std::pair<std::string, Relation>> pending;
    const std::vector<std::string> names = outputs.empty() ? engine.output_names() : outputs;
    for (const auto& name : names) {
        const ViewInfo* v = engine.catalog().find_view(name);
        const std::string canonical = v ? v->name : name;
        engine.bind_output(name, [&pending, canonical](const Relation& rows) {
            pending.emplace_back(canonical, rows);
        });
    }
    for (const auto& t : trace) {
        pending.clear();
        try {
            const IngestResult r = engine.ingest(t.event);
            if (!r.committed) {
                ++summary.rejected;
                diagnostics << "trace line " << t.line << ": rejected";
                for (const auto& v : r.violations) diagnostics << "; " << v.to_string();
                diagnostics << '\n';
                continue;
            }
        } catch (const ConstraintViolation& err) {
            diagnostics << "trace line " << t.line << ": " << err.what() << '\n';
            summary.exit_code = kExitConstraint;
            return summary;
        } catch (const EvalError& err) {
            diagnostics << "trace line " << t.line << ": evaluation error: " << err.what() << '\n';
            summary.exit_code = kExitConstraint;
            return summary;
        } catch (const std::invalid_argument& err) {
            diagnostics << "trace line " << t.line << ": " << err.what() << '\n';
            summary.exit_code = kExitIo;
            return summary;
        }
        ++summary.committed;
        for (const auto& [name, rows] : pending) {
            snapshots << snapshot_line(engine.timestep(), name, rows);
        }
    }
    return summary;
}

auto read_file(const std::string& path) -> std::string {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

auto load_statics(const std::vector<std::string>& specs) -> std::vector<StaticData> {
    std::vector<StaticData> out;
    for (const auto& spec : specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw std::runtime_error("static table '" + spec + "' is not name=path");
        }
        out.push_back({spec.substr(0, eq), read_file(spec.substr(eq + 1))});
    }
    return out;
}

namespace {

// Loads an engine, mapping failures to exit codes. Returns nullopt on error.
auto load_engine(const std::string& file, const std::vector<std::string>& statics, Mode mode,
                 std::ostream& err, int& code) -> std::optional<Engine> {
    std::string text;
    std::vector<StaticData> data;
    try {
        text = read_file(file);
        data = load_statics(statics);
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << '\n';
        code = kExitIo;
        return std::nullopt;
    }
    try {
        return Engine::load(text, data, mode, file);
    } catch (const ParseError& e) {
        err << format_error(e, text) << '\n';
        code = kExitCompile;
    } catch (const SemanticErrors& e) {
        err << format_errors(e, text) << '\n';
        code = kExitCompile;
    } catch (const csv::CsvError& e) {
        err << "error: " << e.what() << '\n';
        code = kExitIo;
    }
    return std::nullopt;
}

auto write_output(const std::string& target, const std::string& content, std::ostream& out)
    -> bool {
    if (target.empty() || target == "-") {
        out << content;
        return true;
    }
    std::filesystem::path path(target);
    std::error_code ec;
    if (path.extension() != ".jsonl") {
        std::filesystem::create_directories(path, ec);
        path /= "snapshots.jsonl";
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) return false;
    f << content;
    return static_cast<bool>(f);
}

}  // namespace

auto cmd_compile(const std::string& file, const std::string& emit,
                 const std::vector<std::string>& statics, std::ostream& out, std::ostream& err)
    -> int {
    if (emit != "ast" && emit != "sql" && emit != "plan" && emit != "deps") {
        err << "error: --emit must be one of ast, sql, plan, deps\n";
        return kExitCompile;
    }
    int code = kExitOk;
    auto engine = load_engine(file, statics, Mode::Dev, err, code);
    if (!engine) return code;
    if (emit == "ast") {
        out << ast::dump(engine->program());
    } else if (emit == "sql") {
        out << emit_sql(engine->program(), engine->catalog());
    } else if (emit == "plan") {
        out << emit_plan(engine->catalog());
    } else {
        out << emit_deps(engine->catalog());
    }
    return kExitOk;
}

auto cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) -> int {
    int code = kExitOk;
    auto engine = load_engine(options.program, options.statics, options.mode, err, code);
    if (!engine) return code;

    std::vector<TraceLine> trace;
    try {
        std::vector<std::string> warnings;
        trace = parse_trace(read_file(options.trace), &warnings);
        for (const auto& w : warnings) err << "warning: " << options.trace << ": " << w << '\n';
    } catch (const std::runtime_error& e) {
        err << "error: " << options.trace << ": " << e.what() << '\n';
        return kExitIo;
    }

    std::ostringstream snapshots;
    RunSummary summary;
    try {
        summary = replay(*engine, trace, options.outputs, snapshots, err);
    } catch (const UnknownOutput& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }
    if (!write_output(options.out, snapshots.str(), out)) {
        err << "error: cannot write " << options.out << '\n';
        return kExitIo;
    }
    if (!options.export_log.empty()) {
        std::ofstream f(options.export_log, std::ios::binary);
        f << write_trace(engine->export_log());
        if (!f) {
            err << "error: cannot write " << options.export_log << '\n';
            return kExitIo;
        }
    }
    err << "summary: " << summary.committed << " committed, " << summary.rejected
        << " rejected, timestep " << engine->timestep() << '\n';
    return summary.exit_code;
}

auto cmd_diff(const std::string& a, const std::string& b, std::ostream& out, std::ostream& err)
    -> int {
    std::vector<SnapshotEntry> sa;
    std::vector<SnapshotEntry> sb;
    try {
        sa = parse_snapshots(read_file(a));
    } catch (const std::runtime_error& e) {
        err << "error: " << a << ": " << e.what() << '\n';
        return kExitIo;
    }
    try {
        sb = parse_snapshots(read_file(b));
    } catch (const std::runtime_error& e) {
        err << "error: " << b << ": " << e.what() << '\n';
        return kExitIo;
    }
    const std::string report = diff_snapshots(sa, sb);
    out << report;
    return report.empty() ? kExitOk : 1;
}

auto cmd_match(const std::string& csv_file, const std::string& column, const std::string& pattern,
               const std::vector<std::string>& projection, std::ostream& out, std::ostream& err)
    -> int {
    Relation rows;
    try {
        rows = csv::parse_table(read_file(csv_file));
    } catch (const std::runtime_error& e) {
        err << "error: " << csv_file << ": " << e.what() << '\n';
        return kExitIo;
    }
    match::CompiledNfa nfa;
    try {
        nfa = match::compile_pattern(pattern);
    } catch (const match::PatternError& e) {
        err << "error: pattern: " << e.what() << " at offset " << e.position << '\n'
            << pattern << '\n'
            << std::string(e.position, ' ') << "^\n";
        return kExitCompile;
    }
    for (const auto& name : projection) {
        if (find_column(rows.schema, name) == std::string::npos) {
            err << "error: no column '" << name << "' in " << csv_file << '\n';
            return kExitCompile;
        }
    }
    if (find_column(rows.schema, column) == std::string::npos) {
        err << "error: no column '" << column << "' in " << csv_file << '\n';
        return kExitCompile;
    }
    out << csv::write_table(match::run_match(rows, column, nfa, projection));
    return kExitOk;
}

}  // namespace diel::harness
