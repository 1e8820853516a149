#include "diel/engine.hpp"

#include <algorithm>

#include "diel/csv.hpp"
#include "diel/eval.hpp"
#include "diel/parser.hpp"
#include "util.hpp"

namespace diel {

auto mode_name(Mode mode) -> std::string_view { return mode == Mode::Dev ? "dev" : "deploy"; }

auto parse_mode(std::string_view text) -> std::optional<Mode> {
    if (iequals(text, "dev")) return Mode::Dev;
    if (iequals(text, "deploy")) return Mode::Deploy;
    return std::nullopt;
}

auto Violation::to_string() const -> std::string {
    std::string out = relation;
    if (!column.empty()) out += "." + column;
    return out + ": " + constraint + " violated by " + row;
}

namespace {

auto join_violations(const std::vector<Violation>& violations) -> std::string {
    std::string out = "constraint violation";
    for (const auto& v : violations) out += "; " + v.to_string();
    return out;
}

auto describe_row(const Schema& schema, const Row& row, std::size_t columns) -> std::string {
    std::string out = "(";
    for (std::size_t i = 0; i < columns && i < row.size(); ++i) {
        if (i) out += ", ";
        out += schema[i].name + "=" + row[i].to_sql();
    }
    return out + ")";
}

struct Binding {
    std::size_t view = 0;  // index into catalog views
    OutputCallback callback;
    Relation last;
};

}  // namespace

ConstraintViolation::ConstraintViolation(std::vector<Violation> violations_in)
    : std::runtime_error(join_violations(violations_in)), violations(std::move(violations_in)) {}

struct Engine::State {
    ast::Program program;
    Catalog catalog;
    Database db;
    Mode mode = Mode::Dev;
    std::int64_t timestep = 0;
    std::vector<LoggedEvent> log;
    std::vector<Binding> bindings;
    bool delivering = false;
    bool views_dirty = true;

    void refresh_views() {
        for (std::size_t i : catalog.evaluation_order) {
            const ViewInfo& v = catalog.views[i];
            db.set_view(v.name, evaluate_plan(*v.plan, db));
        }
        views_dirty = false;
    }

    auto reads_view(const PlanNode& plan) const -> bool {
        for (const auto& name : scanned_relations(plan)) {
            if (catalog.find_view(name)) return true;
        }
        return false;
    }

    // NOT NULL, CHECK and UNIQUE for `batch` about to be appended to `table`.
    auto check_rows(const TableInfo& table, const std::vector<Row>& batch) const
        -> std::vector<Violation> {
        std::vector<Violation> out;
        const Table& stored = db.table(table.name);
        for (std::size_t r = 0; r < batch.size(); ++r) {
            const Row& row = batch[r];
            for (const auto& rule : table.rules) {
                const Value& v = row[rule.column];
                bool violated = false;
                switch (rule.kind) {
                    case ast::ConstraintKind::NotNull:
                        violated = v.is_null();
                        break;
                    case ast::ConstraintKind::Check: {
                        const Value result = evaluate_expr(*rule.check, row, db);
                        violated = result.is_bool() && !result.as_bool();
                        break;
                    }
                    case ast::ConstraintKind::Unique: {
                        if (v.is_null()) break;
                        auto same = [&](const Row& other) {
                            const auto c = sql_compare(other[rule.column], v);
                            return c && *c == 0;
                        };
                        violated = std::any_of(stored.rows().begin(), stored.rows().end(), same) ||
                                   std::any_of(batch.begin(), batch.begin() + static_cast<long>(r), same);
                        break;
                    }
                }
                if (violated) {
                    out.push_back({table.name, table.schema[rule.column].name, rule.text,
                                   describe_row(table.schema, row, table.user_columns)});
                }
            }
        }
        return out;
    }

    auto check_views() const -> std::vector<Violation> {
        std::vector<Violation> out;
        for (std::size_t i : catalog.evaluation_order) {
            const ViewInfo& v = catalog.views[i];
            if (v.checks.empty()) continue;
            const Relation* rel = db.find_view(v.name);
            for (const auto& row : rel->rows) {
                for (const auto& c : v.checks) {
                    const Value result = evaluate_expr(c.predicate, row, db);
                    if (result.is_bool() && !result.as_bool()) {
                        out.push_back({v.name, "", c.text, describe_row(rel->schema, row, row.size())});
                    }
                }
            }
        }
        return out;
    }
};

Engine::Engine(std::unique_ptr<State> state) : state_(std::move(state)) {}
Engine::Engine(Engine&&) noexcept = default;
auto Engine::operator=(Engine&&) noexcept -> Engine& = default;
Engine::~Engine() = default;

auto Engine::load(std::string_view program_text, const std::vector<StaticData>& statics, Mode mode,
                  std::string source_name, std::shared_ptr<const FunctionRegistry> functions)
    -> Engine {
    auto state = std::make_unique<State>();
    state->mode = mode;
    state->program = parse_program(program_text, std::move(source_name));

    std::vector<StaticTableSpec> specs;
    std::vector<Relation> contents;
    for (const auto& s : statics) {
        Relation rel;
        try {
            rel = csv::parse_table(s.csv);
        } catch (const csv::CsvError& err) {
            throw csv::CsvError(err.line, "static table " + s.name + ": " + err.what());
        }
        specs.push_back({s.name, rel.schema});
        contents.push_back(std::move(rel));
    }
    state->catalog = validate(state->program, specs, std::move(functions));

    for (const auto& t : state->catalog.tables) {
        state->db.create_table(t.name, t.kind, t.schema);
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
        state->db.table(specs[i].name).append_rows(contents[i].rows);
    }
    state->refresh_views();
    return Engine(std::move(state));
}

auto Engine::ingest(const Event& event) -> IngestResult {
    State& s = *state_;
    if (s.delivering) throw ReentrantIngest("ingest called from an output callback");
    const TableInfo* input = s.catalog.find_table(event.input);
    if (!input || input->kind != TableKind::Input) throw UnknownInput("unknown input '" + event.input + "'");

    const std::int64_t t = s.timestep + 1;
    std::vector<Violation> violations;

    // Step 1: build the annotated row.
    Row row(input->schema.size());
    for (const auto& [name, value] : event.values) {
        const std::size_t i = find_column(input->schema, name);
        if (i == std::string::npos || i >= input->user_columns) {
            throw UnknownColumn("input " + input->name + " has no column '" + name + "'");
        }
        row[i] = value;
    }
    for (std::size_t i = 0; i < input->user_columns; ++i) {
        auto coerced = coerce(row[i], input->schema[i].type);
        if (!coerced) {
            violations.push_back({input->name, input->schema[i].name,
                                  "type " + std::string(type_name(input->schema[i].type)),
                                  describe_row(input->schema, row, input->user_columns)});
        } else {
            row[i] = std::move(*coerced);
        }
    }
    row[input->user_columns] = Value(t);
    row[input->user_columns + 1] = Value(event.wallclock_ms);

    IngestResult result;
    result.timestep = s.timestep;
    Database::Savepoint savepoint(s.db);

    auto reject = [&](std::vector<Violation> found) -> IngestResult {
        savepoint.rollback();
        s.refresh_views();
        if (s.mode == Mode::Dev) throw ConstraintViolation(std::move(found));
        result.violations = std::move(found);
        return result;
    };

    try {
        // Step 2: input constraints.
        if (violations.empty()) violations = s.check_rows(*input, {row});
        if (!violations.empty()) return reject(std::move(violations));

        // Step 3: commit the event row.
        s.db.table(input->name).append_rows(std::span<const Row>(&row, 1));
        s.views_dirty = true;

        // Step 4: state programs, no-AFTER ones first.
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& program : s.catalog.programs) {
                const bool after = program.after.has_value();
                if (after != (pass == 1)) continue;
                if (after && std::none_of(program.after->begin(), program.after->end(),
                                          [&](const std::string& n) { return iequals(n, input->name); })) {
                    continue;
                }
                for (const auto& ins : program.body) {
                    if (s.views_dirty && s.reads_view(*ins.source)) s.refresh_views();
                    const TableInfo* target = s.catalog.find_table(ins.table);
                    const Relation source = evaluate_plan(*ins.source, s.db);
                    std::vector<Row> batch;
                    batch.reserve(source.rows.size());
                    for (const auto& src : source.rows) {
                        Row out(target->schema.size());
                        for (std::size_t k = 0; k < ins.targets.size(); ++k) {
                            const std::size_t col = ins.targets[k];
                            auto coerced = coerce(src[k], target->schema[col].type);
                            if (!coerced) {
                                out[col] = src[k];
                                violations.push_back(
                                    {target->name, target->schema[col].name,
                                     "type " + std::string(type_name(target->schema[col].type)),
                                     describe_row(target->schema, out, target->user_columns)});
                                continue;
                            }
                            out[col] = std::move(*coerced);
                        }
                        out[target->user_columns] = Value(t);
                        out[target->user_columns + 1] = Value(event.wallclock_ms);
                        batch.push_back(std::move(out));
                    }
                    if (violations.empty()) violations = s.check_rows(*target, batch);
                    if (!violations.empty()) return reject(std::move(violations));
                    s.db.table(target->name).append_rows(batch);
                    if (!batch.empty()) s.views_dirty = true;
                }
            }
        }

        // Step 5: views in dependency order, then their checks.
        s.refresh_views();
        violations = s.check_views();
        if (!violations.empty()) return reject(std::move(violations));
    } catch (const ConstraintViolation&) {
        throw;
    } catch (...) {
        savepoint.rollback();
        s.refresh_views();
        throw;
    }

    savepoint.commit();
    s.timestep = t;
    LoggedEvent logged;
    logged.timestep = t;
    logged.event.input = input->name;
    logged.event.wallclock_ms = event.wallclock_ms;
    for (std::size_t i = 0; i < input->user_columns; ++i) {
        logged.event.values.emplace_back(input->schema[i].name, row[i]);
    }
    s.log.push_back(std::move(logged));

    // Step 6: upcalls for changed bindings, in output declaration order.
    result.committed = true;
    result.timestep = t;
    std::vector<std::size_t> fire;
    for (std::size_t b = 0; b < s.bindings.size(); ++b) {
        Binding& binding = s.bindings[b];
        const Relation* now = s.db.find_view(s.catalog.views[binding.view].name);
        if (multiset_equal(*now, binding.last)) continue;
        binding.last = *now;
        fire.push_back(b);
    }
    std::stable_sort(fire.begin(), fire.end(), [&](std::size_t a, std::size_t b) {
        return s.bindings[a].view < s.bindings[b].view;
    });
    for (std::size_t b : fire) {
        const std::string& name = s.catalog.views[s.bindings[b].view].name;
        if (result.changed_outputs.empty() || result.changed_outputs.back() != name) {
            result.changed_outputs.push_back(name);
        }
    }
    s.delivering = true;
    try {
        for (std::size_t b : fire) s.bindings[b].callback(s.bindings[b].last);
    } catch (...) {
        s.delivering = false;
        throw;
    }
    s.delivering = false;
    return result;
}

void Engine::bind_output(std::string_view output, OutputCallback callback) {
    State& s = *state_;
    const ViewInfo* v = s.catalog.find_view(output);
    if (!v || !v->is_output) throw UnknownOutput("unknown output '" + std::string(output) + "'");
    Binding binding;
    binding.view = static_cast<std::size_t>(v - s.catalog.views.data());
    binding.callback = std::move(callback);
    binding.last = *s.db.find_view(v->name);
    s.bindings.push_back(std::move(binding));
}

auto Engine::query_output(std::string_view name) const -> Relation {
    const State& s = *state_;
    if (const ViewInfo* v = s.catalog.find_view(name)) return evaluate_plan(*v->plan, s.db);
    if (const Table* t = s.db.find_table(name)) return t->relation();
    throw UnknownOutput("unknown view or output '" + std::string(name) + "'");
}

auto Engine::export_log() const -> const std::vector<LoggedEvent>& { return state_->log; }
auto Engine::timestep() const -> std::int64_t { return state_->timestep; }
auto Engine::mode() const -> Mode { return state_->mode; }
auto Engine::catalog() const -> const Catalog& { return state_->catalog; }
auto Engine::database() const -> const Database& { return state_->db; }
auto Engine::program() const -> const ast::Program& { return state_->program; }

auto Engine::input_names() const -> std::vector<std::string> {
    std::vector<std::string> out;
    for (const auto& t : state_->catalog.tables) {
        if (t.kind == TableKind::Input) out.push_back(t.name);
    }
    return out;
}

auto Engine::output_names() const -> std::vector<std::string> {
    std::vector<std::string> out;
    for (const auto& v : state_->catalog.views) {
        if (v.is_output) out.push_back(v.name);
    }
    return out;
}

}  // namespace diel
