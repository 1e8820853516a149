#include "diel/csv.hpp"

#include <charconv>
#include <cstdlib>

#include "util.hpp"

namespace diel::csv {

CsvError::CsvError(std::size_t line_in, const std::string& message)
    : std::runtime_error("line " + std::to_string(line_in) + ": " + message), line(line_in) {}

auto parse_records(std::string_view text) -> std::vector<std::vector<std::optional<std::string>>> {
    std::vector<std::vector<std::optional<std::string>>> records;
    std::vector<std::optional<std::string>> record;
    std::string field;
    bool quoted = false;
    bool any = false;  // current record has content
    std::size_t line = 1;
    std::size_t i = 0;

    auto end_field = [&] {
        if (quoted || !field.empty()) {
            record.emplace_back(field);
        } else {
            record.emplace_back(std::nullopt);
        }
        field.clear();
        quoted = false;
    };
    auto end_record = [&] {
        if (any) {
            end_field();
            records.push_back(std::move(record));
        }
        record.clear();
        field.clear();
        quoted = false;
        any = false;
    };

    while (i < text.size()) {
        const char c = text[i];
        if (c == '"' && field.empty() && !quoted) {
            quoted = true;
            any = true;
            ++i;
            const std::size_t start_line = line;
            while (true) {
                if (i >= text.size()) throw CsvError(start_line, "unterminated quoted field");
                if (text[i] == '"') {
                    if (i + 1 < text.size() && text[i + 1] == '"') {
                        field += '"';
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                if (text[i] == '\n') ++line;
                field += text[i++];
            }
            if (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
                throw CsvError(line, "unexpected character after closing quote");
            }
            continue;
        }
        if (c == ',') {
            any = true;
            end_field();
        } else if (c == '\n') {
            end_record();
            ++line;
        } else if (c == '\r') {
            // tolerated before \n
        } else {
            if (quoted) throw CsvError(line, "unexpected character after closing quote");
            any = true;
            field += c;
        }
        ++i;
    }
    end_record();
    return records;
}

namespace {

auto parse_int(const std::string& s) -> std::optional<std::int64_t> {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

auto parse_real(const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return v;
}

auto parse_bool(const std::string& s) -> std::optional<bool> {
    if (iequals(s, "true")) return true;
    if (iequals(s, "false")) return false;
    return std::nullopt;
}

auto convert(const std::string& s, ValueType type) -> std::optional<Value> {
    switch (type) {
        case ValueType::Integer:
            if (auto v = parse_int(s)) return Value(*v);
            return std::nullopt;
        case ValueType::Real:
            if (auto v = parse_real(s)) return Value(*v);
            return std::nullopt;
        case ValueType::Boolean:
            if (auto v = parse_bool(s)) return Value(*v);
            return std::nullopt;
        case ValueType::Text:
            return Value(s);
    }
    return std::nullopt;
}

auto infer(const std::vector<std::vector<std::optional<std::string>>>& records, std::size_t col)
    -> ValueType {
    for (ValueType t : {ValueType::Integer, ValueType::Real, ValueType::Boolean}) {
        bool fits = true;
        for (std::size_t r = 1; r < records.size() && fits; ++r) {
            const auto& cell = records[r][col];
            if (cell && !convert(*cell, t)) fits = false;
        }
        if (fits) return t;
    }
    return ValueType::Text;
}

auto quote_field(const std::string& s) -> std::string {
    if (s.find_first_of(",\"\n\r") == std::string::npos && !s.empty()) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

auto parse_table(std::string_view text) -> Relation {
    auto records = parse_records(text);
    if (records.empty()) throw CsvError(1, "missing header line");
    Relation rel;
    const auto& header = records[0];
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (!header[c] || header[c]->empty()) throw CsvError(1, "empty column name");
        std::string name = *header[c];
        std::optional<ValueType> type;
        if (auto colon = name.find(':'); colon != std::string::npos) {
            type = parse_type_name(name.substr(colon + 1));
            if (!type) throw CsvError(1, "unknown type in header cell '" + name + "'");
            name = name.substr(0, colon);
        }
        if (find_column(rel.schema, name) != std::string::npos) {
            throw CsvError(1, "duplicate column '" + name + "'");
        }
        rel.schema.push_back({name, ValueType::Text});
        if (type) rel.schema.back().type = *type;
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != header.size()) {
            throw CsvError(r + 1, "expected " + std::to_string(header.size()) + " fields, got " +
                                      std::to_string(records[r].size()));
        }
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c]->find(':') == std::string::npos) rel.schema[c].type = infer(records, c);
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
        Row row;
        for (std::size_t c = 0; c < header.size(); ++c) {
            const auto& cell = records[r][c];
            if (!cell) {
                row.emplace_back();
                continue;
            }
            auto v = convert(*cell, rel.schema[c].type);
            if (!v) {
                throw CsvError(r + 1, "value '" + *cell + "' is not a valid " +
                                          std::string(type_name(rel.schema[c].type)) + " for column " +
                                          rel.schema[c].name);
            }
            row.push_back(std::move(*v));
        }
        rel.rows.push_back(std::move(row));
    }
    return rel;
}

auto write_table(const Relation& relation) -> std::string {
    std::string out;
    for (std::size_t c = 0; c < relation.schema.size(); ++c) {
        if (c) out += ',';
        out += quote_field(relation.schema[c].name);
    }
    out += '\n';
    for (const auto& row : relation.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            if (row[c].is_null()) continue;
            out += quote_field(row[c].is_text() ? row[c].as_text() : row[c].to_string());
        }
        out += '\n';
    }
    return out;
}

}  // namespace diel::csv
