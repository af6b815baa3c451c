#include "mfp/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace mfp {

namespace {

bool is_missing_token(const std::string& s) { return s.empty() || s == "NA"; }

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

// One pass over the raw text; handles quoted fields with embedded
// separators, doubled quotes and CRLF line ends.
std::vector<std::vector<std::string>> parse_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool line_has_content = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_line = [&] {
        if (line_has_content || !row.empty() || !field.empty() || field_was_quoted) {
            end_field();
            rows.push_back(std::move(row));
            row.clear();
        }
        line_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
        case '"':
            if (!field.empty()) throw DataError("csv: stray quote inside unquoted field");
            in_quotes = true;
            field_was_quoted = true;
            line_has_content = true;
            break;
        case ',':
            end_field();
            line_has_content = true;
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_line();
            break;
        case '\n':
            end_line();
            break;
        default:
            field.push_back(ch);
            line_has_content = true;
        }
    }
    if (in_quotes) throw DataError("csv: unterminated quoted field");
    end_line();
    return rows;
}

} // namespace

Dataset read_csv_string(const std::string& text, const CsvReadOptions& opts) {
    auto rows = parse_rows(text);
    if (rows.empty()) throw DataError("csv: missing header row");
    const auto header = rows.front();
    const std::size_t p = header.size();
    {
        std::set<std::string> seen;
        for (const auto& h : header)
            if (!seen.insert(h).second) throw DataError("csv: duplicate column name: " + h);
    }
    for (std::size_t r = 1; r < rows.size(); ++r)
        if (rows[r].size() != p)
            throw DataError("csv: row " + std::to_string(r) + " has " +
                            std::to_string(rows[r].size()) + " fields, expected " +
                            std::to_string(p));
    for (const auto& [name, kind] : opts.schema)
        if (std::find(header.begin(), header.end(), name) == header.end())
            throw DataError("csv: schema column not in file: " + name);
    if (opts.schema_is_exact && opts.schema.size() != p)
        throw DataError("csv: file has " + std::to_string(p) + " columns, schema has " +
                        std::to_string(opts.schema.size()));

    const std::size_t n = rows.size() - 1;
    Dataset out;
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<std::uint8_t> miss(n, 0);
        for (std::size_t i = 0; i < n; ++i)
            miss[i] = is_missing_token(rows[i + 1][j]) ? 1 : 0;

        auto it = opts.schema.find(header[j]);
        const ColumnKind* declared = it == opts.schema.end() ? nullptr : &it->second;

        bool continuous;
        if (declared) {
            continuous = !declared->is_categorical();
        } else {
            continuous = true;
            for (std::size_t i = 0; i < n && continuous; ++i) {
                double v;
                if (!miss[i] && !parse_number(rows[i + 1][j], v)) continuous = false;
            }
        }

        if (continuous) {
            std::vector<double> v(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                if (miss[i]) continue;
                if (!parse_number(rows[i + 1][j], v[i]))
                    throw DataError("csv: non-numeric value '" + rows[i + 1][j] +
                                    "' in continuous column " + header[j]);
            }
            out.add_continuous(header[j], std::move(v), std::move(miss));
        } else {
            ColumnKind kind;
            if (declared) {
                kind = *declared;
            } else {
                std::set<std::string> levels;
                for (std::size_t i = 0; i < n; ++i)
                    if (!miss[i]) levels.insert(rows[i + 1][j]);
                if (levels.empty())
                    throw DataError("csv: cannot infer levels for fully missing column " +
                                    header[j]);
                kind = ColumnKind::categorical({levels.begin(), levels.end()});
            }
            std::vector<std::int32_t> v(n, 0);
            for (std::size_t i = 0; i < n; ++i) {
                if (miss[i]) continue;
                std::int32_t lvl = kind.level_index(rows[i + 1][j]);
                if (lvl < 0) {
                    auto mapped = opts.map_unseen_to.find(header[j]);
                    if (mapped == opts.map_unseen_to.end())
                        throw DataError("csv: unseen level '" + rows[i + 1][j] +
                                        "' in column " + header[j]);
                    lvl = mapped->second;
                    if (opts.unseen_mapped_out) ++*opts.unseen_mapped_out;
                }
                v[i] = lvl;
            }
            out.add_categorical(header[j], std::move(kind), std::move(v), std::move(miss));
        }
    }
    return out;
}

Dataset read_csv(const std::string& path, const CsvReadOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return read_csv_string(buf.str(), opts);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

namespace {

std::string quote_if_needed(const std::string& s) {
    bool needs = s.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace

std::string write_csv_string(const Dataset& d) {
    std::string out;
    for (std::size_t j = 0; j < d.n_cols(); ++j) {
        if (j) out.push_back(',');
        out += quote_if_needed(d.column(j).name);
    }
    out.push_back('\n');
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        for (std::size_t j = 0; j < d.n_cols(); ++j) {
            if (j) out.push_back(',');
            const auto& c = d.column(j);
            if (c.miss[i]) {
                out += "NA";
            } else if (c.kind.is_categorical()) {
                out += quote_if_needed(c.kind.levels[static_cast<std::size_t>(c.cat[i])]);
            } else {
                out += format_double(c.cont[i]);
            }
        }
        out.push_back('\n');
    }
    return out;
}

void write_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out << write_csv_string(d);
    if (!out) throw IoError("write failed: " + path);
}

} // namespace mfp
