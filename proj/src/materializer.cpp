#include "reposim/materializer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <zlib.h>

#include "reposim/errors.hpp"
#include "reposim/expr.hpp"

namespace reposim {

std::optional<std::size_t> TableData::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Numbers

double round_sig6(double x) {
    if (!std::isfinite(x) || x == 0.0) return x == 0.0 ? 0.0 : x;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    double out = 0.0;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), out);
    return out == 0.0 ? 0.0 : out;  // drop negative zero
}

std::string format_real(double x) {
    if (x == 0.0) return "0";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string format_cell(const CellValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    return format_real(std::get<double>(v));
}

// ---------------------------------------------------------------------------
// Population

namespace {

std::size_t draw_rows(const MaterializerParams& p, RandomStream& stream) {
    const double x = round_half_even(sample_normal(stream, p.mu_rows, p.sigma_rows));
    if (!(x >= 1.0)) return 1;
    return static_cast<std::size_t>(std::min(x, 1.0e6));
}

std::string zero_padded(std::uint64_t n, int width) {
    std::string s = std::to_string(n);
    if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
    return s;
}

ExprValue to_expr_value(const CellValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::get<double>(v);
}

}  // namespace

std::size_t row_count(const RepositorySpec& spec, std::string_view path) {
    if (!spec.find_path(path))
        throw PathNotInRepository("path is not in repository " + std::to_string(spec.master_seed) +
                                  ": " + std::string(path));
    RandomStream stream(path_seed(path));
    return draw_rows(spec.materializer, stream);
}

TableData populate_file(const RepositorySpec& spec, std::string_view path) {
    return populate_file(spec, path, nullptr);
}

TableData populate_file(const RepositorySpec& spec, std::string_view path,
                        std::vector<std::vector<double>>* noise) {
    const auto idx = spec.find_path(path);
    if (!idx)
        throw PathNotInRepository("path is not in repository " + std::to_string(spec.master_seed) +
                                  ": " + std::string(path));
    const auto& assignment = spec.assignments[*idx];
    RandomStream stream(path_seed(path));
    TableData table;
    table.n_rows = draw_rows(spec.materializer, stream);
    const std::size_t n = table.n_rows;
    const std::int64_t anchor = days_from_iso(spec.anchor_date);

    // Expression slots: path variables first, then columns as they are produced.
    std::vector<std::string> slot_names;
    std::vector<ExprValue> path_values;
    for (std::size_t i = 0; i < spec.path_template.placeholders.size(); ++i) {
        slot_names.push_back(spec.path_template.placeholders[i]);
        path_values.emplace_back(assignment[i]);
    }

    for (const auto* var : spec.column_order()) {
        std::vector<CellValue> values;
        values.reserve(n);
        switch (var->role) {
            case VarRole::Identifier: {
                const auto offset = static_cast<std::uint64_t>(std::floor(stream.uniform() * 1.0e6));
                for (std::size_t r = 0; r < n; ++r)
                    values.emplace_back("ID-" + zero_padded(offset + r, 7));
                break;
            }
            case VarRole::Datetime:
                for (std::size_t r = 0; r < n; ++r)
                    values.emplace_back(iso_from_days(
                        anchor - static_cast<std::int64_t>(std::floor(stream.uniform() * 180.0))));
                break;
            case VarRole::Independent:
                for (std::size_t r = 0; r < n; ++r) {
                    auto v = sample(*var->dist, stream);
                    if (auto* d = std::get_if<double>(&v)) *d = round_sig6(*d);
                    values.push_back(std::move(v));
                }
                break;
            case VarRole::Dependent: {
                CompiledExpr expr(var->expr, slot_names);
                std::vector<double> draws;
                draws.reserve(n);
                std::vector<ExprValue> slots(slot_names.size());
                std::copy(path_values.begin(), path_values.end(), slots.begin());
                for (std::size_t r = 0; r < n; ++r) {
                    const double e = sample_normal(stream, 0.0, spec.materializer.sigma_noise);
                    draws.push_back(e);
                    for (std::size_t c = 0; c < table.columns.size(); ++c)
                        slots[path_values.size() + c] = to_expr_value(table.columns[c][r]);
                    double y = 0.0;
                    try {
                        y = expr.evaluate(slots, e);
                    } catch (const ExprEvalError& err) {
                        throw ExprEvalError("evaluating \"" + var->name + "\" in " +
                                            std::string(path) + " row " + std::to_string(r) +
                                            ": " + err.what());
                    }
                    values.emplace_back(round_sig6(y));
                }
                if (noise) noise->push_back(std::move(draws));
                break;
            }
        }
        table.names.push_back(var->name);
        table.kinds.push_back(var->kind);
        table.columns.push_back(std::move(values));
        slot_names.push_back(var->name);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Encoders

namespace {

std::string csv_field(const std::string& s) {
    if (!s.empty() && s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

std::string json_cell(const CellValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return json_string(*s);
    return format_cell(v);
}

std::string log_value(const std::string& s) {
    if (s.empty() || s.find_first_of(" \t\r\n\"=") != std::string::npos) return json_string(s);
    return s;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string column_letters(std::size_t index) {
    std::string out;
    ++index;
    while (index > 0) {
        --index;
        out.insert(out.begin(), static_cast<char>('A' + index % 26));
        index /= 26;
    }
    return out;
}

void put16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

// Uncompressed zip with fixed timestamps so bytes depend only on content.
std::string stored_zip(const std::vector<std::pair<std::string, std::string>>& entries) {
    constexpr std::uint16_t dos_time = 0;
    constexpr std::uint16_t dos_date = (0 << 9) | (1 << 5) | 1;  // 1980-01-01
    std::string out;
    std::string central;
    for (const auto& [name, data] : entries) {
        const auto crc = static_cast<std::uint32_t>(
            crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
        const auto size = static_cast<std::uint32_t>(data.size());
        const auto offset = static_cast<std::uint32_t>(out.size());
        put32(out, 0x04034b50);
        put16(out, 20);
        put16(out, 0);
        put16(out, 0);
        put16(out, dos_time);
        put16(out, dos_date);
        put32(out, crc);
        put32(out, size);
        put32(out, size);
        put16(out, static_cast<std::uint16_t>(name.size()));
        put16(out, 0);
        out += name;
        out += data;

        put32(central, 0x02014b50);
        put16(central, 20);
        put16(central, 20);
        put16(central, 0);
        put16(central, 0);
        put16(central, dos_time);
        put16(central, dos_date);
        put32(central, crc);
        put32(central, size);
        put32(central, size);
        put16(central, static_cast<std::uint16_t>(name.size()));
        put16(central, 0);
        put16(central, 0);
        put16(central, 0);
        put16(central, 0);
        put32(central, 0);
        put32(central, offset);
        central += name;
    }
    const auto cd_offset = static_cast<std::uint32_t>(out.size());
    out += central;
    put32(out, 0x06054b50);
    put16(out, 0);
    put16(out, 0);
    put16(out, static_cast<std::uint16_t>(entries.size()));
    put16(out, static_cast<std::uint16_t>(entries.size()));
    put32(out, static_cast<std::uint32_t>(central.size()));
    put32(out, cd_offset);
    put16(out, 0);
    return out;
}

constexpr const char* kXmlDecl = "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n";

std::string xlsx_cell(const std::string& ref, const CellValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) {
        const bool keep_space = !s->empty() && (s->front() == ' ' || s->back() == ' ');
        return "<c r=\"" + ref + "\" t=\"inlineStr\"><is><t" +
               (keep_space ? " xml:space=\"preserve\"" : "") + ">" + xml_escape(*s) +
               "</t></is></c>";
    }
    return "<c r=\"" + ref + "\"><v>" + format_cell(v) + "</v></c>";
}

}  // namespace

std::string encode_csv(const TableData& t) {
    std::string out;
    for (std::size_t c = 0; c < t.names.size(); ++c) out += (c ? "," : "") + csv_field(t.names[c]);
    out += "\n";
    for (std::size_t r = 0; r < t.n_rows; ++r) {
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            out += (c ? "," : "") + csv_field(format_cell(t.columns[c][r]));
        out += "\n";
    }
    return out;
}

std::string encode_json(const TableData& t) {
    if (t.n_rows == 0) return "[]\n";
    std::string out = "[\n";
    for (std::size_t r = 0; r < t.n_rows; ++r) {
        out += "  {\n";
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            out += "    " + json_string(t.names[c]) + ":" + json_cell(t.columns[c][r]);
            out += c + 1 < t.columns.size() ? ",\n" : "\n";
        }
        out += r + 1 < t.n_rows ? "  },\n" : "  }\n";
    }
    return out + "]\n";
}

std::string encode_jsonl(const TableData& t) {
    std::string out;
    for (std::size_t r = 0; r < t.n_rows; ++r) {
        out += "{";
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            out += (c ? "," : "") + json_string(t.names[c]) + ":" + json_cell(t.columns[c][r]);
        out += "}\n";
    }
    return out;
}

std::string encode_txt(const TableData& t) {
    std::string out;
    for (std::size_t c = 0; c < t.names.size(); ++c) out += (c ? "\t" : "") + t.names[c];
    out += "\n";
    for (std::size_t r = 0; r < t.n_rows; ++r) {
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            out += (c ? "\t" : "") + format_cell(t.columns[c][r]);
        out += "\n";
    }
    return out;
}

std::string encode_log(const TableData& t) {
    std::string out;
    for (std::size_t r = 0; r < t.n_rows; ++r) {
        out += std::to_string(r);
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            out += " " + t.names[c] + "=" + log_value(format_cell(t.columns[c][r]));
        out += "\n";
    }
    return out;
}

std::string encode_xlsx(const TableData& t) {
    std::string sheet = std::string(kXmlDecl) +
                        "<worksheet xmlns=\"http://schemas.openxmlformats.org/spreadsheetml/2006/"
                        "main\"><sheetData>";
    sheet += "<row r=\"1\">";
    for (std::size_t c = 0; c < t.names.size(); ++c)
        sheet += xlsx_cell(column_letters(c) + "1", CellValue(t.names[c]));
    sheet += "</row>";
    for (std::size_t r = 0; r < t.n_rows; ++r) {
        const auto row = std::to_string(r + 2);
        sheet += "<row r=\"" + row + "\">";
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            sheet += xlsx_cell(column_letters(c) + row, t.columns[c][r]);
        sheet += "</row>";
    }
    sheet += "</sheetData></worksheet>";

    const std::string rel_ns = "http://schemas.openxmlformats.org/package/2006/relationships";
    const std::string doc_rel = "http://schemas.openxmlformats.org/officeDocument/2006/relationships";
    std::vector<std::pair<std::string, std::string>> entries = {
        {"[Content_Types].xml",
         std::string(kXmlDecl) +
             "<Types xmlns=\"http://schemas.openxmlformats.org/package/2006/content-types\">"
             "<Default Extension=\"rels\" "
             "ContentType=\"application/vnd.openxmlformats-package.relationships+xml\"/>"
             "<Default Extension=\"xml\" ContentType=\"application/xml\"/>"
             "<Override PartName=\"/xl/workbook.xml\" "
             "ContentType=\"application/"
             "vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml\"/>"
             "<Override PartName=\"/xl/worksheets/sheet1.xml\" "
             "ContentType=\"application/"
             "vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml\"/>"
             "</Types>"},
        {"_rels/.rels", std::string(kXmlDecl) + "<Relationships xmlns=\"" + rel_ns +
                            "\"><Relationship Id=\"rId1\" Type=\"" + doc_rel +
                            "/officeDocument\" Target=\"xl/workbook.xml\"/></Relationships>"},
        {"xl/workbook.xml",
         std::string(kXmlDecl) +
             "<workbook xmlns=\"http://schemas.openxmlformats.org/spreadsheetml/2006/main\" "
             "xmlns:r=\"" + doc_rel + "\"><sheets><sheet name=\"data\" sheetId=\"1\" "
             "r:id=\"rId1\"/></sheets></workbook>"},
        {"xl/_rels/workbook.xml.rels",
         std::string(kXmlDecl) + "<Relationships xmlns=\"" + rel_ns +
             "\"><Relationship Id=\"rId1\" Type=\"" + doc_rel +
             "/worksheet\" Target=\"worksheets/sheet1.xml\"/></Relationships>"},
        {"xl/worksheets/sheet1.xml", sheet},
    };
    return stored_zip(entries);
}

std::string encode_table(const TableData& table, std::string_view extension) {
    if (extension == "csv") return encode_csv(table);
    if (extension == "json") return encode_json(table);
    if (extension == "jsonl") return encode_jsonl(table);
    if (extension == "xlsx") return encode_xlsx(table);
    if (extension == "txt") return encode_txt(table);
    if (extension == "log") return encode_log(table);
    throw InvalidArgument("unsupported extension \"" + std::string(extension) + "\"");
}

std::string mime_type_for(std::string_view path) {
    const auto dot = path.rfind('.');
    const auto ext = dot == std::string_view::npos ? std::string_view{} : path.substr(dot + 1);
    if (ext == "csv") return "text/csv";
    if (ext == "json") return "application/json";
    if (ext == "jsonl") return "application/x-ndjson";
    if (ext == "xlsx") return "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet";
    if (ext == "md") return "text/markdown";
    if (ext == "txt" || ext == "log") return "text/plain";
    return "application/octet-stream";
}

std::optional<std::string> render_readme(const RepositorySpec& spec) {
    if (!spec.readme_present) return std::nullopt;
    return "# " + spec.project.title + "\n\n## Abstract\n\n" + spec.project.abstract + "\n";
}

// ---------------------------------------------------------------------------
// Virtual filesystem

std::string normalize_repo_path(std::string_view path) {
    for (;;) {
        if (path.substr(0, 2) == "./") path.remove_prefix(2);
        else if (!path.empty() && path.front() == '/') path.remove_prefix(1);
        else break;
    }
    return std::string(path);
}

bool glob_match(std::string_view pattern, std::string_view text) {
    std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
    while (t < text.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
            ++p;
            ++t;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

namespace {

std::vector<std::string> split_segments(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto slash = s.find('/', start);
        out.emplace_back(s.substr(start, slash - start));
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
    return out;
}

bool has_wildcard(std::string_view s) { return s.find_first_of("*?") != std::string_view::npos; }

}  // namespace

std::vector<std::string> vfs_entries(const RepositorySpec& spec) {
    std::set<std::string> entries;
    for (const auto& p : spec.paths) {
        entries.insert(p);
        for (auto slash = p.find('/'); slash != std::string::npos; slash = p.find('/', slash + 1))
            entries.insert(p.substr(0, slash));
    }
    if (spec.readme_present) entries.insert(std::string(kReadmeName));
    return {entries.begin(), entries.end()};
}

std::vector<std::string> vfs_list(const RepositorySpec& spec, std::string_view prefix, int depth) {
    if (depth < 1) throw InvalidArgument("depth must be at least 1");
    for (char c : prefix)
        if (static_cast<unsigned char>(c) < 0x20)
            throw InvalidArgument("prefix contains control characters");
    std::string norm = normalize_repo_path(prefix);
    while (!norm.empty() && norm.back() == '/') norm.pop_back();

    std::vector<std::string> segments;
    if (!norm.empty()) segments = split_segments(norm);
    for (const auto& s : segments) {
        if (s.empty()) throw InvalidArgument("prefix contains an empty path segment");
        if (s == "." || s == "..") throw InvalidArgument("prefix may not contain . or .. segments");
    }
    std::size_t literal = 0;
    while (literal < segments.size() && !has_wildcard(segments[literal])) ++literal;
    std::string base;
    for (std::size_t i = 0; i < literal; ++i) base += (i ? "/" : "") + segments[i];

    const auto entries = vfs_entries(spec);
    const bool wildcard = literal < segments.size();
    if (!wildcard && !base.empty()) {
        if (std::binary_search(entries.begin(), entries.end(), base)) {
            const bool is_dir = std::any_of(entries.begin(), entries.end(), [&](const std::string& e) {
                return e.size() > base.size() && e.compare(0, base.size(), base) == 0 &&
                       e[base.size()] == '/';
            });
            if (!is_dir) return {base};
        } else {
            // A partial name lists the entries that begin with it.
            return vfs_list(spec, norm + "*", depth);
        }
    }

    const std::size_t pattern_len = segments.size() - literal;
    const std::size_t lo = std::max<std::size_t>(pattern_len, 1);
    const std::size_t hi = lo + static_cast<std::size_t>(depth) - 1;
    std::vector<std::string> out;
    for (const auto& e : entries) {
        std::string_view rel = e;
        if (!base.empty()) {
            if (e.size() <= base.size() || e.compare(0, base.size(), base) != 0 ||
                e[base.size()] != '/')
                continue;
            rel.remove_prefix(base.size() + 1);
        }
        const auto rel_segments = split_segments(rel);
        if (rel_segments.size() < lo || rel_segments.size() > hi) continue;
        bool ok = true;
        for (std::size_t i = 0; i < pattern_len && ok; ++i)
            ok = glob_match(segments[literal + i], rel_segments[i]);
        if (!ok) continue;
        out.push_back(wildcard || base.empty() ? e : std::string(rel));
    }
    return out;
}

std::string vfs_file_bytes(const RepositorySpec& spec, std::string_view path) {
    const auto norm = normalize_repo_path(path);
    if (norm == kReadmeName) {
        if (auto readme = render_readme(spec)) return *readme;
        throw FileNotFound("no such file: " + std::string(path));
    }
    if (!spec.find_path(norm)) throw FileNotFound("no such file: " + std::string(path));
    return encode_table(populate_file(spec, norm), spec.path_template.extension);
}

std::string truncate_lines(const std::string& content, std::optional<long long> head,
                           std::optional<long long> tail) {
    if ((head && *head < 0) || (tail && *tail < 0))
        throw InvalidArgument("head and tail must be non-negative");
    std::string out = content;
    if (head) {
        std::size_t pos = 0;
        long long lines = 0;
        while (lines < *head && pos < out.size()) {
            auto nl = out.find('\n', pos);
            pos = nl == std::string::npos ? out.size() : nl + 1;
            ++lines;
        }
        out.resize(pos);
    }
    if (tail) {
        if (*tail == 0) return {};
        // Walk back over `tail` line starts; a trailing newline ends the last line.
        std::size_t end = out.size();
        if (end > 0 && out[end - 1] == '\n') --end;
        long long lines = 0;
        std::size_t start = end;
        while (start > 0) {
            if (out[start - 1] == '\n' && ++lines == *tail) break;
            --start;
        }
        out.erase(0, start);
    }
    return out;
}

std::string vfs_read(const RepositorySpec& spec, std::string_view path,
                     std::optional<long long> head, std::optional<long long> tail) {
    return truncate_lines(vfs_file_bytes(spec, path), head, tail);
}

void export_repository(const RepositorySpec& spec, const std::filesystem::path& root) {
    std::filesystem::create_directories(root);
    auto write = [&](const std::string& rel, const std::string& bytes) {
        const auto target = root / rel;
        std::filesystem::create_directories(target.parent_path());
        std::ofstream out(target, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("cannot write " + target.string());
    };
    if (auto readme = render_readme(spec)) write(std::string(kReadmeName), *readme);
    for (const auto& p : spec.paths)
        write(p, encode_table(populate_file(spec, p), spec.path_template.extension));
}

}  // namespace reposim
