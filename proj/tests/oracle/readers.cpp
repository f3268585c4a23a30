#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "oracle.hpp"

namespace oracle {

using nlohmann::json;

namespace {

std::vector<std::string> split_lines(const std::string& bytes) {
    std::vector<std::string> out;
    std::string line;
    std::istringstream in(bytes);
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string cell_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number_float()) return v.dump();
    throw std::runtime_error("unexpected json cell: " + v.dump());
}

std::uint32_t le32(const std::string& b, std::size_t at) {
    if (at + 4 > b.size()) throw std::runtime_error("zip: truncated");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[at + static_cast<std::size_t>(i)]);
    return v;
}

std::uint16_t le16(const std::string& b, std::size_t at) {
    if (at + 2 > b.size()) throw std::runtime_error("zip: truncated");
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                      (static_cast<unsigned char>(b[at + 1]) << 8));
}

std::string inflate_raw(const std::string& data, std::size_t expected) {
    std::string out(expected, '\0');
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw std::runtime_error("zip: inflateInit2");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END) throw std::runtime_error("zip: inflate failed");
    return out;
}

std::string xml_unescape(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out += s[i];
            continue;
        }
        const auto semi = s.find(';', i);
        if (semi == std::string::npos) throw std::runtime_error("xml: bad entity");
        const std::string ent = s.substr(i + 1, semi - i - 1);
        if (ent == "amp") out += '&';
        else if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else if (!ent.empty() && ent[0] == '#') {
            const long cp = ent.size() > 1 && ent[1] == 'x' ? std::stol(ent.substr(2), nullptr, 16)
                                                            : std::stol(ent.substr(1));
            if (cp < 0x80) out += static_cast<char>(cp);
            else throw std::runtime_error("xml: non-ascii char ref unsupported in oracle");
        } else {
            throw std::runtime_error("xml: unknown entity " + ent);
        }
        i = semi;
    }
    return out;
}

// Column index from a cell reference such as "AB12".
std::size_t column_of(const std::string& ref) {
    std::size_t col = 0;
    for (char c : ref) {
        if (c < 'A' || c > 'Z') break;
        col = col * 26 + static_cast<std::size_t>(c - 'A' + 1);
    }
    return col - 1;
}

}  // namespace

Table read_csv(const std::string& bytes) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false, after_quote = false, any = false;
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const char c = bytes[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < bytes.size() && bytes[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                    after_quote = true;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"' && field.empty() && !after_quote) {
            quoted = true;
            any = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
            after_quote = false;
            any = true;
        } else if (c == '\n') {
            fields.push_back(field);
            records.push_back(fields);
            fields.clear();
            field.clear();
            after_quote = false;
            any = false;
        } else if (c == '\r') {
            // tolerated before \n
        } else {
            if (after_quote) throw std::runtime_error("csv: text after closing quote");
            field += c;
            any = true;
        }
    }
    if (quoted) throw std::runtime_error("csv: unterminated quote");
    if (any || !fields.empty()) {
        fields.push_back(field);
        records.push_back(fields);
    }
    if (records.empty()) throw std::runtime_error("csv: no header");
    Table t;
    t.names = records.front();
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != t.names.size()) throw std::runtime_error("csv: ragged row");
        t.rows.push_back(records[r]);
    }
    return t;
}

Table read_tsv(const std::string& bytes) {
    const auto lines = split_lines(bytes);
    if (lines.empty()) throw std::runtime_error("tsv: no header");
    Table t;
    t.names = split(lines[0], '\t');
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto cells = split(lines[i], '\t');
        if (cells.size() != t.names.size()) throw std::runtime_error("tsv: ragged row");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

Table read_json(const std::string& bytes) {
    // ordered_json keeps the column order as written
    const auto doc = nlohmann::ordered_json::parse(bytes);
    if (!doc.is_array()) throw std::runtime_error("json: top level is not an array");
    Table t;
    for (const auto& row : doc) {
        if (!row.is_object()) throw std::runtime_error("json: row is not an object");
        if (t.names.empty())
            for (const auto& [k, v] : row.items()) t.names.push_back(k);
        std::vector<std::string> cells;
        for (const auto& name : t.names) cells.push_back(cell_text(json::parse(row.at(name).dump())));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

Table read_jsonl(const std::string& bytes) {
    Table t;
    for (const auto& line : split_lines(bytes)) {
        if (line.empty()) continue;
        const auto row = nlohmann::ordered_json::parse(line);
        if (t.names.empty())
            for (const auto& [k, v] : row.items()) t.names.push_back(k);
        std::vector<std::string> cells;
        for (const auto& name : t.names) cells.push_back(cell_text(json::parse(row.at(name).dump())));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

Table read_log(const std::string& bytes) {
    Table t;
    std::size_t expected_index = 0;
    for (const auto& line : split_lines(bytes)) {
        std::size_t i = line.find(' ');
        if (line.substr(0, i) != std::to_string(expected_index++)) throw std::runtime_error("log: bad row index");
        std::vector<std::string> names, cells;
        while (i != std::string::npos && i < line.size()) {
            ++i;  // the space
            const auto eq = line.find('=', i);
            if (eq == std::string::npos) throw std::runtime_error("log: missing '='");
            names.push_back(line.substr(i, eq - i));
            std::size_t j = eq + 1;
            if (j < line.size() && line[j] == '"') {
                std::size_t k = j + 1;
                while (k < line.size() && line[k] != '"') k += line[k] == '\\' ? 2 : 1;
                cells.push_back(json::parse(line.substr(j, k - j + 1)).get<std::string>());
                j = k + 1;
            } else {
                const auto sp = line.find(' ', j);
                cells.push_back(line.substr(j, sp == std::string::npos ? std::string::npos : sp - j));
                j = sp == std::string::npos ? line.size() : sp;
            }
            i = j < line.size() ? j : std::string::npos;
        }
        if (t.names.empty()) t.names = names;
        if (names != t.names) throw std::runtime_error("log: column names differ between rows");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

std::string unzip_entry(const std::string& zip, const std::string& name) {
    std::size_t at = 0;
    while (at + 30 <= zip.size() && le32(zip, at) == 0x04034b50) {
        const auto method = le16(zip, at + 8);
        const auto csize = le32(zip, at + 18);
        const auto usize = le32(zip, at + 22);
        const auto nlen = le16(zip, at + 26);
        const auto xlen = le16(zip, at + 28);
        const std::string entry = zip.substr(at + 30, nlen);
        const std::size_t data = at + 30 + nlen + xlen;
        if (entry == name) {
            const std::string raw = zip.substr(data, csize);
            if (method == 0) return raw;
            if (method == 8) return inflate_raw(raw, usize);
            throw std::runtime_error("zip: unsupported method");
        }
        at = data + csize;
    }
    throw std::runtime_error("zip: no entry " + name);
}

Table read_xlsx(const std::string& bytes) {
    const std::string sheet = unzip_entry(bytes, "xl/worksheets/sheet1.xml");
    std::vector<std::vector<std::string>> grid;
    std::size_t pos = 0;
    while ((pos = sheet.find("<row", pos)) != std::string::npos) {
        const auto end = sheet.find("</row>", pos);
        if (end == std::string::npos) throw std::runtime_error("xlsx: unterminated row");
        const std::string row = sheet.substr(pos, end - pos);
        std::vector<std::string> cells;
        std::size_t c = 0;
        while ((c = row.find("<c ", c)) != std::string::npos) {
            const auto close = row.find("</c>", c);
            const std::string cell = row.substr(c, close - c);
            const auto r = cell.find("r=\"");
            const std::size_t col = column_of(cell.substr(r + 3));
            std::string text;
            if (const auto tpos = cell.find("<t"); tpos != std::string::npos) {
                const auto open_end = cell.find('>', tpos);
                text = xml_unescape(cell.substr(open_end + 1, cell.find("</t>") - open_end - 1));
            } else if (const auto v = cell.find("<v>"); v != std::string::npos) {
                text = cell.substr(v + 3, cell.find("</v>") - v - 3);
            }
            if (cells.size() <= col) cells.resize(col + 1);
            cells[col] = text;
            c = close;
        }
        grid.push_back(std::move(cells));
        pos = end;
    }
    if (grid.empty()) throw std::runtime_error("xlsx: no rows");
    Table t;
    t.names = grid.front();
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i].size() != t.names.size()) throw std::runtime_error("xlsx: ragged row");
        t.rows.push_back(grid[i]);
    }
    return t;
}

Table read_table(const std::string& bytes, const std::string& ext) {
    if (ext == "csv") return read_csv(bytes);
    if (ext == "txt") return read_tsv(bytes);
    if (ext == "json") return read_json(bytes);
    if (ext == "jsonl") return read_jsonl(bytes);
    if (ext == "log") return read_log(bytes);
    if (ext == "xlsx") return read_xlsx(bytes);
    throw std::runtime_error("no reader for ." + ext);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> list_files(const fs::path& root) {
    std::vector<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).generic_string());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace oracle
