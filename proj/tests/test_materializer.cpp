#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <set>

#include "checks.hpp"
#include "doctest.h"
#include "oracle.hpp"
#include "reposim/errors.hpp"
#include "reposim/expr.hpp"
#include "reposim/materializer.hpp"
#include "support.hpp"

using namespace reposim;
using testing_support::shared_spec;

namespace {

// First seed whose repository uses each extension.
const std::map<std::string, std::uint64_t>& seed_by_extension() {
    static const auto table = [] {
        std::map<std::string, std::uint64_t> out;
        for (std::uint64_t seed = 1; out.size() < file_extensions().size() && seed < 500; ++seed)
            out.emplace(shared_spec(seed)->path_template.extension, seed);
        return out;
    }();
    return table;
}

std::optional<double> as_double(const std::string& s) {
    double v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

bool same_cell(const std::string& want, const std::string& got) {
    if (want == got) return true;
    const auto a = as_double(want), b = as_double(got);
    return a && b && *a == *b;
}

TableData small_table() {
    TableData t;
    t.names = {"name", "count", "value"};
    t.kinds = {VarKind::Categorical, VarKind::DiscreteInteger, VarKind::Continuous};
    t.columns = {{CellValue(std::string("")), CellValue(std::string("a,\"b\"")), CellValue(std::string("x y=z"))},
                 {CellValue(std::int64_t{0}), CellValue(std::int64_t{-4}), CellValue(std::int64_t{12})},
                 {CellValue(0.5), CellValue(-1.25e-7), CellValue(123456.0)}};
    t.n_rows = 3;
    return t;
}

}  // namespace

TEST_CASE("every extension is represented") {
    CHECK(seed_by_extension().size() == 6);
}

TEST_CASE("exported files read back through independent parsers") {
    for (const auto& [ext, seed] : seed_by_extension()) {
        const auto& spec = *shared_spec(seed);
        testing_support::TempDir dir;
        export_repository(spec, dir.path());
        INFO("extension " << ext << " seed " << seed);

        auto files = oracle::list_files(dir.path());
        std::vector<std::string> expected = spec.paths;
        if (spec.readme_present) expected.push_back("README.md");
        std::sort(expected.begin(), expected.end());
        CHECK(files == expected);

        std::size_t checked = 0;
        for (const auto& path : spec.paths) {
            if (checked++ >= 8) break;
            const auto bytes = oracle::slurp(dir / path);
            CHECK(bytes == vfs_file_bytes(spec, path));
            const auto table = oracle::read_table(bytes, ext);
            const auto data = populate_file(spec, path);
            REQUIRE(table.rows.size() == data.n_rows);
            CHECK(data.n_rows ==
                  oracle::replay_row_count(path, spec.materializer.mu_rows, spec.materializer.sigma_rows));
            REQUIRE(table.names == data.names);
            for (std::size_t r = 0; r < data.n_rows; ++r)
                for (std::size_t c = 0; c < data.names.size(); ++c) {
                    const auto want = format_cell(data.columns[c][r]);
                    if (!same_cell(want, table.rows[r][c])) {
                        INFO(path << " row " << r << " column " << data.names[c]);
                        CHECK(want == table.rows[r][c]);
                    }
                }
        }
    }
}

TEST_CASE("population is deterministic and consistent with row_count") {
    const auto& spec = *shared_spec(5);
    for (std::size_t i = 0; i < std::min<std::size_t>(spec.paths.size(), 10); ++i) {
        const auto a = populate_file(spec, spec.paths[i]);
        const auto b = populate_file(spec, spec.paths[i]);
        CHECK(encode_csv(a) == encode_csv(b));
        CHECK(a.n_rows == row_count(spec, spec.paths[i]));
        for (const auto& col : a.columns) CHECK(col.size() == a.n_rows);
    }
    CHECK_THROWS_AS(populate_file(spec, "not/in/repo.csv"), PathNotInRepository);
    CHECK_THROWS_AS(row_count(spec, "not/in/repo.csv"), PathNotInRepository);
}

TEST_CASE("column kinds hold their declared value types") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto& spec = *shared_spec(seed);
        const auto t = populate_file(spec, spec.paths.front());
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            for (const auto& v : t.columns[c]) {
                switch (t.kinds[c]) {
                    case VarKind::Categorical: CHECK(std::holds_alternative<std::string>(v)); break;
                    case VarKind::DiscreteInteger: CHECK(std::holds_alternative<std::int64_t>(v)); break;
                    case VarKind::Continuous: {
                        REQUIRE(std::holds_alternative<double>(v));
                        const double x = std::get<double>(v);
                        CHECK(std::isfinite(x));
                        CHECK(round_sig6(x) == x);
                        break;
                    }
                }
            }
    }
}

TEST_CASE("dependent columns equal their expression plus the recorded noise") {
    const auto& spec = *shared_spec(2);
    const auto& path = spec.paths.front();
    std::vector<std::vector<double>> noise;
    const auto t = populate_file(spec, path, &noise);
    std::vector<std::string> slots = spec.path_template.placeholders;
    std::size_t d = 0;
    for (const auto* var : spec.column_order()) {
        if (var->role == VarRole::Dependent) {
            CompiledExpr expr(var->expr, slots);
            const auto col = *t.column_index(var->name);
            const auto& assignment = spec.assignments[*spec.find_path(path)];
            for (std::size_t r = 0; r < t.n_rows; ++r) {
                std::vector<ExprValue> in(assignment.begin(), assignment.end());
                for (std::size_t c = 0; c < col; ++c) {
                    const auto& cell = t.columns[c][r];
                    if (const auto* s = std::get_if<std::string>(&cell)) in.emplace_back(*s);
                    else in.emplace_back(checks::as_number(cell));
                }
                CHECK(std::get<double>(t.columns[col][r]) == round_sig6(expr.evaluate(in, noise[d][r])));
            }
            ++d;
        }
        slots.push_back(var->name);
    }
    CHECK(d == noise.size());
    CHECK(d >= 1);
}

TEST_CASE("row counts follow the rounded normal") {
    // a synthetic repository of many paths; only the path bytes matter to the count
    auto spec = *shared_spec(1);
    spec.paths.clear();
    for (int i = 0; i < 4000; ++i) spec.paths.push_back("synthetic/file_" + std::to_string(i) + ".csv");
    std::sort(spec.paths.begin(), spec.paths.end());
    std::vector<long> counts;
    for (const auto& p : spec.paths) {
        const auto n = row_count(spec, p);
        CHECK(n == oracle::replay_row_count(p, 150.0, 40.0));
        counts.push_back(static_cast<long>(n));
    }
    const auto r = checks::rounded_normal_gof(counts, 150.0, 40.0, 0.001);
    INFO(r.detail);
    CHECK(r.pass);
}

TEST_CASE("row count floor") {
    auto spec = *shared_spec(1);
    spec.materializer.mu_rows = -50;
    spec.materializer.sigma_rows = 1;
    for (const auto& p : spec.paths) CHECK(row_count(spec, p) == 1);
}

TEST_CASE("csv quoting") {
    const auto csv = encode_csv(small_table());
    CHECK(csv.find("\"\",0,0.5\n") != std::string::npos);
    CHECK(csv.find("\"a,\"\"b\"\"\",-4") != std::string::npos);
    const auto back = oracle::read_csv(csv);
    REQUIRE(back.rows.size() == 3);
    CHECK(back.rows[0][0].empty());
    CHECK(back.rows[1][0] == "a,\"b\"");
    CHECK(back.rows[1][2] == "-1.25e-07");
}

TEST_CASE("encoders share one reading of a small table") {
    const auto t = small_table();
    for (const auto& ext : file_extensions()) {
        INFO(ext);
        if (ext == "txt") continue;  // tab-separated text has no quoting
        const auto back = oracle::read_table(encode_table(t, ext), ext);
        CHECK(back.names == t.names);
        REQUIRE(back.rows.size() == 3);
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c) CHECK(same_cell(format_cell(t.columns[c][r]), back.rows[r][c]));
    }
    CHECK_THROWS_AS(encode_table(t, "parquet"), InvalidArgument);
}

TEST_CASE("json documents are arrays and jsonl has one object per line") {
    const auto t = small_table();
    const auto j = encode_json(t);
    CHECK(j.front() == '[');
    CHECK(nlohmann::json::parse(j).is_array());
    const auto l = encode_jsonl(t);
    CHECK(std::count(l.begin(), l.end(), '\n') == 3);
    TableData empty = t;
    empty.n_rows = 0;
    for (auto& c : empty.columns) c.clear();
    CHECK(encode_json(empty) == "[]\n");
}

TEST_CASE("xlsx is a workbook with one sheet named data") {
    const auto x = encode_xlsx(small_table());
    CHECK(x.substr(0, 2) == "PK");
    const auto workbook = oracle::unzip_entry(x, "xl/workbook.xml");
    CHECK(workbook.find("<sheet name=\"data\"") != std::string::npos);
    CHECK_NOTHROW(oracle::unzip_entry(x, "[Content_Types].xml"));
    CHECK(x == encode_xlsx(small_table()));
}

TEST_CASE("log lines carry the row index and quoted values") {
    const auto log = encode_log(small_table());
    CHECK(log.substr(0, 2) == "0 ");
    CHECK(log.find("name=\"\"") != std::string::npos);
    CHECK(log.find("name=\"x y=z\"") != std::string::npos);
}

TEST_CASE("real formatting") {
    CHECK(format_real(0.0) == "0");
    CHECK(format_real(-0.0) == "0");
    CHECK(format_real(1.5) == "1.5");
    CHECK(format_real(0.1) == "0.1");
    CHECK(round_sig6(3.14159265) == 3.14159);
    CHECK(round_sig6(123456789.0) == 123457000.0);
    CHECK(round_sig6(-0.0000123456789) == -0.0000123457);
    for (double x : {1.0 / 3, 2.0 / 3e10, -7.77777777e-8}) CHECK(*as_double(format_real(x)) == x);
}

TEST_CASE("README carries the title and abstract") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const auto& spec = *shared_spec(seed);
        const auto readme = render_readme(spec);
        CHECK(readme.has_value() == spec.readme_present);
        if (!readme) {
            CHECK_THROWS_AS(vfs_file_bytes(spec, "README.md"), FileNotFound);
            continue;
        }
        CHECK(readme->rfind("# " + spec.project.title + "\n", 0) == 0);
        CHECK(readme->find("## Abstract") != std::string::npos);
        CHECK(readme->find(spec.project.abstract) != std::string::npos);
    }
}

TEST_CASE("mime types") {
    CHECK(mime_type_for("a/b.csv") == "text/csv");
    CHECK(mime_type_for("b.json") == "application/json");
    CHECK(mime_type_for("b.jsonl") == "application/x-ndjson");
    CHECK(mime_type_for("b.xlsx") == "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet");
    CHECK(mime_type_for("b.txt") == "text/plain");
    CHECK(mime_type_for("b.log") == "text/plain");
    CHECK(mime_type_for("README.md") == "text/markdown");
}

TEST_CASE("glob matching") {
    CHECK(glob_match("*", "anything"));
    CHECK(glob_match("a?c", "abc"));
    CHECK_FALSE(glob_match("a?c", "ac"));
    CHECK(glob_match("*_early", "gphase_early"));
    CHECK_FALSE(glob_match("*_early", "gphase_late"));
    CHECK(glob_match("a*b*c", "axxbyyc"));
    CHECK_FALSE(glob_match("a*b*c", "axxbyy"));
}

TEST_CASE("path normalization") {
    CHECK(normalize_repo_path("/a/b") == "a/b");
    CHECK(normalize_repo_path("./a") == "a");
    CHECK(normalize_repo_path(".//./a") == "a");
    CHECK(normalize_repo_path("a/b") == "a/b");
}

TEST_CASE("virtual listing") {
    const auto& spec = *shared_spec(1);
    const auto entries = vfs_entries(spec);
    const auto top = vfs_list(spec, "", 1);
    for (const auto& e : top) CHECK(e.find('/') == std::string::npos);
    CHECK_FALSE(top.empty());

    // a deep enough listing from the root reaches every file
    const auto all = vfs_list(spec, "", 16);
    CHECK(all == entries);
    for (const auto& p : spec.paths) CHECK(std::binary_search(all.begin(), all.end(), p));

    // listing a directory returns names relative to it
    const auto first_dir = spec.paths.front().substr(0, spec.paths.front().find('/'));
    if (spec.paths.front().find('/') != std::string::npos) {
        const auto children = vfs_list(spec, first_dir, 1);
        CHECK_FALSE(children.empty());
        for (const auto& c : children)
            CHECK(std::binary_search(entries.begin(), entries.end(), first_dir + "/" + c));
        CHECK(vfs_list(spec, "/" + first_dir + "/", 1) == children);
        // the same directory through a wildcard gives full paths
        const auto wild = vfs_list(spec, first_dir.substr(0, 1) + "*", 1);
        CHECK(std::find(wild.begin(), wild.end(), first_dir) != wild.end());
    }
    // a file lists as itself
    CHECK(vfs_list(spec, spec.paths.back(), 1) == std::vector<std::string>{spec.paths.back()});
    CHECK(vfs_list(spec, "no_such_prefix_zzz", 3).empty());
    CHECK_THROWS_AS(vfs_list(spec, "", 0), InvalidArgument);
    CHECK_THROWS_AS(vfs_list(spec, "../x", 1), InvalidArgument);
    CHECK_THROWS_AS(vfs_list(spec, "a//b", 1), InvalidArgument);
}

TEST_CASE("head and tail") {
    const std::string text = "l0\nl1\nl2\nl3\n";
    CHECK(truncate_lines(text, 2, std::nullopt) == "l0\nl1\n");
    CHECK(truncate_lines(text, std::nullopt, 1) == "l3\n");
    CHECK(truncate_lines(text, 3, 1) == "l2\n");
    CHECK(truncate_lines(text, 0, std::nullopt).empty());
    CHECK(truncate_lines(text, std::nullopt, 0).empty());
    CHECK(truncate_lines(text, 99, 99) == text);
    CHECK(truncate_lines("a\nb", std::nullopt, 1) == "b");
    CHECK_THROWS_AS(truncate_lines(text, -1, std::nullopt), InvalidArgument);

    const auto& spec = *shared_spec(1);
    const auto& p = spec.paths.front();
    const auto full = vfs_read(spec, p);
    CHECK(vfs_read(spec, "/" + p, 1) == truncate_lines(full, 1, std::nullopt));
    CHECK_THROWS_AS(vfs_read(spec, "missing.csv"), FileNotFound);
}
