#pragma once

// File population from (seed, path), the six tabular encoders, README
// rendering and the on-demand virtual filesystem.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "reposim/repospec.hpp"

namespace reposim {

using CellValue = SampleValue;  // string | integer | real

struct TableData {
    std::vector<std::string> names;
    std::vector<VarKind> kinds;
    std::vector<std::vector<CellValue>> columns;  // one vector per column, n_rows each
    std::size_t n_rows = 0;

    std::optional<std::size_t> column_index(std::string_view name) const;
};

/// Throws PathNotInRepository, or ExprEvalError with the path in the message.
TableData populate_file(const RepositorySpec& spec, std::string_view path);

/// Same, also returning the noise draws: noise[d][row] for the d-th dependent column.
TableData populate_file(const RepositorySpec& spec, std::string_view path,
                        std::vector<std::vector<double>>* noise);

/// Number of rows the file will have; consumes only the first draw of the file stream.
std::size_t row_count(const RepositorySpec& spec, std::string_view path);

/// Six significant digits, the precision stored for every real value.
double round_sig6(double x);

/// Shortest text that reads back to the same double.
std::string format_real(double x);
std::string format_cell(const CellValue& v);

std::string encode_table(const TableData& table, std::string_view extension);

/// Individual encoders (exposed for tests).
std::string encode_csv(const TableData& table);
std::string encode_json(const TableData& table);
std::string encode_jsonl(const TableData& table);
std::string encode_xlsx(const TableData& table);
std::string encode_txt(const TableData& table);
std::string encode_log(const TableData& table);

std::string mime_type_for(std::string_view path);

inline constexpr std::string_view kReadmeName = "README.md";

/// nullopt when the repository has no README.
std::optional<std::string> render_readme(const RepositorySpec& spec);

/// Strips leading "/" and "./" so tool paths match repository paths.
std::string normalize_repo_path(std::string_view path);

/// Shell-style glob within one segment: `*` any run, `?` one character.
bool glob_match(std::string_view pattern, std::string_view text);

/// Listing with wildcards. Literal directory prefixes list children relative
/// to that directory; wildcard patterns return full paths. Throws
/// InvalidArgument for malformed patterns or depth < 1.
std::vector<std::string> vfs_list(const RepositorySpec& spec, std::string_view prefix, int depth);

/// Every entry (directories, files, README) as full paths.
std::vector<std::string> vfs_entries(const RepositorySpec& spec);

/// Full encoded bytes of a file. Throws FileNotFound.
std::string vfs_file_bytes(const RepositorySpec& spec, std::string_view path);

/// Line-based truncation: head first, then tail within the result.
std::string truncate_lines(const std::string& content, std::optional<long long> head,
                           std::optional<long long> tail);

std::string vfs_read(const RepositorySpec& spec, std::string_view path,
                     std::optional<long long> head = std::nullopt,
                     std::optional<long long> tail = std::nullopt);

/// Writes the README and every data file under `root`.
void export_repository(const RepositorySpec& spec, const std::filesystem::path& root);

}  // namespace reposim
