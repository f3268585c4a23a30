#pragma once

// The latent program behind one repository: project description, directory
// template, expanded path set and per-file column schema.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "reposim/genmodel.hpp"
#include "reposim/seedstream.hpp"
#include "reposim/taxonomy.hpp"

namespace reposim {

struct NamedDescription {
    std::string name;
    std::string description;
    bool operator==(const NamedDescription&) const = default;
};

struct ProjectSpec {
    std::string title;
    std::string hypothesis;
    std::vector<NamedDescription> independent_vars;
    std::vector<NamedDescription> dependent_vars;
    std::vector<NamedDescription> confounders;
    std::string setup_text;
    std::string abstract;
    bool operator==(const ProjectSpec&) const = default;
};

enum class PlaceholderKind { Independent, Date, Sequence, Researcher };
std::string_view placeholder_kind_name(PlaceholderKind k);
PlaceholderKind placeholder_kind_from_name(std::string_view name);

struct PlaceholderVariable {
    std::string name;
    PlaceholderKind kind = PlaceholderKind::Independent;
    std::string description;
    std::vector<std::string> values;  // canonical form; dates are ISO-8601
    bool operator==(const PlaceholderVariable&) const = default;
};

/// Tokens alternate placeholder, connector, placeholder, ... and end with a
/// placeholder. `connectors[i]` sits between placeholder i and i + 1.
struct PathTemplate {
    std::vector<std::string> placeholders;
    std::vector<std::string> connectors;
    std::string extension;
    bool operator==(const PathTemplate&) const = default;

    /// Throws SchemaError when the token structure is invalid.
    void validate() const;
    /// e.g. "{cond}/{phase}_{date}.csv"
    std::string pattern() const;
};

inline const std::vector<std::string>& file_extensions() {
    static const std::vector<std::string> exts = {"csv", "json", "jsonl", "xlsx", "txt", "log"};
    return exts;
}

enum class VarRole { Identifier, Datetime, Independent, Dependent };
enum class VarKind { Categorical, DiscreteInteger, Continuous };
std::string_view role_name(VarRole r);
std::string_view kind_name(VarKind k);
VarRole role_from_name(std::string_view name);
VarKind kind_from_name(std::string_view name);

struct FileVariable {
    std::string name;
    VarRole role = VarRole::Independent;
    VarKind kind = VarKind::Continuous;
    std::optional<DistributionSpec> dist;  // independents only
    std::string expr;                      // dependents only
    std::string description;
};

struct MaterializerParams {
    double mu_rows = 150.0;
    double sigma_rows = 40.0;
    double sigma_noise = 0.1;
    bool operator==(const MaterializerParams&) const = default;
};

void validate_materializer_params(const MaterializerParams& p);

struct BuildParams {
    GenerationParams generation;
    int n_path_min = 3;
    int n_path_max = 6;
    double p_readme = 0.85;
    PathSamplerParams path_sampler;
    MaterializerParams materializer;
};

void validate_build_params(const BuildParams& p);

struct RepositorySpec {
    std::uint64_t master_seed = 0;
    std::string model_id;
    ScientificContext context;
    ProjectSpec project;
    PathTemplate path_template;
    std::vector<PlaceholderVariable> placeholders;  // template order
    std::vector<std::string> paths;                 // sorted
    std::vector<std::vector<std::string>> assignments;  // canonical values per path
    std::uint64_t cross_product_size = 0;
    bool readme_present = false;
    std::vector<FileVariable> variables;
    MaterializerParams materializer;
    std::string anchor_date;  // ISO-8601, end of the datetime window

    /// Index into `paths`, or nullopt.
    std::optional<std::size_t> find_path(std::string_view path) const;
    const PlaceholderVariable* placeholder(std::string_view name) const;
    const FileVariable* variable(std::string_view name) const;
    /// Variables in materialized column order.
    std::vector<const FileVariable*> column_order() const;
};

/// Calendar helpers over days since 1970-01-01.
std::int64_t days_from_iso(std::string_view iso);
std::string iso_from_days(std::int64_t days);

/// Path text for one canonical value: dates become DD_MM_YYYY.
std::string render_value(const PlaceholderVariable& ph, const std::string& canonical);

/// Throws UnknownPlaceholder when the assignment lacks a placeholder or names
/// a value the placeholder does not declare.
std::string render_path(const PathTemplate& tmpl, const std::vector<PlaceholderVariable>& placeholders,
                        const std::map<std::string, std::string>& assignment);
std::string render_path(const PathTemplate& tmpl, const std::vector<PlaceholderVariable>& placeholders,
                        const std::vector<std::string>& values);

/// Backtracking parse; returns the first assignment (canonical order) that
/// renders to `path`, or nullopt.
std::optional<std::vector<std::string>> parse_path(const PathTemplate& tmpl,
                                                   const std::vector<PlaceholderVariable>& placeholders,
                                                   std::string_view path);

struct Expansion {
    std::vector<std::string> paths;
    std::vector<std::vector<std::string>> assignments;
    std::uint64_t cross_product_size = 0;
};

/// Samples the path count from the cross-product size, then selects that many
/// combinations by a seeded partial shuffle and sorts the rendered paths.
/// Combinations whose rendering is owned by an earlier combination are skipped.
Expansion expand_paths(const PathTemplate& tmpl, const std::vector<PlaceholderVariable>& placeholders,
                       const PathSamplerParams& sampler, RandomStream& stream);

/// Runs every generation stage on its own derived stream.
RepositorySpec build_repository_spec(std::uint64_t master_seed, const Taxonomy& taxonomy,
                                     const BuildParams& params, Generator& generator);

void to_json(nlohmann::json& j, const RepositorySpec& spec);
void from_json(const nlohmann::json& j, RepositorySpec& spec);
void to_json(nlohmann::json& j, const MaterializerParams& p);
void from_json(const nlohmann::json& j, MaterializerParams& p);

}  // namespace reposim
