#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "reposim/seedstream.hpp"

namespace reposim {

struct Domain {
    std::string name;
    std::vector<std::string> subdomains;
};

struct Field {
    std::string name;
    std::vector<Domain> domains;
};

struct TaxonomyCounts {
    std::size_t fields = 0;
    std::size_t domains = 0;
    std::size_t subdomains = 0;
    bool operator==(const TaxonomyCounts&) const = default;
};

struct Taxonomy {
    std::vector<Field> fields;

    TaxonomyCounts counts() const;
    bool contains(std::string_view field, std::string_view domain,
                  std::string_view subdomain) const;
};

struct ScientificContext {
    std::string field;
    std::string domain;
    std::string subdomain;
    bool operator==(const ScientificContext&) const = default;
};

/// Parses and validates a taxonomy document. The header's declared counts must
/// match the body; the first offending node is named in the SchemaError.
Taxonomy load_taxonomy(std::string_view document);
Taxonomy load_taxonomy_file(const std::string& path);

/// The taxonomy compiled into the library.
const Taxonomy& default_taxonomy();
std::string_view default_taxonomy_document();

/// Uniform at each level; consumes exactly three uniforms.
ScientificContext sample_context(const Taxonomy& taxonomy, RandomStream& stream);

void to_json(nlohmann::json& j, const ScientificContext& c);
void from_json(const nlohmann::json& j, ScientificContext& c);

}  // namespace reposim
