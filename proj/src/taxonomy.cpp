#include "reposim/taxonomy.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "reposim/errors.hpp"

namespace reposim {

// Defined in the generated translation unit that embeds data/taxonomy.json.
extern const char* const kEmbeddedTaxonomy;

TaxonomyCounts Taxonomy::counts() const {
    TaxonomyCounts c;
    c.fields = fields.size();
    for (const auto& f : fields) {
        c.domains += f.domains.size();
        for (const auto& d : f.domains) c.subdomains += d.subdomains.size();
    }
    return c;
}

bool Taxonomy::contains(std::string_view field, std::string_view domain,
                        std::string_view subdomain) const {
    for (const auto& f : fields) {
        if (f.name != field) continue;
        for (const auto& d : f.domains) {
            if (d.name != domain) continue;
            for (const auto& s : d.subdomains)
                if (s == subdomain) return true;
        }
    }
    return false;
}

namespace {

std::string require_name(const nlohmann::json& node, const std::string& where) {
    if (!node.is_object() || !node.contains("name") || !node["name"].is_string())
        throw SchemaError(where + ": missing string \"name\"");
    auto name = node["name"].get<std::string>();
    if (name.empty()) throw SchemaError(where + ": empty name");
    return name;
}

const nlohmann::json& require_array(const nlohmann::json& node, const char* key,
                                    const std::string& where) {
    if (!node.contains(key) || !node[key].is_array())
        throw SchemaError(where + ": missing array \"" + key + "\"");
    if (node[key].empty()) throw SchemaError(where + ": \"" + key + "\" is empty");
    return node[key];
}

std::size_t require_count(const nlohmann::json& counts, const char* key) {
    if (!counts.contains(key) || !counts[key].is_number_unsigned())
        throw SchemaError(std::string("header: counts.") + key + " must be a non-negative integer");
    return counts[key].get<std::size_t>();
}

}  // namespace

Taxonomy load_taxonomy(std::string_view document) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("taxonomy is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw SchemaError("taxonomy root must be an object");
    if (root.value("format", "") != "reposim-taxonomy")
        throw SchemaError("header: format must be \"reposim-taxonomy\"");
    if (!root.contains("counts") || !root["counts"].is_object())
        throw SchemaError("header: missing \"counts\" object");
    const auto& counts = root["counts"];
    TaxonomyCounts declared{require_count(counts, "fields"), require_count(counts, "domains"),
                            require_count(counts, "subdomains")};

    Taxonomy tax;
    std::set<std::string> field_names;
    for (const auto& fnode : require_array(root, "fields", "taxonomy")) {
        Field field;
        field.name = require_name(fnode, "field #" + std::to_string(tax.fields.size()));
        const std::string fwhere = "field \"" + field.name + "\"";
        if (!field_names.insert(field.name).second)
            throw SchemaError(fwhere + ": duplicate field name");
        std::set<std::string> domain_names;
        for (const auto& dnode : require_array(fnode, "domains", fwhere)) {
            Domain domain;
            domain.name =
                require_name(dnode, fwhere + " domain #" + std::to_string(field.domains.size()));
            const std::string dwhere = fwhere + " domain \"" + domain.name + "\"";
            if (!domain_names.insert(domain.name).second)
                throw SchemaError(dwhere + ": duplicate domain name");
            std::set<std::string> sub_names;
            for (const auto& snode : require_array(dnode, "subdomains", dwhere)) {
                if (!snode.is_string() || snode.get<std::string>().empty())
                    throw SchemaError(dwhere + ": subdomain entries must be non-empty strings");
                auto sub = snode.get<std::string>();
                if (!sub_names.insert(sub).second)
                    throw SchemaError(dwhere + " subdomain \"" + sub + "\": duplicate name");
                domain.subdomains.push_back(std::move(sub));
            }
            field.domains.push_back(std::move(domain));
        }
        tax.fields.push_back(std::move(field));
    }
    if (tax.counts() != declared) {
        const auto actual = tax.counts();
        std::ostringstream msg;
        msg << "header: declared counts (" << declared.fields << " fields, " << declared.domains
            << " domains, " << declared.subdomains << " subdomains) do not match body ("
            << actual.fields << ", " << actual.domains << ", " << actual.subdomains << ")";
        throw SchemaError(msg.str());
    }
    return tax;
}

Taxonomy load_taxonomy_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open taxonomy file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_taxonomy(buf.str());
}

std::string_view default_taxonomy_document() { return kEmbeddedTaxonomy; }

const Taxonomy& default_taxonomy() {
    static const Taxonomy tax = load_taxonomy(kEmbeddedTaxonomy);
    return tax;
}

ScientificContext sample_context(const Taxonomy& taxonomy, RandomStream& stream) {
    const auto& field = taxonomy.fields[stream.index(taxonomy.fields.size())];
    const auto& domain = field.domains[stream.index(field.domains.size())];
    const auto& sub = domain.subdomains[stream.index(domain.subdomains.size())];
    return {field.name, domain.name, sub};
}

void to_json(nlohmann::json& j, const ScientificContext& c) {
    j = {{"field", c.field}, {"domain", c.domain}, {"subdomain", c.subdomain}};
}

void from_json(const nlohmann::json& j, ScientificContext& c) {
    c.field = j.at("field").get<std::string>();
    c.domain = j.at("domain").get<std::string>();
    c.subdomain = j.at("subdomain").get<std::string>();
}

}  // namespace reposim
