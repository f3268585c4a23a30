#include "reposim/repospec.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>
#include <set>
#include <unordered_map>

#include "reposim/errors.hpp"
#include "reposim/expr.hpp"

namespace reposim {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Names

std::string_view placeholder_kind_name(PlaceholderKind k) {
    switch (k) {
        case PlaceholderKind::Independent: return "independent";
        case PlaceholderKind::Date: return "date";
        case PlaceholderKind::Sequence: return "sequence";
        case PlaceholderKind::Researcher: return "researcher";
    }
    return "?";
}

PlaceholderKind placeholder_kind_from_name(std::string_view name) {
    if (name == "independent") return PlaceholderKind::Independent;
    if (name == "date") return PlaceholderKind::Date;
    if (name == "sequence") return PlaceholderKind::Sequence;
    if (name == "researcher") return PlaceholderKind::Researcher;
    throw SchemaError("unknown placeholder kind \"" + std::string(name) + "\"");
}

std::string_view role_name(VarRole r) {
    switch (r) {
        case VarRole::Identifier: return "identifier";
        case VarRole::Datetime: return "datetime";
        case VarRole::Independent: return "independent";
        case VarRole::Dependent: return "dependent";
    }
    return "?";
}

std::string_view kind_name(VarKind k) {
    switch (k) {
        case VarKind::Categorical: return "categorical";
        case VarKind::DiscreteInteger: return "discrete_integer";
        case VarKind::Continuous: return "continuous";
    }
    return "?";
}

VarRole role_from_name(std::string_view name) {
    if (name == "identifier") return VarRole::Identifier;
    if (name == "datetime") return VarRole::Datetime;
    if (name == "independent") return VarRole::Independent;
    if (name == "dependent") return VarRole::Dependent;
    throw SchemaError("unknown variable role \"" + std::string(name) + "\"");
}

VarKind kind_from_name(std::string_view name) {
    if (name == "categorical") return VarKind::Categorical;
    if (name == "discrete_integer") return VarKind::DiscreteInteger;
    if (name == "continuous") return VarKind::Continuous;
    throw SchemaError("unknown variable kind \"" + std::string(name) + "\"");
}

// ---------------------------------------------------------------------------
// Params

void validate_materializer_params(const MaterializerParams& p) {
    if (!(p.mu_rows > 0)) throw ConfigError("materializer: mu_rows must be positive");
    if (!(p.sigma_rows > 0)) throw ConfigError("materializer: sigma_rows must be positive");
    if (!(p.sigma_noise >= 0)) throw ConfigError("materializer: sigma_noise must be >= 0");
}

void validate_build_params(const BuildParams& p) {
    validate_params(p.generation);
    if (p.n_path_min < 1 || p.n_path_max < p.n_path_min)
        throw ConfigError("n_path range must satisfy 1 <= min <= max");
    if (!(p.p_readme >= 0.0 && p.p_readme <= 1.0))
        throw ConfigError("p_readme must lie in [0, 1]");
    if (!(p.path_sampler.alpha > 0 && p.path_sampler.beta > 0))
        throw ConfigError("path sampler: alpha and beta must be positive");
    if (p.path_sampler.low < 1 || p.path_sampler.high < p.path_sampler.low)
        throw ConfigError("path sampler: need 1 <= low <= high");
    validate_materializer_params(p.materializer);
}

// ---------------------------------------------------------------------------
// Template

void PathTemplate::validate() const {
    if (placeholders.empty()) throw SchemaError("path template has no placeholders");
    if (connectors.size() + 1 != placeholders.size())
        throw SchemaError("path template must alternate placeholders and connectors");
    for (const auto& c : connectors)
        if (c != "/" && c != "_" && c != "-")
            throw SchemaError("path template connector \"" + c + "\" is not one of / _ -");
    std::set<std::string> seen;
    for (const auto& p : placeholders)
        if (!seen.insert(p).second)
            throw SchemaError("placeholder \"" + p + "\" appears twice in the template");
    if (std::find(file_extensions().begin(), file_extensions().end(), extension) ==
        file_extensions().end())
        throw SchemaError("unsupported extension \"" + extension + "\"");
}

std::string PathTemplate::pattern() const {
    std::string out;
    for (std::size_t i = 0; i < placeholders.size(); ++i) {
        if (i > 0) out += connectors[i - 1];
        out += "{" + placeholders[i] + "}";
    }
    return out + "." + extension;
}

// ---------------------------------------------------------------------------
// Dates and rendering

std::int64_t days_from_iso(std::string_view iso) {
    if (!is_iso_date(iso)) throw SchemaError("not an ISO-8601 date: " + std::string(iso));
    const int y = std::stoi(std::string(iso.substr(0, 4)));
    const unsigned m = static_cast<unsigned>(std::stoi(std::string(iso.substr(5, 2))));
    const unsigned d = static_cast<unsigned>(std::stoi(std::string(iso.substr(8, 2))));
    const std::chrono::sys_days days{
        std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}};
    return days.time_since_epoch().count();
}

std::string iso_from_days(std::int64_t days) {
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string render_value(const PlaceholderVariable& ph, const std::string& canonical) {
    if (ph.kind != PlaceholderKind::Date) return canonical;
    return canonical.substr(8, 2) + "_" + canonical.substr(5, 2) + "_" + canonical.substr(0, 4);
}

namespace {

const PlaceholderVariable& find_placeholder(const std::vector<PlaceholderVariable>& placeholders,
                                            const std::string& name) {
    for (const auto& p : placeholders)
        if (p.name == name) return p;
    throw UnknownPlaceholder("template references undeclared placeholder \"" + name + "\"");
}

}  // namespace

std::string render_path(const PathTemplate& tmpl, const std::vector<PlaceholderVariable>& placeholders,
                        const std::vector<std::string>& values) {
    if (values.size() != tmpl.placeholders.size())
        throw UnknownPlaceholder("assignment does not cover every placeholder");
    std::string out;
    for (std::size_t i = 0; i < tmpl.placeholders.size(); ++i) {
        const auto& ph = find_placeholder(placeholders, tmpl.placeholders[i]);
        if (std::find(ph.values.begin(), ph.values.end(), values[i]) == ph.values.end())
            throw UnknownPlaceholder("\"" + values[i] + "\" is not a declared value of \"" +
                                     ph.name + "\"");
        if (i > 0) out += tmpl.connectors[i - 1];
        out += render_value(ph, values[i]);
    }
    return out + "." + tmpl.extension;
}

std::string render_path(const PathTemplate& tmpl, const std::vector<PlaceholderVariable>& placeholders,
                        const std::map<std::string, std::string>& assignment) {
    std::vector<std::string> values;
    for (const auto& name : tmpl.placeholders) {
        auto it = assignment.find(name);
        if (it == assignment.end())
            throw UnknownPlaceholder("assignment lacks placeholder \"" + name + "\"");
        values.push_back(it->second);
    }
    return render_path(tmpl, placeholders, values);
}

namespace {

bool parse_from(const std::vector<const PlaceholderVariable*>& phs, const PathTemplate& tmpl,
                std::string_view body, std::size_t token, std::size_t pos,
                std::vector<std::string>& out) {
    const auto& ph = *phs[token];
    for (const auto& value : ph.values) {
        const auto text = render_value(ph, value);
        if (body.compare(pos, text.size(), text) != 0) continue;
        std::size_t next = pos + text.size();
        if (token + 1 == phs.size()) {
            if (next != body.size()) continue;
            out.push_back(value);
            return true;
        }
        const auto& conn = tmpl.connectors[token];
        if (body.compare(next, conn.size(), conn) != 0) continue;
        out.push_back(value);
        if (parse_from(phs, tmpl, body, token + 1, next + conn.size(), out)) return true;
        out.pop_back();
    }
    return false;
}

}  // namespace

std::optional<std::vector<std::string>> parse_path(const PathTemplate& tmpl,
                                                   const std::vector<PlaceholderVariable>& placeholders,
                                                   std::string_view path) {
    const std::string suffix = "." + tmpl.extension;
    if (path.size() <= suffix.size() || path.substr(path.size() - suffix.size()) != suffix)
        return std::nullopt;
    const auto body = path.substr(0, path.size() - suffix.size());
    std::vector<const PlaceholderVariable*> phs;
    for (const auto& name : tmpl.placeholders) phs.push_back(&find_placeholder(placeholders, name));
    std::vector<std::string> out;
    if (!parse_from(phs, tmpl, body, 0, 0, out)) return std::nullopt;
    return out;
}

// ---------------------------------------------------------------------------
// Expansion

Expansion expand_paths(const PathTemplate& tmpl, const std::vector<PlaceholderVariable>& placeholders,
                       const PathSamplerParams& sampler, RandomStream& stream) {
    tmpl.validate();
    std::vector<const PlaceholderVariable*> phs;
    for (const auto& name : tmpl.placeholders) phs.push_back(&find_placeholder(placeholders, name));

    constexpr std::uint64_t cap = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
    std::uint64_t total = 1;
    for (const auto* ph : phs) {
        if (ph->values.empty()) throw SchemaError("placeholder \"" + ph->name + "\" has no values");
        const std::uint64_t n = ph->values.size();
        total = total > cap / n ? cap : total * n;
    }
    const auto wanted = static_cast<std::uint64_t>(
        sample_path_count(static_cast<std::int64_t>(total), sampler, stream));

    Expansion out;
    out.cross_product_size = total;
    // Partial Fisher-Yates over the virtual index array [0, total).
    std::unordered_map<std::uint64_t, std::uint64_t> swapped;
    auto at = [&](std::uint64_t i) {
        auto it = swapped.find(i);
        return it == swapped.end() ? i : it->second;
    };
    std::vector<std::pair<std::string, std::vector<std::string>>> chosen;
    for (std::uint64_t i = 0; i < total && chosen.size() < wanted; ++i) {
        const std::uint64_t j = i + stream.index(static_cast<std::size_t>(total - i));
        const std::uint64_t vi = at(i);
        const std::uint64_t vj = at(j);
        swapped[i] = vj;
        swapped[j] = vi;
        // Decode mixed radix, last placeholder fastest.
        std::uint64_t code = vj;
        std::vector<std::string> values(phs.size());
        for (std::size_t k = phs.size(); k-- > 0;) {
            const std::uint64_t n = phs[k]->values.size();
            values[k] = phs[k]->values[code % n];
            code /= n;
        }
        auto path = render_path(tmpl, placeholders, values);
        // A rendering shared by several combinations belongs to the first one.
        if (parse_path(tmpl, placeholders, path) != values) continue;
        chosen.emplace_back(std::move(path), std::move(values));
    }
    std::sort(chosen.begin(), chosen.end());
    for (auto& [p, v] : chosen) {
        out.paths.push_back(std::move(p));
        out.assignments.push_back(std::move(v));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spec lookups

std::optional<std::size_t> RepositorySpec::find_path(std::string_view path) const {
    auto it = std::lower_bound(paths.begin(), paths.end(), path,
                               [](const std::string& a, std::string_view b) { return a < b; });
    if (it == paths.end() || *it != path) return std::nullopt;
    return static_cast<std::size_t>(it - paths.begin());
}

const PlaceholderVariable* RepositorySpec::placeholder(std::string_view name) const {
    for (const auto& p : placeholders)
        if (p.name == name) return &p;
    return nullptr;
}

const FileVariable* RepositorySpec::variable(std::string_view name) const {
    for (const auto& v : variables)
        if (v.name == name) return &v;
    return nullptr;
}

std::vector<const FileVariable*> RepositorySpec::column_order() const {
    std::vector<const FileVariable*> out;
    for (VarRole role : {VarRole::Identifier, VarRole::Datetime, VarRole::Independent,
                         VarRole::Dependent})
        for (const auto& v : variables)
            if (v.role == role) out.push_back(&v);
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

json placeholder_brief(const PlaceholderVariable& p, bool with_values) {
    json j = {{"name", p.name},
              {"kind", placeholder_kind_name(p.kind)},
              {"description", p.description}};
    if (with_values) j["values"] = p.values;
    return j;
}

std::vector<NamedDescription> named_list(const json& arr) {
    std::vector<NamedDescription> out;
    for (const auto& item : arr)
        out.push_back({item.at("name").get<std::string>(), item.at("description").get<std::string>()});
    return out;
}

json named_json(const std::vector<NamedDescription>& list) {
    json arr = json::array();
    for (const auto& n : list) arr.push_back({{"name", n.name}, {"description", n.description}});
    return arr;
}

json description_json(const ProjectSpec& p) {
    return {{"hypothesis", p.hypothesis},
            {"independent_vars", named_json(p.independent_vars)},
            {"dependent_vars", named_json(p.dependent_vars)},
            {"confounders", named_json(p.confounders)},
            {"setup", p.setup_text}};
}

}  // namespace

RepositorySpec build_repository_spec(std::uint64_t master_seed, const Taxonomy& taxonomy,
                                     const BuildParams& params, Generator& generator) {
    validate_build_params(params);
    RepositorySpec spec;
    spec.master_seed = master_seed;
    spec.model_id = params.generation.model_id;
    spec.materializer = params.materializer;

    auto ctx_stream = RandomStream::for_stage(master_seed, "context");
    spec.context = sample_context(taxonomy, ctx_stream);
    const json context = spec.context;

    GenerationParams gp = params.generation;
    {
        auto s = RandomStream::for_stage(master_seed, "n_path");
        gp.n_path = params.n_path_min +
                    static_cast<int>(s.index(static_cast<std::size_t>(params.n_path_max - params.n_path_min + 1)));
    }
    auto request = [&](Stage stage, json payload, std::string label) {
        GenerationRequest r;
        r.stage = stage;
        r.payload = std::move(payload);
        r.seed_tag = {master_seed, std::move(label)};
        return generator.generate(r, gp);
    };

    // Project specification.
    const json titles = request(Stage::Titles, {{"context", context}}, "titles")["titles"];
    {
        auto s = RandomStream::for_stage(master_seed, "title_pick");
        spec.project.title = titles[s.index(titles.size())].get<std::string>();
    }
    const json desc =
        request(Stage::Description, {{"context", context}, {"title", spec.project.title}}, "description");
    spec.project.hypothesis = desc["hypothesis"].get<std::string>();
    spec.project.independent_vars = named_list(desc["independent_vars"]);
    spec.project.dependent_vars = named_list(desc["dependent_vars"]);
    spec.project.confounders = named_list(desc["confounders"]);
    spec.project.setup_text = desc["setup"].get<std::string>();
    const json description = description_json(spec.project);
    spec.project.abstract =
        request(Stage::Abstract,
                {{"context", context}, {"title", spec.project.title}, {"description", description}},
                "abstract")["abstract"]
            .get<std::string>();

    // Directory template, one placeholder per step.
    json steps = json::array();
    for (int i = 0; i < gp.n_path; ++i) {
        const json step = request(Stage::PathStep,
                                  {{"context", context},
                                   {"title", spec.project.title},
                                   {"description", description},
                                   {"n_path", gp.n_path},
                                   {"placeholders", steps}},
                                  "path_step/" + std::to_string(i));
        PlaceholderVariable ph;
        ph.name = step["placeholder"]["name"].get<std::string>();
        ph.kind = placeholder_kind_from_name(step["placeholder"]["kind"].get<std::string>());
        ph.description = step["placeholder"]["description"].get<std::string>();
        if (i > 0) spec.path_template.connectors.push_back(step["connector"].get<std::string>());
        spec.path_template.placeholders.push_back(ph.name);
        json brief = placeholder_brief(ph, false);
        brief["connector"] = step["connector"];
        steps.push_back(brief);
        spec.placeholders.push_back(std::move(ph));
    }
    json briefs = json::array();
    for (const auto& ph : spec.placeholders) briefs.push_back(placeholder_brief(ph, false));
    const json values = request(Stage::PathValues,
                                {{"context", context},
                                 {"title", spec.project.title},
                                 {"description", description},
                                 {"placeholders", briefs}},
                                "path_values")["values"];
    for (auto& ph : spec.placeholders) ph.values = values[ph.name].get<std::vector<std::string>>();
    {
        auto s = RandomStream::for_stage(master_seed, "extension");
        spec.path_template.extension = file_extensions()[s.index(file_extensions().size())];
    }
    spec.path_template.validate();
    {
        auto s = RandomStream::for_stage(master_seed, "paths");
        auto expansion = expand_paths(spec.path_template, spec.placeholders, params.path_sampler, s);
        spec.paths = std::move(expansion.paths);
        spec.assignments = std::move(expansion.assignments);
        spec.cross_product_size = expansion.cross_product_size;
    }

    // File schema.
    json with_values = json::array();
    for (const auto& ph : spec.placeholders) with_values.push_back(placeholder_brief(ph, true));
    const json vars = request(Stage::FileVariables,
                              {{"context", context},
                               {"title", spec.project.title},
                               {"description", description},
                               {"placeholders", with_values}},
                              "file_variables")["variables"];
    json independents = json::array();
    for (const auto& v : vars) {
        FileVariable fv;
        fv.name = v["name"].get<std::string>();
        fv.role = role_from_name(v["role"].get<std::string>());
        fv.kind = kind_from_name(v["kind"].get<std::string>());
        fv.description = v["description"].get<std::string>();
        // Identifier and datetime columns are generated strings.
        if (fv.role == VarRole::Identifier || fv.role == VarRole::Datetime)
            fv.kind = VarKind::Categorical;
        if (fv.role == VarRole::Independent)
            independents.push_back(
                {{"name", fv.name}, {"kind", kind_name(fv.kind)}, {"description", fv.description}});
        spec.variables.push_back(std::move(fv));
    }
    const json dists = request(Stage::DistParams,
                               {{"context", context},
                                {"title", spec.project.title},
                                {"variables", independents}},
                               "dist_params")["distributions"];
    for (auto& fv : spec.variables)
        if (fv.role == VarRole::Independent) fv.dist = dists[fv.name].get<DistributionSpec>();

    // Dependent expressions see path variables and every column produced before them.
    json inputs = json::array();
    for (const auto& ph : spec.placeholders)
        inputs.push_back({{"name", ph.name},
                          {"type", "string"},
                          {"source", "path"},
                          {"description", ph.description},
                          {"values", ph.values}});
    for (const auto* fv : spec.column_order()) {
        if (fv->role == VarRole::Dependent) continue;
        json in = {{"name", fv->name},
                   {"type", fv->kind == VarKind::Categorical ? "string" : "number"},
                   {"source", "column"},
                   {"description", fv->description}};
        if (fv->dist)
            if (const auto* c = std::get_if<Categorical>(&*fv->dist)) in["values"] = c->values;
        inputs.push_back(in);
    }
    for (auto& fv : spec.variables) {
        if (fv.role != VarRole::Dependent) continue;
        try {
            fv.expr = request(Stage::DependentExpr,
                              {{"context", context},
                               {"title", spec.project.title},
                               {"target", {{"name", fv.name}, {"description", fv.description}}},
                               {"inputs", inputs}},
                              "dependent_expr/" + fv.name)["expr"]
                          .get<std::string>();
        } catch (const SchemaViolation& e) {
            throw ExprInvalid("dependent variable \"" + fv.name + "\": " + e.what());
        }
        inputs.push_back({{"name", fv.name},
                          {"type", "number"},
                          {"source", "column"},
                          {"description", fv.description}});
    }

    {
        auto s = RandomStream::for_stage(master_seed, "readme");
        spec.readme_present = s.uniform() < params.p_readme;
    }
    {
        auto s = RandomStream::for_stage(master_seed, "anchor");
        spec.anchor_date = iso_from_days(days_from_iso("2023-01-01") +
                                         static_cast<std::int64_t>(s.index(1096)));
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Serialization

void to_json(json& j, const MaterializerParams& p) {
    j = {{"mu_rows", p.mu_rows}, {"sigma_rows", p.sigma_rows}, {"sigma_noise", p.sigma_noise}};
}

void from_json(const json& j, MaterializerParams& p) {
    p.mu_rows = j.value("mu_rows", p.mu_rows);
    p.sigma_rows = j.value("sigma_rows", p.sigma_rows);
    p.sigma_noise = j.value("sigma_noise", p.sigma_noise);
}

void to_json(json& j, const RepositorySpec& spec) {
    json phs = json::array();
    for (const auto& p : spec.placeholders) phs.push_back(placeholder_brief(p, true));
    json vars = json::array();
    for (const auto& v : spec.variables) {
        json jv = {{"name", v.name},
                   {"role", role_name(v.role)},
                   {"kind", kind_name(v.kind)},
                   {"description", v.description}};
        if (v.dist) jv["dist"] = *v.dist;
        if (v.role == VarRole::Dependent) jv["expr"] = v.expr;
        vars.push_back(jv);
    }
    j = {{"format", "reposim-spec"},
         {"version", 1},
         {"master_seed", spec.master_seed},
         {"model_id", spec.model_id},
         {"context", spec.context},
         {"project",
          {{"title", spec.project.title},
           {"hypothesis", spec.project.hypothesis},
           {"independent_vars", named_json(spec.project.independent_vars)},
           {"dependent_vars", named_json(spec.project.dependent_vars)},
           {"confounders", named_json(spec.project.confounders)},
           {"setup", spec.project.setup_text},
           {"abstract", spec.project.abstract}}},
         {"template",
          {{"pattern", spec.path_template.pattern()},
           {"placeholders", spec.path_template.placeholders},
           {"connectors", spec.path_template.connectors},
           {"extension", spec.path_template.extension}}},
         {"placeholders", phs},
         {"cross_product_size", spec.cross_product_size},
         {"paths", spec.paths},
         {"assignments", spec.assignments},
         {"readme_present", spec.readme_present},
         {"variables", vars},
         {"materializer", spec.materializer},
         {"anchor_date", spec.anchor_date}};
}

void from_json(const json& j, RepositorySpec& spec) {
    if (j.value("format", "") != "reposim-spec") throw SchemaError("not a repository spec document");
    spec.master_seed = j.at("master_seed").get<std::uint64_t>();
    spec.model_id = j.at("model_id").get<std::string>();
    spec.context = j.at("context").get<ScientificContext>();
    const auto& p = j.at("project");
    spec.project.title = p.at("title").get<std::string>();
    spec.project.hypothesis = p.at("hypothesis").get<std::string>();
    spec.project.independent_vars = named_list(p.at("independent_vars"));
    spec.project.dependent_vars = named_list(p.at("dependent_vars"));
    spec.project.confounders = named_list(p.at("confounders"));
    spec.project.setup_text = p.at("setup").get<std::string>();
    spec.project.abstract = p.at("abstract").get<std::string>();
    const auto& t = j.at("template");
    spec.path_template.placeholders = t.at("placeholders").get<std::vector<std::string>>();
    spec.path_template.connectors = t.at("connectors").get<std::vector<std::string>>();
    spec.path_template.extension = t.at("extension").get<std::string>();
    spec.placeholders.clear();
    for (const auto& ph : j.at("placeholders"))
        spec.placeholders.push_back({ph.at("name").get<std::string>(),
                                     placeholder_kind_from_name(ph.at("kind").get<std::string>()),
                                     ph.at("description").get<std::string>(),
                                     ph.at("values").get<std::vector<std::string>>()});
    spec.cross_product_size = j.at("cross_product_size").get<std::uint64_t>();
    spec.paths = j.at("paths").get<std::vector<std::string>>();
    spec.assignments = j.at("assignments").get<std::vector<std::vector<std::string>>>();
    spec.readme_present = j.at("readme_present").get<bool>();
    spec.variables.clear();
    for (const auto& v : j.at("variables")) {
        FileVariable fv;
        fv.name = v.at("name").get<std::string>();
        fv.role = role_from_name(v.at("role").get<std::string>());
        fv.kind = kind_from_name(v.at("kind").get<std::string>());
        fv.description = v.at("description").get<std::string>();
        if (v.contains("dist")) fv.dist = v["dist"].get<DistributionSpec>();
        fv.expr = v.value("expr", "");
        spec.variables.push_back(std::move(fv));
    }
    spec.materializer = j.at("materializer").get<MaterializerParams>();
    spec.anchor_date = j.at("anchor_date").get<std::string>();
    spec.path_template.validate();
    if (spec.paths.size() != spec.assignments.size())
        throw SchemaError("repository spec: paths and assignments differ in length");
}

}  // namespace reposim
