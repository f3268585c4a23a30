#include "reposim/genmodel.hpp"

#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "reposim/errors.hpp"
#include "reposim/expr.hpp"
#include "reposim/seedstream.hpp"

namespace reposim {

using nlohmann::json;

namespace {

constexpr std::pair<Stage, std::string_view> kStageNames[] = {
    {Stage::Titles, "TITLES"},
    {Stage::Description, "DESCRIPTION"},
    {Stage::Abstract, "ABSTRACT"},
    {Stage::PathStep, "PATH_STEP"},
    {Stage::PathValues, "PATH_VALUES"},
    {Stage::FileVariables, "FILE_VARIABLES"},
    {Stage::DistParams, "DIST_PARAMS"},
    {Stage::DependentExpr, "DEPENDENT_EXPR"},
    {Stage::Paraphrase, "PARAPHRASE"},
};

}  // namespace

std::string_view stage_name(Stage s) {
    for (auto [stage, name] : kStageNames)
        if (stage == s) return name;
    return "?";
}

Stage stage_from_name(std::string_view name) {
    for (auto [stage, n] : kStageNames)
        if (n == name) return stage;
    throw SchemaError("unknown generation stage \"" + std::string(name) + "\"");
}

bool is_identifier(std::string_view s) {
    if (s.empty() || s.size() > 64) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

bool is_path_safe_value(std::string_view s) {
    if (s.empty() || s.size() > 48 || s == "." || s == "..") return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
              c == '=' || c == '+'))
            return false;
    return true;
}

bool is_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    const int y = std::stoi(std::string(s.substr(0, 4)));
    const unsigned m = static_cast<unsigned>(std::stoi(std::string(s.substr(5, 2))));
    const unsigned d = static_cast<unsigned>(std::stoi(std::string(s.substr(8, 2))));
    return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                       std::chrono::day{d}}
        .ok();
}

bool is_decimal_integer(std::string_view s) {
    if (s.empty() || s.size() > 9) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return s.size() == 1 || s[0] != '0';
}

void validate_params(const GenerationParams& params) {
    if (params.k < 2) throw ConfigError("generation params: k must be at least 2");
    if (params.n_path < 1) throw ConfigError("generation params: n_path must be at least 1");
    if (params.max_attempts < 1) throw ConfigError("generation params: max_attempts must be >= 1");
}

// ---------------------------------------------------------------------------
// Schemas

json GenerationRequest::schema() const {
    auto str = json{{"type", "string"}};
    auto named_list = json{{"type", "array"},
                           {"minItems", 1},
                           {"items", {{"type", "object"},
                                      {"required", {"name", "description"}},
                                      {"properties", {{"name", str}, {"description", str}}}}}};
    switch (stage) {
        case Stage::Titles:
            return {{"type", "object"},
                    {"required", {"titles"}},
                    {"properties", {{"titles", {{"type", "array"}, {"items", str}}}}}};
        case Stage::Description:
            return {{"type", "object"},
                    {"required",
                     {"hypothesis", "independent_vars", "dependent_vars", "confounders", "setup"}},
                    {"properties",
                     {{"hypothesis", str},
                      {"independent_vars", named_list},
                      {"dependent_vars", named_list},
                      {"confounders", named_list},
                      {"setup", str}}}};
        case Stage::Abstract:
            return {{"type", "object"},
                    {"required", {"abstract"}},
                    {"properties", {{"abstract", str}}}};
        case Stage::PathStep:
            return {{"type", "object"},
                    {"required", {"placeholder", "connector"}},
                    {"properties",
                     {{"placeholder",
                       {{"type", "object"},
                        {"required", {"name", "kind", "description"}},
                        {"properties",
                         {{"name", str},
                          {"kind", {{"enum", {"independent", "date", "sequence", "researcher"}}}},
                          {"description", str}}}}},
                      {"connector", {{"enum", {"", "/", "_", "-"}}}}}}};
        case Stage::PathValues:
            return {{"type", "object"},
                    {"required", {"values"}},
                    {"properties",
                     {{"values",
                       {{"type", "object"},
                        {"additionalProperties",
                         {{"type", "array"}, {"items", str}, {"minItems", 1}}}}}}}};
        case Stage::FileVariables:
            return {{"type", "object"},
                    {"required", {"variables"}},
                    {"properties",
                     {{"variables",
                       {{"type", "array"},
                        {"items",
                         {{"type", "object"},
                          {"required", {"name", "role", "kind", "description"}},
                          {"properties",
                           {{"name", str},
                            {"role",
                             {{"enum", {"identifier", "datetime", "independent", "dependent"}}}},
                            {"kind",
                             {{"enum", {"categorical", "discrete_integer", "continuous"}}}},
                            {"description", str}}}}}}}}}};
        case Stage::DistParams:
            return {{"type", "object"},
                    {"required", {"distributions"}},
                    {"properties",
                     {{"distributions",
                       {{"type", "object"},
                        {"additionalProperties",
                         {{"type", "object"},
                          {"required", {"type"}},
                          {"properties",
                           {{"type",
                             {{"enum",
                               {"categorical", "bernoulli", "binomial", "geometric",
                                "negative_binomial", "poisson", "beta", "exponential", "normal",
                                "uniform"}}}}}}}}}}}}};
        case Stage::DependentExpr:
            return {{"type", "object"}, {"required", {"expr"}}, {"properties", {{"expr", str}}}};
        case Stage::Paraphrase:
            return {{"type", "object"}, {"required", {"text"}}, {"properties", {{"text", str}}}};
    }
    return json::object();
}

json GenerationRequest::canonical() const {
    return {{"stage", stage_name(stage)},
            {"payload", payload},
            {"schema", schema()},
            {"seed_tag",
             {{"master_seed", seed_tag.master_seed}, {"stage_label", seed_tag.stage_label}}}};
}

std::string CacheKey::str() const {
    return model_id + "/" + std::string(stage_name(stage)) + "/" + digest;
}

CacheKey cache_key(const GenerationRequest& request, const GenerationParams& params) {
    json doc = request.canonical();
    doc["model_id"] = params.model_id;
    // Stage contracts that depend on generation params are part of the key.
    if (request.stage == Stage::Titles) doc["k"] = params.k;
    return {params.model_id, request.stage, to_hex(sha256(doc.dump()))};
}

// ---------------------------------------------------------------------------
// Validation

namespace {

[[noreturn]] void violation(Stage s, const std::string& what) {
    throw SchemaViolation(std::string(stage_name(s)) + ": " + what);
}

const json& field(Stage s, const json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) violation(s, std::string("missing \"") + key + "\"");
    return obj[key];
}

std::string text_field(Stage s, const json& obj, const char* key, bool single_line = false) {
    const auto& v = field(s, obj, key);
    if (!v.is_string() || v.get<std::string>().empty())
        violation(s, std::string("\"") + key + "\" must be a non-empty string");
    auto out = v.get<std::string>();
    if (single_line && out.find_first_of("\r\n") != std::string::npos)
        violation(s, std::string("\"") + key + "\" must be a single line");
    return out;
}

bool has_control_chars(std::string_view v) {
    for (char c : v)
        if (static_cast<unsigned char>(c) < 0x20) return true;
    return false;
}

void check_named_list(Stage s, const json& obj, const char* key) {
    const auto& list = field(s, obj, key);
    if (!list.is_array() || list.empty())
        violation(s, std::string("\"") + key + "\" must be a non-empty array");
    for (const auto& item : list) {
        text_field(s, item, "name", true);
        text_field(s, item, "description");
    }
}

std::set<std::string> payload_names(const json& payload, const char* key) {
    std::set<std::string> names;
    if (payload.contains(key))
        for (const auto& p : payload[key]) names.insert(p.at("name").get<std::string>());
    return names;
}

void validate_path_step(const GenerationRequest& req, const json& r) {
    const Stage s = req.stage;
    const auto& ph = field(s, r, "placeholder");
    const auto name = text_field(s, ph, "name", true);
    if (!is_identifier(name) || name == kErrorName)
        violation(s, "placeholder name \"" + name + "\" is not a valid identifier");
    const auto kind = text_field(s, ph, "kind");
    if (kind != "independent" && kind != "date" && kind != "sequence" && kind != "researcher")
        violation(s, "unknown placeholder kind \"" + kind + "\"");
    text_field(s, ph, "description");
    if (payload_names(req.payload, "placeholders").count(name))
        violation(s, "placeholder \"" + name + "\" already used");
    const auto& conn = field(s, r, "connector");
    if (!conn.is_string()) violation(s, "connector must be a string");
    const auto c = conn.get<std::string>();
    const bool first = req.payload.value("placeholders", json::array()).empty();
    if (first && !c.empty()) violation(s, "the first placeholder takes no connector");
    if (!first && c != "/" && c != "_" && c != "-")
        violation(s, "connector must be one of \"/\", \"_\", \"-\"");
}

void validate_path_values(const GenerationRequest& req, const json& r) {
    const Stage s = req.stage;
    const auto& values = field(s, r, "values");
    if (!values.is_object()) violation(s, "\"values\" must be an object");
    for (const auto& ph : req.payload.at("placeholders")) {
        const auto name = ph.at("name").get<std::string>();
        const auto kind = ph.at("kind").get<std::string>();
        if (!values.contains(name)) violation(s, "no values for placeholder \"" + name + "\"");
        const auto& list = values[name];
        if (!list.is_array() || list.empty() || list.size() > 12)
            violation(s, "placeholder \"" + name + "\" needs between 1 and 12 values");
        std::set<std::string> seen;
        for (const auto& v : list) {
            if (!v.is_string()) violation(s, "values of \"" + name + "\" must be strings");
            const auto text = v.get<std::string>();
            if (!seen.insert(text).second)
                violation(s, "duplicate value \"" + text + "\" for \"" + name + "\"");
            if (kind == "date") {
                if (!is_iso_date(text))
                    violation(s, "date value \"" + text + "\" is not an ISO-8601 calendar date");
            } else if (kind == "sequence") {
                if (!is_decimal_integer(text))
                    violation(s, "sequence value \"" + text + "\" is not a decimal integer");
            } else if (!is_path_safe_value(text)) {
                violation(s, "value \"" + text + "\" is not path-safe");
            }
        }
    }
    if (values.size() != req.payload.at("placeholders").size())
        violation(s, "values given for undeclared placeholders");
}

void validate_file_variables(const GenerationRequest& req, const json& r) {
    const Stage s = req.stage;
    const auto& vars = field(s, r, "variables");
    if (!vars.is_array() || vars.empty()) violation(s, "\"variables\" must be a non-empty array");
    auto taken = payload_names(req.payload, "placeholders");
    int independents = 0;
    int dependents = 0;
    for (const auto& v : vars) {
        const auto name = text_field(s, v, "name", true);
        if (!is_identifier(name) || name == kErrorName)
            violation(s, "variable name \"" + name + "\" is not a valid identifier");
        if (!taken.insert(name).second)
            violation(s, "variable name \"" + name + "\" collides with another name");
        const auto role = text_field(s, v, "role");
        const auto kind = text_field(s, v, "kind");
        text_field(s, v, "description");
        if (kind != "categorical" && kind != "discrete_integer" && kind != "continuous")
            violation(s, "unknown kind \"" + kind + "\" for \"" + name + "\"");
        if (role == "independent") {
            ++independents;
        } else if (role == "dependent") {
            ++dependents;
            if (kind != "continuous")
                violation(s, "dependent variable \"" + name + "\" must be continuous");
        } else if (role != "identifier" && role != "datetime") {
            violation(s, "unknown role \"" + role + "\" for \"" + name + "\"");
        }
    }
    if (independents == 0) violation(s, "at least one independent variable is required");
    if (dependents == 0) violation(s, "at least one dependent variable is required");
}

void validate_dist_params(const GenerationRequest& req, const json& r) {
    const Stage s = req.stage;
    const auto& dists = field(s, r, "distributions");
    if (!dists.is_object()) violation(s, "\"distributions\" must be an object");
    for (const auto& v : req.payload.at("variables")) {
        const auto name = v.at("name").get<std::string>();
        const auto kind = v.at("kind").get<std::string>();
        if (!dists.contains(name)) violation(s, "no distribution for \"" + name + "\"");
        DistributionSpec dist;
        try {
            dist = dists[name].get<DistributionSpec>();
        } catch (const MalformedDistribution& e) {
            violation(s, "\"" + name + "\": " + e.what());
        }
        const bool ok = (kind == "categorical" && std::holds_alternative<Categorical>(dist)) ||
                        (kind == "discrete_integer" && is_discrete_integer(dist)) ||
                        (kind == "continuous" && is_continuous(dist));
        if (!ok)
            violation(s, "\"" + name + "\" of kind " + kind + " cannot use a " +
                             distribution_name(dist) + " distribution");
        if (const auto* c = std::get_if<Categorical>(&dist)) {
            std::set<std::string> seen;
            for (const auto& value : c->values) {
                if (value.empty() || value.size() > 64 || has_control_chars(value))
                    violation(s, "categorical value of \"" + name + "\" is empty or malformed");
                if (!seen.insert(value).second)
                    violation(s, "duplicate categorical value \"" + value + "\"");
            }
        }
    }
    if (dists.size() != req.payload.at("variables").size())
        violation(s, "distributions given for undeclared variables");
}

void validate_dependent_expr(const GenerationRequest& req, const json& r) {
    const Stage s = req.stage;
    const auto source = text_field(s, r, "expr");
    std::map<std::string, ValueType> declared;
    for (const auto& in : req.payload.at("inputs"))
        declared[in.at("name").get<std::string>()] =
            in.at("type").get<std::string>() == "number" ? ValueType::Number : ValueType::String;
    auto problems = validate_expr(source, declared);
    if (!problems.empty()) {
        std::string joined;
        for (const auto& p : problems) joined += (joined.empty() ? "" : "; ") + p;
        violation(s, "invalid expression: " + joined);
    }
}

}  // namespace

void validate_response(const GenerationRequest& request, const GenerationParams& params,
                       const json& r) {
    const Stage s = request.stage;
    if (!r.is_object()) violation(s, "response must be a JSON object");
    switch (s) {
        case Stage::Titles: {
            const auto& titles = field(s, r, "titles");
            if (!titles.is_array() || titles.size() != static_cast<std::size_t>(params.k))
                violation(s, "expected exactly " + std::to_string(params.k) + " titles");
            std::set<std::string> seen;
            for (const auto& t : titles) {
                if (!t.is_string() || t.get<std::string>().empty())
                    violation(s, "titles must be non-empty strings");
                const auto text = t.get<std::string>();
                if (text.find_first_of("\r\n") != std::string::npos)
                    violation(s, "titles must be single lines");
                if (!seen.insert(text).second) violation(s, "titles must be distinct");
            }
            break;
        }
        case Stage::Description:
            text_field(s, r, "hypothesis");
            check_named_list(s, r, "independent_vars");
            check_named_list(s, r, "dependent_vars");
            check_named_list(s, r, "confounders");
            text_field(s, r, "setup");
            break;
        case Stage::Abstract: text_field(s, r, "abstract"); break;
        case Stage::PathStep: validate_path_step(request, r); break;
        case Stage::PathValues: validate_path_values(request, r); break;
        case Stage::FileVariables: validate_file_variables(request, r); break;
        case Stage::DistParams: validate_dist_params(request, r); break;
        case Stage::DependentExpr: validate_dependent_expr(request, r); break;
        case Stage::Paraphrase: {
            const auto text = text_field(s, r, "text");
            const auto input = request.payload.at("text").get<std::string>();
            if (input.find("{path}") != std::string::npos &&
                text.find("{path}") == std::string::npos)
                violation(s, "paraphrase dropped the {path} token");
            break;
        }
    }
}

// ---------------------------------------------------------------------------
// Cache

ResponseCache::ResponseCache(std::optional<std::filesystem::path> directory)
    : directory_(std::move(directory)) {}

std::filesystem::path ResponseCache::file_for(const CacheKey& key) const {
    std::string model;
    for (char c : key.model_id)
        model.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c
                                                                                             : '_');
    return *directory_ / model / std::string(stage_name(key.stage)) / (key.digest + ".json");
}

std::optional<json> ResponseCache::get(const CacheKey& key) {
    const auto id = key.str();
    {
        std::shared_lock lock(mutex_);
        auto it = memory_.find(id);
        if (it != memory_.end()) return it->second;
    }
    if (!directory_) return std::nullopt;
    std::ifstream in(file_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error&) {
        return std::nullopt;
    }
    if (!doc.contains("response")) return std::nullopt;
    std::unique_lock lock(mutex_);
    auto [it, inserted] = memory_.emplace(id, doc["response"]);
    return it->second;
}

void ResponseCache::put(const CacheKey& key, const GenerationRequest& request,
                        const json& response) {
    {
        std::unique_lock lock(mutex_);
        memory_.emplace(key.str(), response);
    }
    if (!directory_) return;
    const auto target = file_for(key);
    std::filesystem::create_directories(target.parent_path());
    json doc = {{"key", key.str()}, {"request", request.canonical()}, {"response", response}};
    std::ostringstream tmp_name;
    tmp_name << target.string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id());
    {
        std::ofstream out(tmp_name.str(), std::ios::binary | std::ios::trunc);
        out << doc.dump(2) << "\n";
        if (!out) throw Error("cannot write cache entry " + tmp_name.str());
    }
    std::filesystem::rename(tmp_name.str(), target);
}

// ---------------------------------------------------------------------------
// Generator

Generator::Generator(std::shared_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache)
    : backend_(std::move(backend)),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()) {}

json Generator::generate(const GenerationRequest& request, const GenerationParams& params) {
    validate_params(params);
    const auto key = cache_key(request, params);
    if (auto hit = cache_->get(key)) {
        ++cache_hits_;
        return *hit;
    }
    std::string feedback;
    for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
        ++backend_calls_;
        json response = backend_->complete(request, params, feedback);
        try {
            validate_response(request, params, response);
        } catch (const SchemaViolation& e) {
            feedback = e.what();
            continue;
        }
        cache_->put(key, request, response);
        return response;
    }
    throw SchemaViolation("response failed validation after " +
                          std::to_string(params.max_attempts) + " attempts: " + feedback);
}

}  // namespace reposim
