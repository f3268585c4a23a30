#include <cstdlib>

#include "reposim/backends.hpp"
#include "reposim/errors.hpp"
#include "reposim/net.hpp"

namespace reposim {

using nlohmann::json;

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {}

std::string HttpBackend::system_prompt(Stage stage) {
    std::string common =
        "You help design synthetic scientific data repositories. Reply with a single JSON "
        "object that matches the given schema and nothing else.";
    switch (stage) {
        case Stage::Titles:
            return common + " Propose distinct, specific research project titles for the "
                            "given scientific subdomain.";
        case Stage::Description:
            return common + " Write a project specification: a hypothesis, independent "
                            "variables, dependent variables, potential confounders and a short "
                            "description of the experimental setup.";
        case Stage::Abstract:
            return common + " Write a one-paragraph abstract for the project.";
        case Stage::PathStep:
            return common + " Pick the next placeholder variable of the directory template and "
                            "the connector that precedes it. Kinds: independent, date, sequence, "
                            "researcher. The first placeholder takes the empty connector; later "
                            "ones take one of \"/\", \"_\", \"-\". Names are identifiers.";
        case Stage::PathValues:
            return common + " List the values each placeholder takes. Values must be short and "
                            "path-safe (letters, digits, _ - . = +). Dates are YYYY-MM-DD. "
                            "Sequence values are decimal integers. At most 12 values each.";
        case Stage::FileVariables:
            return common + " Define the columns stored in every data file. Roles: identifier, "
                            "datetime, independent, dependent. Kinds: categorical, "
                            "discrete_integer, continuous. Dependent variables are continuous. "
                            "Names must not repeat the placeholder names.";
        case Stage::DistParams:
            return common + " Give a sampling distribution for each variable. Categorical "
                            "variables use {\"type\":\"categorical\",\"values\":[...],\"probs\":[...]}; "
                            "discrete_integer ones use bernoulli, binomial, geometric, "
                            "negative_binomial or poisson; continuous ones use beta, exponential, "
                            "normal or uniform.";
        case Stage::DependentExpr:
            return common +
                   " Write a plausible formula for the target variable in this expression "
                   "language: numbers, \"strings\", variable names, + - * /, comparisons, and/or/not, "
                   "if ... then ... else ..., lookup(key, {\"value\": number, ...}, default), exp, "
                   "log, sqrt, pow, abs, min, max, floor, clamp(x, lo, hi), parse_number(text). "
                   "Wrap every log/sqrt argument and every non-literal divisor as max(1e-9, ...). "
                   "Add the noise term `error` to the result. Use only the listed inputs.";
        case Stage::Paraphrase:
            return common + " Rewrite the question the way a researcher on this project would "
                            "ask it, keeping every number and quoted value. If the question "
                            "contains the token {path}, keep that token verbatim.";
    }
    return common;
}

std::string HttpBackend::user_prompt(const GenerationRequest& request,
                                     const GenerationParams& params, const std::string& feedback) {
    json body = {{"stage", stage_name(request.stage)},
                 {"inputs", request.payload},
                 {"response_schema", request.schema()}};
    if (request.stage == Stage::Titles) body["count"] = params.k;
    std::string text = body.dump(2);
    if (!feedback.empty())
        text += "\n\nYour previous reply was rejected: " + feedback + "\nReturn a corrected reply.";
    return text;
}

json HttpBackend::complete(const GenerationRequest& request, const GenerationParams& params,
                           const std::string& feedback) {
    json body = {{"model", config_.model},
                 {"temperature", 0},
                 {"seed", request.seed_tag.master_seed % 2147483647ull},
                 {"response_format", {{"type", "json_object"}}},
                 {"messages",
                  {{{"role", "system"}, {"content", system_prompt(request.stage)}},
                   {{"role", "user"}, {"content", user_prompt(request, params, feedback)}}}}};
    HttpHeaders headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
        headers.emplace_back("Authorization", std::string("Bearer ") + key);
    auto res = http_post(config_.base_url, config_.endpoint, body.dump(), headers,
                         config_.timeout_seconds);
    if (res.status == 0) throw BackendUnavailable("backend transport failed: " + res.error);
    if (res.status != 200)
        throw BackendUnavailable("backend returned HTTP " + std::to_string(res.status));
    json reply;
    try {
        reply = json::parse(res.body);
        const auto content =
            reply.at("choices").at(0).at("message").at("content").get<std::string>();
        return json::parse(content);
    } catch (const json::exception&) {
        // Unparseable content is a validation problem, retried by the generator.
        return json::object();
    }
}

}  // namespace reposim
