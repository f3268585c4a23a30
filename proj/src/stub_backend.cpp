#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "reposim/backends.hpp"
#include "reposim/errors.hpp"
#include "reposim/seedstream.hpp"

namespace reposim {

using nlohmann::json;

namespace {

struct PlaceholderPattern {
    const char* name;
    const char* kind;
    const char* description;
    std::vector<const char*> values;
};

// Values are already path-safe. Dates and sequences are synthesized.
const std::vector<PlaceholderPattern>& placeholder_bank() {
    static const std::vector<PlaceholderPattern> bank = {
        {"cond", "independent", "treatment condition applied to the sample",
         {"ctrl", "treat_a", "treat_b", "treat_c", "mix", "sham"}},
        {"phase", "independent", "stage of the experiment",
         {"early", "mid", "late", "recovery", "baseline", "final"}},
        {"temp", "independent", "incubation temperature in degrees Celsius",
         {"25", "30", "35", "40", "45", "50"}},
        {"dose", "independent", "administered dose in mg/kg",
         {"0.1", "0.5", "1.0", "2.0", "5.0", "10.0"}},
        {"site", "independent", "collection site",
         {"north", "south", "east", "west", "central", "coast"}},
        {"pH", "independent", "buffer acidity",
         {"pH_4.0", "pH_5.0", "pH_6.0", "pH_7.0", "pH_8.0", "pH_9.0"}},
        {"lr", "independent", "optimizer learning rate",
         {"lr=0.001", "lr=0.01", "lr=0.05", "lr=0.1", "lr=0.2", "lr=0.5"}},
        {"arch", "independent", "model architecture",
         {"arch=mlp2", "arch=cnn", "arch=rnn", "arch=tfm", "arch=gnn", "arch=lin"}},
        {"gtype", "independent", "genotype of the strain",
         {"gtype_wild", "gtype_knockout", "gtype_mutant", "gtype_hetero", "gtype_rescue",
          "gtype_null"}},
        {"tpt", "independent", "sampling time point in hours",
         {"tpt_0", "tpt_6", "tpt_12", "tpt_24", "tpt_48", "tpt_72"}},
        {"encr", "independent", "encryption scheme",
         {"encr=bfv", "encr=ckks", "encr=paillier", "encr=none", "encr=bgv", "encr=tfhe"}},
        {"load", "independent", "applied load level",
         {"low", "med", "high", "vhigh", "peak", "idle"}},
        {"date", "date", "date the measurement was taken", {}},
        {"seq_number", "sequence", "replicate number within a session", {}},
        {"researcher", "researcher", "person who ran the session",
         {"kai.monroe", "ana.ruiz", "li.chen", "sam.okafor", "eva.berg", "raj.patel"}},
    };
    return bank;
}

struct VariablePattern {
    const char* name;
    const char* role;
    const char* kind;
    const char* description;
    std::vector<const char*> values;  // categorical only
};

const std::vector<VariablePattern>& variable_bank() {
    static const std::vector<VariablePattern> bank = {
        {"sample_id", "identifier", "categorical", "unique sample identifier", {}},
        {"recorded_at", "datetime", "categorical", "date the row was recorded", {}},
        {"stab", "independent", "categorical", "stability flag", {"0", "1"}},
        {"grade", "independent", "categorical", "quality grade", {"low", "med", "high"}},
        {"region", "independent", "categorical", "tissue region",
         {"cortex", "medulla", "capsule", "hilum"}},
        {"shape", "independent", "categorical", "observed morphology",
         {"round", "oval", "irregular"}},
        {"err_clust", "independent", "categorical", "error clustering pattern",
         {"scattered", "burst", "periodic"}},
        {"operator", "independent", "categorical", "bench operator shift",
         {"day", "night", "weekend"}},
        {"colonies", "independent", "discrete_integer", "number of colonies counted", {}},
        {"defects", "independent", "discrete_integer", "defects observed per batch", {}},
        {"retries", "independent", "discrete_integer", "retry attempts", {}},
        {"biomass", "independent", "continuous", "biomass concentration in g/L", {}},
        {"humidity", "independent", "continuous", "relative humidity fraction", {}},
        {"flow_rate", "independent", "continuous", "flow rate in mL/min", {}},
        {"joint_temp", "independent", "continuous", "joint temperature in degrees Celsius", {}},
        {"signal", "dependent", "continuous", "measured signal intensity", {}},
        {"yield_frac", "dependent", "continuous", "product yield fraction", {}},
        {"latency", "dependent", "continuous", "response latency in ms", {}},
        {"residual", "dependent", "continuous", "residual substrate in g/L", {}},
        {"robustness", "dependent", "continuous", "robustness score", {}},
    };
    return bank;
}

double round3(double x) { return std::nearbyint(x * 1000.0) / 1000.0; }

double draw(RandomStream& s, double lo, double hi) { return round3(lo + s.uniform() * (hi - lo)); }

std::string fmt_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    std::string out = buf;
    while (out.size() > 1 && out.back() == '0') out.pop_back();
    if (out.back() == '.') out.push_back('0');
    return out;
}

std::string quote(const std::string& s) { return json(s).dump(); }

template <typename T>
void shuffle(std::vector<T>& v, RandomStream& s) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[s.index(i)]);
}

json stub_titles(const json& payload, const GenerationParams& params, RandomStream& s) {
    static const char* prefixes[] = {"Effects of conditions on", "Modeling", "Characterizing",
                                     "Quantifying variability in", "Assessing", "Probing",
                                     "Mapping", "Evaluating"};
    static const char* suffixes[] = {"under varying conditions", "across experimental regimes",
                                     "in controlled settings", "at bench scale",
                                     "over repeated trials", "with noisy measurements"};
    const auto sub = payload.at("context").at("subdomain").get<std::string>();
    std::vector<std::string> pool;
    for (const char* p : prefixes)
        for (const char* q : suffixes) pool.push_back(std::string(p) + " " + sub + " " + q);
    shuffle(pool, s);
    json titles = json::array();
    for (int i = 0; i < params.k; ++i) {
        if (static_cast<std::size_t>(i) < pool.size())
            titles.push_back(pool[static_cast<std::size_t>(i)]);
        else
            titles.push_back(pool[static_cast<std::size_t>(i) % pool.size()] + " (study " +
                             std::to_string(i) + ")");
    }
    return {{"titles", titles}};
}

json stub_description(const json& payload, RandomStream& s) {
    const auto sub = payload.at("context").at("subdomain").get<std::string>();
    static const char* factors[] = {"treatment condition", "temperature", "dose", "time point",
                                    "architecture"};
    static const char* outcomes[] = {"signal intensity", "yield", "latency", "robustness"};
    const std::string f = factors[s.index(5)];
    const std::string o = outcomes[s.index(4)];
    return {
        {"hypothesis", "Changing the " + f + " shifts the measured " + o + " in " + sub + "."},
        {"independent_vars", {{{"name", f}, {"description", "controlled " + f}}}},
        {"dependent_vars", {{{"name", o}, {"description", "observed " + o}}}},
        {"confounders",
         {{{"name", "operator shift"}, {"description", "who ran the session and when"}},
          {{"name", "batch effects"}, {"description", "reagent or hardware batch"}}}},
        {"setup", "Repeated sessions vary the " + f + " and record the " + o +
                      " together with auxiliary measurements."}};
}

json stub_abstract(const json& payload) {
    const auto title = payload.at("title").get<std::string>();
    const auto hyp = payload.at("description").at("hypothesis").get<std::string>();
    return {{"abstract", "This project, \"" + title + "\", tests one hypothesis. " + hyp +
                             " Data are organized by experimental condition and session."}};
}

json stub_path_step(const json& payload, RandomStream& s) {
    std::set<std::string> used;
    for (const auto& p : payload.value("placeholders", json::array()))
        used.insert(p.at("name").get<std::string>());
    const bool first = used.empty();
    std::vector<const PlaceholderPattern*> free;
    for (const auto& p : placeholder_bank())
        if (!used.count(p.name)) free.push_back(&p);
    const auto* pick = free[s.index(free.size())];
    static const char* connectors[] = {"/", "/", "_", "-"};
    const std::string conn = first ? "" : connectors[s.index(4)];
    return {{"placeholder",
             {{"name", pick->name}, {"kind", pick->kind}, {"description", pick->description}}},
            {"connector", conn}};
}

std::string iso_date(int y, unsigned m, unsigned d) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
    return buf;
}

json stub_path_values(const json& payload, RandomStream& s) {
    json values = json::object();
    for (const auto& ph : payload.at("placeholders")) {
        const auto name = ph.at("name").get<std::string>();
        const auto kind = ph.at("kind").get<std::string>();
        const std::size_t count = 2 + s.index(5);
        json list = json::array();
        if (kind == "date") {
            const int year = 2022 + static_cast<int>(s.index(4));
            unsigned month = 1 + static_cast<unsigned>(s.index(6));
            for (std::size_t i = 0; i < count; ++i) {
                list.push_back(iso_date(year, month, 1 + static_cast<unsigned>(s.index(28))));
                ++month;
            }
        } else if (kind == "sequence") {
            for (std::size_t i = 1; i <= count; ++i) list.push_back(std::to_string(i));
        } else {
            std::vector<std::string> pool;
            for (const auto& p : placeholder_bank())
                if (p.name == name)
                    for (const char* v : p.values) pool.push_back(v);
            if (pool.empty())
                for (int i = 0; i < 6; ++i) pool.push_back(name + "_" + std::to_string(i));
            shuffle(pool, s);
            pool.resize(std::min(count, pool.size()));
            std::sort(pool.begin(), pool.end());
            for (auto& v : pool) list.push_back(v);
        }
        values[name] = list;
    }
    return {{"values", values}};
}

json stub_file_variables(const json& payload, RandomStream& s) {
    std::set<std::string> taken;
    for (const auto& p : payload.value("placeholders", json::array()))
        taken.insert(p.at("name").get<std::string>());
    std::vector<const VariablePattern*> cats, ints, conts, deps;
    const VariablePattern* ident = nullptr;
    const VariablePattern* when = nullptr;
    for (const auto& v : variable_bank()) {
        if (taken.count(v.name)) continue;
        const std::string role = v.role;
        const std::string kind = v.kind;
        if (role == "identifier") ident = &v;
        else if (role == "datetime") when = &v;
        else if (role == "dependent") deps.push_back(&v);
        else if (kind == "categorical") cats.push_back(&v);
        else if (kind == "discrete_integer") ints.push_back(&v);
        else conts.push_back(&v);
    }
    shuffle(cats, s);
    shuffle(ints, s);
    shuffle(conts, s);
    shuffle(deps, s);
    std::vector<const VariablePattern*> chosen;
    if (ident && s.uniform() < 0.5) chosen.push_back(ident);
    if (when && s.uniform() < 0.5) chosen.push_back(when);
    const std::size_t n_cat = 2 + s.index(2);
    const std::size_t n_int = s.index(2);
    const std::size_t n_cont = 1 + s.index(2);
    const std::size_t n_dep = 1 + s.index(2);
    for (std::size_t i = 0; i < n_cat && i < cats.size(); ++i) chosen.push_back(cats[i]);
    for (std::size_t i = 0; i < n_int && i < ints.size(); ++i) chosen.push_back(ints[i]);
    for (std::size_t i = 0; i < n_cont && i < conts.size(); ++i) chosen.push_back(conts[i]);
    for (std::size_t i = 0; i < n_dep && i < deps.size(); ++i) chosen.push_back(deps[i]);
    json vars = json::array();
    for (const auto* v : chosen)
        vars.push_back({{"name", v->name},
                        {"role", v->role},
                        {"kind", v->kind},
                        {"description", v->description}});
    return {{"variables", vars}};
}

json stub_dist(const std::string& name, const std::string& kind, RandomStream& s) {
    if (kind == "categorical") {
        std::vector<std::string> values;
        for (const auto& v : variable_bank())
            if (v.name == name)
                for (const char* x : v.values) values.push_back(x);
        if (values.empty()) values = {"a", "b", "c"};
        std::vector<double> weights;
        double total = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            weights.push_back(static_cast<double>(1 + s.index(9)));
            total += weights.back();
        }
        json probs = json::array();
        for (double w : weights) probs.push_back(w / total);
        return {{"type", "categorical"}, {"values", values}, {"probs", probs}};
    }
    if (kind == "discrete_integer") {
        switch (s.index(4)) {
            case 0:
                return {{"type", "binomial"},
                        {"n", 5 + static_cast<int>(s.index(16))},
                        {"p", draw(s, 0.2, 0.8)}};
            case 1: return {{"type", "poisson"}, {"lambda", draw(s, 1.0, 20.0)}};
            case 2: return {{"type", "geometric"}, {"p", draw(s, 0.2, 0.6)}};
            default:
                return {{"type", "negative_binomial"},
                        {"r", 1 + static_cast<int>(s.index(5))},
                        {"p", draw(s, 0.3, 0.7)}};
        }
    }
    switch (s.index(4)) {
        case 0: {
            const double mu = draw(s, 1.0, 100.0);
            return {{"type", "normal"}, {"mu", mu}, {"sigma", round3(mu * draw(s, 0.05, 0.3))}};
        }
        case 1: {
            const double a = draw(s, 0.0, 50.0);
            return {{"type", "uniform"}, {"a", a}, {"b", round3(a + draw(s, 1.0, 50.0))}};
        }
        case 2: return {{"type", "exponential"}, {"lambda", draw(s, 0.5, 2.0)}};
        default: return {{"type", "beta"}, {"alpha", draw(s, 1.0, 5.0)}, {"beta", draw(s, 1.0, 5.0)}};
    }
}

json stub_dist_params(const json& payload, RandomStream& s) {
    json dists = json::object();
    for (const auto& v : payload.at("variables"))
        dists[v.at("name").get<std::string>()] =
            stub_dist(v.at("name").get<std::string>(), v.at("kind").get<std::string>(), s);
    return {{"distributions", dists}};
}

// Additive term for one input, or empty when the input is unusable.
std::string input_term(const json& in, RandomStream& s) {
    const auto name = in.at("name").get<std::string>();
    const auto type = in.at("type").get<std::string>();
    if (type == "number") {
        const double c = draw(s, -2.0, 2.0);
        if (s.uniform() < 0.3)
            return "log(max(1e-9, abs(" + name + ") + 1)) * " + fmt_number(c);
        return fmt_number(c) + " * " + name;
    }
    const auto values = in.value("values", json::array());
    if (values.empty()) return {};
    bool numeric = false;
    for (const auto& v : values)
        numeric = numeric || v.get<std::string>().find_first_of("0123456789") != std::string::npos;
    if (numeric && s.uniform() < 0.5) {
        // Bell curve over the numeric content of the value.
        const double center = draw(s, 0.0, 20.0);
        const double width = draw(s, 5.0, 50.0);
        return "exp(-pow(parse_number(" + name + ") - " + fmt_number(center) + ", 2) / " +
               fmt_number(width) + ") * " + fmt_number(draw(s, 0.5, 3.0));
    }
    std::string map;
    for (const auto& v : values) {
        if (!map.empty()) map += ", ";
        map += quote(v.get<std::string>()) + ": " + fmt_number(draw(s, -1.5, 1.5));
    }
    return "lookup(" + name + ", {" + map + "}, 0.0)";
}

json stub_dependent_expr(const json& payload, RandomStream& s) {
    std::vector<json> inputs(payload.at("inputs").begin(), payload.at("inputs").end());
    shuffle(inputs, s);
    std::string body = fmt_number(draw(s, 1.0, 10.0));
    std::size_t used = 0;
    for (const auto& in : inputs) {
        if (used == 3) break;
        const auto term = input_term(in, s);
        if (term.empty()) continue;
        body += " + " + term;
        ++used;
    }
    body += " + error";
    switch (s.index(3)) {
        case 0: return {{"expr", body}};
        case 1: return {{"expr", "clamp(" + body + ", -50.0, 500.0)"}};
        default: break;
    }
    // Multiplicative switch on one categorical input.
    for (const auto& in : inputs) {
        const auto values = in.value("values", json::array());
        if (in.at("type") != "string" || values.empty()) continue;
        const auto pick = values[s.index(values.size())].get<std::string>();
        return {{"expr", "(" + body + ") * (if " + in.at("name").get<std::string>() + " == " +
                             quote(pick) + " then " + fmt_number(draw(s, 1.1, 2.0)) +
                             " else 1.0)"}};
    }
    return {{"expr", "abs(" + body + ")"}};
}

json stub_paraphrase(const json& payload, RandomStream& s) {
    static const std::vector<std::vector<std::pair<std::string, std::string>>> rules = {
        {{"Only considering files where", "Restricting attention to files in which"},
         {"only considering rows where", "keeping only the rows where"},
         {"what is the", "what's the"},
         {"How many", "Could you tell me how many"},
         {"Yes or no, does", "Does"}},
        {{"Only considering files where", "Looking only at files for which"},
         {"only considering rows where", "using just the rows in which"},
         {"what is the", "can you report the"},
         {"How many", "Count how many"},
         {"In the file", "Within the file"}},
        {{"Only considering files where", "For files where"},
         {"only considering rows where", "restricted to rows where"},
         {"what is the", "what would be the"},
         {"Looking at the README file,", "From the README,"},
         {"In the file", "Using the data in"}},
    };
    std::string text = payload.at("text").get<std::string>();
    for (const auto& [from, to] : rules[s.index(rules.size())]) {
        auto pos = text.find(from);
        if (pos != std::string::npos) text.replace(pos, from.size(), to);
    }
    return {{"text", text}};
}

}  // namespace

json StubBackend::complete(const GenerationRequest& request, const GenerationParams& params,
                           const std::string& /*feedback*/) {
    ++calls_;
    auto s = RandomStream::for_stage(request.seed_tag.master_seed,
                                     "stub/" + request.seed_tag.stage_label);
    const auto& p = request.payload;
    switch (request.stage) {
        case Stage::Titles: return stub_titles(p, params, s);
        case Stage::Description: return stub_description(p, s);
        case Stage::Abstract: return stub_abstract(p);
        case Stage::PathStep: return stub_path_step(p, s);
        case Stage::PathValues: return stub_path_values(p, s);
        case Stage::FileVariables: return stub_file_variables(p, s);
        case Stage::DistParams: return stub_dist_params(p, s);
        case Stage::DependentExpr: return stub_dependent_expr(p, s);
        case Stage::Paraphrase: return stub_paraphrase(p, s);
    }
    throw InternalInconsistency("stub backend: unhandled stage");
}

}  // namespace reposim
