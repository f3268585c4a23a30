#include "reposim/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <mutex>
#include <set>
#include <ostream>
#include <regex>
#include <sstream>
#include <thread>

#include "reposim/errors.hpp"
#include "reposim/net.hpp"

namespace reposim {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Prompt

namespace {

const char* const kToolInstructions =
    "You have access to a scientific data repository through these tools:\n"
    "- list_directory(id, prefix, depth): list files and directories under `prefix`. The prefix "
    "may use the wildcards * and ?. `depth` is how many levels below the prefix to list "
    "(default 1).\n"
    "- read_text_file(id, path, head, tail): read a file as text; `head` keeps the first N lines "
    "and `tail` the last N lines.\n"
    "- read_binary_file(id, path): read a file as Base64 together with its MIME type.\n"
    "Every response is a JSON object whose \"status\" is \"success\" or \"error\".";

}  // namespace

std::string episode_prompt(const QAItem& item, std::size_t variant) {
    const std::string id = std::to_string(item.repo_seed);
    std::string p = kToolInstructions;
    p += "\n\nThis question concerns repository #" + id + ". Pass `id=" + id +
         "` in every call to the repository tools.\n\n";
    p += item.preamble() + " " + item.variant_text(variant) + "\n\n";
    p += "When you are ready, reply with a JSON object whose only key is \"answer\", holding your "
         "answer. If the question cannot be answered from the repository, answer \"not possible\", "
         "for example `{\"answer\": \"not possible\"}`.";
    return p;
}

// ---------------------------------------------------------------------------
// Agents

namespace {

std::string answer_json(const json& value) { return json{{"answer", value}}.dump(); }

const std::string& first_user_message(const std::vector<TranscriptEntry>& t) {
    for (const auto& e : t)
        if (e.role == "user") return e.content;
    throw InternalInconsistency("transcript has no user message");
}

class AbstainAgent : public Agent {
public:
    std::string name() const override { return "always-abstain"; }
    AgentTurn step(const std::vector<TranscriptEntry>&, const json&) override {
        return {answer_json("not possible"), {}, {}};
    }
};

class OracleAgent : public Agent {
public:
    explicit OracleAgent(const std::vector<QAItem>& items) {
        for (const auto& item : items)
            for (std::size_t v = 0; v < item.variant_count(); ++v)
                answers_[episode_prompt(item, v)] =
                    item.ground_truth.possible ? item.ground_truth.value : json("not possible");
    }
    std::string name() const override { return "oracle-replay"; }
    AgentTurn step(const std::vector<TranscriptEntry>& t, const json&) override {
        auto it = answers_.find(first_user_message(t));
        if (it == answers_.end()) throw AgentUnavailable("oracle agent: question not in its batch");
        return {answer_json(it->second), {}, {}};
    }

private:
    std::map<std::string, json> answers_;
};

class RandomAgent : public Agent {
public:
    RandomAgent(std::uint64_t seed, const std::vector<QAItem>& items) : seed_(seed) {
        for (const auto& item : items)
            for (std::size_t v = 0; v < item.variant_count(); ++v)
                items_[episode_prompt(item, v)] = &item;
    }
    std::string name() const override { return "random-guess"; }
    AgentTurn step(const std::vector<TranscriptEntry>& t, const json&) override {
        const auto& prompt = first_user_message(t);
        auto it = items_.find(prompt);
        if (it == items_.end()) throw AgentUnavailable("random agent: question not in its batch");
        const QAItem& item = *it->second;
        auto s = RandomStream::for_stage(seed_, prompt);
        if (s.uniform() < 0.25) return {answer_json("not possible"), {}, {}};
        json guess;
        switch (item.answer_kind) {
            case AnswerKind::CategoricalFinite:
            case AnswerKind::ThreeClass:
                guess = item.options.empty() ? json("yes") : json(item.options[s.index(item.options.size())]);
                break;
            case AnswerKind::Integer: guess = static_cast<std::int64_t>(s.index(200)); break;
            case AnswerKind::Continuous: guess = s.uniform() * 100.0; break;
            case AnswerKind::OpenString: guess = "unknown"; break;
        }
        return {answer_json(guess), {}, {}};
    }

private:
    std::uint64_t seed_;
    std::map<std::string, const QAItem*> items_;
};

std::size_t count_data_rows(const std::string& bytes, const std::string& ext) {
    auto lines = [&] {
        std::size_t n = 0;
        std::istringstream in(bytes);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) ++n;
        return n;
    };
    if (ext == "json") return json::parse(bytes).size();
    if (ext == "jsonl" || ext == "log") return lines();
    if (ext == "txt") return lines() - 1;
    if (ext == "xlsx") {
        std::size_t n = 0;
        for (auto p = bytes.find("<row "); p != std::string::npos; p = bytes.find("<row ", p + 1)) ++n;
        return n - 1;
    }
    // csv: records outside quoted fields
    std::size_t records = 0;
    bool quoted = false, any = false;
    for (char c : bytes) {
        if (c == '"') quoted = !quoted;
        if (c == '\n' && !quoted) {
            ++records;
            any = false;
        } else {
            any = true;
        }
    }
    if (any) ++records;
    return records - 1;
}

class ReferenceAgent : public Agent {
public:
    std::string name() const override { return "scripted-reference"; }

    AgentTurn step(const std::vector<TranscriptEntry>& t, const json&) override {
        const auto& prompt = first_user_message(t);
        std::smatch m;
        static const std::regex id_re(R"(repository #(\d+))");
        if (!std::regex_search(prompt, m, id_re)) return final("not possible");
        const std::uint64_t id = std::stoull(m[1].str());
        std::vector<json> obs;
        for (const auto& e : t)
            if (e.role == "tool") obs.push_back(json::parse(e.content, nullptr, false));
        const std::size_t step = obs.size();

        if (prompt.find("have a README file") != std::string::npos) {
            if (step == 0) return call("list_directory", {{"id", id}, {"prefix", ""}, {"depth", 1}});
            const auto& paths = obs[0].value("paths", json::array());
            const bool found = std::find(paths.begin(), paths.end(), json("README.md")) != paths.end();
            return final(found ? "yes" : "no");
        }
        if (prompt.find("file extension") != std::string::npos) {
            if (step == 0) return call("list_directory", {{"id", id}, {"prefix", "*"}, {"depth", 64}});
            // Directory names may carry dots (pH_4.0), so only leaves count as files.
            std::vector<std::string> paths;
            for (const auto& p : obs[0].value("paths", json::array())) paths.push_back(p.get<std::string>());
            std::sort(paths.begin(), paths.end());
            for (std::size_t i = 0; i < paths.size(); ++i) {
                const auto& s = paths[i];
                const bool leaf = i + 1 == paths.size() || paths[i + 1].rfind(s + "/", 0) != 0;
                const auto dot = s.rfind('.');
                if (leaf && s != "README.md" && dot != std::string::npos && s.find('/', dot) == std::string::npos)
                    return final(s.substr(dot + 1));
            }
            return final("not possible");
        }
        static const std::regex rows_re(R"re(rows of data[^"]*"([^"]+)")re");
        if (std::regex_search(prompt, m, rows_re)) {
            const std::string path = m[1].str();
            if (step == 0)
                return call("read_text_file", {{"id", id}, {"path", path}, {"head", 40}});
            if (obs[0].value("status", "") != "success") return final("not possible");
            if (step == 1) return call("read_binary_file", {{"id", id}, {"path", path}});
            if (obs[1].value("status", "") != "success") return final("not possible");
            const auto bytes = base64_decode(obs[1].value("content_base64", ""));
            const auto ext = path.substr(path.rfind('.') + 1);
            return final(static_cast<std::int64_t>(count_data_rows(bytes, ext)));
        }
        return final("not possible");
    }

private:
    AgentTurn final(const json& answer) { return {"Final answer: " + answer_json(answer), {}, {}}; }
    AgentTurn call(const std::string& tool, json args) {
        AgentTurn turn;
        turn.content = "Calling " + tool + ".";
        turn.tool_calls.push_back({"call_" + std::to_string(++calls_), tool, std::move(args)});
        return turn;
    }
    int calls_ = 0;
};

class HttpAgent : public Agent {
public:
    explicit HttpAgent(HttpAgentConfig c) : config_(std::move(c)) {}
    std::string name() const override { return config_.model; }

    AgentTurn step(const std::vector<TranscriptEntry>& transcript, const json& tools) override {
        json messages = json::array();
        for (const auto& e : transcript) {
            if (e.role == "tool") {
                messages.push_back({{"role", "tool"}, {"tool_call_id", e.tool_call_id}, {"content", e.content}});
            } else if (e.role == "assistant" && !e.tool_calls.empty()) {
                json calls = json::array();
                for (const auto& c : e.tool_calls)
                    calls.push_back({{"id", c.id},
                                     {"type", "function"},
                                     {"function", {{"name", c.name}, {"arguments", c.arguments.dump()}}}});
                messages.push_back({{"role", "assistant"}, {"content", e.content}, {"tool_calls", calls}});
            } else {
                messages.push_back({{"role", e.role}, {"content", e.content}});
            }
        }
        json fns = json::array();
        for (const auto& t : tools)
            fns.push_back({{"type", "function"},
                           {"function",
                            {{"name", t.at("name")},
                             {"description", t.value("description", "")},
                             {"parameters", t.at("inputSchema")}}}});
        const json body = {{"model", config_.model},
                           {"messages", messages},
                           {"tools", fns},
                           {"temperature", config_.temperature}};
        HttpHeaders headers;
        if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
            headers.emplace_back("Authorization", std::string("Bearer ") + key);
        const auto res = http_post(config_.base_url, config_.endpoint, body.dump(-1, ' ', false,
                                   json::error_handler_t::replace), headers, config_.timeout_seconds);
        if (res.status == 0) throw AgentUnavailable("agent endpoint unreachable: " + res.error);
        if (res.status != 200)
            throw AgentUnavailable("agent endpoint returned HTTP " + std::to_string(res.status));
        const auto reply = json::parse(res.body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("choices") || reply.at("choices").empty())
            throw AgentUnavailable("agent reply has no choices");
        const auto& msg = reply.at("choices").at(0).at("message");
        AgentTurn turn;
        if (msg.contains("content") && msg.at("content").is_string()) turn.content = msg.at("content");
        if (msg.contains("tool_calls") && msg.at("tool_calls").is_array()) {
            for (const auto& c : msg.at("tool_calls")) {
                ToolCall call;
                call.id = c.value("id", "");
                const auto& fn = c.at("function");
                call.name = fn.value("name", "");
                const std::string raw = fn.value("arguments", "{}");
                auto args = json::parse(raw, nullptr, false);
                call.arguments = args.is_discarded() ? json{{"_raw", raw}} : args;
                turn.tool_calls.push_back(std::move(call));
            }
        }
        if (reply.contains("usage") && reply.at("usage").is_object()) {
            const auto& u = reply.at("usage");
            turn.usage.prompt = u.value("prompt_tokens", 0LL);
            turn.usage.completion = u.value("completion_tokens", 0LL);
            turn.usage.total = u.value("total_tokens", turn.usage.prompt + turn.usage.completion);
        }
        return turn;
    }

private:
    HttpAgentConfig config_;
};

}  // namespace

std::unique_ptr<Agent> make_http_agent(HttpAgentConfig config) {
    return std::make_unique<HttpAgent>(std::move(config));
}
std::unique_ptr<Agent> make_abstain_agent() { return std::make_unique<AbstainAgent>(); }
std::unique_ptr<Agent> make_oracle_agent(const std::vector<QAItem>& items) {
    return std::make_unique<OracleAgent>(items);
}
std::unique_ptr<Agent> make_random_agent(std::uint64_t seed, const std::vector<QAItem>& items) {
    return std::make_unique<RandomAgent>(seed, items);
}
std::unique_ptr<Agent> make_reference_agent() { return std::make_unique<ReferenceAgent>(); }

ToolExecutor remote_tool_executor(const std::string& base_url, int timeout_seconds) {
    return [=](const std::string& tool, const json& args) -> Envelope {
        const json body = {{"tool", tool}, {"arguments", args}};
        const auto res = http_post(base_url, "/call", body.dump(), {}, timeout_seconds);
        if (res.status == 0) return error_envelope("tool server unreachable: " + res.error);
        auto env = Envelope::parse(res.body, nullptr, false);
        if (env.is_discarded()) return error_envelope("tool server returned malformed JSON");
        return env;
    };
}

// ---------------------------------------------------------------------------
// Episodes

EpisodeRecord run_episode(Agent& agent, const QAItem& item, std::size_t variant, const ToolExecutor& tools,
                          const json& tool_descriptors, const EpisodeLimits& limits) {
    const auto started = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };
    EpisodeRecord rec;
    rec.question_id = item.id;
    rec.repo_seed = item.repo_seed;
    rec.category = question_category(item.type);
    rec.type = question_type_id(item.type);
    rec.answerable = item.ground_truth.possible;
    rec.variant = static_cast<int>(variant);
    rec.variant_label = variant == 0 ? "templated" : "paraphrase:" + item.paraphrases.at(variant - 1).model_id;
    rec.agent = agent.name();
    rec.transcript.push_back({"user", episode_prompt(item, variant), {}, ""});

    for (int step = 0; step < limits.max_steps && rec.termination.empty(); ++step) {
        if (elapsed() > limits.timeout_seconds) {
            rec.termination = "timeout";
            break;
        }
        AgentTurn turn = agent.step(rec.transcript, tool_descriptors);
        rec.tokens.prompt += turn.usage.prompt;
        rec.tokens.completion += turn.usage.completion;
        rec.tokens.total += turn.usage.total;
        for (std::size_t i = 0; i < turn.tool_calls.size(); ++i)
            if (turn.tool_calls[i].id.empty())
                turn.tool_calls[i].id = "call_" + std::to_string(rec.tool_call_count + i + 1);
        rec.transcript.push_back({"assistant", turn.content, turn.tool_calls, ""});
        if (turn.tool_calls.empty()) {
            rec.termination = "answered";
            rec.extracted = extract_answer(turn.content);
            rec.grade = grade(rec.extracted, item);
            break;
        }
        for (const auto& c : turn.tool_calls) {
            if (rec.tool_call_count >= limits.max_tool_calls) {
                rec.termination = "tool-limit";
                break;
            }
            ++rec.tool_call_count;
            Envelope obs;
            try {
                obs = tools(c.name, c.arguments);
            } catch (const std::exception& e) {
                obs = error_envelope(e.what());
            }
            rec.transcript.push_back({"tool", dump_envelope(obs), {}, c.id});
        }
    }
    if (rec.termination.empty()) rec.termination = elapsed() > limits.timeout_seconds ? "timeout" : "step-limit";
    if (rec.termination != "answered") {
        rec.extracted = ExtractedAnswer{};
        rec.grade = GradeResult{};
        rec.grade.matched_rule = GradeRule::Abstention;
    }
    rec.wall_time_seconds = elapsed();
    return rec;
}

std::vector<EpisodeRecord> run_evaluation(const std::vector<QAItem>& items, const AgentFactory& agents,
                                          const ToolExecutor& tools, const json& tool_descriptors,
                                          const EpisodeLimits& limits, int parallelism) {
    std::vector<std::pair<std::size_t, std::size_t>> jobs;
    for (std::size_t i = 0; i < items.size(); ++i)
        for (std::size_t v = 0; v < items[i].variant_count(); ++v) jobs.emplace_back(i, v);
    std::vector<EpisodeRecord> out(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        auto agent = agents();
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            try {
                out[j] = run_episode(*agent, items[jobs[j].first], jobs[j].second, tools, tool_descriptors, limits);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = jobs.size();
            }
        }
    };
    const int n = std::max(1, parallelism);
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

void regrade(std::vector<EpisodeRecord>& records, const std::vector<QAItem>& items) {
    std::map<std::string, const QAItem*> by_id;
    for (const auto& item : items) by_id[item.id] = &item;
    for (auto& r : records) {
        auto it = by_id.find(r.question_id);
        if (it == by_id.end()) throw ConfigError("ledger question " + r.question_id + " is not in the batch");
        r.answerable = it->second->ground_truth.possible;
        if (r.termination != "answered") {
            r.extracted = ExtractedAnswer{};
            r.grade = GradeResult{};
            continue;
        }
        std::string final_text;
        for (auto e = r.transcript.rbegin(); e != r.transcript.rend(); ++e)
            if (e->role == "assistant") {
                final_text = e->content;
                break;
            }
        r.extracted = extract_answer(final_text);
        r.grade = grade(r.extracted, *it->second);
    }
}

// ---------------------------------------------------------------------------
// Ledger

namespace {

json calls_json(const std::vector<ToolCall>& calls) {
    json out = json::array();
    for (const auto& c : calls) out.push_back({{"id", c.id}, {"name", c.name}, {"arguments", c.arguments}});
    return out;
}

GradeRule rule_from(const std::string& s) {
    for (auto r : {GradeRule::Categorical, GradeRule::Integer, GradeRule::Continuous, GradeRule::OpenString,
                   GradeRule::Abstention})
        if (grade_rule_name(r) == s) return r;
    throw SchemaError("unknown grade rule: " + s);
}

}  // namespace

void to_json(json& j, const EpisodeRecord& r) {
    json transcript = json::array();
    for (const auto& e : r.transcript) {
        json entry = {{"role", e.role}, {"content", e.content}};
        if (!e.tool_calls.empty()) entry["tool_calls"] = calls_json(e.tool_calls);
        if (!e.tool_call_id.empty()) entry["tool_call_id"] = e.tool_call_id;
        transcript.push_back(entry);
    }
    j = {{"question_id", r.question_id},
         {"repo_seed", r.repo_seed},
         {"category", r.category},
         {"type", r.type},
         {"answerable", r.answerable},
         {"variant", r.variant},
         {"variant_label", r.variant_label},
         {"agent", r.agent},
         {"tool_call_count", r.tool_call_count},
         {"tokens", {{"prompt", r.tokens.prompt}, {"completion", r.tokens.completion}, {"total", r.tokens.total}}},
         {"answer_text", r.extracted.answer_text},
         {"extraction_mode", extraction_mode_name(r.extracted.mode)},
         {"correct", r.grade.correct},
         {"matched_rule", grade_rule_name(r.grade.matched_rule)},
         {"predicted_not_possible", r.grade.predicted_not_possible},
         {"termination", r.termination},
         {"wall_time_seconds", r.wall_time_seconds},
         {"transcript", transcript}};
}

void from_json(const json& j, EpisodeRecord& r) {
    r = EpisodeRecord{};
    r.question_id = j.at("question_id").get<std::string>();
    r.repo_seed = j.at("repo_seed").get<std::uint64_t>();
    r.category = j.at("category").get<std::string>();
    r.type = j.at("type").get<std::string>();
    r.answerable = j.at("answerable").get<bool>();
    r.variant = j.at("variant").get<int>();
    r.variant_label = j.at("variant_label").get<std::string>();
    r.agent = j.at("agent").get<std::string>();
    r.tool_call_count = j.at("tool_call_count").get<int>();
    const auto& t = j.at("tokens");
    r.tokens = {t.at("prompt").get<long long>(), t.at("completion").get<long long>(), t.at("total").get<long long>()};
    r.extracted.answer_text = j.at("answer_text").get<std::string>();
    r.extracted.mode = j.at("extraction_mode").get<std::string>() == "structured-object"
                           ? ExtractionMode::StructuredObject
                           : ExtractionMode::WholeResponse;
    r.grade.correct = j.at("correct").get<bool>();
    r.grade.matched_rule = rule_from(j.at("matched_rule").get<std::string>());
    r.grade.predicted_not_possible = j.at("predicted_not_possible").get<bool>();
    r.termination = j.at("termination").get<std::string>();
    r.wall_time_seconds = j.value("wall_time_seconds", 0.0);
    for (const auto& e : j.at("transcript")) {
        TranscriptEntry entry;
        entry.role = e.at("role").get<std::string>();
        entry.content = e.at("content").get<std::string>();
        entry.tool_call_id = e.value("tool_call_id", "");
        if (e.contains("tool_calls"))
            for (const auto& c : e.at("tool_calls"))
                entry.tool_calls.push_back({c.at("id").get<std::string>(), c.at("name").get<std::string>(),
                                            c.at("arguments")});
        r.transcript.push_back(std::move(entry));
    }
    if (static_cast<std::size_t>(r.tool_call_count) !=
        static_cast<std::size_t>(std::count_if(r.transcript.begin(), r.transcript.end(),
                                               [](const TranscriptEntry& e) { return e.role == "tool"; })))
        throw SchemaError("ledger record " + r.question_id + ": tool call count disagrees with its transcript");
}

void write_ledger(const std::vector<EpisodeRecord>& records, std::ostream& out) {
    for (const auto& r : records) out << json(r).dump(-1, ' ', false, json::error_handler_t::replace) << "\n";
}

std::vector<EpisodeRecord> read_ledger(std::istream& in) {
    std::vector<EpisodeRecord> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(json::parse(line).get<EpisodeRecord>());
    return out;
}

// ---------------------------------------------------------------------------
// Metrics

AgreementResult krippendorff_alpha(const std::vector<std::pair<std::optional<int>, std::optional<int>>>& pairs) {
    // Coincidence matrix over the two binary values; each complete unit adds
    // one count to (a, b) and one to (b, a).
    double o[2][2] = {{0, 0}, {0, 0}};
    AgreementResult r;
    for (const auto& [a, b] : pairs) {
        if (!a || !b) continue;
        if (*a < 0 || *a > 1 || *b < 0 || *b > 1) throw InvalidArgument("alpha values must be 0 or 1");
        o[*a][*b] += 1.0;
        o[*b][*a] += 1.0;
        ++r.n_pairs;
    }
    const double n = o[0][0] + o[0][1] + o[1][0] + o[1][1];
    if (n < 2) {
        r.undefined = true;
        return r;
    }
    const double n0 = o[0][0] + o[0][1];
    const double n1 = o[1][0] + o[1][1];
    r.observed = (o[0][1] + o[1][0]) / n;
    r.expected = 2.0 * n0 * n1 / (n * (n - 1.0));
    if (r.expected == 0.0) {
        r.undefined = true;
        return r;
    }
    r.alpha = 1.0 - r.observed / r.expected;
    return r;
}

namespace {

SliceMetrics slice(const std::vector<const EpisodeRecord*>& rs) {
    SliceMetrics m;
    m.n = rs.size();
    double calls = 0, tokens = 0;
    for (const auto* r : rs) {
        m.correct += r->grade.correct ? 1 : 0;
        const bool pred = r->grade.predicted_not_possible;
        if (pred && !r->answerable) ++m.tp;
        if (pred && r->answerable) ++m.fp;
        if (!pred && !r->answerable) ++m.fn;
        calls += r->tool_call_count;
        tokens += static_cast<double>(r->tokens.total);
        auto& c = m.by_category[r->category];
        auto& t = m.by_type[r->category + " / " + r->type];
        c.first += r->grade.correct ? 1 : 0;
        ++c.second;
        t.first += r->grade.correct ? 1 : 0;
        ++t.second;
    }
    if (m.n) {
        m.accuracy = static_cast<double>(m.correct) / static_cast<double>(m.n);
        m.mean_tool_calls = calls / static_cast<double>(m.n);
        m.mean_tokens = tokens / static_cast<double>(m.n);
    }
    if (m.tp + m.fp) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
    if (m.tp + m.fn) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    return m;
}

}  // namespace

MetricsReport compute_metrics(const std::vector<EpisodeRecord>& records) {
    MetricsReport report;
    std::map<std::string, std::vector<const EpisodeRecord*>> groups;
    for (const auto& r : records) {
        groups["all"].push_back(&r);
        groups[r.variant_label].push_back(&r);
    }
    for (const auto& [label, rs] : groups) report.by_variant[label] = slice(rs);

    std::map<std::string, std::map<std::string, bool>> correct;  // question -> label -> correct
    std::set<std::string> labels;
    for (const auto& r : records) {
        correct[r.question_id][r.variant_label] = r.grade.correct;
        if (r.variant_label != "templated") labels.insert(r.variant_label);
    }
    for (const auto& label : labels) {
        std::vector<std::pair<std::optional<int>, std::optional<int>>> pairs;
        for (const auto& [q, by_label] : correct) {
            std::pair<std::optional<int>, std::optional<int>> p;
            if (auto it = by_label.find("templated"); it != by_label.end()) p.first = it->second ? 1 : 0;
            if (auto it = by_label.find(label); it != by_label.end()) p.second = it->second ? 1 : 0;
            pairs.push_back(p);
        }
        report.agreement[label] = krippendorff_alpha(pairs);
    }
    return report;
}

json report_json(const MetricsReport& report) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json slices = json::object();
    for (const auto& [label, m] : report.by_variant) {
        json cats = json::object(), types = json::object();
        for (const auto& [k, v] : m.by_category) cats[k] = {{"correct", v.first}, {"n", v.second}};
        for (const auto& [k, v] : m.by_type) types[k] = {{"correct", v.first}, {"n", v.second}};
        slices[label] = {{"n", m.n},
                         {"correct", m.correct},
                         {"accuracy", m.accuracy},
                         {"unanswerable", {{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn},
                                           {"precision", opt(m.precision)}, {"recall", opt(m.recall)}}},
                         {"mean_tool_calls", m.mean_tool_calls},
                         {"mean_tokens", m.mean_tokens},
                         {"by_category", cats},
                         {"by_type", types}};
    }
    json agreement = json::object();
    for (const auto& [label, a] : report.agreement)
        agreement[label] = {{"alpha", a.undefined ? json(nullptr) : json(a.alpha)},
                            {"observed_disagreement", a.observed},
                            {"expected_disagreement", a.expected},
                            {"n_pairs", a.n_pairs},
                            {"undefined", a.undefined}};
    return {{"slices", slices}, {"agreement", agreement}};
}

std::string report_table(const MetricsReport& report) {
    std::string out;
    char buf[256];
    auto fmt = [](const std::optional<double>& v) {
        if (!v) return std::string("  n/a");
        char b[32];
        std::snprintf(b, sizeof b, "%5.3f", *v);
        return std::string(b);
    };
    std::snprintf(buf, sizeof buf, "%-28s %6s %8s %9s %6s %10s %11s\n", "variant", "n", "accuracy", "precision",
                  "recall", "tool calls", "tokens");
    out += buf;
    for (const auto& [label, m] : report.by_variant) {
        std::snprintf(buf, sizeof buf, "%-28s %6zu %8.3f %9s %6s %10.2f %11.1f\n", label.c_str(), m.n, m.accuracy,
                      fmt(m.precision).c_str(), fmt(m.recall).c_str(), m.mean_tool_calls, m.mean_tokens);
        out += buf;
    }
    if (auto it = report.by_variant.find("all"); it != report.by_variant.end()) {
        out += "\n";
        std::snprintf(buf, sizeof buf, "%-44s %8s %6s\n", "category / type", "accuracy", "n");
        out += buf;
        for (const auto& [k, v] : it->second.by_type) {
            std::snprintf(buf, sizeof buf, "%-44s %8.3f %6zu\n", k.c_str(),
                          v.second ? static_cast<double>(v.first) / static_cast<double>(v.second) : 0.0, v.second);
            out += buf;
        }
    }
    if (!report.agreement.empty()) {
        out += "\n";
        for (const auto& [label, a] : report.agreement) {
            if (a.undefined)
                std::snprintf(buf, sizeof buf, "alpha(templated, %s) undefined over %zu pairs\n", label.c_str(),
                              a.n_pairs);
            else
                std::snprintf(buf, sizeof buf, "alpha(templated, %s) = %.4f over %zu pairs\n", label.c_str(), a.alpha,
                              a.n_pairs);
            out += buf;
        }
    }
    return out;
}

}  // namespace reposim
