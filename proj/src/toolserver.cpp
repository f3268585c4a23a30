#include "reposim/toolserver.hpp"

#include <openssl/evp.h>

#include <istream>
#include <ostream>
#include <thread>

#include "reposim/errors.hpp"
#include "reposim/materializer.hpp"
#include "reposim/net.hpp"

namespace reposim {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Envelopes and encodings

namespace {

void dump_into(const Envelope& e, std::string& out) {
    switch (e.type()) {
        case Envelope::value_t::object: {
            out += '{';
            bool first = true;
            for (auto it = e.begin(); it != e.end(); ++it) {
                if (!first) out += ", ";
                first = false;
                out += Envelope(it.key()).dump(-1, ' ', true, json::error_handler_t::replace);
                out += ": ";
                dump_into(it.value(), out);
            }
            out += '}';
            return;
        }
        case Envelope::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < e.size(); ++i) {
                if (i) out += ", ";
                dump_into(e[i], out);
            }
            out += ']';
            return;
        }
        default: out += e.dump(-1, ' ', true, json::error_handler_t::replace);
    }
}

}  // namespace

std::string dump_envelope(const Envelope& e) {
    std::string out;
    dump_into(e, out);
    return out;
}

Envelope error_envelope(const std::string& message) {
    Envelope e;
    e["status"] = "error";
    e["message"] = message;
    return e;
}

std::string base64_encode(std::string_view bytes) {
    if (bytes.empty()) return "";
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string base64_decode(std::string_view text) {
    if (text.empty()) return "";
    if (text.size() % 4 != 0) throw InvalidArgument("base64 length is not a multiple of 4");
    std::string out(3 * text.size() / 4, '\0');
    const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw InvalidArgument("malformed base64");
    std::size_t pad = 0;
    if (text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

std::string utf8_replace_invalid(std::string_view b) {
    static const std::string replacement = "\xEF\xBF\xBD";
    std::string out;
    out.reserve(b.size());
    std::size_t i = 0;
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(b[k]); };
    while (i < b.size()) {
        const unsigned char c = byte(i);
        if (c < 0x80) {
            out += static_cast<char>(c);
            ++i;
            continue;
        }
        std::size_t len = 0;
        unsigned char lo = 0x80, hi = 0xBF;
        if (c >= 0xC2 && c <= 0xDF) len = 2;
        else if (c >= 0xE0 && c <= 0xEF) {
            len = 3;
            if (c == 0xE0) lo = 0xA0;
            if (c == 0xED) hi = 0x9F;
        } else if (c >= 0xF0 && c <= 0xF4) {
            len = 4;
            if (c == 0xF0) lo = 0x90;
            if (c == 0xF4) hi = 0x8F;
        }
        if (len == 0) {
            out += replacement;
            ++i;
            continue;
        }
        // Maximal valid prefix of a sequence becomes one replacement character.
        std::size_t k = 1;
        for (; k < len && i + k < b.size(); ++k) {
            const unsigned char t = byte(i + k);
            const unsigned char l = k == 1 ? lo : 0x80;
            const unsigned char h = k == 1 ? hi : 0xBF;
            if (t < l || t > h) break;
        }
        if (k == len) out.append(b.substr(i, len));
        else out += replacement;
        i += k;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Service

ToolService::ToolService(std::shared_ptr<const Taxonomy> taxonomy, BuildParams params,
                         std::shared_ptr<Generator> generator)
    : taxonomy_(std::move(taxonomy)), params_(std::move(params)), generator_(std::move(generator)) {
    validate_build_params(params_);
}

std::shared_ptr<const RepositorySpec> ToolService::spec(std::uint64_t id) {
    std::shared_ptr<Slot> slot;
    {
        std::lock_guard lock(slots_mutex_);
        auto& s = slots_[id];
        if (!s) s = std::make_shared<Slot>();
        slot = s;
    }
    std::call_once(slot->once, [&] {
        ++spec_constructions_;
        try {
            slot->spec = std::make_shared<const RepositorySpec>(
                build_repository_spec(id, *taxonomy_, params_, *generator_));
        } catch (const std::exception& e) {
            slot->error = e.what();
        }
    });
    if (!slot->spec) throw Error("repository " + std::to_string(id) + " could not be generated: " + slot->error);
    return slot->spec;
}

Envelope ToolService::list_directory(std::uint64_t id, const std::string& prefix, int depth) {
    const auto s = spec(id);
    Envelope e;
    e["status"] = "success";
    e["paths"] = vfs_list(*s, prefix, depth);
    return e;
}

Envelope ToolService::read_text_file(std::uint64_t id, const std::string& path,
                                     std::optional<long long> head, std::optional<long long> tail) {
    const auto s = spec(id);
    Envelope e;
    e["status"] = "success";
    e["file_content"] = truncate_lines(utf8_replace_invalid(vfs_file_bytes(*s, path)), head, tail);
    return e;
}

Envelope ToolService::read_binary_file(std::uint64_t id, const std::string& path) {
    const auto s = spec(id);
    Envelope e;
    e["status"] = "success";
    e["content_base64"] = base64_encode(vfs_file_bytes(*s, path));
    e["mime_type"] = mime_type_for(path);
    return e;
}

namespace {

std::uint64_t id_argument(const json& args) {
    if (!args.contains("id")) throw InvalidArgument("missing required argument: id");
    const auto& v = args.at("id");
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        if (v.get<std::int64_t>() < 0) throw InvalidArgument("id must be a non-negative integer");
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    if (v.is_string() && is_decimal_integer(v.get<std::string>())) {
        try {
            return std::stoull(v.get<std::string>());
        } catch (const std::exception&) {
        }
    }
    throw InvalidArgument("id must be a non-negative integer");
}

std::string string_argument(const json& args, const char* name, std::optional<std::string> fallback) {
    if (!args.contains(name) || args.at(name).is_null()) {
        if (fallback) return *fallback;
        throw InvalidArgument(std::string("missing required argument: ") + name);
    }
    if (!args.at(name).is_string()) throw InvalidArgument(std::string(name) + " must be a string");
    return args.at(name).get<std::string>();
}

std::optional<long long> int_argument(const json& args, const char* name) {
    if (!args.contains(name) || args.at(name).is_null()) return std::nullopt;
    const auto& v = args.at(name);
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>())
        return static_cast<long long>(v.get<double>());
    throw InvalidArgument(std::string(name) + " must be an integer");
}

json base_descriptors() {
    const json id = {{"type", "integer"}, {"minimum", 0}, {"description", "Repository id"}};
    return json::array(
        {{{"name", "list_directory"},
          {"description",
           "List files and directories under a prefix. The prefix accepts the wildcards * and ?. "
           "depth is the number of levels listed below the prefix."},
          {"inputSchema",
           {{"type", "object"},
            {"properties",
             {{"id", id},
              {"prefix", {{"type", "string"}, {"default", ""}}},
              {"depth", {{"type", "integer"}, {"minimum", 1}, {"default", 1}}}}},
            {"required", {"id", "prefix"}}}}},
         {{"name", "read_text_file"},
          {"description",
           "Read a file as text. head keeps the first N lines, tail the last N lines."},
          {"inputSchema",
           {{"type", "object"},
            {"properties",
             {{"id", id},
              {"path", {{"type", "string"}}},
              {"head", {{"type", "integer"}, {"minimum", 0}}},
              {"tail", {{"type", "integer"}, {"minimum", 0}}}}},
            {"required", {"id", "path"}}}}},
         {{"name", "read_binary_file"},
          {"description", "Read a file as Base64 together with its MIME type."},
          {"inputSchema",
           {{"type", "object"},
            {"properties", {{"id", id}, {"path", {{"type", "string"}}}}},
            {"required", {"id", "path"}}}}}});
}

}  // namespace

Envelope ToolService::call(const std::string& tool, const json& arguments) {
    ++tool_calls_;
    try {
        const json args = arguments.is_null() ? json::object() : arguments;
        if (!args.is_object()) throw InvalidArgument("arguments must be an object");
        if (tool == "list_directory") {
            const auto depth = int_argument(args, "depth").value_or(1);
            if (depth < 1 || depth > 1'000'000) throw InvalidArgument("depth must be at least 1");
            return list_directory(id_argument(args), string_argument(args, "prefix", ""),
                                  static_cast<int>(depth));
        }
        if (tool == "read_text_file")
            return read_text_file(id_argument(args), string_argument(args, "path", std::nullopt),
                                  int_argument(args, "head"), int_argument(args, "tail"));
        if (tool == "read_binary_file")
            return read_binary_file(id_argument(args), string_argument(args, "path", std::nullopt));
        ExternalHandler handler;
        {
            std::lock_guard lock(external_mutex_);
            auto it = external_.find(tool);
            if (it != external_.end()) handler = it->second.handler;
        }
        if (handler) return handler(args);
        return error_envelope("unknown tool: " + tool);
    } catch (const std::exception& e) {
        return error_envelope(e.what());
    }
}

void ToolService::register_tool(const std::string& name, json input_schema, std::string description,
                                ExternalHandler handler) {
    if (name == "list_directory" || name == "read_text_file" || name == "read_binary_file")
        throw ConfigError("tool name is reserved: " + name);
    std::lock_guard lock(external_mutex_);
    external_[name] = {std::move(input_schema), std::move(description), std::move(handler)};
}

json ToolService::tool_descriptors() const {
    json tools = base_descriptors();
    std::lock_guard lock(external_mutex_);
    for (const auto& [name, ext] : external_)
        tools.push_back({{"name", name}, {"description", ext.description}, {"inputSchema", ext.schema}});
    return tools;
}

ToolService::ExternalHandler python_passthrough(const std::string& base_url, const std::string& endpoint,
                                                ExternalToolLimits limits) {
    return [=](const json& args) -> Envelope {
        if (!args.contains("code") || !args.at("code").is_string())
            return error_envelope("missing required argument: code");
        const json body = {{"code", args.at("code")},
                           {"limits",
                            {{"timeout_seconds", limits.timeout_seconds},
                             {"memory_mb", limits.memory_mb}}}};
        const auto res = http_post(base_url, endpoint, body.dump(), {}, limits.timeout_seconds + 5);
        if (res.status == 0) return error_envelope("code interpreter unavailable: " + res.error);
        if (res.status != 200)
            return error_envelope("code interpreter returned HTTP " + std::to_string(res.status));
        auto parsed = Envelope::parse(res.body, nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object() && parsed.contains("status")) return parsed;
        Envelope e;
        e["status"] = "success";
        e["output"] = res.body;
        return e;
    };
}

// ---------------------------------------------------------------------------
// MCP-style JSON-RPC

namespace {

json rpc_error(const json& id, int code, const std::string& message) {
    return {{"jsonrpc", "2.0"}, {"id", id}, {"error", {{"code", code}, {"message", message}}}};
}

json rpc_result(const json& id, json result) {
    return {{"jsonrpc", "2.0"}, {"id", id}, {"result", std::move(result)}};
}

}  // namespace

json handle_mcp_message(ToolService& service, const json& message) {
    if (!message.is_object() || !message.contains("method") || !message.at("method").is_string())
        return rpc_error(message.is_object() ? message.value("id", json()) : json(), -32600,
                         "invalid request");
    const std::string method = message.at("method").get<std::string>();
    const bool notification = !message.contains("id");
    const json id = message.value("id", json());
    const json params = message.value("params", json::object());
    if (notification) return nullptr;
    if (method == "initialize")
        return rpc_result(id, {{"protocolVersion", "2024-11-05"},
                               {"capabilities", {{"tools", json::object()}}},
                               {"serverInfo", {{"name", "reposim"}, {"version", "1.0.0"}}}});
    if (method == "ping") return rpc_result(id, json::object());
    if (method == "tools/list") return rpc_result(id, {{"tools", service.tool_descriptors()}});
    if (method == "tools/call") {
        if (!params.is_object() || !params.contains("name") || !params.at("name").is_string())
            return rpc_error(id, -32602, "tools/call needs a tool name");
        const auto env = service.call(params.at("name").get<std::string>(),
                                      params.value("arguments", json::object()));
        const bool is_error = env.value("status", "") == "error";
        return rpc_result(id, {{"content", json::array({{{"type", "text"}, {"text", dump_envelope(env)}}})},
                               {"isError", is_error}});
    }
    return rpc_error(id, -32601, "method not found: " + method);
}

void serve_stdio(ToolService& service, std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto msg = json::parse(line, nullptr, false);
        const json reply = msg.is_discarded() ? rpc_error(nullptr, -32700, "parse error")
                                              : handle_mcp_message(service, msg);
        if (reply.is_null()) continue;
        out << reply.dump(-1, ' ', true, json::error_handler_t::replace) << "\n";
        out.flush();
    }
}

// ---------------------------------------------------------------------------
// HTTP

struct ToolHttpServer::Impl {
    ToolService& service;
    HttpServer http;
    std::thread thread;
    explicit Impl(ToolService& s) : service(s) {}
};

ToolHttpServer::ToolHttpServer(ToolService& service) : impl_(std::make_unique<Impl>(service)) {
    auto& svc = impl_->service;
    impl_->http.post("/call", [&svc](const std::string& body) -> std::pair<int, std::string> {
        const auto req = json::parse(body, nullptr, false);
        if (req.is_discarded() || !req.is_object() || !req.contains("tool") || !req.at("tool").is_string())
            return {400, dump_envelope(error_envelope(
                             "request body must be {\"tool\": name, \"arguments\": {...}}"))};
        return {200, dump_envelope(svc.call(req.at("tool").get<std::string>(),
                                            req.value("arguments", json::object())))};
    });
    impl_->http.post("/mcp", [&svc](const std::string& body) -> std::pair<int, std::string> {
        const auto msg = json::parse(body, nullptr, false);
        if (msg.is_discarded()) return {200, rpc_error(nullptr, -32700, "parse error").dump()};
        const auto reply = handle_mcp_message(svc, msg);
        if (reply.is_null()) return {202, ""};
        return {200, reply.dump(-1, ' ', true, json::error_handler_t::replace)};
    });
    impl_->http.get("/tools", [&svc](const std::string&) -> std::pair<int, std::string> {
        return {200, json{{"tools", svc.tool_descriptors()}}.dump()};
    });
    impl_->http.get("/health", [](const std::string&) -> std::pair<int, std::string> {
        return {200, "{\"status\": \"ok\"}"};
    });
}

ToolHttpServer::~ToolHttpServer() { stop(); }

int ToolHttpServer::bind(const std::string& host, int port) {
    const int bound = impl_->http.bind(host, port);
    if (bound < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void ToolHttpServer::run() { impl_->http.run(); }

void ToolHttpServer::start() {
    impl_->thread = std::thread([this] { impl_->http.run(); });
    impl_->http.wait_until_ready();
}

void ToolHttpServer::stop() {
    impl_->http.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace reposim
