#pragma once

// Thin HTTP layer over cpp-httplib, kept in one translation unit.

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace reposim {

struct HttpResult {
    int status = 0;  // 0 when the transport failed
    std::string body;
    std::string error;  // transport error description
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// `base_url` is scheme://host[:port]. Never throws on transport errors.
HttpResult http_post(const std::string& base_url, const std::string& path, const std::string& body,
                     const HttpHeaders& headers, int timeout_seconds);

class HttpServer {
public:
    using Handler = std::function<std::pair<int, std::string>(const std::string& body)>;

    HttpServer();
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    void post(const std::string& path, Handler handler);
    void get(const std::string& path, Handler handler);
    /// port 0 binds any free port. Returns the bound port, or -1.
    int bind(const std::string& host, int port);
    /// Blocks until stop() is called.
    bool run();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace reposim
