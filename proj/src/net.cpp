#include "reposim/net.hpp"

#include "httplib.h"

namespace reposim {

HttpResult http_post(const std::string& base_url, const std::string& path, const std::string& body,
                     const HttpHeaders& headers, int timeout_seconds) {
    HttpResult out;
    try {
        httplib::Client client(base_url);
        client.set_connection_timeout(timeout_seconds, 0);
        client.set_read_timeout(timeout_seconds, 0);
        client.set_write_timeout(timeout_seconds, 0);
        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);
        auto res = client.Post(path, h, body, "application/json");
        if (!res) {
            out.error = httplib::to_string(res.error());
            return out;
        }
        out.status = res->status;
        out.body = res->body;
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer() : impl_(std::make_unique<Impl>()) {}
HttpServer::~HttpServer() { stop(); }

namespace {

httplib::Server::Handler wrap(HttpServer::Handler handler) {
    return [handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
        auto [status, body] = handler(req.body);
        res.status = status;
        res.set_content(body, "application/json");
    };
}

}  // namespace

void HttpServer::post(const std::string& path, Handler handler) {
    impl_->server.Post(path, wrap(std::move(handler)));
}

void HttpServer::get(const std::string& path, Handler handler) {
    impl_->server.Get(path, wrap(std::move(handler)));
}

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::run() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace reposim
