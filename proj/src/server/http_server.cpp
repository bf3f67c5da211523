#include "designloop/server/http_server.hpp"

#include <httplib.h>

#include "designloop/error.hpp"

namespace designloop::server {

namespace {

using nlohmann::ordered_json;

void send_json(httplib::Response& res, const ordered_json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

nlohmann::json body_json(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    auto j = nlohmann::json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
    return j;
}

std::string required_string(const nlohmann::json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw Error(ErrorCode::InvalidArgument, std::string("missing string field '") + key + "'");
    }
    return it->get<std::string>();
}

store::ArtifactKind kind_param(const std::string& s) {
    const auto kind = store::kind_from_name(s);
    if (!kind) throw Error(ErrorCode::NotFound, "unknown artifact kind '" + s + "'");
    return *kind;
}

std::uint64_t number_param(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const auto n = std::stoull(s, &used);
        if (used == s.size()) return n;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::InvalidArgument, std::string("invalid ") + what + " '" + s + "'");
}

std::string end_frame(const ordered_json& result) { return "event: end\ndata: " + result.dump() + "\n\n"; }

// Streams one operation. A failed write means the client went away, which
// cancels the operation; it still completes (and rolls back) on its own.
void stream_operation(httplib::Response& res, std::shared_ptr<Operation> op, std::chrono::milliseconds poll) {
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [op, poll](std::size_t, httplib::DataSink& sink) {
            for (const auto& e : op->next_events(poll)) {
                const std::string frame = sse_frame(e);
                if (!sink.write(frame.data(), frame.size())) {
                    op->cancel();
                    return false;
                }
            }
            if (op->exhausted()) {
                const std::string frame = end_frame(op->wait());
                sink.write(frame.data(), frame.size());
                sink.done();
            } else if (!sink.is_writable()) {
                op->cancel();
                return false;
            }
            return true;
        },
        [op](bool success) {
            if (!success) op->cancel();
        });
}

} // namespace

int http_status(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::NotFound:
        return 404;
    case ErrorCode::Conflict:
    case ErrorCode::InvalidState:
        return 409;
    case ErrorCode::InvalidArgument:
    case ErrorCode::Parse:
        return 400;
    default:
        return 500;
    }
}

HttpServer::HttpServer(Service& service, std::chrono::milliseconds poll)
    : service_(service), poll_(poll), server_(std::make_unique<httplib::Server>()) {
    routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw Error(ErrorCode::Storage, "cannot bind " + host + ":" + std::to_string(port));
    return port_;
}

void HttpServer::run() { server_->listen_after_bind(); }

void HttpServer::start() {
    thread_ = std::thread([this] { run(); });
    server_->wait_until_ready();
}

void HttpServer::stop() {
    service_.shutdown();
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

void HttpServer::routes() {
    auto& s = *server_;
    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const Error& e) {
            send_json(res, {{"error", e.what()}, {"code", error_code_name(e.code())}}, http_status(e.code()));
        } catch (const std::exception& e) {
            send_json(res, {{"error", e.what()}, {"code", "Internal"}}, 500);
        }
    });

    s.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, {{"ok", true}}); });

    s.Post("/projects", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_json(req);
        std::optional<std::string> code;
        if (const auto it = body.find("code"); it != body.end() && !it->is_null()) {
            if (!it->is_string()) throw Error(ErrorCode::InvalidArgument, "field 'code' must be a string");
            code = it->get<std::string>();
        }
        send_json(res, service_.create_project(required_string(body, "id"), std::move(code)), 201);
    });
    s.Get("/projects", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, {{"projects", service_.list_projects()}});
    });
    s.Get(R"(/projects/([^/]+)/state)", [this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, service_.state(req.matches[1]));
    });
    s.Get(R"(/projects/([^/]+)/versions/([a-z]+))", [this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, {{"versions", service_.versions(req.matches[1], kind_param(req.matches[2]))}});
    });
    s.Get(R"(/projects/([^/]+)/versions/([a-z]+)/([^/]+))",
          [this](const httplib::Request& req, httplib::Response& res) {
              send_json(res, service_.version(req.matches[1], kind_param(req.matches[2]),
                                              number_param(req.matches[3], "version")));
          });
    s.Get(R"(/projects/([^/]+)/llm-log)", [this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, {{"exchanges", service_.llm_log(req.matches[1])}});
    });
    s.Put(R"(/projects/([^/]+)/code)", [this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, service_.put_code(req.matches[1], required_string(body_json(req), "content")));
    });

    s.Post(R"(/projects/([^/]+)/chat)", [this](const httplib::Request& req, httplib::Response& res) {
        stream_operation(res, service_.start_chat(req.matches[1], required_string(body_json(req), "message")), poll_);
    });
    s.Post(R"(/projects/([^/]+)/trials)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_json(req);
        stream_operation(res,
                         service_.start_trial(req.matches[1], required_string(body, "item_id"),
                                              required_string(body, "alternative_id")),
                         poll_);
    });
    s.Post(R"(/projects/([^/]+)/trials/([^/]+)/revert)", [this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, service_.revert(req.matches[1], req.matches[2]));
    });
    s.Post(R"(/projects/([^/]+)/trials/([^/]+)/commit)", [this](const httplib::Request& req, httplib::Response& res) {
        stream_operation(res, service_.start_commit(req.matches[1], req.matches[2]), poll_);
    });

    // Replay and live tail. Without follow=1 the response ends after the
    // retained events; a cursor older than the ring gets a `reset` message
    // telling the client to refetch the state.
    s.Get(R"(/projects/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
        EventLog& log = service_.events(req.matches[1]);
        const std::uint64_t after = req.has_param("after") ? number_param(req.get_param_value("after"), "cursor") : 0;
        const bool follow = req.get_param_value("follow") == "1";
        auto sub = log.subscribe(after);
        res.set_header("Cache-Control", "no-cache");
        if (!follow) {
            std::string body;
            if (sub->reset) {
                body = "event: reset\ndata: " + ordered_json{{"last_seq", log.last_seq()}}.dump() + "\n\n";
            } else {
                for (const auto& e : log.drain(*sub, std::chrono::milliseconds(0))) body += sse_frame(e);
            }
            res.set_content(body, "text/event-stream");
            return;
        }
        res.set_chunked_content_provider("text/event-stream", [&log, sub, poll = poll_](std::size_t,
                                                                                         httplib::DataSink& sink) {
            if (sub->reset) {
                sub->reset = false;
                const std::string frame =
                    "event: reset\ndata: " + ordered_json{{"last_seq", log.last_seq()}}.dump() + "\n\n";
                if (!sink.write(frame.data(), frame.size())) return false;
            }
            for (const auto& e : log.drain(*sub, poll)) {
                const std::string frame = sse_frame(e);
                if (!sink.write(frame.data(), frame.size())) return false;
            }
            if (log.closed()) {
                sink.done();
                return true;
            }
            return sink.is_writable();
        });
    });
}

} // namespace designloop::server
