#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <thread>

#include "designloop/error.hpp"
#include "designloop/server/service.hpp"

namespace httplib {
class Server;
}

namespace designloop::server {

// HTTP status for an error code: NotFound 404, Conflict and InvalidState 409,
// InvalidArgument and Parse 400, everything else 500.
int http_status(ErrorCode code) noexcept;

// JSON over HTTP for requests and responses; chat, trial and commit respond
// with a server-sent-event stream of the operation's session events followed
// by one `end` message carrying the operation result.
class HttpServer {
public:
    explicit HttpServer(Service& service, std::chrono::milliseconds poll = std::chrono::milliseconds(100));
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    void run();   // blocks until stop()
    void start(); // runs on a background thread
    // Shuts the service down (ending open streams) and stops listening.
    void stop();
    int port() const noexcept { return port_; }

private:
    void routes();

    Service& service_;
    std::chrono::milliseconds poll_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = -1;
};

} // namespace designloop::server
