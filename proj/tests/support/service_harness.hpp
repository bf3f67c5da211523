#pragma once

#include <gtest/gtest.h>

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "designloop/agents/scripted_provider.hpp"
#include "designloop/error.hpp"
#include "designloop/server/service.hpp"
#include "temp_dir.hpp"

namespace harness {

using namespace designloop;

inline std::int64_t fixed_clock() { return 1700000000000; }

// Provider that holds every call until released (or cancelled), then
// forwards to an inner provider.
class HoldingProvider : public agents::LlmProvider {
public:
    explicit HoldingProvider(agents::LlmProvider& inner) : inner_(inner) {}
    std::string identity() const override { return inner_.identity(); }
    void send(const agents::PromptBundle& request, const agents::ChunkSink& sink, std::stop_token stop) override {
        {
            std::unique_lock lock(mutex_);
            ++calls_;
            ++waiting_;
            cv_.notify_all();
            while (!released_ && !stop.stop_requested()) cv_.wait_for(lock, std::chrono::milliseconds(5));
            --waiting_;
            if (!released_) throw Error(ErrorCode::Cancelled, "cancelled");
        }
        inner_.send(request, sink, stop);
    }
    void wait_until_held() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return waiting_ > 0; });
    }
    std::size_t calls() {
        std::lock_guard lock(mutex_);
        return calls_;
    }
    void release() {
        std::lock_guard lock(mutex_);
        released_ = true;
        cv_.notify_all();
    }

private:
    agents::LlmProvider& inner_;
    std::mutex mutex_;
    std::condition_variable cv_;
    int waiting_ = 0;
    std::size_t calls_ = 0;
    bool released_ = false;
};

// A service over a fresh store and a scripted provider. On destruction it
// checks that every provider call was logged exactly once.
class ServiceHarness {
public:
    explicit ServiceHarness(std::string_view script, bool hold = false, server::ServiceOptions options = {})
        : store_(dir_.path() / "store", fixed_clock),
          script_(agents::parse_script(script)),
          holding_(script_),
          held_(hold),
          service_(std::make_unique<server::Service>(store_, held_ ? static_cast<agents::LlmProvider&>(holding_)
                                                                   : static_cast<agents::LlmProvider&>(script_),
                                                     with_clock(std::move(options)))) {}

    ~ServiceHarness() {
        const std::size_t logged = service_->exchanges_logged();
        service_.reset();
        EXPECT_EQ(logged, held_ ? holding_.calls() : script_.calls()) << "every provider call is logged once";
    }

    server::Service& service() { return *service_; }
    agents::ScriptedProvider& script() { return script_; }
    HoldingProvider& holding() { return holding_; }
    store::ArtifactStore& store() { return store_; }
    const std::filesystem::path& root() const { return dir_.path(); }

    std::vector<server::SessionEvent> events(const std::string& id) {
        return service_->events(id).after(0).events;
    }

    nlohmann::ordered_json replay(const std::string& id) {
        auto mirror = server::empty_mirror(id);
        for (const auto& e : events(id)) server::apply_session_event(mirror, e);
        return mirror;
    }

    std::vector<server::SessionEvent> run(const std::shared_ptr<server::Operation>& op,
                                         nlohmann::ordered_json* result = nullptr) {
        auto r = op->wait();
        if (result) *result = r;
        std::vector<server::SessionEvent> out;
        for (const auto& e : service_->events(current_).after(op->start_seq()).events) {
            if (e.seq <= r.at("last_seq").get<std::uint64_t>()) out.push_back(e);
        }
        return out;
    }

    // Project targeted by run(); set by the tests.
    void use(std::string id) { current_ = std::move(id); }

private:
    static server::ServiceOptions with_clock(server::ServiceOptions o) {
        o.clock = [] { return std::int64_t{0}; };
        return o;
    }

    TempDir dir_{"service"};
    store::ArtifactStore store_;
    agents::ScriptedProvider script_;
    HoldingProvider holding_;
    bool held_;
    std::unique_ptr<server::Service> service_;
    std::string current_;
};

inline std::vector<std::string> kinds(const std::vector<server::SessionEvent>& events) {
    std::vector<std::string> out;
    for (const auto& e : events) {
        const std::string k(server::event_kind_name(e.kind));
        if (out.empty() || out.back() != k) out.push_back(k);
    }
    return out;
}

inline std::size_t count_kind(const std::vector<server::SessionEvent>& events, server::EventKind kind) {
    std::size_t n = 0;
    for (const auto& e : events) n += e.kind == kind;
    return n;
}

} // namespace harness
