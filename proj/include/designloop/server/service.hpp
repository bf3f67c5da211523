#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "designloop/agents/agents.hpp"
#include "designloop/server/event_log.hpp"
#include "designloop/store/artifact_store.hpp"

namespace designloop::server {

struct ServiceOptions {
    agents::AgentConfig agents;
    std::size_t event_ring = 1024;
    std::function<std::int64_t()> clock = store::system_clock_ms; // timestamps of logged exchanges
};

class Session;

// A long-running mutation (chat turn, trial, commit) executing on its own
// thread while holding the project's turn lease. Its events are the ones in
// the project log with seq > start_seq(), up to the point done() turns true.
class Operation {
public:
    ~Operation();
    Operation(const Operation&) = delete;
    Operation& operator=(const Operation&) = delete;

    std::uint64_t start_seq() const noexcept { return start_seq_; }
    EventLog& log() noexcept { return log_; }

    // Events of this operation in seq order, then an empty vector once it
    // finished and everything was taken. Single consumer.
    std::vector<SessionEvent> next_events(std::chrono::milliseconds timeout);
    bool exhausted() const;

    void cancel() noexcept { stop_.request_stop(); }
    bool done() const;
    // Blocks until the operation finished and returns its result object:
    // {"ok", "error"?, ...operation fields, "last_seq"}.
    nlohmann::ordered_json wait();

private:
    friend class Service;
    Operation(EventLog& log, std::uint64_t start_seq) : log_(log), start_seq_(start_seq), delivered_(start_seq) {}
    void finish(nlohmann::ordered_json result);

    EventLog& log_;
    std::uint64_t start_seq_;
    std::stop_source stop_;
    std::shared_ptr<EventLog::Subscription> subscription_;
    std::uint64_t delivered_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::optional<nlohmann::ordered_json> result_;
    std::jthread thread_;
};

// Transport-independent API. Mutations on one project are serialized by its
// turn lease: a request that finds the lease taken fails with Conflict and
// leaves no version or event behind.
class Service {
public:
    Service(store::ArtifactStore& store, agents::LlmProvider& provider, ServiceOptions options = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    nlohmann::ordered_json create_project(const std::string& id, std::optional<std::string> initial_code);
    nlohmann::ordered_json list_projects() const;
    // {"project", "code", "panel", "transcript", "trial", "last_seq"}
    nlohmann::ordered_json state(const std::string& id);
    nlohmann::ordered_json versions(const std::string& id, store::ArtifactKind kind);
    // {"meta", "content"} for code; {"meta", "panel"} for panels.
    nlohmann::ordered_json version(const std::string& id, store::ArtifactKind kind, std::uint64_t n);

    nlohmann::ordered_json put_code(const std::string& id, std::string content);
    nlohmann::ordered_json revert(const std::string& id, const std::string& trial_id);

    std::shared_ptr<Operation> start_chat(const std::string& id, const std::string& message);
    std::shared_ptr<Operation> start_trial(const std::string& id, const std::string& item_id,
                                           const std::string& alternative_id);
    std::shared_ptr<Operation> start_commit(const std::string& id, const std::string& trial_id);

    EventLog& events(const std::string& id);
    nlohmann::ordered_json llm_log(const std::string& id);

    // Provider calls made and exchanges logged since construction.
    std::size_t provider_calls() const noexcept { return recorder_.sends(); }
    std::size_t exchanges_logged() const noexcept { return logged_.load(); }

    // Cancels running operations and closes every event log.
    void shutdown();

private:
    Session& session(const std::string& id);
    std::shared_ptr<Operation> launch(Session& s, std::function<nlohmann::ordered_json(std::stop_token)> body,
                                      std::unique_ptr<design::TurnLease> lease,
                                      std::optional<std::uint64_t> start_seq = std::nullopt);

    store::ArtifactStore& store_;
    ServiceOptions options_;
    std::mutex log_mutex_;
    std::atomic<std::size_t> logged_{0};
    agents::RecordingProvider recorder_;
    agents::Coordinator coordinator_;

    std::mutex sessions_mutex_;
    std::map<std::string, std::unique_ptr<Session>> sessions_;
    std::vector<std::shared_ptr<Operation>> operations_;
    bool shut_down_ = false;
};

// Applies a SessionEvent to a client-side mirror of get_state: the committed
// kinds (code versions, messages, panel commits, trial changes) are enough to
// reconstruct the state; provisional kinds leave the mirror unchanged.
nlohmann::ordered_json empty_mirror(const std::string& project);
void apply_session_event(nlohmann::ordered_json& mirror, const SessionEvent& event);

} // namespace designloop::server
