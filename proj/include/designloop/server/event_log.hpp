#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace designloop::server {

enum class EventKind {
    ChatToken,
    CodePatchApplied, // provisional previews and committed patch versions
    CodeRewritten,    // committed versions not produced by edits
    ChatMessage,
    PanelEvent,     // provisional reconciliation event
    PanelCommitted, // authoritative panel after a commit or a discarded run
    TrialStateChanged,
    Error,
};

std::string_view event_kind_name(EventKind kind) noexcept;
EventKind event_kind_from_name(std::string_view name);

struct SessionEvent {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::Error;
    nlohmann::ordered_json payload;
};

nlohmann::ordered_json to_json(const SessionEvent& event);
SessionEvent session_event_from_json(const nlohmann::json& j);

// One server-sent-events message: id, event and data lines.
std::string sse_frame(const SessionEvent& event);

// Per-project event sequence with a bounded replay ring. Sequence numbers
// start at 1 and never repeat or skip.
class EventLog {
public:
    explicit EventLog(std::size_t capacity = 1024) : capacity_(capacity == 0 ? 1 : capacity) {}

    SessionEvent append(EventKind kind, nlohmann::ordered_json payload);

    struct Slice {
        bool reset = false; // events after the cursor have left the ring
        std::vector<SessionEvent> events;
        std::uint64_t last_seq = 0;
    };
    Slice after(std::uint64_t seq) const;
    std::uint64_t last_seq() const;

    // True once an event after `seq` exists; false on timeout or close.
    bool wait(std::uint64_t seq, std::chrono::milliseconds timeout) const;

    // A subscriber's private, unbounded queue: events after the cursor still
    // in the ring, then every event appended while the handle lives. A cursor
    // older than the ring sets `reset` and starts at the current end.
    struct Subscription {
        std::deque<SessionEvent> queue;
        bool reset = false;
    };
    std::shared_ptr<Subscription> subscribe(std::uint64_t after);
    // Waits until the queue is non-empty, the log closes, or the timeout
    // passes, then takes everything queued.
    std::vector<SessionEvent> drain(Subscription& sub, std::chrono::milliseconds timeout) const;
    void close();
    bool closed() const;

private:
    std::size_t capacity_;
    mutable std::mutex mutex_;
    mutable std::condition_variable cv_;
    std::deque<SessionEvent> ring_;
    std::vector<std::weak_ptr<Subscription>> subscribers_;
    std::uint64_t last_seq_ = 0;
    bool closed_ = false;
};

} // namespace designloop::server
