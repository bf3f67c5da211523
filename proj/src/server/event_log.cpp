#include "designloop/server/event_log.hpp"

#include <array>

#include "designloop/error.hpp"

namespace designloop::server {

namespace {

constexpr std::array<std::string_view, 8> kKinds{"chat_token",     "code_patch_applied", "code_rewritten",
                                                 "chat_message",   "panel_event",        "panel_committed",
                                                 "trial_state_changed", "error"};

} // namespace

std::string_view event_kind_name(EventKind kind) noexcept { return kKinds[static_cast<std::size_t>(kind)]; }

EventKind event_kind_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kKinds.size(); ++i) {
        if (kKinds[i] == name) return static_cast<EventKind>(i);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown event kind '" + std::string(name) + "'");
}

nlohmann::ordered_json to_json(const SessionEvent& event) {
    nlohmann::ordered_json j;
    j["seq"] = event.seq;
    j["kind"] = event_kind_name(event.kind);
    j["payload"] = event.payload;
    return j;
}

SessionEvent session_event_from_json(const nlohmann::json& j) {
    SessionEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.kind = event_kind_from_name(j.at("kind").get<std::string>());
    e.payload = j.at("payload");
    return e;
}

std::string sse_frame(const SessionEvent& event) {
    return "id: " + std::to_string(event.seq) + "\nevent: " + std::string(event_kind_name(event.kind)) +
           "\ndata: " + to_json(event).dump() + "\n\n";
}

SessionEvent EventLog::append(EventKind kind, nlohmann::ordered_json payload) {
    std::lock_guard lock(mutex_);
    SessionEvent e{++last_seq_, kind, std::move(payload)};
    ring_.push_back(e);
    if (ring_.size() > capacity_) ring_.pop_front();
    std::erase_if(subscribers_, [&](const std::weak_ptr<Subscription>& w) {
        auto sub = w.lock();
        if (sub) sub->queue.push_back(e);
        return !sub;
    });
    cv_.notify_all();
    return e;
}

EventLog::Slice EventLog::after(std::uint64_t seq) const {
    std::lock_guard lock(mutex_);
    Slice s;
    s.last_seq = last_seq_;
    if (seq >= last_seq_) return s;
    if (ring_.empty() || seq + 1 < ring_.front().seq) {
        s.reset = true;
        return s;
    }
    for (auto it = ring_.begin() + static_cast<std::ptrdiff_t>(seq + 1 - ring_.front().seq); it != ring_.end(); ++it) {
        s.events.push_back(*it);
    }
    return s;
}

std::uint64_t EventLog::last_seq() const {
    std::lock_guard lock(mutex_);
    return last_seq_;
}

bool EventLog::wait(std::uint64_t seq, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || last_seq_ > seq; });
    return last_seq_ > seq;
}

std::shared_ptr<EventLog::Subscription> EventLog::subscribe(std::uint64_t after) {
    std::lock_guard lock(mutex_);
    auto sub = std::make_shared<Subscription>();
    if (after < last_seq_) {
        if (ring_.empty() || after + 1 < ring_.front().seq) {
            sub->reset = true;
        } else {
            sub->queue.assign(ring_.begin() + static_cast<std::ptrdiff_t>(after + 1 - ring_.front().seq), ring_.end());
        }
    }
    subscribers_.push_back(sub);
    return sub;
}

std::vector<SessionEvent> EventLog::drain(Subscription& sub, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || !sub.queue.empty(); });
    std::vector<SessionEvent> out(sub.queue.begin(), sub.queue.end());
    sub.queue.clear();
    return out;
}

void EventLog::close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    cv_.notify_all();
}

bool EventLog::closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
}

} // namespace designloop::server
