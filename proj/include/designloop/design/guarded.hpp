#pragma once

#include <atomic>
#include <mutex>
#include <shared_mutex>
#include <utility>

#include "designloop/design/project.hpp"

namespace designloop::design {

// Single-writer wrapper: mutations run under an exclusive lock, reads under a
// shared one. A separate turn lease marks a long-running chat turn or trial so
// that other mutating requests can be rejected instead of queued.
class GuardedProject {
public:
    explicit GuardedProject(Project project) : project_(std::move(project)) {}

    template <class F>
    decltype(auto) read(F&& f) const {
        std::shared_lock lock(mutex_);
        return std::forward<F>(f)(static_cast<const Project&>(project_));
    }

    template <class F>
    decltype(auto) write(F&& f) {
        std::unique_lock lock(mutex_);
        return std::forward<F>(f)(project_);
    }

    bool try_acquire_turn() noexcept { return !turn_.exchange(true); }
    void release_turn() noexcept { turn_.store(false); }
    bool turn_in_flight() const noexcept { return turn_.load(); }

private:
    mutable std::shared_mutex mutex_;
    Project project_;
    std::atomic<bool> turn_{false};
};

class TurnLease {
public:
    explicit TurnLease(GuardedProject& project) : project_(&project), held_(project.try_acquire_turn()) {}
    TurnLease(const TurnLease&) = delete;
    TurnLease& operator=(const TurnLease&) = delete;
    ~TurnLease() {
        if (held_) project_->release_turn();
    }

    explicit operator bool() const noexcept { return held_; }

private:
    GuardedProject* project_;
    bool held_;
};

} // namespace designloop::design
