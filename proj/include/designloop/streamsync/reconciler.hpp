#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "designloop/design/panel.hpp"
#include "designloop/streamsync/events.hpp"
#include "designloop/streamsync/partial_tree.hpp"

namespace designloop::streamsync {

struct MatchPolicy {
    double threshold = 0.85;
    std::size_t min_prefix = 8; // bytes of incoming text before a decision
};

// Case-insensitive similarity of `prefix` against the same-length prefix of
// `existing`; 1.0 for an empty prefix.
double match_score(std::string_view existing, std::string_view prefix);

bool viable(double score, const MatchPolicy& policy) noexcept;

// Incremental binding of one streamed text against a fixed candidate list.
// Every byte is evaluated on arrival, so the decision never depends on how
// the text was chunked. Decisions are final.
class PrefixMatcher {
public:
    enum class Status { Pending, Bound, New };

    PrefixMatcher(std::vector<std::string> candidates, MatchPolicy policy);

    // Consumes the bytes of `text` beyond those already seen. `text` must
    // extend the previously consumed text.
    void advance(std::string_view text);
    // The text is complete: a pending match goes to the best viable candidate
    // (highest score, then closest overall text, then lowest index) or New.
    void close();
    // Decides without any text: the first candidate, or New when there is none.
    void close_without_text();

    Status status() const noexcept { return status_; }
    std::size_t bound() const noexcept { return bound_; } // candidate index
    std::size_t consumed() const noexcept { return consumed_; }
    double score(std::size_t candidate) const;

private:
    void decide_at_threshold();

    std::vector<std::string> lowered_;
    std::vector<std::vector<std::size_t>> rows_; // edit-distance row per candidate
    std::string text_;
    MatchPolicy policy_;
    std::size_t consumed_ = 0;
    Status status_ = Status::Pending;
    std::size_t bound_ = 0;
};

// Reconciles a streamed panel in the stream schema against a base panel.
// Events applied in order to the live view of the base reproduce the display
// state after every feed and the final panel after finalize. Sections or
// fields absent from the stream keep their existing content, so one stream
// per generation phase can be reconciled in turn.
class Reconciler {
public:
    explicit Reconciler(const design::DesignPanel& base, MatchPolicy policy = {});
    ~Reconciler();
    Reconciler(const Reconciler&) = delete;
    Reconciler& operator=(const Reconciler&) = delete;

    std::vector<ReconciliationEvent> feed(std::string_view chunk);

    struct Result {
        design::DesignPanel panel;
        std::vector<ReconciliationEvent> events;
    };
    // InvalidState unless the stream is complete.
    Result finalize();

    const PartialTree& tree() const noexcept;
    const design::DesignPanel& display() const noexcept;

private:
    struct State;
    std::unique_ptr<State> state_;
};

// Offline equivalent of a single-chunk stream.
Reconciler::Result reconcile(const design::DesignPanel& base, std::string_view stream, MatchPolicy policy = {});

} // namespace designloop::streamsync
