#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <tuple>
#include <vector>

#include "designloop/agents/prompts.hpp"
#include "designloop/agents/provider.hpp"
#include "designloop/design/guarded.hpp"
#include "designloop/patchkit/apply.hpp"
#include "designloop/streamsync/events.hpp"
#include "designloop/streamsync/reconciler.hpp"

namespace designloop::agents {

// Receives everything an agent run produces, in order. Provisional callbacks
// describe work in progress; the version callbacks report committed state.
class SessionListener {
public:
    virtual ~SessionListener() = default;
    virtual void on_token(AgentKind, std::string_view) {}
    virtual void on_patch_preview(const patchkit::PatchResult&) {}
    // `patch` is set when the version came from edits, absent for rewrites.
    virtual void on_code_version(const design::CodeVersion&, const std::optional<patchkit::PatchResult>&) {}
    virtual void on_message(const design::ChatMessage&) {}
    virtual void on_panel_event(const streamsync::ReconciliationEvent&) {}
    virtual void on_panel_version(const design::PanelVersion&) {}
    virtual void on_panel_discarded(std::uint64_t) {}
    virtual void on_trial(const design::TrialSession&) {}
    virtual void on_error(AgentKind, const std::string&) {}
};

inline SessionListener& null_listener() {
    static SessionListener listener;
    return listener;
}

struct AgentConfig {
    PromptOptions prompts;
    patchkit::FuzzPolicy fuzz;
    streamsync::MatchPolicy match;
    std::size_t assessment_budget = 6;
};

struct TurnRequest {
    std::string transcript_text; // what the transcript records as the user's line
    std::string prompt_text;     // what the model is asked
    AgentKind agent = AgentKind::Conversation;
    design::VersionOrigin origin = design::VersionOrigin::Chat;
    bool always_version = false; // record a code version even without a change
};

struct TurnResult {
    bool ok = false;
    std::optional<design::CodeVersion> code;
    std::optional<patchkit::PatchResult> patch; // result of the edit stream, if any
    bool fallback_used = false;                 // edits failed and a rewrite replaced them
    std::optional<design::ChatMessage> reply;
    std::optional<std::string> error;
    std::size_t provider_calls = 0;
};

// Chat turns that may edit or rewrite the code. Callers hold the project's
// turn lease for the duration of a turn.
class ConversationAgent {
public:
    ConversationAgent(LlmProvider& provider, const AgentConfig& config) : provider_(provider), config_(config) {}

    TurnResult run_turn(design::GuardedProject& project, const TurnRequest& request, SessionListener& listener,
                        std::stop_token stop = {});

private:
    LlmProvider& provider_;
    const AgentConfig& config_;
};

struct ReflectionResult {
    enum class Status { Committed, Skipped, Discarded, Failed };
    Status status = Status::Skipped;
    std::optional<design::PanelVersion> version;
    std::vector<streamsync::ReconciliationEvent> events;
    bool batch_fallback = false;
    std::optional<std::string> error;
};

// Regenerates the design panel from the conversation. Results are committed
// only if no later run started and the panel did not move meanwhile.
class ReflectionsAgent {
public:
    ReflectionsAgent(LlmProvider& provider, const AgentConfig& config) : provider_(provider), config_(config) {}

    ReflectionResult run(design::GuardedProject& project, SessionListener& listener, std::stop_token stop = {});

private:
    std::uint64_t take_ticket(const std::string& project);
    bool latest_ticket(const std::string& project, std::uint64_t ticket);

    LlmProvider& provider_;
    const AgentConfig& config_;
    std::mutex mutex_;
    std::map<std::string, std::uint64_t> tickets_;
};

struct AssessmentTarget {
    std::string item_id;
    std::string alternative_id;

    bool operator==(const AssessmentTarget&) const = default;
    bool operator<(const AssessmentTarget& o) const {
        return std::tie(item_id, alternative_id) < std::tie(o.item_id, o.alternative_id);
    }
};

// Important alternatives first, then the other alternatives of design
// questions, then those of implicit decisions, each in panel order, up to
// `budget`. Struck items and alternatives that already carry a trade-off are
// not selected.
std::vector<AssessmentTarget> select_assessment_targets(const design::DesignPanel& panel, std::size_t budget);

struct SpeculativeAssessment {
    AssessmentTarget target;
    std::string tradeoff;
    std::vector<std::string> goal_impacts;
    std::vector<std::string> new_requirements;
    std::vector<std::string> new_questions;

    bool operator==(const SpeculativeAssessment&) const = default;
};

// Reads the arguments of an assessment tool call; throws ParseError unless
// they form an object with a non-empty tradeoff.
SpeculativeAssessment parse_assessment(std::string_view payload, AssessmentTarget target);

struct AssessmentRun {
    std::vector<SpeculativeAssessment> results;
    std::vector<AssessmentTarget> failed;
    std::size_t provider_calls = 0;
    std::optional<design::PanelVersion> version;
};

struct TrialResult {
    design::TrialSession trial;
    TurnResult turn;
};

// Speculative assessment and trial execution. Trials reuse the conversation
// prompt with an injected instruction.
class DesignAgent {
public:
    DesignAgent(LlmProvider& provider, ConversationAgent& conversation, const AgentConfig& config)
        : provider_(provider), conversation_(conversation), config_(config) {}

    // Each (panel version, target) is computed at most once; failed targets
    // are skipped. Trade-offs land in a new panel version with origin
    // Assessment and unchanged marks.
    AssessmentRun assess(design::GuardedProject& project, const std::vector<AssessmentTarget>& targets,
                         SessionListener& listener, std::stop_token stop = {});

    // Pending -> Applied through a conversation turn, or -> Reverted when the
    // turn fails.
    TrialResult run_trial(design::GuardedProject& project, const std::string& trial_id, SessionListener& listener,
                          std::stop_token stop = {});

private:
    using CacheKey = std::tuple<std::string, std::uint64_t, std::string, std::string>;

    LlmProvider& provider_;
    ConversationAgent& conversation_;
    const AgentConfig& config_;
    std::mutex mutex_;
    std::map<CacheKey, SpeculativeAssessment> cache_;
};

// Sequences the agents the way the IDE uses them: a chat turn or committed
// trial is followed by reflections and then speculative assessment.
class Coordinator {
public:
    Coordinator(LlmProvider& provider, AgentConfig config);
    Coordinator(const Coordinator&) = delete;
    Coordinator& operator=(const Coordinator&) = delete;

    const AgentConfig& config() const noexcept { return config_; }
    ConversationAgent& conversation() noexcept { return conversation_; }
    ReflectionsAgent& reflections() noexcept { return reflections_; }
    DesignAgent& design() noexcept { return design_; }

    struct ChatOutcome {
        TurnResult turn;
        std::optional<ReflectionResult> reflection;
        std::optional<AssessmentRun> assessment;
    };

    ChatOutcome chat(design::GuardedProject& project, const std::string& message, SessionListener& listener,
                     std::stop_token stop = {});
    // begin_trial + run_trial. Conflict/NotFound from begin propagate.
    TrialResult try_alternative(design::GuardedProject& project, const std::string& item_id,
                                const std::string& alternative_id, SessionListener& listener,
                                std::stop_token stop = {});
    design::TrialSession revert(design::GuardedProject& project, const std::string& trial_id,
                                SessionListener& listener);
    ChatOutcome commit(design::GuardedProject& project, const std::string& trial_id, SessionListener& listener,
                       std::stop_token stop = {});

    // Reflections followed by assessment of the selected targets.
    void refresh_panel(design::GuardedProject& project, ChatOutcome& outcome, SessionListener& listener,
                       std::stop_token stop);

private:
    AgentConfig config_;
    ConversationAgent conversation_;
    ReflectionsAgent reflections_;
    DesignAgent design_;
};

} // namespace designloop::agents
