#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "designloop/design/panel.hpp"

namespace designloop::design {

enum class VersionOrigin { Chat, Trial, Revert, Manual, Reflections, Assessment };

std::string_view origin_name(VersionOrigin origin) noexcept;
VersionOrigin origin_from_name(std::string_view name);

enum class Role { User, Assistant };

struct DiffRef {
    std::uint64_t old_version = 0;
    std::uint64_t new_version = 0;

    bool operator==(const DiffRef&) const = default;
};

struct ChatMessage {
    Role role = Role::User;
    std::string text;
    std::optional<std::string> code_change_summary; // present iff diff_ref is
    std::optional<DiffRef> diff_ref;
    bool error = false; // marks an aborted turn

    bool operator==(const ChatMessage&) const = default;
};

nlohmann::ordered_json to_json(const ChatMessage& message);
ChatMessage message_from_json(const nlohmann::json& j);

enum class TrialState { Pending, Applied, Reverted, Committed };

std::string_view trial_state_name(TrialState state) noexcept;
TrialState trial_state_from_name(std::string_view name);

struct TrialSession {
    std::string id;
    std::uint64_t base_code_version = 0;
    std::uint64_t base_panel_version = 0;
    std::string item_id;
    std::string alternative_id;
    TrialState state = TrialState::Pending;

    bool terminal() const noexcept { return state == TrialState::Reverted || state == TrialState::Committed; }
    bool operator==(const TrialSession&) const = default;
};

nlohmann::ordered_json to_json(const TrialSession& trial);
TrialSession trial_from_json(const nlohmann::json& j);

struct CodeVersion {
    std::uint64_t version = 0;
    std::string content;
    VersionOrigin origin = VersionOrigin::Manual;
};

struct PanelVersion {
    std::uint64_t version = 0;
    DesignPanel panel;
    VersionOrigin origin = VersionOrigin::Manual;
};

// Receives every mutation before it becomes visible in memory. Throwing
// aborts the mutation and leaves the project unchanged.
class ProjectObserver {
public:
    virtual ~ProjectObserver() = default;
    virtual void on_code_version(const std::string& project, const CodeVersion& version) = 0;
    virtual void on_panel_version(const std::string& project, const PanelVersion& version) = 0;
    virtual void on_message(const std::string& project, const ChatMessage& message) = 0;
    virtual void on_trial(const std::string& project, const TrialSession& trial) = 0;
};

// Project ids double as names and directory names.
bool valid_project_name(std::string_view name) noexcept;

class Project {
public:
    // One code version (initial_code or "") and one empty panel version.
    static Project create(std::string name, std::optional<std::string> initial_code,
                          ProjectObserver* observer = nullptr);

    // Rebuilds a project from persisted history without notifying anyone.
    static Project restore(std::string name, std::vector<CodeVersion> code, std::vector<PanelVersion> panels,
                           std::vector<ChatMessage> transcript, std::optional<TrialSession> trial);

    const std::string& id() const noexcept { return id_; }
    void set_observer(ProjectObserver* observer) noexcept { observer_ = observer; }

    const std::vector<CodeVersion>& code_versions() const noexcept { return code_; }
    const std::vector<PanelVersion>& panel_versions() const noexcept { return panels_; }
    const std::vector<ChatMessage>& transcript() const noexcept { return transcript_; }
    const std::optional<TrialSession>& trial() const noexcept { return trial_; }

    const CodeVersion& current_code() const { return code_.back(); }
    const DesignPanel& current_panel() const { return panels_.back().panel; }
    const CodeVersion& code_version(std::uint64_t version) const;
    const PanelVersion& panel_version(std::uint64_t version) const;

    const CodeVersion& add_code_version(std::string content, VersionOrigin origin);
    // Stores `panel` as the next version; its version field is overwritten.
    const PanelVersion& add_panel_version(DesignPanel panel, VersionOrigin origin);
    void append_message(ChatMessage message);

    // Reconciled panel -> change-marked next version.
    const PanelVersion& apply_panel_update(const DesignPanel& next, VersionOrigin origin);

    // Trial lifecycle. begin: NotFound for unresolvable ids, Conflict while a
    // trial is Pending or Applied. The others check the id (NotFound) and the
    // state (InvalidState).
    const TrialSession& begin_trial(std::string_view item_id, std::string_view alternative_id);
    const TrialSession& mark_trial_applied(std::string_view trial_id);
    // Applied -> Reverted. Records new code and panel versions equal to the
    // base versions.
    const TrialSession& revert_trial(std::string_view trial_id);
    // Pending -> Reverted after a failed execution: restores the base versions
    // if anything moved, otherwise records nothing.
    const TrialSession& abort_trial(std::string_view trial_id);
    // Applied -> Committed. Promotes the tried alternative into Confirmed
    // Requirements and records a new panel version.
    const TrialSession& commit_trial(std::string_view trial_id);

    bool trial_active() const noexcept { return trial_ && !trial_->terminal(); }

private:
    Project() = default;
    TrialSession& expect_trial(std::string_view trial_id, TrialState required);
    void set_trial(TrialSession trial);
    void restore_base(const TrialSession& trial, bool always);

    std::string id_;
    std::vector<CodeVersion> code_;
    std::vector<PanelVersion> panels_;
    std::vector<ChatMessage> transcript_;
    std::optional<TrialSession> trial_;
    std::uint64_t trial_counter_ = 0;
    ProjectObserver* observer_ = nullptr;
};

// The panel that results from promoting `alternative_id` of `item_id`:
// previous marks and Removed items are dropped, the item moves to the end of
// Confirmed Requirements as UserConfirmed with the alternative's text as its
// summary (marked Added), and outside Confirmed Requirements a Removed copy
// with id "<id>/removed" stays at the original position.
DesignPanel promote_alternative(const DesignPanel& panel, std::string_view item_id,
                                std::string_view alternative_id);

} // namespace designloop::design
