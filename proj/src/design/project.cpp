#include "designloop/design/project.hpp"

#include <algorithm>

#include "designloop/design/update.hpp"
#include "designloop/error.hpp"

namespace designloop::design {

namespace {

constexpr std::array<std::string_view, 6> kOrigins{"chat", "trial", "revert", "manual", "reflections", "assessment"};
constexpr std::array<std::string_view, 4> kTrialStates{"pending", "applied", "reverted", "committed"};

} // namespace

std::string_view origin_name(VersionOrigin origin) noexcept { return kOrigins[static_cast<std::size_t>(origin)]; }

VersionOrigin origin_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kOrigins.size(); ++i) {
        if (kOrigins[i] == name) return static_cast<VersionOrigin>(i);
    }
    throw Error(ErrorCode::Corrupt, "unknown version origin '" + std::string(name) + "'");
}

std::string_view trial_state_name(TrialState state) noexcept {
    return kTrialStates[static_cast<std::size_t>(state)];
}

TrialState trial_state_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kTrialStates.size(); ++i) {
        if (kTrialStates[i] == name) return static_cast<TrialState>(i);
    }
    throw Error(ErrorCode::Corrupt, "unknown trial state '" + std::string(name) + "'");
}

nlohmann::ordered_json to_json(const ChatMessage& message) {
    nlohmann::ordered_json j;
    j["role"] = message.role == Role::User ? "user" : "assistant";
    j["text"] = message.text;
    if (message.code_change_summary) j["code_change_summary"] = *message.code_change_summary;
    if (message.diff_ref) j["diff_ref"] = {{"old", message.diff_ref->old_version}, {"new", message.diff_ref->new_version}};
    if (message.error) j["error"] = true;
    return j;
}

ChatMessage message_from_json(const nlohmann::json& j) {
    ChatMessage m;
    try {
        const std::string role = j.at("role").get<std::string>();
        if (role != "user" && role != "assistant") throw Error(ErrorCode::Corrupt, "unknown role '" + role + "'");
        m.role = role == "user" ? Role::User : Role::Assistant;
        m.text = j.at("text").get<std::string>();
        if (j.contains("code_change_summary")) m.code_change_summary = j.at("code_change_summary").get<std::string>();
        if (j.contains("diff_ref")) {
            m.diff_ref = DiffRef{j.at("diff_ref").at("old").get<std::uint64_t>(),
                                 j.at("diff_ref").at("new").get<std::uint64_t>()};
        }
        m.error = j.value("error", false);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Corrupt, std::string("malformed chat message: ") + e.what());
    }
    return m;
}

nlohmann::ordered_json to_json(const TrialSession& trial) {
    nlohmann::ordered_json j;
    j["id"] = trial.id;
    j["item_id"] = trial.item_id;
    j["alternative_id"] = trial.alternative_id;
    j["base_code_version"] = trial.base_code_version;
    j["base_panel_version"] = trial.base_panel_version;
    j["state"] = trial_state_name(trial.state);
    return j;
}

TrialSession trial_from_json(const nlohmann::json& j) {
    TrialSession t;
    try {
        t.id = j.at("id").get<std::string>();
        t.item_id = j.at("item_id").get<std::string>();
        t.alternative_id = j.at("alternative_id").get<std::string>();
        t.base_code_version = j.at("base_code_version").get<std::uint64_t>();
        t.base_panel_version = j.at("base_panel_version").get<std::uint64_t>();
        t.state = trial_state_from_name(j.at("state").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Corrupt, std::string("malformed trial record: ") + e.what());
    }
    return t;
}

bool valid_project_name(std::string_view name) noexcept {
    if (name.empty() || name.size() > 128 || name == "." || name == "..") return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '_' ||
               c == '-';
    });
}

Project Project::create(std::string name, std::optional<std::string> initial_code, ProjectObserver* observer) {
    if (!valid_project_name(name)) {
        throw Error(ErrorCode::InvalidArgument, "project name must be 1-128 characters of [A-Za-z0-9._-]");
    }
    Project p;
    p.id_ = std::move(name);
    p.observer_ = observer;
    p.add_code_version(initial_code.value_or(""), VersionOrigin::Manual);
    p.add_panel_version(DesignPanel{}, VersionOrigin::Manual);
    return p;
}

Project Project::restore(std::string name, std::vector<CodeVersion> code, std::vector<PanelVersion> panels,
                         std::vector<ChatMessage> transcript, std::optional<TrialSession> trial) {
    if (code.empty() || panels.empty()) throw Error(ErrorCode::Corrupt, "project '" + name + "' has no versions");
    Project p;
    p.id_ = std::move(name);
    p.code_ = std::move(code);
    p.panels_ = std::move(panels);
    p.transcript_ = std::move(transcript);
    p.trial_ = std::move(trial);
    // Trial ids are "t<n>"; numbering continues after the persisted one.
    if (p.trial_ && p.trial_->id.size() > 1 && p.trial_->id[0] == 't') {
        try {
            p.trial_counter_ = std::stoull(p.trial_->id.substr(1));
        } catch (const std::exception&) {
        }
    }
    return p;
}

const CodeVersion& Project::code_version(std::uint64_t version) const {
    if (version == 0 || version > code_.size()) {
        throw Error(ErrorCode::NotFound, "code version " + std::to_string(version) + " does not exist");
    }
    return code_[version - 1];
}

const PanelVersion& Project::panel_version(std::uint64_t version) const {
    if (version == 0 || version > panels_.size()) {
        throw Error(ErrorCode::NotFound, "panel version " + std::to_string(version) + " does not exist");
    }
    return panels_[version - 1];
}

const CodeVersion& Project::add_code_version(std::string content, VersionOrigin origin) {
    CodeVersion v{code_.size() + 1, std::move(content), origin};
    if (observer_) observer_->on_code_version(id_, v);
    code_.push_back(std::move(v));
    return code_.back();
}

const PanelVersion& Project::add_panel_version(DesignPanel panel, VersionOrigin origin) {
    panel.version = panels_.size() + 1;
    for (SectionKind kind : kSections) {
        for (auto& item : panel.section(kind)) item.section = kind;
    }
    PanelVersion v{panel.version, std::move(panel), origin};
    if (observer_) observer_->on_panel_version(id_, v);
    panels_.push_back(std::move(v));
    return panels_.back();
}

void Project::append_message(ChatMessage message) {
    if (message.code_change_summary.has_value() != message.diff_ref.has_value()) {
        throw Error(ErrorCode::InvalidArgument, "code change summary and diff reference must come together");
    }
    if (observer_) observer_->on_message(id_, message);
    transcript_.push_back(std::move(message));
}

const PanelVersion& Project::apply_panel_update(const DesignPanel& next, VersionOrigin origin) {
    return add_panel_version(design::apply_panel_update(current_panel(), next).panel, origin);
}

void Project::set_trial(TrialSession trial) {
    if (observer_) observer_->on_trial(id_, trial);
    trial_ = std::move(trial);
}

TrialSession& Project::expect_trial(std::string_view trial_id, TrialState required) {
    if (!trial_ || trial_->id != trial_id) {
        throw Error(ErrorCode::NotFound, "trial '" + std::string(trial_id) + "' does not exist");
    }
    if (trial_->state != required) {
        throw Error(ErrorCode::InvalidState, "trial '" + trial_->id + "' is " +
                                                 std::string(trial_state_name(trial_->state)) + ", expected " +
                                                 std::string(trial_state_name(required)));
    }
    return *trial_;
}

const TrialSession& Project::begin_trial(std::string_view item_id, std::string_view alternative_id) {
    if (trial_active()) throw Error(ErrorCode::Conflict, "trial '" + trial_->id + "' is still open");
    const DesignItem* item = current_panel().find_item(item_id);
    if (!item || item->change_mark == ChangeMark::Removed) {
        throw Error(ErrorCode::NotFound, "item '" + std::string(item_id) + "' is not in the current panel");
    }
    if (!current_panel().find_alternative(item_id, alternative_id)) {
        throw Error(ErrorCode::NotFound, "alternative '" + std::string(alternative_id) + "' is not in item '" +
                                             std::string(item_id) + "'");
    }
    TrialSession t;
    t.id = "t" + std::to_string(trial_counter_ + 1);
    t.base_code_version = current_code().version;
    t.base_panel_version = current_panel().version;
    t.item_id = std::string(item_id);
    t.alternative_id = std::string(alternative_id);
    t.state = TrialState::Pending;
    set_trial(std::move(t));
    ++trial_counter_;
    return *trial_;
}

const TrialSession& Project::mark_trial_applied(std::string_view trial_id) {
    TrialSession t = expect_trial(trial_id, TrialState::Pending);
    t.state = TrialState::Applied;
    set_trial(std::move(t));
    return *trial_;
}

void Project::restore_base(const TrialSession& trial, bool always) {
    const CodeVersion& base_code = code_version(trial.base_code_version);
    const PanelVersion& base_panel = panel_version(trial.base_panel_version);
    if (always || current_code().content != base_code.content) {
        add_code_version(base_code.content, VersionOrigin::Revert);
    }
    if (always || serialize(current_panel()) != serialize(base_panel.panel)) {
        add_panel_version(base_panel.panel, VersionOrigin::Revert);
    }
}

const TrialSession& Project::revert_trial(std::string_view trial_id) {
    TrialSession t = expect_trial(trial_id, TrialState::Applied);
    restore_base(t, true);
    t.state = TrialState::Reverted;
    set_trial(std::move(t));
    return *trial_;
}

const TrialSession& Project::abort_trial(std::string_view trial_id) {
    TrialSession t = expect_trial(trial_id, TrialState::Pending);
    restore_base(t, false);
    t.state = TrialState::Reverted;
    set_trial(std::move(t));
    return *trial_;
}

const TrialSession& Project::commit_trial(std::string_view trial_id) {
    TrialSession t = expect_trial(trial_id, TrialState::Applied);
    add_panel_version(promote_alternative(current_panel(), t.item_id, t.alternative_id), VersionOrigin::Trial);
    t.state = TrialState::Committed;
    set_trial(std::move(t));
    return *trial_;
}

DesignPanel promote_alternative(const DesignPanel& panel, std::string_view item_id, std::string_view alternative_id) {
    DesignPanel out = live_view(panel);
    DesignItem* item = out.find_item(item_id);
    if (!item) throw Error(ErrorCode::NotFound, "item '" + std::string(item_id) + "' is not in the current panel");
    const auto alt = std::find_if(item->alternatives.begin(), item->alternatives.end(),
                                  [&](const Alternative& a) { return a.id == alternative_id; });
    if (alt == item->alternatives.end()) {
        throw Error(ErrorCode::NotFound, "alternative '" + std::string(alternative_id) + "' is not in item '" +
                                             std::string(item_id) + "'");
    }

    DesignItem promoted = *item;
    promoted.section = SectionKind::ConfirmedRequirements;
    promoted.summary = alt->text;
    promoted.origin = ItemOrigin::UserConfirmed;
    promoted.change_mark = ChangeMark::Added;
    promoted.alternatives.erase(promoted.alternatives.begin() + (alt - item->alternatives.begin()));

    if (item->section == SectionKind::ConfirmedRequirements) {
        *item = std::move(promoted);
        return out;
    }
    item->id += "/removed";
    item->change_mark = ChangeMark::Removed;
    out.section(SectionKind::ConfirmedRequirements).push_back(std::move(promoted));
    return out;
}

} // namespace designloop::design
