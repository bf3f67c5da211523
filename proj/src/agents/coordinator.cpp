#include "designloop/agents/agents.hpp"

namespace designloop::agents {

Coordinator::Coordinator(LlmProvider& provider, AgentConfig config)
    : config_(std::move(config)),
      conversation_(provider, config_),
      reflections_(provider, config_),
      design_(provider, conversation_, config_) {}

void Coordinator::refresh_panel(design::GuardedProject& project, ChatOutcome& outcome, SessionListener& listener,
                                std::stop_token stop) {
    outcome.reflection = reflections_.run(project, listener, stop);
    if (stop.stop_requested()) return;
    const auto targets = project.read([&](const design::Project& p) {
        return select_assessment_targets(p.current_panel(), config_.assessment_budget);
    });
    outcome.assessment = design_.assess(project, targets, listener, stop);
}

Coordinator::ChatOutcome Coordinator::chat(design::GuardedProject& project, const std::string& message,
                                           SessionListener& listener, std::stop_token stop) {
    ChatOutcome outcome;
    TurnRequest request;
    request.transcript_text = message;
    request.prompt_text = message;
    outcome.turn = conversation_.run_turn(project, request, listener, stop);
    if (outcome.turn.ok) refresh_panel(project, outcome, listener, stop);
    return outcome;
}

TrialResult Coordinator::try_alternative(design::GuardedProject& project, const std::string& item_id,
                                         const std::string& alternative_id, SessionListener& listener,
                                         std::stop_token stop) {
    const design::TrialSession trial =
        project.write([&](design::Project& p) { return p.begin_trial(item_id, alternative_id); });
    listener.on_trial(trial);
    return design_.run_trial(project, trial.id, listener, stop);
}

design::TrialSession Coordinator::revert(design::GuardedProject& project, const std::string& trial_id,
                                         SessionListener& listener) {
    std::optional<design::CodeVersion> code;
    std::optional<design::PanelVersion> panel;
    const design::TrialSession trial = project.write([&](design::Project& p) {
        auto t = p.revert_trial(trial_id);
        code = p.current_code();
        panel = p.panel_versions().back();
        return t;
    });
    listener.on_code_version(*code, std::nullopt);
    listener.on_panel_version(*panel);
    listener.on_trial(trial);
    return trial;
}

Coordinator::ChatOutcome Coordinator::commit(design::GuardedProject& project, const std::string& trial_id,
                                             SessionListener& listener, std::stop_token stop) {
    std::optional<design::PanelVersion> panel;
    const design::TrialSession trial = project.write([&](design::Project& p) {
        auto t = p.commit_trial(trial_id);
        panel = p.panel_versions().back();
        return t;
    });
    listener.on_panel_version(*panel);
    listener.on_trial(trial);
    ChatOutcome outcome;
    refresh_panel(project, outcome, listener, stop);
    return outcome;
}

} // namespace designloop::agents
