#include "designloop/agents/agents.hpp"

#include <set>

#include "designloop/design/panel.hpp"
#include "designloop/error.hpp"

namespace designloop::agents {

using design::SectionKind;

std::vector<AssessmentTarget> select_assessment_targets(const design::DesignPanel& panel, std::size_t budget) {
    std::vector<AssessmentTarget> out;
    if (budget == 0) return out;
    const design::DesignPanel live = design::live_view(panel);
    std::set<AssessmentTarget> taken;
    auto take = [&](const design::DesignItem& item, const design::Alternative& alt) {
        if (out.size() >= budget || alt.tradeoff) return;
        AssessmentTarget t{item.id, alt.id};
        if (taken.insert(t).second) out.push_back(std::move(t));
    };
    for (SectionKind kind : design::kSections) {
        for (const auto& item : live.section(kind)) {
            for (const auto& alt : item.alternatives) {
                if (alt.important) take(item, alt);
            }
        }
    }
    for (SectionKind kind : {SectionKind::DesignQuestions, SectionKind::ImplicitDecisions}) {
        for (const auto& item : live.section(kind)) {
            for (const auto& alt : item.alternatives) take(item, alt);
        }
    }
    return out;
}

SpeculativeAssessment parse_assessment(std::string_view payload, AssessmentTarget target) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed assessment: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || !doc.contains("tradeoff") || !doc["tradeoff"].is_string()) {
        throw ParseError("assessment requires a string 'tradeoff'", 0);
    }
    SpeculativeAssessment a;
    a.target = std::move(target);
    a.tradeoff = doc["tradeoff"];
    if (a.tradeoff.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw ParseError("assessment tradeoff is empty", 0);
    }
    auto list = [&](const char* key, std::vector<std::string>& dst) {
        if (!doc.contains(key) || !doc[key].is_array()) return;
        for (const auto& v : doc[key]) {
            if (v.is_string()) dst.push_back(v);
        }
    };
    list("goal_impacts", a.goal_impacts);
    list("new_requirements", a.new_requirements);
    list("new_questions", a.new_questions);
    return a;
}

AssessmentRun DesignAgent::assess(design::GuardedProject& project, const std::vector<AssessmentTarget>& targets,
                                  SessionListener& listener, std::stop_token stop) {
    AssessmentRun run;
    if (targets.empty()) return run;
    const ProjectSnapshot snap = project.read([](const design::Project& p) { return snapshot(p); });
    const design::DesignPanel live = design::live_view(snap.panel);

    std::map<AssessmentTarget, std::string> assessed_text; // alternative text each result refers to
    for (const auto& target : targets) {
        if (stop.stop_requested()) return AssessmentRun{};
        const design::DesignItem* item = live.find_item(target.item_id);
        const design::Alternative* alt = live.find_alternative(target.item_id, target.alternative_id);
        if (!item || !alt || alt->tradeoff) {
            if (!item || !alt) run.failed.push_back(target);
            continue;
        }
        const CacheKey key{snap.project, snap.panel_version, target.item_id, target.alternative_id};
        {
            std::lock_guard lock(mutex_);
            if (const auto it = cache_.find(key); it != cache_.end()) {
                run.results.push_back(it->second);
                assessed_text[target] = alt->text;
                continue;
            }
        }
        std::string payload;
        std::string text;
        try {
            ++run.provider_calls;
            provider_.send(
                assessment_bundle(snap, *item, *alt, config_.prompts),
                [&](const StreamChunk& c) {
                    if (c.kind == StreamChunk::Kind::Text) {
                        text += c.text;
                    } else if (c.tool == "assessment") {
                        payload += c.text;
                    }
                },
                stop);
            SpeculativeAssessment a = parse_assessment(payload.empty() ? text : payload, target);
            {
                std::lock_guard lock(mutex_);
                cache_.emplace(key, a);
            }
            run.results.push_back(std::move(a));
            assessed_text[target] = alt->text;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Cancelled) return AssessmentRun{};
            listener.on_error(AgentKind::Design, e.what());
            run.failed.push_back(target);
        }
    }
    if (run.results.empty() || stop.stop_requested()) return run;

    std::vector<streamsync::ReconciliationEvent> events;
    run.version = project.write([&](design::Project& p) -> std::optional<design::PanelVersion> {
        design::DesignPanel panel = p.current_panel();
        for (const auto& a : run.results) {
            design::DesignItem* item = panel.find_item(a.target.item_id);
            if (!item || item->change_mark == design::ChangeMark::Removed) continue;
            for (auto& alt : item->alternatives) {
                if (alt.id != a.target.alternative_id || alt.text != assessed_text[a.target] ||
                    alt.tradeoff == a.tradeoff) {
                    continue;
                }
                alt.tradeoff = a.tradeoff;
                streamsync::ReconciliationEvent e;
                e.kind = streamsync::EventKind::FieldDelta;
                e.section = item->section;
                e.item_id = item->id;
                e.field = {"alternatives", alt.id, "tradeoff"};
                e.mode = streamsync::DeltaMode::Set;
                e.text = a.tradeoff;
                events.push_back(std::move(e));
            }
        }
        if (events.empty()) return std::nullopt;
        return p.add_panel_version(std::move(panel), design::VersionOrigin::Assessment);
    });
    for (const auto& e : events) listener.on_panel_event(e);
    if (run.version) listener.on_panel_version(*run.version);
    return run;
}

TrialResult DesignAgent::run_trial(design::GuardedProject& project, const std::string& trial_id,
                                   SessionListener& listener, std::stop_token stop) {
    TurnRequest request;
    project.read([&](const design::Project& p) {
        const auto& trial = p.trial();
        if (!trial || trial->id != trial_id) throw Error(ErrorCode::NotFound, "no trial '" + trial_id + "'");
        if (trial->state != design::TrialState::Pending) {
            throw Error(ErrorCode::InvalidState, "trial '" + trial_id + "' is not pending");
        }
        const design::DesignItem* item = p.current_panel().find_item(trial->item_id);
        const design::Alternative* alt = p.current_panel().find_alternative(trial->item_id, trial->alternative_id);
        if (!item || !alt) throw Error(ErrorCode::NotFound, "trial target no longer exists");
        request.transcript_text = trial_transcript_line(*alt);
        request.prompt_text = trial_instruction(*item, *alt);
    });
    request.agent = AgentKind::Design;
    request.origin = design::VersionOrigin::Trial;
    request.always_version = true;

    // Aborting may record restoring versions; listeners see them like any other.
    const auto abort = [&] {
        std::vector<design::CodeVersion> code;
        std::vector<design::PanelVersion> panels;
        auto trial = project.write([&](design::Project& p) {
            const std::size_t nc = p.code_versions().size(), np = p.panel_versions().size();
            auto t = p.abort_trial(trial_id);
            code.assign(p.code_versions().begin() + static_cast<std::ptrdiff_t>(nc), p.code_versions().end());
            panels.assign(p.panel_versions().begin() + static_cast<std::ptrdiff_t>(np), p.panel_versions().end());
            return t;
        });
        for (const auto& v : code) listener.on_code_version(v, std::nullopt);
        for (const auto& v : panels) listener.on_panel_version(v);
        return trial;
    };

    TrialResult result;
    try {
        result.turn = conversation_.run_turn(project, request, listener, stop);
    } catch (...) {
        listener.on_trial(abort());
        throw;
    }
    result.trial = result.turn.ok ? project.write([&](design::Project& p) { return p.mark_trial_applied(trial_id); })
                                  : abort();
    listener.on_trial(result.trial);
    return result;
}

} // namespace designloop::agents
