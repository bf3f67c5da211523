#include "designloop/agents/agents.hpp"

#include "designloop/design/panel.hpp"
#include "designloop/error.hpp"

namespace designloop::agents {

std::uint64_t ReflectionsAgent::take_ticket(const std::string& project) {
    std::lock_guard lock(mutex_);
    return ++tickets_[project];
}

bool ReflectionsAgent::latest_ticket(const std::string& project, std::uint64_t ticket) {
    std::lock_guard lock(mutex_);
    return tickets_[project] == ticket;
}

ReflectionResult ReflectionsAgent::run(design::GuardedProject& project, SessionListener& listener,
                                       std::stop_token stop) {
    ReflectionResult result;
    const ProjectSnapshot snap = project.read([](const design::Project& p) { return snapshot(p); });
    const std::uint64_t ticket = take_ticket(snap.project);
    if (snap.transcript.empty()) return result;

    design::DesignPanel base = design::live_view(snap.panel);
    base.version = snap.panel_version;
    streamsync::Reconciler reconciler(base, config_.match);
    std::string tool_payload;
    std::string text_payload;
    bool stream_failed = false;

    auto sink = [&](const StreamChunk& chunk) {
        if (chunk.kind == StreamChunk::Kind::Text) {
            text_payload += chunk.text;
            return;
        }
        if (chunk.tool != "emit_panel") return;
        tool_payload += chunk.text;
        if (stream_failed) return;
        try {
            for (auto& e : reconciler.feed(chunk.text)) {
                listener.on_panel_event(e);
                result.events.push_back(std::move(e));
            }
        } catch (const ParseError&) {
            stream_failed = true;
        }
    };

    auto failed = [&](const std::string& why) {
        listener.on_error(AgentKind::Reflections, why);
        result.status = ReflectionResult::Status::Failed;
        result.error = why;
        return result;
    };

    design::DesignPanel next;
    try {
        provider_.send(reflections_bundle(snap, config_.prompts), sink, stop);
        if (stop.stop_requested()) throw Error(ErrorCode::Cancelled, "reflections cancelled");
        const bool streamed = !tool_payload.empty() && !stream_failed && reconciler.tree().root_closed;
        if (streamed) {
            auto final = reconciler.finalize();
            for (auto& e : final.events) {
                listener.on_panel_event(e);
                result.events.push_back(std::move(e));
            }
            next = std::move(final.panel);
        } else {
            // Wholesale replacement from the complete response.
            const std::string& payload = tool_payload.empty() ? text_payload : tool_payload;
            next = design::panel_from_stream_json(payload, "g" + std::to_string(snap.panel_version + 1));
            result.batch_fallback = true;
        }
    } catch (const std::exception& e) {
        return failed(e.what());
    }

    const auto committed = project.write([&](design::Project& p) -> std::optional<design::PanelVersion> {
        if (!latest_ticket(snap.project, ticket) || p.current_panel().version != snap.panel_version) {
            return std::nullopt;
        }
        return p.apply_panel_update(next, design::VersionOrigin::Reflections);
    });
    if (!committed) {
        result.status = ReflectionResult::Status::Discarded;
        listener.on_panel_discarded(snap.panel_version);
        return result;
    }
    result.status = ReflectionResult::Status::Committed;
    result.version = committed;
    listener.on_panel_version(*committed);
    return result;
}

} // namespace designloop::agents
