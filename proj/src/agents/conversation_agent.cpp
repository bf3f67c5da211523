#include "designloop/agents/agents.hpp"

#include "designloop/error.hpp"
#include "designloop/patchkit/edit.hpp"
#include "designloop/patchkit/stream.hpp"

namespace designloop::agents {

using design::ChatMessage;
using design::Role;

namespace {

// Optional "summary" string of a complete tool payload.
std::optional<std::string> payload_summary(const std::string& payload) {
    const auto doc = nlohmann::json::parse(payload, nullptr, false);
    if (doc.is_object() && doc.contains("summary") && doc["summary"].is_string()) {
        std::string s = doc["summary"];
        if (!s.empty()) return s;
    }
    return std::nullopt;
}

std::string edit_summary(const patchkit::PatchResult& patch) {
    const std::size_t n = patch.applied_edits.size();
    return "Applied " + std::to_string(n) + (n == 1 ? " edit" : " edits") + " to the code.";
}

// Collects one model response: text, a streaming edit application and any
// rewrite payload.
struct ResponseCollector {
    const std::string& code;
    const patchkit::FuzzPolicy& fuzz;
    SessionListener& listener;
    AgentKind agent;

    std::string text;
    std::optional<patchkit::EditStream> edits;
    std::string edit_args;
    std::optional<std::string> edit_error;
    std::string rewrite_args;
    bool saw_rewrite = false;

    void operator()(const StreamChunk& chunk) {
        if (chunk.kind == StreamChunk::Kind::Text) {
            text += chunk.text;
            listener.on_token(agent, chunk.text);
        } else if (chunk.tool == "edit") {
            if (!edits) edits.emplace(code, fuzz);
            edit_args += chunk.text;
            if (edit_error) return;
            try {
                for (const auto& snapshot : edits->feed(chunk.text)) listener.on_patch_preview(snapshot);
            } catch (const ParseError& e) {
                edit_error = e.what();
            }
        } else if (chunk.tool == "rewrite") {
            saw_rewrite = true;
            rewrite_args += chunk.text;
        }
    }

    // Final edit result; malformed or empty payloads count as unplaceable.
    patchkit::PatchResult finish_edits() {
        if (!edit_error) {
            try {
                return edits->finish();
            } catch (const ParseError& e) {
                edit_error = e.what();
            }
        }
        patchkit::PatchResult failed;
        failed.outcome = patchkit::PatchOutcome::FallbackRequired;
        failed.failed_edits.push_back({edits->edits().size(), {}, "malformed edit payload: " + *edit_error});
        return failed;
    }
};

} // namespace

TurnResult ConversationAgent::run_turn(design::GuardedProject& project, const TurnRequest& request,
                                       SessionListener& listener, std::stop_token stop) {
    TurnResult result;
    const ProjectSnapshot snap = project.read([](const design::Project& p) { return snapshot(p); });

    ChatMessage user{Role::User, request.transcript_text, std::nullopt, std::nullopt, false};
    project.write([&](design::Project& p) { p.append_message(user); });
    listener.on_message(user);

    auto fail = [&](const std::string& why) {
        ChatMessage marker{Role::Assistant, "The turn failed: " + why, std::nullopt, std::nullopt, true};
        project.write([&](design::Project& p) { p.append_message(marker); });
        listener.on_error(request.agent, why);
        listener.on_message(marker);
        result.ok = false;
        result.error = why;
        result.reply = marker;
        return result;
    };

    ResponseCollector collect{snap.code.content, config_.fuzz, listener, request.agent, {}, {}, {}, {}, {}, false};
    std::optional<std::string> new_code;
    std::optional<std::string> summary;
    try {
        const PromptBundle bundle = conversation_bundle(snap, request.agent, request.prompt_text, config_.prompts);
        ++result.provider_calls;
        provider_.send(bundle, std::ref(collect), stop);

        if (collect.saw_rewrite) {
            new_code = patchkit::parse_rewrite_payload(collect.rewrite_args);
            summary = payload_summary(collect.rewrite_args);
        } else if (collect.edits) {
            patchkit::PatchResult patch = collect.finish_edits();
            result.patch = patch;
            if (patch.outcome != patchkit::PatchOutcome::FallbackRequired) {
                new_code = *patch.new_code;
                summary = payload_summary(collect.edit_args).value_or(edit_summary(patch));
            } else {
                listener.on_patch_preview(patch);
                const PromptBundle retry = rewrite_bundle(snap, request.agent, request.prompt_text, collect.text,
                                                          patch, config_.prompts);
                ResponseCollector second{snap.code.content, config_.fuzz, listener, request.agent,
                                         {}, {}, {}, {}, {}, false};
                ++result.provider_calls;
                provider_.send(retry, std::ref(second), stop);
                if (!second.saw_rewrite) throw Error(ErrorCode::Provider, "no rewrite after edits failed to apply");
                new_code = patchkit::parse_rewrite_payload(second.rewrite_args);
                summary = payload_summary(second.rewrite_args);
                if (!second.text.empty()) collect.text += (collect.text.empty() ? "" : "\n") + second.text;
                result.fallback_used = true;
            }
        }
        if (stop.stop_requested()) throw Error(ErrorCode::Cancelled, "turn cancelled");
    } catch (const std::exception& e) {
        return fail(e.what());
    }

    const bool via_edits = new_code && !collect.saw_rewrite && !result.fallback_used;
    ChatMessage reply{Role::Assistant, collect.text, std::nullopt, std::nullopt, false};
    try {
        project.write([&](design::Project& p) {
            if (p.current_code().version != snap.code.version) {
                throw Error(ErrorCode::Conflict, "code changed during the turn");
            }
            if (new_code || request.always_version) {
                const std::string content = new_code.value_or(snap.code.content);
                if (!summary) summary = content == snap.code.content ? "No change to the code." : "Rewrote the code.";
                result.code = p.add_code_version(content, request.origin);
                reply.code_change_summary = summary;
                reply.diff_ref = design::DiffRef{snap.code.version, result.code->version};
            }
            p.append_message(reply);
        });
    } catch (const Error& e) {
        if (result.code) throw; // the version is recorded; only the reply failed
        return fail(e.what());
    }
    if (result.code) listener.on_code_version(*result.code, via_edits ? result.patch : std::nullopt);
    listener.on_message(reply);
    result.ok = true;
    result.reply = reply;
    return result;
}

} // namespace designloop::agents
