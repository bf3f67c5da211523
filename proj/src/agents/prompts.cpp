#include "designloop/agents/prompts.hpp"

#include "designloop/design/panel.hpp"
#include "designloop/error.hpp"
#include "designloop/patchkit/numbering.hpp"
#include "designloop/text.hpp"

namespace designloop::agents {

using nlohmann::ordered_json;

const PromptResource& prompt_resource(std::string_view name) {
    const PromptResource* best = nullptr;
    for (const auto& r : prompt_resources()) {
        if (r.name == name && (!best || r.version > best->version)) best = &r;
    }
    if (!best) throw Error(ErrorCode::NotFound, "no prompt named '" + std::string(name) + "'");
    return *best;
}

namespace {

ordered_json string_schema(std::string_view description) {
    return {{"type", "string"}, {"description", description}};
}

ordered_json string_list_schema() { return {{"type", "array"}, {"items", {{"type", "string"}}}}; }

ordered_json object_schema(ordered_json properties, std::vector<std::string> required) {
    return {{"type", "object"}, {"properties", std::move(properties)}, {"required", std::move(required)}};
}

ordered_json item_schema() {
    ordered_json alternative = object_schema(
        {{"text", {{"type", "string"}}}, {"important", {{"type", "boolean"}}}}, {"text"});
    return object_schema({{"summary", {{"type", "string"}}},
                          {"rationale", {{"type", "string"}}},
                          {"important", {{"type", "boolean"}}},
                          {"alternatives", {{"type", "array"}, {"items", alternative}}}},
                         {"summary"});
}

std::string render_message(const design::ChatMessage& m) {
    std::string out = m.error ? "[turn failed] " + m.text : m.text;
    if (m.code_change_summary) out += "\n[code change: " + *m.code_change_summary + "]";
    return out;
}

PromptBundle base_bundle(const ProjectSnapshot& snap, AgentKind agent, std::string_view prompt,
                         const PromptOptions& options) {
    const PromptResource& resource = prompt_resource(prompt);
    PromptBundle b;
    b.agent = agent;
    b.project = snap.project;
    b.prompt_version = resource.id();
    b.system_text = std::string(resource.text);
    b.context = project_context(snap);
    b.model = options.model;
    b.temperature = options.temperature;
    return b;
}

} // namespace

ToolSpec edit_tool() {
    ordered_json edit = object_schema(
        {{"old", string_schema("Replaced lines, each with its L#### prefix. Empty for a pure insertion.")},
         {"new", string_schema("Replacement lines, each with its L#### prefix.")},
         {"anchor", {{"type", "integer"}, {"description", "For insertions: insert after this line (0 = top)."}}}},
        {"old", "new"});
    return {"edit", "Replace numbered lines of the current program.",
            object_schema({{"edits", {{"type", "array"}, {"items", std::move(edit)}}},
                           {"summary", string_schema("One sentence describing the change.")}},
                          {"edits"})};
}

ToolSpec rewrite_tool() {
    return {"rewrite", "Replace the whole program.",
            object_schema({{"rewrite", string_schema("The complete new file, without line prefixes.")},
                           {"summary", string_schema("One sentence describing the change.")}},
                          {"rewrite"})};
}

ToolSpec emit_panel_tool() {
    ordered_json items = {{"type", "array"}, {"items", item_schema()}};
    ordered_json abstraction = object_schema({{"term", {{"type", "string"}}}, {"description", {{"type", "string"}}}},
                                             {"term"});
    return {"emit_panel", "Publish the complete design panel.",
            object_schema({{"design_questions", items},
                           {"confirmed_requirements", items},
                           {"implicit_decisions", items},
                           {"useful_abstractions", {{"type", "array"}, {"items", std::move(abstraction)}}}},
                          {})};
}

ToolSpec assessment_tool() {
    return {"assessment", "Report the projected consequences of one alternative.",
            object_schema({{"tradeoff", string_schema("One sentence: main benefit; main cost.")},
                           {"goal_impacts", string_list_schema()},
                           {"new_requirements", string_list_schema()},
                           {"new_questions", string_list_schema()}},
                          {"tradeoff"})};
}

ProjectSnapshot snapshot(const design::Project& project) {
    return {project.id(), project.current_code(), project.current_panel().version, project.current_panel(),
            project.transcript()};
}

std::vector<PromptMessage> transcript_window(const std::vector<design::ChatMessage>& transcript,
                                             std::size_t char_budget) {
    std::vector<PromptMessage> kept;
    std::size_t used = 0;
    std::size_t i = transcript.size();
    while (i > 0) {
        const auto& m = transcript[i - 1];
        std::string text = render_message(m);
        if (!kept.empty() && used + text.size() > char_budget) break;
        used += text.size();
        kept.push_back({m.role == design::Role::User ? "user" : "assistant", std::move(text)});
        --i;
    }
    std::vector<PromptMessage> out;
    if (i > 0) out.push_back({"user", "[" + std::to_string(i) + " earlier messages omitted]"});
    out.insert(out.end(), kept.rbegin(), kept.rend());
    return out;
}

std::vector<ContextBlock> project_context(const ProjectSnapshot& snap) {
    return {{"code", patchkit::number_lines(snap.code.content).rendered()},
            {"design panel", design::to_stream_json(snap.panel).dump(2)}};
}

PromptBundle conversation_bundle(const ProjectSnapshot& snap, AgentKind agent, std::string user_text,
                                 const PromptOptions& options) {
    PromptBundle b = base_bundle(snap, agent, "conversation", options);
    b.messages = transcript_window(snap.transcript, options.transcript_char_budget);
    b.user_text = std::move(user_text);
    b.tools = {edit_tool(), rewrite_tool()};
    return b;
}

PromptBundle rewrite_bundle(const ProjectSnapshot& snap, AgentKind agent, const std::string& user_text,
                            const std::string& assistant_text, const patchkit::PatchResult& failed,
                            const PromptOptions& options) {
    PromptBundle b = base_bundle(snap, agent, "conversation", options);
    b.messages = transcript_window(snap.transcript, options.transcript_char_budget);
    b.messages.push_back({"user", user_text});
    b.messages.push_back({"assistant", assistant_text});
    std::string request = "Your edits could not be placed in the current program:";
    for (const auto& f : failed.failed_edits) {
        request += "\n- edit " + std::to_string(f.index + 1) + ": " + f.reason;
    }
    request += "\nCall `rewrite` with the complete updated program instead.";
    b.user_text = std::move(request);
    b.tools = {rewrite_tool()};
    b.tool_choice = "rewrite";
    return b;
}

PromptBundle reflections_bundle(const ProjectSnapshot& snap, const PromptOptions& options) {
    PromptBundle b = base_bundle(snap, AgentKind::Reflections, "reflections", options);
    b.messages = transcript_window(snap.transcript, options.transcript_char_budget);
    b.user_text = "Update the design panel for the conversation so far.";
    b.tools = {emit_panel_tool()};
    b.tool_choice = "emit_panel";
    return b;
}

PromptBundle assessment_bundle(const ProjectSnapshot& snap, const design::DesignItem& item,
                               const design::Alternative& alternative, const PromptOptions& options) {
    PromptBundle b = base_bundle(snap, AgentKind::Design, "assessment", options);
    b.user_text = "Assess the alternative \"" + alternative.text + "\" for the design item \"" + item.summary + "\".";
    b.tools = {assessment_tool()};
    b.tool_choice = "assessment";
    return b;
}

std::string trial_instruction(const design::DesignItem& item, const design::Alternative& alternative) {
    return "Apply this alternative to the project: \"" + alternative.text + "\" (design item: \"" + item.summary +
           "\"). Change the code to match and summarize the change.";
}

std::string trial_transcript_line(const design::Alternative& alternative) { return "Try: " + alternative.text; }

} // namespace designloop::agents
