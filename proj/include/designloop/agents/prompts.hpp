#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "designloop/agents/provider.hpp"
#include "designloop/design/project.hpp"
#include "designloop/patchkit/apply.hpp"

namespace designloop::agents {

// A versioned system prompt shipped with the binary.
struct PromptResource {
    std::string_view name;    // "conversation", "reflections", "assessment"
    std::string_view version; // "v1"
    std::string_view text;

    std::string id() const { return std::string(name) + "." + std::string(version); }
};

std::span<const PromptResource> prompt_resources() noexcept;
// Latest version of `name`; NotFound if there is none.
const PromptResource& prompt_resource(std::string_view name);

ToolSpec edit_tool();
ToolSpec rewrite_tool();
ToolSpec emit_panel_tool();
ToolSpec assessment_tool();

struct PromptOptions {
    std::string model;
    double temperature = 0.2;
    std::size_t transcript_char_budget = 16000;
};

// The state an agent reads, captured under one shared lock.
struct ProjectSnapshot {
    std::string project;
    design::CodeVersion code;
    std::uint64_t panel_version = 0;
    design::DesignPanel panel;
    std::vector<design::ChatMessage> transcript;
};

ProjectSnapshot snapshot(const design::Project& project);

// Newest messages whose text fits the budget (the newest always fits), oldest
// first, preceded by a "[N earlier messages omitted]" stub when any were cut.
std::vector<PromptMessage> transcript_window(const std::vector<design::ChatMessage>& transcript,
                                             std::size_t char_budget);

// Context blocks shared by every agent: numbered code and the live panel.
std::vector<ContextBlock> project_context(const ProjectSnapshot& snap);

PromptBundle conversation_bundle(const ProjectSnapshot& snap, AgentKind agent, std::string user_text,
                                 const PromptOptions& options);
// Follow-up after edits that could not be placed: asks for the whole file.
PromptBundle rewrite_bundle(const ProjectSnapshot& snap, AgentKind agent, const std::string& user_text,
                            const std::string& assistant_text, const patchkit::PatchResult& failed,
                            const PromptOptions& options);
PromptBundle reflections_bundle(const ProjectSnapshot& snap, const PromptOptions& options);
PromptBundle assessment_bundle(const ProjectSnapshot& snap, const design::DesignItem& item,
                               const design::Alternative& alternative, const PromptOptions& options);

// Instruction the DesignAgent sends through the conversation prompt, and the
// line the transcript shows for it.
std::string trial_instruction(const design::DesignItem& item, const design::Alternative& alternative);
std::string trial_transcript_line(const design::Alternative& alternative);

} // namespace designloop::agents
