#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace designloop::agents {

enum class AgentKind { Conversation, Reflections, Design };

std::string_view agent_name(AgentKind agent) noexcept;
std::optional<AgentKind> agent_from_name(std::string_view name) noexcept;

struct ToolSpec {
    std::string name;
    std::string description;
    nlohmann::ordered_json parameters; // JSON schema of the arguments object
};

struct PromptMessage {
    std::string role; // "user" | "assistant"
    std::string text;
};

struct ContextBlock {
    std::string name;
    std::string text;
};

// Everything a provider needs for one completion. The digest covers the
// request content only; `project` is routing metadata for the exchange log.
struct PromptBundle {
    AgentKind agent = AgentKind::Conversation;
    std::string project;
    std::string prompt_version;
    std::string system_text;
    std::vector<ContextBlock> context;
    std::vector<PromptMessage> messages; // transcript window, oldest first
    std::string user_text;               // the request being answered
    std::vector<ToolSpec> tools;
    std::optional<std::string> tool_choice; // forces one tool when set
    double temperature = 0.2;
    std::string model;

    nlohmann::ordered_json to_json() const;
    std::string canonical() const; // compact to_json(), the digested form
    std::string digest() const;    // 16 hex digits of FNV-1a 64
};

struct StreamChunk {
    enum class Kind { Text, ToolCall };
    Kind kind = Kind::Text;
    std::string tool; // tool name, ToolCall only
    std::string text; // text token or argument fragment

    static StreamChunk text_token(std::string t) { return {Kind::Text, {}, std::move(t)}; }
    static StreamChunk tool_fragment(std::string name, std::string t) {
        return {Kind::ToolCall, std::move(name), std::move(t)};
    }
    bool operator==(const StreamChunk&) const = default;
};

nlohmann::ordered_json to_json(const StreamChunk& chunk);
StreamChunk chunk_from_json(const nlohmann::json& j);

using ChunkSink = std::function<void(const StreamChunk&)>;

// A chat-completion backend. send() delivers the response through `sink` in
// order and returns when it is complete; failures throw Error(Provider) and
// an honoured stop request throws Error(Cancelled). Chunks delivered before a
// failure stay delivered.
class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    virtual std::string identity() const = 0;
    virtual void send(const PromptBundle& request, const ChunkSink& sink, std::stop_token stop) = 0;
};

struct LlmExchange {
    std::int64_t timestamp = 0; // ms since the Unix epoch
    AgentKind agent = AgentKind::Conversation;
    std::string project;
    std::string provider;
    std::string prompt_version;
    std::string digest;
    nlohmann::ordered_json request; // PromptBundle::to_json()
    std::vector<StreamChunk> response;
    std::optional<std::string> error;
};

nlohmann::ordered_json to_json(const LlmExchange& exchange);
LlmExchange exchange_from_json(const nlohmann::json& j);

// Decorator that records exactly one LlmExchange per send, failed or not,
// before the result reaches the caller.
class RecordingProvider : public LlmProvider {
public:
    using Recorder = std::function<void(const LlmExchange&)>;
    using Clock = std::function<std::int64_t()>;

    RecordingProvider(LlmProvider& inner, Recorder recorder, Clock clock);

    std::string identity() const override { return inner_.identity(); }
    void send(const PromptBundle& request, const ChunkSink& sink, std::stop_token stop) override;

    std::uint64_t sends() const noexcept { return sends_; }

private:
    LlmProvider& inner_;
    Recorder recorder_;
    Clock clock_;
    std::atomic<std::uint64_t> sends_{0};
};

} // namespace designloop::agents
