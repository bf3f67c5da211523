#include "designloop/agents/provider.hpp"

#include "designloop/checksum.hpp"
#include "designloop/error.hpp"

namespace designloop::agents {

std::string_view agent_name(AgentKind agent) noexcept {
    switch (agent) {
    case AgentKind::Conversation: return "conversation";
    case AgentKind::Reflections: return "reflections";
    case AgentKind::Design: return "design";
    }
    return "unknown";
}

std::optional<AgentKind> agent_from_name(std::string_view name) noexcept {
    for (AgentKind a : {AgentKind::Conversation, AgentKind::Reflections, AgentKind::Design}) {
        if (agent_name(a) == name) return a;
    }
    return std::nullopt;
}

nlohmann::ordered_json PromptBundle::to_json() const {
    nlohmann::ordered_json j;
    j["agent"] = agent_name(agent);
    j["prompt_version"] = prompt_version;
    j["model"] = model;
    j["temperature"] = temperature;
    j["system"] = system_text;
    nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
    for (const auto& b : context) blocks.push_back({{"name", b.name}, {"text", b.text}});
    j["context"] = std::move(blocks);
    nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"text", m.text}});
    j["messages"] = std::move(msgs);
    j["user"] = user_text;
    nlohmann::ordered_json tools_json = nlohmann::ordered_json::array();
    for (const auto& t : tools) {
        tools_json.push_back({{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}});
    }
    j["tools"] = std::move(tools_json);
    j["tool_choice"] = tool_choice ? nlohmann::ordered_json(*tool_choice) : nlohmann::ordered_json(nullptr);
    return j;
}

std::string PromptBundle::canonical() const { return to_json().dump(); }

std::string PromptBundle::digest() const { return to_hex64(fnv1a64(canonical())); }

nlohmann::ordered_json to_json(const StreamChunk& chunk) {
    if (chunk.kind == StreamChunk::Kind::Text) return {{"text", chunk.text}};
    return {{"tool", chunk.tool}, {"args", chunk.text}};
}

StreamChunk chunk_from_json(const nlohmann::json& j) {
    if (j.contains("tool")) return StreamChunk::tool_fragment(j.at("tool"), j.at("args"));
    return StreamChunk::text_token(j.at("text"));
}

nlohmann::ordered_json to_json(const LlmExchange& e) {
    nlohmann::ordered_json j;
    j["timestamp"] = e.timestamp;
    j["agent"] = agent_name(e.agent);
    j["project"] = e.project;
    j["provider"] = e.provider;
    j["prompt_version"] = e.prompt_version;
    j["digest"] = e.digest;
    j["request"] = e.request;
    nlohmann::ordered_json chunks = nlohmann::ordered_json::array();
    for (const auto& c : e.response) chunks.push_back(to_json(c));
    j["response"] = std::move(chunks);
    j["error"] = e.error ? nlohmann::ordered_json(*e.error) : nlohmann::ordered_json(nullptr);
    return j;
}

LlmExchange exchange_from_json(const nlohmann::json& j) {
    LlmExchange e;
    e.timestamp = j.at("timestamp");
    const auto agent = agent_from_name(j.at("agent").get<std::string>());
    if (!agent) throw Error(ErrorCode::Corrupt, "unknown agent in exchange record");
    e.agent = *agent;
    e.project = j.at("project");
    e.provider = j.at("provider");
    e.prompt_version = j.at("prompt_version");
    e.digest = j.at("digest");
    e.request = j.at("request");
    for (const auto& c : j.at("response")) e.response.push_back(chunk_from_json(c));
    if (!j.at("error").is_null()) e.error = j.at("error").get<std::string>();
    return e;
}

RecordingProvider::RecordingProvider(LlmProvider& inner, Recorder recorder, Clock clock)
    : inner_(inner), recorder_(std::move(recorder)), clock_(std::move(clock)) {}

void RecordingProvider::send(const PromptBundle& request, const ChunkSink& sink, std::stop_token stop) {
    LlmExchange exchange;
    exchange.timestamp = clock_();
    exchange.agent = request.agent;
    exchange.project = request.project;
    exchange.provider = inner_.identity();
    exchange.prompt_version = request.prompt_version;
    exchange.digest = request.digest();
    exchange.request = request.to_json();
    ++sends_;
    try {
        inner_.send(
            request,
            [&](const StreamChunk& chunk) {
                exchange.response.push_back(chunk);
                sink(chunk);
            },
            stop);
    } catch (const std::exception& e) {
        exchange.error = e.what();
        recorder_(exchange);
        throw;
    }
    recorder_(exchange);
}

} // namespace designloop::agents
