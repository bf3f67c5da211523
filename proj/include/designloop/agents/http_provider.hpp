#pragma once

#include <string>

#include "designloop/agents/provider.hpp"

namespace designloop::agents {

struct HttpProviderConfig {
    std::string endpoint = "https://api.openai.com"; // scheme://host[:port]
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-4o";
    std::string api_key; // sent as a bearer token when non-empty
    int timeout_seconds = 120;
};

// OpenAI-compatible chat completions with server-sent-event streaming. Text
// deltas become Text chunks and tool-call argument deltas become ToolCall
// fragments tagged with the function name announced for their index.
class HttpProvider : public LlmProvider {
public:
    explicit HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {}

    std::string identity() const override { return "http:" + config_.model; }
    void send(const PromptBundle& request, const ChunkSink& sink, std::stop_token stop) override;

    // Request body for `request`, exposed for tests.
    nlohmann::ordered_json request_body(const PromptBundle& request) const;

private:
    HttpProviderConfig config_;
};

// Incremental decoder for the completion event stream.
class CompletionStreamDecoder {
public:
    explicit CompletionStreamDecoder(const ChunkSink& sink) : sink_(sink) {}
    void feed(std::string_view bytes);
    bool done() const noexcept { return done_; }

private:
    void line(std::string_view line);

    const ChunkSink& sink_;
    std::string buffer_;
    std::vector<std::string> tool_names_;
    bool done_ = false;
};

} // namespace designloop::agents
