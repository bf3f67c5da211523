#include "designloop/agents/http_provider.hpp"

#include <httplib.h>

#include <exception>

#include "designloop/error.hpp"

namespace designloop::agents {

nlohmann::ordered_json HttpProvider::request_body(const PromptBundle& request) const {
    std::string system = request.system_text;
    for (const auto& block : request.context) system += "\n\n## " + block.name + "\n" + block.text;

    nlohmann::ordered_json messages = nlohmann::ordered_json::array();
    messages.push_back({{"role", "system"}, {"content", system}});
    for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.text}});
    messages.push_back({{"role", "user"}, {"content", request.user_text}});

    nlohmann::ordered_json body;
    body["model"] = request.model.empty() ? config_.model : request.model;
    body["stream"] = true;
    body["temperature"] = request.temperature;
    body["messages"] = std::move(messages);
    if (!request.tools.empty()) {
        nlohmann::ordered_json tools = nlohmann::ordered_json::array();
        for (const auto& t : request.tools) {
            tools.push_back({{"type", "function"},
                             {"function", {{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}}}});
        }
        body["tools"] = std::move(tools);
    }
    if (request.tool_choice) {
        body["tool_choice"] = {{"type", "function"}, {"function", {{"name", *request.tool_choice}}}};
    }
    return body;
}

void CompletionStreamDecoder::feed(std::string_view bytes) {
    buffer_.append(bytes);
    std::size_t nl;
    while ((nl = buffer_.find('\n')) != std::string::npos) {
        std::string l = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!l.empty() && l.back() == '\r') l.pop_back();
        line(l);
    }
}

void CompletionStreamDecoder::line(std::string_view l) {
    if (done_ || l.substr(0, 5) != "data:") return;
    l.remove_prefix(5);
    if (!l.empty() && l.front() == ' ') l.remove_prefix(1);
    if (l == "[DONE]") {
        done_ = true;
        return;
    }
    nlohmann::json event;
    try {
        event = nlohmann::json::parse(l);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Provider, std::string("malformed completion event: ") + e.what());
    }
    if (event.contains("error")) throw Error(ErrorCode::Provider, "provider error: " + event["error"].dump());
    if (!event.contains("choices") || event["choices"].empty()) return;
    const auto& delta = event["choices"][0].value("delta", nlohmann::json::object());
    if (delta.contains("content") && delta["content"].is_string()) {
        const std::string text = delta["content"];
        if (!text.empty()) sink_(StreamChunk::text_token(text));
    }
    if (delta.contains("tool_calls") && delta["tool_calls"].is_array()) {
        for (const auto& call : delta["tool_calls"]) {
            const std::size_t index = call.value("index", 0);
            if (tool_names_.size() <= index) tool_names_.resize(index + 1);
            const auto& fn = call.value("function", nlohmann::json::object());
            if (fn.contains("name") && fn["name"].is_string()) tool_names_[index] = fn["name"];
            if (fn.contains("arguments") && fn["arguments"].is_string()) {
                const std::string args = fn["arguments"];
                if (!args.empty()) sink_(StreamChunk::tool_fragment(tool_names_[index], args));
            }
        }
    }
}

void HttpProvider::send(const PromptBundle& request, const ChunkSink& sink, std::stop_token stop) {
    httplib::Client client(config_.endpoint);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_connection_timeout(10, 0);

    httplib::Request req;
    req.method = "POST";
    req.path = config_.path;
    req.body = request_body(request).dump();
    req.set_header("Content-Type", "application/json");
    req.set_header("Accept", "text/event-stream");
    if (!config_.api_key.empty()) req.set_header("Authorization", "Bearer " + config_.api_key);

    CompletionStreamDecoder decoder(sink);
    int status = 0;
    std::string error_body;
    std::exception_ptr failure;
    req.response_handler = [&](const httplib::Response& response) {
        status = response.status;
        return true;
    };
    req.content_receiver = [&](const char* data, std::size_t size, std::uint64_t, std::uint64_t) {
        if (stop.stop_requested()) return false;
        if (status != 200) {
            error_body.append(data, size);
            return true;
        }
        try {
            decoder.feed(std::string_view(data, size));
        } catch (...) {
            failure = std::current_exception();
            return false;
        }
        return true;
    };

    httplib::Response response;
    httplib::Error err = httplib::Error::Success;
    const bool ok = client.send(req, response, err);
    if (stop.stop_requested()) throw Error(ErrorCode::Cancelled, "request cancelled");
    if (failure) std::rethrow_exception(failure);
    if (!ok) throw Error(ErrorCode::Provider, "provider request failed: " + httplib::to_string(err));
    if (status != 200) {
        throw Error(ErrorCode::Provider, "provider returned HTTP " + std::to_string(status) + ": " + error_body);
    }
    if (!decoder.done()) throw Error(ErrorCode::Provider, "provider stream ended without [DONE]");
}

} // namespace designloop::agents
