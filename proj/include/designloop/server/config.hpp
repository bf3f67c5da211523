#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "designloop/agents/agents.hpp"

namespace designloop::server {

// Every key of the config file; each can be overridden by the environment
// variable DESIGNLOOP_<KEY> (upper-cased).
struct ServerConfig {
    std::filesystem::path store_root = "designloop-data";
    std::string host = "127.0.0.1";
    int port = 8080;

    std::string provider = "scripted"; // "scripted" or "http"
    std::string provider_endpoint = "https://api.openai.com";
    std::string provider_path = "/v1/chat/completions";
    std::string model = "gpt-4o";
    std::string api_key_env = "OPENAI_API_KEY"; // name of the variable holding the key
    std::optional<std::filesystem::path> script;   // fixture for the scripted provider
    int provider_timeout_seconds = 120;

    std::size_t assessment_budget = 6;
    std::size_t fuzz_radius = 10;
    double fuzz_threshold = 0.85;
    double match_threshold = 0.85;
    std::size_t transcript_char_budget = 16000;
    std::size_t event_ring = 1024;
};

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;
std::optional<std::string> process_env(std::string_view name);

// Unknown keys and ill-typed or out-of-range values are InvalidArgument.
ServerConfig config_from_json(const nlohmann::json& j, ServerConfig base = {});
ServerConfig apply_env(ServerConfig config, const EnvLookup& env);
ServerConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env = process_env);
void validate(const ServerConfig& config);
nlohmann::ordered_json to_json(const ServerConfig& config);

agents::AgentConfig agent_config(const ServerConfig& config);
std::unique_ptr<agents::LlmProvider> make_provider(const ServerConfig& config, const EnvLookup& env = process_env);

} // namespace designloop::server
