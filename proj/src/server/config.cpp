#include "designloop/server/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "designloop/agents/http_provider.hpp"
#include "designloop/agents/scripted_provider.hpp"
#include "designloop/error.hpp"

namespace designloop::server {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
    throw Error(ErrorCode::InvalidArgument, "config '" + key + "': " + why);
}

// Setters shared by the file and environment paths; the file hands over JSON
// values, the environment hands over strings that are parsed as JSON scalars
// where a number is expected.
using Setter = std::function<void(ServerConfig&, const nlohmann::json&)>;

template <class T>
T as(const std::string& key, const nlohmann::json& v) {
    try {
        if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) bad(key, "expected a string");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) bad(key, "expected a number");
        } else {
            if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<std::int64_t>() < 0)) {
                bad(key, "expected a non-negative integer");
            }
        }
        return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
        bad(key, e.what());
    }
}

const std::map<std::string, std::pair<bool, Setter>>& setters() {
    // bool: the value is textual (env values are taken verbatim).
    static const std::map<std::string, std::pair<bool, Setter>> table{
        {"store_root", {true, [](ServerConfig& c, const nlohmann::json& v) { c.store_root = as<std::string>("store_root", v); }}},
        {"host", {true, [](ServerConfig& c, const nlohmann::json& v) { c.host = as<std::string>("host", v); }}},
        {"port", {false, [](ServerConfig& c, const nlohmann::json& v) { c.port = as<int>("port", v); }}},
        {"provider", {true, [](ServerConfig& c, const nlohmann::json& v) { c.provider = as<std::string>("provider", v); }}},
        {"provider_endpoint",
         {true, [](ServerConfig& c, const nlohmann::json& v) { c.provider_endpoint = as<std::string>("provider_endpoint", v); }}},
        {"provider_path",
         {true, [](ServerConfig& c, const nlohmann::json& v) { c.provider_path = as<std::string>("provider_path", v); }}},
        {"model", {true, [](ServerConfig& c, const nlohmann::json& v) { c.model = as<std::string>("model", v); }}},
        {"api_key_env",
         {true, [](ServerConfig& c, const nlohmann::json& v) { c.api_key_env = as<std::string>("api_key_env", v); }}},
        {"script",
         {true,
          [](ServerConfig& c, const nlohmann::json& v) {
              if (v.is_null()) {
                  c.script.reset();
              } else {
                  c.script = as<std::string>("script", v);
              }
          }}},
        {"provider_timeout_seconds",
         {false, [](ServerConfig& c, const nlohmann::json& v) {
              c.provider_timeout_seconds = as<int>("provider_timeout_seconds", v);
          }}},
        {"assessment_budget",
         {false, [](ServerConfig& c, const nlohmann::json& v) {
              c.assessment_budget = as<std::size_t>("assessment_budget", v);
          }}},
        {"fuzz_radius",
         {false, [](ServerConfig& c, const nlohmann::json& v) { c.fuzz_radius = as<std::size_t>("fuzz_radius", v); }}},
        {"fuzz_threshold",
         {false, [](ServerConfig& c, const nlohmann::json& v) { c.fuzz_threshold = as<double>("fuzz_threshold", v); }}},
        {"match_threshold",
         {false, [](ServerConfig& c, const nlohmann::json& v) { c.match_threshold = as<double>("match_threshold", v); }}},
        {"transcript_char_budget",
         {false, [](ServerConfig& c, const nlohmann::json& v) {
              c.transcript_char_budget = as<std::size_t>("transcript_char_budget", v);
          }}},
        {"event_ring",
         {false, [](ServerConfig& c, const nlohmann::json& v) { c.event_ring = as<std::size_t>("event_ring", v); }}},
    };
    return table;
}

std::string env_name(const std::string& key) {
    std::string out = "DESIGNLOOP_";
    for (char ch : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
}

} // namespace

std::optional<std::string> process_env(std::string_view name) {
    const char* v = std::getenv(std::string(name).c_str());
    if (!v) return std::nullopt;
    return std::string(v);
}

ServerConfig config_from_json(const nlohmann::json& j, ServerConfig base) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        const auto it = setters().find(key);
        if (it == setters().end()) bad(key, "unknown key");
        it->second.second(base, value);
    }
    validate(base);
    return base;
}

ServerConfig apply_env(ServerConfig config, const EnvLookup& env) {
    for (const auto& [key, entry] : setters()) {
        const auto value = env(env_name(key));
        if (!value) continue;
        if (entry.first) {
            entry.second(config, nlohmann::json(*value));
        } else {
            const auto parsed = nlohmann::json::parse(*value, nullptr, false);
            if (parsed.is_discarded()) bad(key, "'" + *value + "' is not a number");
            entry.second(config, parsed);
        }
    }
    validate(config);
    return config;
}

ServerConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
    ServerConfig config;
    if (file) {
        std::ifstream in(*file);
        if (!in) throw Error(ErrorCode::NotFound, "cannot read config " + file->string());
        const auto j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw Error(ErrorCode::InvalidArgument, "config " + file->string() + " is not JSON");
        config = config_from_json(j);
        // Relative paths in a file are relative to the file.
        const auto dir = file->parent_path();
        if (config.store_root.is_relative()) config.store_root = dir / config.store_root;
        if (config.script && config.script->is_relative()) config.script = dir / *config.script;
    }
    return apply_env(std::move(config), env);
}

void validate(const ServerConfig& c) {
    if (c.port < 0 || c.port > 65535) bad("port", "out of range");
    if (c.provider != "scripted" && c.provider != "http") bad("provider", "expected \"scripted\" or \"http\"");
    if (c.provider_timeout_seconds <= 0) bad("provider_timeout_seconds", "must be positive");
    if (!(c.fuzz_threshold > 0.0 && c.fuzz_threshold <= 1.0)) bad("fuzz_threshold", "must be in (0, 1]");
    if (!(c.match_threshold > 0.0 && c.match_threshold <= 1.0)) bad("match_threshold", "must be in (0, 1]");
    if (c.event_ring == 0) bad("event_ring", "must be positive");
    if (c.store_root.empty()) bad("store_root", "must not be empty");
}

nlohmann::ordered_json to_json(const ServerConfig& c) {
    nlohmann::ordered_json j;
    j["store_root"] = c.store_root.string();
    j["host"] = c.host;
    j["port"] = c.port;
    j["provider"] = c.provider;
    j["provider_endpoint"] = c.provider_endpoint;
    j["provider_path"] = c.provider_path;
    j["model"] = c.model;
    j["api_key_env"] = c.api_key_env;
    j["script"] = c.script ? nlohmann::ordered_json(c.script->string()) : nlohmann::ordered_json();
    j["provider_timeout_seconds"] = c.provider_timeout_seconds;
    j["assessment_budget"] = c.assessment_budget;
    j["fuzz_radius"] = c.fuzz_radius;
    j["fuzz_threshold"] = c.fuzz_threshold;
    j["match_threshold"] = c.match_threshold;
    j["transcript_char_budget"] = c.transcript_char_budget;
    j["event_ring"] = c.event_ring;
    return j;
}

agents::AgentConfig agent_config(const ServerConfig& c) {
    agents::AgentConfig a;
    a.prompts.model = c.model;
    a.prompts.transcript_char_budget = c.transcript_char_budget;
    a.fuzz.search_radius = c.fuzz_radius;
    a.fuzz.min_similarity = c.fuzz_threshold;
    a.match.threshold = c.match_threshold;
    a.assessment_budget = c.assessment_budget;
    return a;
}

std::unique_ptr<agents::LlmProvider> make_provider(const ServerConfig& c, const EnvLookup& env) {
    if (c.provider == "scripted") {
        if (!c.script) bad("script", "required by the scripted provider");
        return agents::ScriptedProvider::from_file(*c.script);
    }
    agents::HttpProviderConfig h;
    h.endpoint = c.provider_endpoint;
    h.path = c.provider_path;
    h.model = c.model;
    h.timeout_seconds = c.provider_timeout_seconds;
    if (!c.api_key_env.empty()) h.api_key = env(c.api_key_env).value_or("");
    return std::make_unique<agents::HttpProvider>(std::move(h));
}

} // namespace designloop::server
