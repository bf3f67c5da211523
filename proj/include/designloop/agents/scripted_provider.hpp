#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "designloop/agents/provider.hpp"

namespace designloop::agents {

// One canned response. Matching keys on agent kind, a digest prefix ("*"
// matches any) and an optional substring of the request's user text.
struct ScriptEntry {
    AgentKind agent = AgentKind::Conversation;
    std::string digest_prefix = "*";
    std::optional<std::string> contains;
    std::vector<StreamChunk> chunks;
    std::optional<std::string> failure; // raised after the chunks are sent
    std::size_t line = 0;               // position in the fixture, for messages

    bool matches(const PromptBundle& request, const std::string& digest) const;
};

// Fixture format (plain text):
//
//   # comments and blank lines between entries are ignored
//   === <agent> <digest-prefix|*> [contains: <text>]
//   --- text [chunk=N]
//   <payload lines>
//   --- tool <name> [chunk=N]
//   <payload lines>
//   --- fail <message>
//   --- end
//
// Payload lines run up to the next "---" or "===" line; trailing blank lines
// are dropped. "--- end" closes a payload so that comment lines may follow. Text is streamed word by word unless chunk=N asks for N-byte
// pieces; tool arguments default to 24-byte pieces.
std::vector<ScriptEntry> parse_script(std::string_view text);

// Deterministic mock: each request takes the first unused entry that
// matches, and a repeated digest replays the entry it got the first time.
class ScriptedProvider : public LlmProvider {
public:
    explicit ScriptedProvider(std::vector<ScriptEntry> entries, std::string name = "script");
    static std::unique_ptr<ScriptedProvider> from_file(const std::filesystem::path& path);

    std::string identity() const override { return "scripted:" + name_; }
    void send(const PromptBundle& request, const ChunkSink& sink, std::stop_token stop) override;

    std::size_t calls() const;
    std::vector<std::size_t> unused_entries() const; // fixture lines never consumed

private:
    std::string name_;
    std::vector<ScriptEntry> entries_;
    std::vector<bool> used_;
    std::map<std::string, std::size_t> by_digest_;
    std::size_t calls_ = 0;
    mutable std::mutex mutex_;
};

} // namespace designloop::agents
