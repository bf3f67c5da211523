#include "designloop/agents/scripted_provider.hpp"

#include <fstream>
#include <sstream>

#include "designloop/error.hpp"
#include "designloop/text.hpp"

namespace designloop::agents {

namespace {

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_script(std::size_t line, const std::string& what) {
    throw ParseError("script line " + std::to_string(line) + ": " + what, 0);
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\n') ++j;
        while (j < s.size() && (s[j] == ' ' || s[j] == '\n')) ++j;
        out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string> pieces(std::string_view s, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < s.size(); i += n) out.emplace_back(s.substr(i, n));
    return out;
}

// "name chunk=8" -> ("name", 8)
std::pair<std::string, std::size_t> split_chunk_option(const std::string& rest, std::size_t fallback,
                                                       std::size_t line) {
    std::string head = rest;
    std::size_t chunk = fallback;
    const auto pos = rest.find("chunk=");
    if (pos != std::string::npos) {
        head = trim(rest.substr(0, pos));
        try {
            chunk = std::stoul(rest.substr(pos + 6));
        } catch (const std::exception&) {
            bad_script(line, "bad chunk size");
        }
        if (chunk == 0) bad_script(line, "chunk size must be positive");
    }
    return {head, chunk};
}

} // namespace

bool ScriptEntry::matches(const PromptBundle& request, const std::string& digest) const {
    if (request.agent != agent) return false;
    if (digest_prefix != "*" && !starts_with(digest, digest_prefix)) return false;
    return !contains || request.user_text.find(*contains) != std::string::npos;
}

std::vector<ScriptEntry> parse_script(std::string_view content) {
    std::vector<ScriptEntry> entries;
    const std::vector<std::string> lines = text::split_lines(content);

    struct Block {
        std::string kind; // text | tool | fail
        std::string arg;
        std::vector<std::string> body;
        std::size_t line = 0;
    };
    std::optional<Block> block;

    auto flush = [&] {
        if (!block) return;
        while (!block->body.empty() && trim(block->body.back()).empty()) block->body.pop_back();
        std::string payload;
        for (std::size_t i = 0; i < block->body.size(); ++i) {
            if (i) payload += '\n';
            payload += block->body[i];
        }
        ScriptEntry& entry = entries.back();
        if (entry.failure) bad_script(block->line, "nothing may follow a fail block");
        if (block->kind == "text") {
            const auto [rest, n] = split_chunk_option(block->arg, 0, block->line);
            if (!rest.empty()) bad_script(block->line, "unexpected text after '--- text'");
            for (auto& p : n ? pieces(payload, n) : words(payload)) entry.chunks.push_back(StreamChunk::text_token(p));
        } else if (block->kind == "tool") {
            const auto [name, n] = split_chunk_option(block->arg, 24, block->line);
            if (name.empty()) bad_script(block->line, "tool block needs a name");
            for (auto& p : pieces(payload, n)) entry.chunks.push_back(StreamChunk::tool_fragment(name, p));
        } else {
            if (!payload.empty()) bad_script(block->line, "fail block takes no payload");
            entry.failure = block->arg.empty() ? "scripted failure" : block->arg;
        }
        block.reset();
    };

    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& raw = lines[i];
        const std::size_t line_no = i + 1;
        if (starts_with(raw, "=== ")) {
            flush();
            std::string rest = trim(raw.substr(4));
            ScriptEntry entry;
            entry.line = line_no;
            const auto cpos = rest.find("contains:");
            if (cpos != std::string::npos) {
                entry.contains = trim(rest.substr(cpos + 9));
                rest = trim(rest.substr(0, cpos));
            }
            std::istringstream in(rest);
            std::string agent, digest, extra;
            in >> agent >> digest >> extra;
            const auto kind = agent_from_name(agent);
            if (!kind) bad_script(line_no, "unknown agent '" + agent + "'");
            if (digest.empty()) bad_script(line_no, "missing digest prefix");
            if (!extra.empty()) bad_script(line_no, "unexpected '" + extra + "'");
            entry.agent = *kind;
            entry.digest_prefix = digest;
            entries.push_back(std::move(entry));
        } else if (starts_with(raw, "--- ")) {
            flush();
            if (entries.empty()) bad_script(line_no, "block outside an entry");
            const std::string rest = trim(raw.substr(4));
            if (rest == "end") continue;
            const auto sp = rest.find(' ');
            Block b;
            b.kind = rest.substr(0, sp);
            b.arg = sp == std::string::npos ? "" : trim(rest.substr(sp + 1));
            b.line = line_no;
            if (b.kind != "text" && b.kind != "tool" && b.kind != "fail") {
                bad_script(line_no, "unknown block '" + b.kind + "'");
            }
            block = std::move(b);
        } else if (block) {
            block->body.push_back(raw);
        } else if (!trim(raw).empty() && raw[0] != '#') {
            bad_script(line_no, "text outside a block");
        }
    }
    flush();
    return entries;
}

ScriptedProvider::ScriptedProvider(std::vector<ScriptEntry> entries, std::string name)
    : name_(std::move(name)), entries_(std::move(entries)), used_(entries_.size(), false) {}

std::unique_ptr<ScriptedProvider> ScriptedProvider::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot read script '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::make_unique<ScriptedProvider>(parse_script(ss.str()), path.stem().string());
}

void ScriptedProvider::send(const PromptBundle& request, const ChunkSink& sink, std::stop_token stop) {
    const std::string digest = request.digest();
    std::size_t chosen = entries_.size();
    {
        std::lock_guard lock(mutex_);
        ++calls_;
        if (const auto it = by_digest_.find(digest); it != by_digest_.end()) {
            chosen = it->second;
        } else {
            for (std::size_t i = 0; i < entries_.size(); ++i) {
                if (!used_[i] && entries_[i].matches(request, digest)) {
                    chosen = i;
                    break;
                }
            }
            if (chosen == entries_.size()) {
                throw Error(ErrorCode::Provider, "no scripted response for " + std::string(agent_name(request.agent)) +
                                                     " request " + digest + " (" +
                                                     text::single_line(request.user_text).substr(0, 80) + ")");
            }
            used_[chosen] = true;
            by_digest_[digest] = chosen;
        }
    }
    const ScriptEntry& entry = entries_[chosen];
    for (const auto& chunk : entry.chunks) {
        if (stop.stop_requested()) throw Error(ErrorCode::Cancelled, "request cancelled");
        sink(chunk);
    }
    if (entry.failure) throw Error(ErrorCode::Provider, *entry.failure);
}

std::size_t ScriptedProvider::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::vector<std::size_t> ScriptedProvider::unused_entries() const {
    std::lock_guard lock(mutex_);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!used_[i]) out.push_back(entries_[i].line);
    }
    return out;
}

} // namespace designloop::agents
