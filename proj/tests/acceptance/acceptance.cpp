// Acceptance run: one PASS/FAIL line per criterion. Thresholds are fixed
// here and nowhere else; the exit status is non-zero when any line fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "designloop/error.hpp"
#include "designloop/patchkit/apply.hpp"
#include "designloop/patchkit/edit.hpp"
#include "designloop/patchkit/numbering.hpp"
#include "designloop/patchkit/stream.hpp"
#include "designloop/server/service.hpp"
#include "designloop/store/artifact_store.hpp"
#include "designloop/streamsync/reconciler.hpp"
#include "designloop/text.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "panels.hpp"
#include "scenario.hpp"
#include "temp_dir.hpp"

namespace fs = std::filesystem;
using namespace designloop;
using Json = nlohmann::json;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

// Totals for the logging criterion, filled by every run that talks to a
// provider.
struct CallLedger {
    std::size_t runs = 0;
    std::size_t provider_calls = 0;
    std::size_t exchanges = 0;
    std::size_t log_records = 0;
    std::vector<std::string> mismatches;

    void add(const std::string& run, std::size_t calls, std::size_t logged, std::size_t records) {
        ++runs;
        provider_calls += calls;
        exchanges += logged;
        log_records += records;
        if (calls != logged || calls != records) {
            mismatches.push_back(run + ": calls=" + std::to_string(calls) + " logged=" + std::to_string(logged) +
                                 " records=" + std::to_string(records));
        }
    }
};

CallLedger g_calls;

std::string prefixed(std::size_t number, const std::string& text) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "L%04zu ", number);
    return buf + text;
}

std::string join_prefixed(std::size_t first, const std::vector<std::string>& lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out += '\n';
        out += prefixed(first + i, lines[i]);
    }
    return out;
}

// Independent FNV-1a 64 over raw bytes, in the store's "fnv1a64:<hex>" form.
std::string fnv_checksum(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_raw(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// ---------------------------------------------------------------- patching

struct PlannedEdit {
    std::size_t start = 0; // 0-based true start
    std::size_t length = 0;
    std::size_t claimed = 1;
    std::vector<std::string> old_text;
    std::vector<std::string> new_text;
};

struct EditRequest {
    std::size_t file = 0;
    std::vector<PlannedEdit> edits;
};

std::string payload_of(const EditRequest& request) {
    Json edits = Json::array();
    for (const auto& e : request.edits) {
        edits.push_back({{"old", join_prefixed(e.claimed, e.old_text)}, {"new", join_prefixed(e.claimed, e.new_text)}});
    }
    return Json{{"edits", edits}, {"summary", "generated"}}.dump();
}

std::string expected_code(const std::vector<std::string>& file, const EditRequest& request) {
    std::vector<std::string> lines = file;
    std::vector<PlannedEdit> edits = request.edits;
    std::sort(edits.begin(), edits.end(), [](const auto& a, const auto& b) { return a.start > b.start; });
    for (const auto& e : edits) {
        lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(e.start),
                    lines.begin() + static_cast<std::ptrdiff_t>(e.start + e.length));
        lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(e.start), e.new_text.begin(), e.new_text.end());
    }
    return text::join_lines(lines, true);
}

// A well-posed edit names lines that occur as a block nowhere else in the
// file; a lone blank line or brace is claimed-position ambiguous for any
// resolver.
bool unique_block(const std::vector<std::string>& file, std::size_t start, std::size_t len) {
    for (std::size_t at = 0; at + len <= file.size(); ++at) {
        if (at != start && std::equal(file.begin() + static_cast<std::ptrdiff_t>(at),
                                      file.begin() + static_cast<std::ptrdiff_t>(at + len),
                                      file.begin() + static_cast<std::ptrdiff_t>(start))) {
            return false;
        }
    }
    return true;
}

Verdict patch_robustness() {
    constexpr std::size_t kFiles = 60;
    constexpr std::size_t kRequests = 1000;
    constexpr long kMaxOffset = 8;
    constexpr double kMaxNoise = 0.10;

    gen::Rng rng(4141);
    std::vector<std::vector<std::string>> files;
    for (std::size_t i = 0; i < kFiles; ++i) files.push_back(gen::source_file(rng, gen::uniform(rng, 40, 120)));

    // Edit placement is drawn once; the noisy and the clean corpus differ only
    // in the old-line text.
    std::vector<EditRequest> clean;
    std::vector<EditRequest> noisy;
    std::size_t edit_count = 0;
    for (std::size_t r = 0; r < kRequests; ++r) {
        EditRequest req;
        req.file = r % kFiles;
        const auto& file = files[req.file];
        std::vector<bool> taken(file.size() + 1, false);
        const std::size_t wanted = gen::uniform(rng, 1, 3);
        for (std::size_t attempt = 0; attempt < 30 && req.edits.size() < wanted; ++attempt) {
            const std::size_t len = gen::uniform(rng, 1, 4);
            const std::size_t start = gen::uniform(rng, 0, file.size() - len);
            bool free = true;
            // One untouched line between edits keeps the windows disjoint.
            for (std::size_t i = start == 0 ? 0 : start - 1; i <= std::min(file.size() - 1, start + len); ++i) {
                free &= !taken[i];
            }
            if (!free || !unique_block(file, start, len)) continue;
            for (std::size_t i = start; i < start + len; ++i) taken[i] = true;
            PlannedEdit e;
            e.start = start;
            e.length = len;
            const long claimed = static_cast<long>(start) + 1 + gen::uniform_signed(rng, -kMaxOffset, kMaxOffset);
            e.claimed = static_cast<std::size_t>(std::max(1L, claimed));
            for (std::size_t i = 0; i < len; ++i) e.old_text.push_back(file[start + i]);
            e.new_text = gen::source_file(rng, gen::uniform(rng, 1, 3));
            for (auto& line : e.new_text) line = "/*new*/ " + line;
            req.edits.push_back(std::move(e));
        }
        EditRequest with_noise = req;
        for (auto& e : with_noise.edits) {
            const double ratio = std::uniform_real_distribution<double>(0.0, kMaxNoise)(rng);
            for (auto& line : e.old_text) line = gen::add_noise(rng, line, ratio);
        }
        edit_count += req.edits.size();
        clean.push_back(std::move(req));
        noisy.push_back(std::move(with_noise));
    }

    struct Tally {
        std::size_t applied = 0;
        std::size_t exact = 0;
    };
    auto run = [&](const std::vector<EditRequest>& corpus) {
        Tally t;
        for (const auto& req : corpus) {
            const std::string code = text::join_lines(files[req.file], true);
            const auto result = patchkit::apply_edits(code, patchkit::parse_edit_payload(payload_of(req)));
            if (result.outcome == patchkit::PatchOutcome::FallbackRequired) continue;
            ++t.applied;
            t.exact += result.new_code && *result.new_code == expected_code(files[req.file], req);
        }
        return t;
    };

    const auto t0 = std::chrono::steady_clock::now();
    const Tally n = run(noisy);
    const Tally c = run(clean);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const double noisy_rate = static_cast<double>(n.applied) / kRequests;
    Verdict v;
    v.pass = edit_count >= 1000 && noisy_rate >= 0.90 && c.applied == kRequests && seconds < 10.0;
    std::ostringstream d;
    d << kRequests << " requests, " << edit_count << " edits, " << kFiles << " files; noisy " << n.applied << "/"
      << kRequests << " without fallback (" << n.exact << " on target), clean " << c.applied << "/" << kRequests << " ("
      << c.exact << " on target); " << seconds << " s";
    v.detail = d.str();
    return v;
}

Verdict resolver_oracle() {
    gen::Rng rng(5005);
    patchkit::FuzzPolicy policy;
    std::size_t mismatches = 0;
    std::size_t absent = 0;
    std::string first;
    for (int round = 0; round < 500; ++round) {
        const auto file = gen::source_file(rng, gen::uniform(rng, 5, 80));
        const std::size_t m = gen::uniform(rng, 1, std::min<std::size_t>(5, file.size()));
        const std::size_t true_start = gen::uniform(rng, 0, file.size() - m);
        std::vector<std::string> old_text;
        const double ratio = std::uniform_real_distribution<double>(0.0, 0.3)(rng);
        for (std::size_t i = 0; i < m; ++i) old_text.push_back(gen::add_noise(rng, file[true_start + i], ratio));
        const long claimed = std::max(0L, static_cast<long>(true_start) + gen::uniform_signed(rng, -13, 13));

        patchkit::EditOperation edit;
        for (std::size_t i = 0; i < m; ++i) {
            edit.old_lines.push_back({static_cast<std::size_t>(claimed) + 1 + i, old_text[i]});
        }
        edit.new_lines.push_back({static_cast<std::size_t>(claimed) + 1, "x"});

        const auto expected = oracle::best_alignment(file, old_text, claimed, static_cast<long>(policy.search_radius));
        const auto actual = patchkit::best_window(file, edit, policy);
        bool same = expected.has_value() == actual.has_value();
        if (same && expected) {
            same = actual->start == expected->start && std::fabs(actual->score - expected->score) <= 1e-12;
        }
        absent += !expected;
        if (!same && mismatches++ == 0) first = "round " + std::to_string(round);
    }
    return {mismatches == 0, "500 cases, " + std::to_string(mismatches) + " mismatches" +
                                 (first.empty() ? "" : " (first at " + first + ")") + ", " + std::to_string(absent) +
                                 " without a window"};
}

Verdict numbering_roundtrip() {
    gen::Rng rng(6006);
    const std::vector<std::string> fragments{"L0001 ", "L0001", "L12 ", "L99999 x", "L0000 ", "l0001 ", "L",
                                             "L0042  indented", "\n", "\r\n", " ", "\t", "",  "let x = 1;",
                                             "}",      "L0007\n", "LL0003 ", "L-1 ", "L1e3 "};
    std::size_t failures = 0;
    for (int round = 0; round < 1000; ++round) {
        std::string text;
        const std::size_t parts = gen::uniform(rng, 0, 40);
        for (std::size_t i = 0; i < parts; ++i) {
            text += gen::coin(rng, 0.7) ? gen::pick(rng, fragments) : gen::random_text(rng, 12, "L0123456789 ab\n");
        }
        const auto numbered = patchkit::number_lines(text);
        failures += patchkit::strip_prefixes(numbered.rendered()) != text;
    }
    return {failures == 0, "1000 texts, " + std::to_string(failures) + " failures"};
}

Verdict batch_stream_equivalence() {
    gen::Rng rng(7007);
    std::size_t failures = 0;
    std::size_t cases = 0;
    for (int round = 0; round < 200; ++round) {
        const auto file = gen::source_file(rng, gen::uniform(rng, 10, 50));
        const std::string code = text::join_lines(file, true);
        Json edits = Json::array();
        const std::size_t n = gen::uniform(rng, 1, 4);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t line = gen::uniform(rng, 0, file.size() - 1);
            const std::size_t claimed = line + 1 + gen::uniform(rng, 0, 3);
            const std::string replacement = gen::identifier(rng) + " \"quoted\" \\ back\ttab";
            if (gen::coin(rng, 0.2)) {
                edits.push_back({{"old", ""}, {"new", prefixed(line + 1, replacement)}, {"anchor", line}});
            } else {
                edits.push_back({{"old", prefixed(claimed, gen::add_noise(rng, file[line], 0.08))},
                                 {"new", prefixed(claimed, replacement) + "\n" + prefixed(claimed + 1, "more();")}});
            }
        }
        Json payload{{"edits", edits}};
        if (gen::coin(rng)) payload["summary"] = "edit é " + std::to_string(round);
        const std::string text = payload.dump();
        const auto batch = patchkit::apply_edits(code, patchkit::parse_edit_payload(text));
        for (int split = 0; split < 10; ++split) {
            ++cases;
            const auto chunks = gen::chunk(rng, text, gen::uniform(rng, 1, 60));
            const auto snapshots = patchkit::apply_edit_stream(code, chunks);
            failures += snapshots.empty() || !(snapshots.back() == batch);
        }
    }
    return {failures == 0, std::to_string(cases) + " chunkings of 200 payloads, " + std::to_string(failures) +
                               " failures"};
}

// ---------------------------------------------------------------- panels

std::vector<streamsync::ReconciliationEvent> feed_all(streamsync::Reconciler& r,
                                                      const std::vector<std::string>& chunks) {
    std::vector<streamsync::ReconciliationEvent> events;
    for (const auto& c : chunks) {
        auto batch = r.feed(c);
        events.insert(events.end(), batch.begin(), batch.end());
    }
    auto fin = r.finalize();
    events.insert(events.end(), fin.events.begin(), fin.events.end());
    return events;
}

Verdict reconciler_replay() {
    gen::Rng rng(8008);
    gen::PanelGen pg(rng);
    std::size_t unsound = 0;
    std::size_t variant = 0;
    for (int round = 0; round < 200; ++round) {
        const design::DesignPanel old_panel = pg.panel();
        const design::DesignPanel next = pg.mutate(old_panel, true, true);
        const std::string stream = design::to_stream_json(next).dump();
        std::optional<design::DesignPanel> first;
        for (int split = 0; split < 10; ++split) {
            streamsync::Reconciler r(old_panel);
            const auto events = feed_all(r, gen::chunk(rng, stream, gen::uniform(rng, 1, 60)));
            const auto final_panel = streamsync::reconcile(old_panel, stream).panel;
            design::DesignPanel replay = design::live_view(old_panel);
            streamsync::apply_events(replay, events);
            unsound += !design::same_content(replay, final_panel);
            if (!first) first = final_panel;
            variant += !(final_panel == *first);
        }
    }

    // A requirement streamed again, character by character, is silent for as
    // long as the stream agrees with it.
    const std::string existing = "Track the number of correct and incorrect answers.";
    design::DesignPanel base;
    design::DesignItem item;
    item.id = "r1";
    item.section = design::SectionKind::ConfirmedRequirements;
    item.summary = existing;
    item.origin = design::ItemOrigin::UserConfirmed;
    base.section(design::SectionKind::ConfirmedRequirements).push_back(item);
    std::size_t early_events = 0;
    {
        streamsync::Reconciler r(base);
        early_events += r.feed(R"({"confirmed_requirements":[{"summary":")").size();
        for (char c : std::string("Track the num")) early_events += r.feed(std::string(1, c)).size();
    }
    std::size_t before_divergence = 0;
    {
        const std::string incoming = "Track the number of attempts per word.";
        std::size_t diverge = 0;
        while (diverge < incoming.size() && incoming[diverge] == existing[diverge]) ++diverge;
        streamsync::Reconciler r(base);
        before_divergence += r.feed(R"({"confirmed_requirements":[{"summary":")").size();
        for (std::size_t k = 0; k < diverge; ++k) before_divergence += r.feed(incoming.substr(k, 1)).size();
    }
    Verdict v;
    v.pass = unsound == 0 && variant == 0 && early_events == 0 && before_divergence == 0;
    v.detail = "2000 replays: " + std::to_string(unsound) + " unsound, " + std::to_string(variant) +
               " chunking-dependent; worked pair: " + std::to_string(early_events) + " events for \"Track the num\", " +
               std::to_string(before_divergence) + " before divergence";
    return v;
}

// ---------------------------------------------------------------- scenario

Verdict golden_scenario() {
    const auto run = harness::run_reading_game(DESIGNLOOP_FIXTURE_DIR "/scenario");
    g_calls.add("reading game", run.provider_calls, run.exchanges_logged, run.llm_log.size());
    const auto problems = harness::check_reading_game(run);
    const auto diff = harness::golden_mismatch(harness::render_transcript(run), DESIGNLOOP_GOLDEN_DIR "/reading_game.transcript");
    std::string detail = std::to_string(run.steps.size()) + " steps, " + std::to_string(run.provider_calls) +
                         " provider calls; " + std::to_string(problems.size()) + " failed checks";
    for (const auto& p : problems) detail += "; " + p;
    detail += diff ? "; golden mismatch at " + *diff : "; golden transcript matches";
    return {problems.empty() && !diff, detail};
}

// ---------------------------------------------------------------- trials

// Generated provider with injected faults. Trial and chat turns edit the
// numbered code they are shown; some calls fail before, during or after
// streaming a payload.
class FaultyProvider : public agents::LlmProvider {
public:
    explicit FaultyProvider(std::uint64_t seed) : rng_(seed), panels_(rng_) {}

    std::string identity() const override { return "faulty"; }

    void send(const agents::PromptBundle& request, const agents::ChunkSink& sink, std::stop_token) override {
        std::lock_guard lock(mutex_);
        ++calls_;
        if (request.agent == agents::AgentKind::Reflections) return reflections(sink);
        if (request.tool_choice && *request.tool_choice == "assessment") return assessment(sink);
        std::string code;
        for (const auto& block : request.context) {
            if (block.name == "code") code = patchkit::strip_prefixes(block.text);
        }
        if (request.tool_choice && *request.tool_choice == "rewrite") return rewrite(code, sink);
        turn(code, sink);
    }

    std::size_t calls() {
        std::lock_guard lock(mutex_);
        return calls_;
    }

private:
    [[noreturn]] static void fail(const char* why) { throw Error(ErrorCode::Provider, why); }

    static void stream_tool(const agents::ChunkSink& sink, const std::string& tool, const std::string& args,
                            std::size_t upto) {
        for (std::size_t i = 0; i < upto; i += 7) sink(agents::StreamChunk::tool_fragment(tool, args.substr(i, std::min<std::size_t>(7, upto - i))));
    }

    std::string edit_payload(const std::string& code, bool placeable) {
        const auto lines = text::split_lines(code);
        if (lines.empty()) return {};
        const std::size_t at = gen::uniform(rng_, 0, lines.size() - 1);
        const std::size_t claimed = at + 1;
        const std::string old = placeable ? lines[at] : "zzqx " + gen::identifier(rng_) + " no such line qqq";
        return Json{{"edits", Json::array({{{"old", prefixed(claimed, old)},
                                           {"new", prefixed(claimed, "edited(" + std::to_string(calls_) + ");")}}})},
                    {"summary", "generated edit"}}
            .dump();
    }

    void turn(const std::string& code, const agents::ChunkSink& sink) {
        const std::size_t kind = gen::uniform(rng_, 0, 9);
        if (kind == 0) fail("refused before streaming");
        sink(agents::StreamChunk::text_token("Working "));
        sink(agents::StreamChunk::text_token("on it."));
        if (kind == 1) fail("dropped after text");
        if (kind == 2) throw Error(ErrorCode::Cancelled, "stopped");
        if (kind == 3) return; // text only
        std::string edit = edit_payload(code, kind != 4);
        if (edit.empty() || kind == 5) {
            const std::string args = Json{{"rewrite", "rewritten(" + std::to_string(calls_) + ");\n"}}.dump();
            stream_tool(sink, "rewrite", args, args.size());
            return;
        }
        if (kind == 6) edit = R"({"edits":[{"old":7,"new":"L0001 x"}]})"; // malformed
        if (kind == 7) {
            stream_tool(sink, "edit", edit, edit.size() / 2);
            fail("dropped inside the edit payload");
        }
        stream_tool(sink, "edit", edit, edit.size());
        if (kind == 8) fail("dropped after the edit payload");
    }

    void rewrite(const std::string&, const agents::ChunkSink& sink) {
        if (gen::coin(rng_, 0.4)) fail("rewrite refused");
        const std::string args = Json{{"rewrite", "fallback(" + std::to_string(calls_) + ");\n"}}.dump();
        stream_tool(sink, "rewrite", args, args.size());
    }

    void reflections(const agents::ChunkSink& sink) {
        const std::string args = design::to_stream_json(panels_.panel(3)).dump();
        if (gen::coin(rng_, 0.15)) {
            stream_tool(sink, "emit_panel", args, args.size() / 3);
            fail("reflections dropped");
        }
        stream_tool(sink, "emit_panel", args, args.size());
    }

    void assessment(const agents::ChunkSink& sink) {
        if (gen::coin(rng_, 0.25)) fail("assessment refused");
        const std::string args = Json{{"tradeoff", gen::phrase(rng_, 3) + "; " + gen::phrase(rng_, 2) + "."}}.dump();
        stream_tool(sink, "assessment", args, args.size());
    }

    gen::Rng rng_;
    gen::PanelGen panels_;
    std::mutex mutex_;
    std::size_t calls_ = 0;
};

std::optional<std::pair<std::string, std::string>> any_alternative(gen::Rng& rng, const nlohmann::ordered_json& state) {
    std::vector<std::pair<std::string, std::string>> all;
    for (const char* key : {"design_questions", "confirmed_requirements", "implicit_decisions"}) {
        for (const auto& item : state.at("panel").at("panel").at(key)) {
            if (item.at("change_mark") == "removed") continue;
            for (const auto& alt : item.at("alternatives")) all.emplace_back(item.at("id"), alt.at("id"));
        }
    }
    if (all.empty()) return std::nullopt;
    return gen::pick(rng, all);
}

Verdict trial_atomicity() {
    std::size_t violations = 0;
    std::size_t reverted = 0;
    std::size_t aborted = 0;
    std::size_t committed = 0;
    std::size_t operations = 0;
    std::string first;
    for (int seq = 0; seq < 100; ++seq) {
        harness::TempDir dir("acceptance");
        store::ArtifactStore store(dir.path() / "store");
        FaultyProvider provider(1000 + static_cast<std::uint64_t>(seq));
        server::Service service(store, provider);
        gen::Rng rng(static_cast<std::uint64_t>(seq));
        const std::string id = "p" + std::to_string(seq);
        service.create_project(id, std::string("let a = 1;\nlet b = 2;\nlet c = 3;\n"));
        std::set<std::string> checked;

        auto check_reverted = [&](bool explicit_revert) {
            const auto state = service.state(id);
            if (state.at("trial").is_null() || state.at("trial").at("state") != "reverted") return;
            const std::string tid = state.at("trial").at("id");
            if (!checked.insert(tid).second) return;
            (explicit_revert ? reverted : aborted) += 1;
            const auto& t = state.at("trial");
            const auto base_code = t.at("base_code_version").get<std::uint64_t>();
            const auto base_panel = t.at("base_panel_version").get<std::uint64_t>();
            const auto code_n = store.list_versions(id, store::ArtifactKind::Code).size();
            const auto panel_n = store.list_versions(id, store::ArtifactKind::Panel).size();
            const bool same =
                store.load_artifact(id, store::ArtifactKind::Code, code_n) ==
                    store.load_artifact(id, store::ArtifactKind::Code, base_code) &&
                store.load_artifact(id, store::ArtifactKind::Panel, panel_n) ==
                    store.load_artifact(id, store::ArtifactKind::Panel, base_panel) &&
                state.at("code").at("content") == service.version(id, store::ArtifactKind::Code, base_code).at("content") &&
                state.at("panel").at("panel") == service.version(id, store::ArtifactKind::Panel, base_panel).at("panel");
            if (!same && violations++ == 0) first = "sequence " + std::to_string(seq) + " trial " + tid;
        };

        const std::size_t steps = gen::uniform(rng, 6, 12);
        for (std::size_t step = 0; step < steps; ++step) {
            ++operations;
            const auto state = service.state(id);
            const bool applied = !state.at("trial").is_null() && state.at("trial").at("state") == "applied";
            const std::size_t roll = gen::uniform(rng, 0, 99);
            try {
                if (applied && roll < 50) {
                    service.revert(id, state.at("trial").at("id"));
                    check_reverted(true);
                } else if (applied && roll < 80) {
                    service.start_commit(id, state.at("trial").at("id"))->wait();
                    ++committed;
                } else if (!applied && roll < 50) {
                    const auto target = any_alternative(rng, state);
                    if (!target) {
                        service.start_chat(id, "add something")->wait();
                        continue;
                    }
                    service.start_trial(id, target->first, target->second)->wait();
                    check_reverted(false);
                } else if (roll < 88) {
                    service.start_chat(id, "change step " + std::to_string(step))->wait();
                } else {
                    service.put_code(id, "manual(" + std::to_string(step) + ");\n");
                }
            } catch (const Error& e) {
                if (violations++ == 0) first = "sequence " + std::to_string(seq) + ": " + e.what();
            }
        }
        g_calls.add("trial sequence " + std::to_string(seq), provider.calls(), service.exchanges_logged(),
                    service.llm_log(id).size());
        service.shutdown();
    }
    std::ostringstream d;
    d << "100 sequences, " << operations << " operations; " << aborted << " failed trials rolled back, " << reverted
      << " explicit reverts, " << committed << " commits; " << violations << " violations";
    if (!first.empty()) d << " (first: " << first << ")";
    return {violations == 0 && aborted > 0 && reverted > 0, d.str()};
}

// ---------------------------------------------------------------- store

// Every indexed version is dense, parented, referenced by exactly one file
// whose bytes hash to the recorded checksum.
std::string store_inconsistency(const store::ArtifactStore& s, const std::string& project) {
    const auto metas = s.list_versions(project, store::ArtifactKind::Code);
    const fs::path dir = s.root() / project / "code";
    std::set<std::string> expected{"index.log"};
    for (std::size_t i = 0; i < metas.size(); ++i) {
        const auto& m = metas[i];
        if (m.version != i + 1) return "version gap at " + std::to_string(i + 1);
        if (i == 0 ? m.parent.has_value() : m.parent != std::optional<std::uint64_t>(i)) return "bad parent";
        const std::string bytes = read_raw(dir / (std::to_string(m.version) + ".dat"));
        if (bytes.size() != m.size || fnv_checksum(bytes) != m.checksum) return "checksum mismatch";
        if (s.load_artifact(project, store::ArtifactKind::Code, m.version) != bytes) return "load differs";
        expected.insert(std::to_string(m.version) + ".dat");
    }
    std::set<std::string> present;
    for (const auto& e : fs::directory_iterator(dir)) present.insert(e.path().filename().string());
    if (present != expected) return "stray or missing files";
    const std::string index = read_raw(dir / "index.log");
    if (static_cast<std::size_t>(std::count(index.begin(), index.end(), '\n')) != metas.size() ||
        (!index.empty() && index.back() != '\n')) {
        return "index has a torn line";
    }
    return {};
}

Verdict store_crash_consistency() {
    std::size_t points = 0;
    std::size_t failures = 0;
    std::string first;
    std::size_t schedules = 0;
    auto run = [&](const std::string& label, std::size_t durable, std::function<bool(store::CrashPoint)> crash_now) {
        harness::TempDir dir("crash");
        {
            store::ArtifactStore s(dir.path());
            s.create_project("demo");
            for (std::size_t i = 1; i <= durable; ++i) {
                s.save_artifact("demo", store::ArtifactKind::Code, "v" + std::to_string(i) + "\n", design::VersionOrigin::Chat);
            }
            s.set_crash_hook([&](store::CrashPoint p) {
                if (crash_now(p)) throw store::SimulatedCrash(p);
            });
            try {
                s.save_artifact("demo", store::ArtifactKind::Code, "the crashing version\n", design::VersionOrigin::Chat);
            } catch (const store::SimulatedCrash&) {
            }
        }
        std::string problem;
        try {
            store::ArtifactStore reopened(dir.path());
            const std::size_t n = reopened.list_versions("demo", store::ArtifactKind::Code).size();
            problem = store_inconsistency(reopened, "demo");
            if (problem.empty() && (n < durable || n > durable + 1)) problem = "lost durable versions";
            if (problem.empty()) {
                const auto next = reopened.save_artifact("demo", store::ArtifactKind::Code, "after\n", design::VersionOrigin::Manual);
                if (next.version != n + 1) problem = "next save does not continue the index";
                if (problem.empty()) problem = store_inconsistency(reopened, "demo");
            }
        } catch (const std::exception& e) {
            problem = e.what();
        }
        if (!problem.empty() && failures++ == 0) first = label + ": " + problem;
    };
    for (store::CrashPoint point : store::kCrashPoints) {
        ++points;
        run(std::string(store::crash_point_name(point)), 3, [point](store::CrashPoint p) { return p == point; });
    }
    gen::Rng rng(9009);
    for (int i = 0; i < 100; ++i) {
        ++schedules;
        const std::size_t durable = gen::uniform(rng, 0, 4);
        const auto point = store::kCrashPoints[gen::uniform(rng, 0, std::size(store::kCrashPoints) - 1)];
        run("schedule " + std::to_string(i), durable, [point](store::CrashPoint p) { return p == point; });
    }
    return {failures == 0 && points >= 10, std::to_string(points) + " crash points + " + std::to_string(schedules) +
                                               " random schedules, " + std::to_string(failures) + " inconsistent" +
                                               (first.empty() ? "" : " (first: " + first + ")")};
}

Verdict logging_completeness() {
    std::string detail = std::to_string(g_calls.runs) + " runs, " + std::to_string(g_calls.provider_calls) +
                         " provider calls, " + std::to_string(g_calls.exchanges) + " exchanges logged, " +
                         std::to_string(g_calls.log_records) + " log records";
    for (const auto& m : g_calls.mismatches) detail += "; " + m;
    return {g_calls.runs > 0 && g_calls.mismatches.empty(), detail};
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"patch robustness", patch_robustness},
        {"fuzzy resolver oracle equivalence", resolver_oracle},
        {"numbering round-trip", numbering_roundtrip},
        {"batch/stream equivalence", batch_stream_equivalence},
        {"reconciler replay soundness and chunking invariance", reconciler_replay},
        {"golden scenario reenactment", golden_scenario},
        {"trial atomicity and revert byte-identity", trial_atomicity},
        {"store crash consistency", store_crash_consistency},
        // Last: it audits the provider-backed runs above.
        {"logging completeness", logging_completeness},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        failed += !v.pass;
        std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
