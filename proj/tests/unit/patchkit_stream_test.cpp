#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "designloop/error.hpp"
#include "designloop/patchkit/stream.hpp"
#include "designloop/text.hpp"
#include "generators.hpp"

using namespace designloop;
using namespace designloop::patchkit;

namespace {

const std::string kCode = "let a = 1;\nlet b = 2;\nlet c = 3;\nlet d = 4;\n";

std::string payload_for(const std::vector<std::pair<std::string, std::string>>& edits) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [o, n] : edits) list.push_back({{"old", o}, {"new", n}});
    return nlohmann::json{{"edits", list}}.dump();
}

} // namespace

TEST(EditStream, SnapshotOnlyWhenEditCloses) {
    const std::string payload = payload_for({{"L0002 let b = 2;", "L0002 let b = 20;"}});
    const std::vector<std::string> chunks{payload.substr(0, 20), payload.substr(20, 15), payload.substr(35)};
    const auto snapshots = apply_edit_stream(kCode, chunks);
    ASSERT_EQ(snapshots.size(), 1u);
    EXPECT_EQ(snapshots[0].outcome, PatchOutcome::Applied);
    EXPECT_EQ(snapshots[0].new_code, "let a = 1;\nlet b = 20;\nlet c = 3;\nlet d = 4;\n");
}

TEST(EditStream, SnapshotsGrowMonotonically) {
    const std::string payload = payload_for({{"L0001 let a = 1;", "L0001 let a = 10;"},
                                             {"L0003 let c = 3;", "L0003 let c = 30;"},
                                             {"L0004 let d = 4;", "L0004 let d = 40;"}});
    EditStream stream(kCode);
    std::vector<PatchResult> snapshots;
    for (char c : payload) {
        for (auto& s : stream.feed(std::string_view(&c, 1))) snapshots.push_back(std::move(s));
    }
    ASSERT_EQ(snapshots.size(), 3u);
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
        EXPECT_EQ(snapshots[i].applied_edits.size(), i + 1);
        for (std::size_t k = 0; k < i; ++k) EXPECT_EQ(snapshots[i].applied_edits[k], snapshots[i - 1].applied_edits[k]);
    }
    EXPECT_EQ(stream.finish(), snapshots.back());
    EXPECT_EQ(snapshots.back().new_code, "let a = 10;\nlet b = 2;\nlet c = 30;\nlet d = 40;\n");
}

TEST(EditStream, TruncatedStreamReportsPendingEdit) {
    const std::string payload = payload_for({{"L0001 let a = 1;", "L0001 let a = 10;"},
                                             {"L0003 let c = 3;", "L0003 let c = 30;"}});
    const std::size_t cut = payload.find("L0003 let c = 30");
    EditStream stream(kCode);
    EXPECT_EQ(stream.feed(payload.substr(0, cut)).size(), 1u);
    const auto result = stream.finish();
    EXPECT_EQ(result.outcome, PatchOutcome::FallbackRequired);
    ASSERT_EQ(result.failed_edits.size(), 1u);
    EXPECT_EQ(result.failed_edits[0].index, 1u);
    EXPECT_FALSE(result.new_code);
}

TEST(EditStream, NoEditsAtAllThrows) {
    EditStream stream(kCode);
    stream.feed(R"({"edi)");
    EXPECT_THROW(stream.finish(), ParseError);
}

TEST(EditStream, MalformedChunkThrowsFromFeed) {
    EditStream stream(kCode);
    EXPECT_THROW(stream.feed(R"({"edits":[{"old":1,)"), ParseError);
}

TEST(EditStream, FinalResultMatchesBatchForAnyChunking) {
    gen::Rng rng(17);
    for (int round = 0; round < 60; ++round) {
        const auto file = gen::source_file(rng, 30);
        const std::string code = text::join_lines(file, true);
        std::vector<std::pair<std::string, std::string>> raw;
        for (int k = 0; k < 3; ++k) {
            const std::size_t line = gen::uniform(rng, 0, file.size() - 1);
            raw.push_back({"L" + std::to_string(line + 1 + gen::uniform(rng, 0, 2)) + " " + gen::add_noise(rng, file[line], 0.05),
                           "L0001 " + gen::identifier(rng) + "\\ \"quoted\""});
        }
        const std::string payload = payload_for(raw);
        const auto batch = apply_edits(code, parse_edit_payload(payload));
        for (int split = 0; split < 5; ++split) {
            const auto chunks = gen::chunk(rng, payload, gen::uniform(rng, 1, 40));
            const auto snapshots = apply_edit_stream(code, chunks);
            ASSERT_FALSE(snapshots.empty());
            EXPECT_EQ(snapshots.back(), batch);
        }
    }
}
