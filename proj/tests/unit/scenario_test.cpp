#include <gtest/gtest.h>

#include "scenario.hpp"

namespace {

const harness::ScenarioRun& reading_game() {
    static const harness::ScenarioRun run = harness::run_reading_game(DESIGNLOOP_FIXTURE_DIR "/scenario");
    return run;
}

} // namespace

TEST(ReadingGame, ScenarioFactsHold) {
    for (const auto& problem : harness::check_reading_game(reading_game())) ADD_FAILURE() << problem;
}

TEST(ReadingGame, TranscriptMatchesGolden) {
    const auto diff =
        harness::golden_mismatch(harness::render_transcript(reading_game()), DESIGNLOOP_GOLDEN_DIR "/reading_game.transcript");
    EXPECT_FALSE(diff) << *diff;
}

TEST(ReadingGame, RerunIsByteIdentical) {
    const auto again = harness::run_reading_game(DESIGNLOOP_FIXTURE_DIR "/scenario");
    EXPECT_EQ(harness::render_transcript(again), harness::render_transcript(reading_game()));
}
