#include <gtest/gtest.h>

#include <set>

#include "designloop/error.hpp"
#include "designloop/streamsync/reconciler.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "panels.hpp"

using namespace designloop;
using namespace designloop::streamsync;
using design::DesignItem;
using design::DesignPanel;
using design::SectionKind;

namespace {

const std::string kTrackOld = "Track the number of correct and incorrect answers.";

DesignItem make_item(std::string id, SectionKind kind, std::string summary, std::string rationale = "because",
                     std::vector<std::pair<std::string, std::string>> alts = {}) {
    DesignItem item;
    item.id = std::move(id);
    item.section = kind;
    item.summary = std::move(summary);
    item.rationale = std::move(rationale);
    if (kind == SectionKind::ConfirmedRequirements) item.origin = design::ItemOrigin::UserConfirmed;
    for (auto& [aid, text] : alts) item.alternatives.push_back({aid, text, std::nullopt, false});
    return item;
}

std::string stream_of(const DesignPanel& panel) { return design::to_stream_json(panel).dump(); }

std::vector<ReconciliationEvent> feed_all(Reconciler& r, const std::vector<std::string>& chunks) {
    std::vector<ReconciliationEvent> events;
    for (const auto& c : chunks) {
        auto batch = r.feed(c);
        events.insert(events.end(), batch.begin(), batch.end());
    }
    auto fin = r.finalize();
    events.insert(events.end(), fin.events.begin(), fin.events.end());
    return events;
}

std::size_t count_kind(const std::vector<ReconciliationEvent>& events, EventKind kind) {
    std::size_t n = 0;
    for (const auto& e : events) n += e.kind == kind;
    return n;
}

} // namespace

// ------------------------------------------------------------ match_score

TEST(MatchScore, WorkedPairIsPerfectPrefix) { EXPECT_DOUBLE_EQ(match_score(kTrackOld, "Track the num"), 1.0); }

TEST(MatchScore, EmptyPrefixMatchesAnything) {
    EXPECT_DOUBLE_EQ(match_score("anything", ""), 1.0);
    EXPECT_DOUBLE_EQ(match_score("", ""), 1.0);
}

TEST(MatchScore, DifferentWordingFallsBelowThreshold) {
    // "display a g" vs "show a grid": distance 9 over 11 bytes.
    EXPECT_NEAR(match_score("Display a grid", "Show a grid"), 2.0 / 11.0, 1e-12);
    EXPECT_FALSE(viable(match_score("Display a grid", "Show a grid"), MatchPolicy{}));
}

TEST(MatchScore, CaseInsensitiveAndAgreesWithOracle) {
    EXPECT_DOUBLE_EQ(match_score("TRACK the Number", "track THE num"), 1.0);
    gen::Rng rng(8);
    for (int i = 0; i < 300; ++i) {
        const std::string a = gen::random_text(rng, 20, "abAB c");
        const std::string b = gen::random_text(rng, 20, "abAB c");
        EXPECT_NEAR(match_score(a, b), oracle::prefix_score(a, b), 1e-12);
    }
}

TEST(PrefixMatcher, IncrementalScoresEqualOracleAtEveryLength) {
    gen::Rng rng(12);
    for (int round = 0; round < 50; ++round) {
        std::vector<std::string> cands;
        for (int c = 0; c < 3; ++c) cands.push_back(gen::random_text(rng, 30, "abcde "));
        MatchPolicy never_decide;
        never_decide.min_prefix = 1000;
        PrefixMatcher m(cands, never_decide);
        const std::string incoming = gen::random_text(rng, 30, "abcdeABC ");
        for (std::size_t len = 1; len <= incoming.size(); ++len) {
            m.advance(incoming.substr(0, len));
            for (std::size_t c = 0; c < cands.size(); ++c) {
                ASSERT_NEAR(m.score(c), oracle::prefix_score(cands[c], incoming.substr(0, len)), 1e-12);
            }
        }
    }
}

TEST(PrefixMatcher, ShortPrefixesStayPending) {
    PrefixMatcher m({"Alpha one", "Zulu two"}, MatchPolicy{});
    m.advance("Qqqqqqq");
    EXPECT_EQ(m.status(), PrefixMatcher::Status::Pending);
    m.advance("Qqqqqqqq");
    EXPECT_EQ(m.status(), PrefixMatcher::Status::New);
}

TEST(PrefixMatcher, AmbiguityHeldUntilDisambiguated) {
    const std::vector<std::string> cands{"Use bright colors for letters", "Use bright colors for pictures"};
    PrefixMatcher m(cands, MatchPolicy{});
    const std::string incoming = "Use bright colors for pictures and sounds";
    bool bound_seen = false;
    for (std::size_t len = 1; len <= incoming.size(); ++len) {
        m.advance(incoming.substr(0, len));
        const std::size_t viable_count = viable(m.score(0), MatchPolicy{}) + viable(m.score(1), MatchPolicy{});
        if (!bound_seen) {
            if (len < 8 || viable_count == 2) {
                EXPECT_EQ(m.status(), PrefixMatcher::Status::Pending) << len;
            }
            bound_seen = m.status() == PrefixMatcher::Status::Bound;
        }
        if (bound_seen) {
            ASSERT_EQ(m.status(), PrefixMatcher::Status::Bound);
            EXPECT_EQ(m.bound(), 1u);
        }
    }
    EXPECT_TRUE(bound_seen);
}

TEST(PrefixMatcher, TieAtCloseGoesToClosestTextThenOriginalOrder) {
    PrefixMatcher tie({"Sound on", "Sound on"}, MatchPolicy{});
    tie.advance("Sound");
    tie.close();
    EXPECT_EQ(tie.bound(), 0u);
    PrefixMatcher exact({"Use colors and sounds", "Use colors"}, MatchPolicy{});
    exact.advance("Use colors");
    exact.close();
    EXPECT_EQ(exact.status(), PrefixMatcher::Status::Bound);
    EXPECT_EQ(exact.bound(), 1u);
}

// ------------------------------------------------------------ partial tree

TEST(TreeBuilder, OpenStringsArePrefixes) {
    const std::string doc =
        R"({"design_questions":[{"summary":"Which \"themes\"?","rationale":"r","important":true,)"
        R"("alternatives":[{"text":"Animals","important":false}]}],"useful_abstractions":[{"term":"Tile","description":"d"}]})";
    const std::string expected = "Which \"themes\"?";
    TreeBuilder b;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        b.feed(doc.substr(i, 1));
        const auto& dq = b.tree().section(SectionKind::DesignQuestions);
        if (!dq.items.empty() && dq.items[0].summary.present) {
            const auto& s = dq.items[0].summary;
            ASSERT_EQ(expected.compare(0, s.text.size(), s.text), 0);
            if (!s.closed) {
                EXPECT_EQ(s.completeness(), Completeness::OpenString);
            }
        }
    }
    const auto& tree = b.tree();
    EXPECT_EQ(tree.completeness(), Completeness::Closed);
    const auto& item = tree.section(SectionKind::DesignQuestions).items.at(0);
    EXPECT_EQ(item.summary.text, expected);
    EXPECT_EQ(item.important, true);
    EXPECT_EQ(item.alternatives.at(0).text.text, "Animals");
    EXPECT_EQ(tree.section(SectionKind::UsefulAbstractions).items.at(0).summary.text, "Tile");
    EXPECT_EQ(tree.order, (std::vector<SectionKind>{SectionKind::DesignQuestions, SectionKind::UsefulAbstractions}));
}

TEST(TreeBuilder, UnknownKeysSkipped) {
    TreeBuilder b;
    b.feed(R"({"thoughts":{"a":["x",{"summary":"no"}]},"implicit_decisions":[{"notes":[1,2],"summary":"S",)"
           R"("extra":{"summary":"deep"},"alternatives":[{"why":"w","text":"T"}]}]})");
    const auto& items = b.tree().section(SectionKind::ImplicitDecisions).items;
    ASSERT_EQ(items.size(), 1u);
    EXPECT_EQ(items[0].summary.text, "S");
    EXPECT_EQ(items[0].alternatives.at(0).text.text, "T");
    EXPECT_FALSE(b.tree().section(SectionKind::DesignQuestions).present);
}

TEST(TreeBuilder, TypeMismatchesAreStreamErrors) {
    for (const char* doc : {R"({"design_questions":{}})", R"({"design_questions":["x"]})",
                            R"({"design_questions":[{"summary":1}]})", R"({"design_questions":[{"important":"yes"}]})",
                            R"({"design_questions":[{"alternatives":{}}]})", R"([])",
                            R"({"design_questions":[],"design_questions":[]})",
                            R"({"design_questions":[{"summary":"a","summary":"b"}]})"}) {
        TreeBuilder b;
        EXPECT_THROW(b.feed(doc), ParseError) << doc;
    }
}

// ------------------------------------------------------------ feed examples

TEST(Reconciler, HeldTentativeMatchEmitsNothing) {
    DesignPanel base;
    base.section(SectionKind::ConfirmedRequirements).push_back(make_item("r1", SectionKind::ConfirmedRequirements, kTrackOld));
    Reconciler r(base);
    EXPECT_TRUE(r.feed(R"({"confirmed_requirements":[{"summary":"Track the num)").empty());
    EXPECT_TRUE(r.feed(R"(ber of correct and incorrect answers.")").empty());
    EXPECT_TRUE(r.feed(R"(,"rationale":"because"}]})").empty());
    const auto result = r.finalize();
    EXPECT_TRUE(result.events.empty());
    EXPECT_TRUE(design::same_content(result.panel, design::live_view(base)));
}

TEST(Reconciler, NewItemInEmptySectionAddsOnceThenGrows) {
    Reconciler r(DesignPanel{});
    const std::vector<std::string> chunks{R"({"confirmed_requirements":[{"summary":"Words)", " are age", "-appropri",
                                          R"(ate"}]})"};
    auto first = r.feed(chunks[0]);
    ASSERT_EQ(first.size(), 1u);
    EXPECT_EQ(first[0].kind, EventKind::ItemAdded);
    EXPECT_EQ(first[0].item->summary, "Words");
    for (std::size_t i = 1; i < chunks.size(); ++i) {
        const auto events = r.feed(chunks[i]);
        ASSERT_EQ(events.size(), 1u) << i;
        EXPECT_EQ(events[0].kind, EventKind::FieldDelta);
        EXPECT_EQ(events[0].mode, DeltaMode::Append);
        EXPECT_EQ(events[0].field, std::vector<std::string>{"summary"});
    }
    const auto result = r.finalize();
    EXPECT_TRUE(result.events.empty());
    EXPECT_EQ(result.panel.section(SectionKind::ConfirmedRequirements).at(0).summary, "Words are age-appropriate");
    EXPECT_EQ(r.display(), result.panel);
}

TEST(Reconciler, DivergenceReportedAtFirstDifferingCharacter) {
    const std::string incoming = "Track the number of attempts per word.";
    std::size_t diverge = 0; // 1-based, from a direct prefix comparison
    for (std::size_t k = 1; k <= incoming.size(); ++k) {
        if (kTrackOld.compare(0, k, incoming, 0, k) != 0) {
            diverge = k;
            break;
        }
    }
    ASSERT_EQ(diverge, 21u);

    DesignPanel base;
    base.section(SectionKind::ConfirmedRequirements).push_back(make_item("r1", SectionKind::ConfirmedRequirements, kTrackOld));
    Reconciler r(base);
    EXPECT_TRUE(r.feed(R"({"confirmed_requirements":[{"summary":")").empty());
    for (std::size_t k = 1; k <= incoming.size(); ++k) {
        const auto events = r.feed(incoming.substr(k - 1, 1));
        if (k < diverge) {
            EXPECT_TRUE(events.empty()) << k;
        } else if (k == diverge) {
            ASSERT_EQ(events.size(), 1u);
            EXPECT_EQ(events[0].kind, EventKind::ItemUpdated);
            EXPECT_EQ(events[0].item_id, "r1");
            EXPECT_EQ(events[0].text, incoming.substr(0, diverge));
        } else {
            ASSERT_EQ(events.size(), 1u);
            EXPECT_EQ(events[0].mode, DeltaMode::Append);
        }
    }
    r.feed(R"("}]})");
    const auto result = r.finalize();
    EXPECT_EQ(result.panel.section(SectionKind::ConfirmedRequirements).at(0).id, "r1");
    EXPECT_EQ(result.panel.section(SectionKind::ConfirmedRequirements).at(0).summary, incoming);
}

// ------------------------------------------------------------ finalize examples

namespace {

DesignPanel three_questions() {
    DesignPanel p;
    p.version = 4;
    auto& dq = p.section(SectionKind::DesignQuestions);
    dq.push_back(make_item("q1", SectionKind::DesignQuestions, "Which reading skills should the game focus on?", "skills",
                           {{"q1.a", "Focus on simple words"}, {"q1.b", "Letter recognition"}}));
    dq.push_back(make_item("q2", SectionKind::DesignQuestions, "What themes would keep the child engaged?", "themes",
                           {{"q2.a", "Animals"}, {"q2.b", "Superheroes"}, {"q2.c", "Fantasy worlds with magical creatures"}}));
    dq.push_back(make_item("q3", SectionKind::DesignQuestions, "How long should one session last?", "attention"));
    dq[1].alternatives[2].tradeoff = "Stimulates imagination; may distract from educational content.";
    return p;
}

} // namespace

TEST(Reconciler, IdenticalStreamIsSilent) {
    const DesignPanel base = three_questions();
    gen::Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        Reconciler r(base);
        const auto events = feed_all(r, gen::chunk(rng, stream_of(base), gen::uniform(rng, 1, 50)));
        EXPECT_TRUE(events.empty());
    }
    const auto result = reconcile(base, stream_of(base));
    EXPECT_EQ(result.panel, design::live_view(base));
}

TEST(Reconciler, DroppedItemAndRewrittenRationale) {
    const DesignPanel base = three_questions();
    DesignPanel next = base;
    auto& dq = next.section(SectionKind::DesignQuestions);
    dq.erase(dq.begin());
    dq[1].rationale = "Six-year-olds have short attention spans.";
    const auto result = reconcile(base, stream_of(next));
    ASSERT_EQ(result.events.size(), 2u);
    EXPECT_EQ(count_kind(result.events, EventKind::ItemRemoved), 1u);
    const auto& delta = result.events[0].kind == EventKind::FieldDelta ? result.events[0] : result.events[1];
    EXPECT_EQ(delta.kind, EventKind::FieldDelta);
    EXPECT_EQ(delta.item_id, "q3");
    EXPECT_EQ(delta.field, std::vector<std::string>{"rationale"});
    // The untouched question keeps its trade-off annotation.
    EXPECT_EQ(result.panel.find_alternative("q2", "q2.c")->tradeoff,
              "Stimulates imagination; may distract from educational content.");
}

TEST(Reconciler, ReorderCarriedAsMatches) {
    const DesignPanel base = three_questions();
    DesignPanel next = base;
    auto& dq = next.section(SectionKind::DesignQuestions);
    std::swap(dq[0], dq[2]);
    std::swap(dq[1].alternatives[0], dq[1].alternatives[2]);
    const auto result = reconcile(base, stream_of(next));
    EXPECT_EQ(count_kind(result.events, EventKind::ItemAdded), 0u);
    EXPECT_EQ(count_kind(result.events, EventKind::ItemRemoved), 0u);
    ASSERT_GT(count_kind(result.events, EventKind::ItemMatched), 0u);
    for (const auto& e : result.events) {
        EXPECT_EQ(e.kind, EventKind::ItemMatched);
        EXPECT_TRUE(e.index.has_value());
    }
    EXPECT_TRUE(design::same_content(result.panel, design::live_view(next)));
}

TEST(Reconciler, NestedChangesReachAlternatives) {
    const DesignPanel base = three_questions();
    DesignPanel next = base;
    auto& q2 = next.section(SectionKind::DesignQuestions)[1];
    q2.alternatives[2].text = "Fantasy worlds with friendly dragons";
    q2.alternatives[0].important = true;
    q2.alternatives.erase(q2.alternatives.begin() + 1);
    q2.important = true;
    const auto result = reconcile(base, stream_of(next));
    std::size_t deep = 0;
    for (const auto& e : result.events) deep += e.kind == EventKind::FieldDelta && e.field.size() >= 2;
    EXPECT_GE(deep, 2u);
    const auto* alt = result.panel.find_alternative("q2", "q2.c");
    ASSERT_NE(alt, nullptr);
    EXPECT_EQ(alt->text, "Fantasy worlds with friendly dragons");
    EXPECT_FALSE(alt->tradeoff.has_value());
    DesignPanel replay = design::live_view(base);
    apply_events(replay, result.events);
    EXPECT_EQ(replay, result.panel);
}

TEST(Reconciler, AlternativesBeyondCapIgnored) {
    const auto result = reconcile(DesignPanel{}, R"({"implicit_decisions":[{"summary":"Pick a layout","alternatives":[)"
                                                 R"({"text":"a"},{"text":"b"},{"text":"c"},{"text":"d"},{"text":"e"}]}]})");
    EXPECT_EQ(result.panel.section(SectionKind::ImplicitDecisions).at(0).alternatives.size(), design::kMaxAlternatives);
}

TEST(Reconciler, FinalizeRequiresClosedRoot) {
    Reconciler r(DesignPanel{});
    r.feed(R"({"design_questions":[)");
    EXPECT_THROW(
        {
            try {
                r.finalize();
            } catch (const Error& e) {
                EXPECT_EQ(e.code(), ErrorCode::InvalidState);
                throw;
            }
        },
        Error);
}

TEST(Reconciler, MalformedChunkFailsTheStream) {
    Reconciler r(DesignPanel{});
    EXPECT_THROW(r.feed(R"({"design_questions":[{"summary":tru})"), ParseError);
    EXPECT_THROW(r.feed("]}"), Error);
    EXPECT_THROW(r.finalize(), Error);
}

TEST(Reconciler, PhasedStreamsKeepAbsentFields) {
    const DesignPanel base = three_questions();
    DesignPanel target = base;
    target.section(SectionKind::DesignQuestions)[0].rationale = "new rationale";
    target.section(SectionKind::DesignQuestions).push_back(
        make_item("x", SectionKind::DesignQuestions, "Should the game read words aloud?", "audio", {{"x.a", "Yes"}}));

    // Phase one names the items; phase two fills in details.
    nlohmann::ordered_json summaries = nlohmann::ordered_json::object();
    summaries["design_questions"] = nlohmann::ordered_json::array();
    for (const auto& item : target.section(SectionKind::DesignQuestions)) {
        summaries["design_questions"].push_back({{"summary", item.summary}});
    }
    auto phase1 = reconcile(base, summaries.dump());
    EXPECT_EQ(phase1.panel.section(SectionKind::DesignQuestions)[0].rationale, "skills");
    phase1.panel.version = base.version + 1;
    const auto phase2 = reconcile(phase1.panel, stream_of(target));
    EXPECT_EQ(design::to_stream_json(phase2.panel), design::to_stream_json(target));
    EXPECT_EQ(phase2.panel.section(SectionKind::DesignQuestions)[0].id, "q1");
}

TEST(Reconciler, GeneratedIdsAreDeterministicAndUnique) {
    DesignPanel base;
    base.version = 7;
    const std::string doc = R"({"design_questions":[{"summary":"First question here","alternatives":[{"text":"x"},{"text":"y"}]},)"
                            R"({"summary":"Second question here"}]})";
    const auto a = reconcile(base, doc);
    const auto b = reconcile(base, doc);
    EXPECT_EQ(a.panel, b.panel);
    const auto& dq = a.panel.section(SectionKind::DesignQuestions);
    EXPECT_EQ(dq[0].id, "g8.dq0");
    EXPECT_EQ(dq[1].id, "g8.dq1");
    EXPECT_NE(dq[0].alternatives[0].id, dq[0].alternatives[1].id);
}

TEST(Events, JsonRoundTrip) {
    const DesignPanel base = three_questions();
    DesignPanel next = base;
    next.section(SectionKind::DesignQuestions)[0].alternatives[0].text = "Focus on sight words";
    next.section(SectionKind::ConfirmedRequirements).push_back(
        make_item("c", SectionKind::ConfirmedRequirements, "New requirement text", "r", {{"c.a", "alt"}}));
    const auto result = reconcile(base, stream_of(next));
    ASSERT_FALSE(result.events.empty());
    for (const auto& e : result.events) EXPECT_EQ(event_from_json(nlohmann::json::parse(to_json(e).dump())), e);
}

// ------------------------------------------------------------ properties

TEST(ReconcilerProperty, ReplaySoundChunkInvariantAndFaithful) {
    gen::Rng rng(31337);
    gen::PanelGen pg(rng);
    for (int round = 0; round < 60; ++round) {
        const DesignPanel old_panel = pg.panel();
        const DesignPanel next = pg.mutate(old_panel, true, true);
        const std::string stream = stream_of(next);
        std::optional<DesignPanel> first;
        for (int split = 0; split < 5; ++split) {
            Reconciler r(old_panel);
            const auto events = feed_all(r, gen::chunk(rng, stream, gen::uniform(rng, 1, 60)));
            const auto final_panel = reconcile(old_panel, stream).panel;
            DesignPanel replay = design::live_view(old_panel);
            apply_events(replay, events);
            ASSERT_TRUE(design::same_content(replay, final_panel)) << "round " << round;
            if (!first) first = final_panel;
            ASSERT_EQ(final_panel, *first);
        }
        EXPECT_EQ(design::to_stream_json(*first).dump(), stream);
    }
}

TEST(ReconcilerProperty, UntouchedItemsNeverFlicker) {
    gen::Rng rng(99);
    gen::PanelGen pg(rng);
    for (int round = 0; round < 60; ++round) {
        const DesignPanel old_panel = pg.panel();
        const DesignPanel next = pg.mutate(old_panel, false, true);
        std::set<std::string> untouched;
        for (auto kind : design::kSections) {
            for (const auto& item : next.section(kind)) {
                const auto* before = old_panel.find_item(item.id);
                if (before && design::same_content(*before, item)) untouched.insert(item.id);
            }
        }
        const std::string stream = stream_of(next);
        for (int split = 0; split < 4; ++split) {
            Reconciler r(old_panel);
            for (const auto& e : feed_all(r, gen::chunk(rng, stream, gen::uniform(rng, 1, 80)))) {
                EXPECT_EQ(untouched.count(e.item_id), 0u) << "round " << round << " item " << e.item_id;
            }
        }
    }
}
