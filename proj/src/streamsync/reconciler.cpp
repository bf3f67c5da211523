#include "designloop/streamsync/reconciler.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <utility>

#include "designloop/error.hpp"
#include "designloop/text.hpp"

namespace designloop::streamsync {

using design::Alternative;
using design::DesignItem;
using design::DesignPanel;
using design::SectionKind;

double match_score(std::string_view existing, std::string_view prefix) {
    if (prefix.empty()) return 1.0;
    const std::string head = text::to_lower_ascii(existing.substr(0, std::min(existing.size(), prefix.size())));
    return text::similarity(head, text::to_lower_ascii(prefix));
}

bool viable(double score, const MatchPolicy& policy) noexcept { return score + 1e-9 >= policy.threshold; }

// ------------------------------------------------------------ PrefixMatcher

PrefixMatcher::PrefixMatcher(std::vector<std::string> candidates, MatchPolicy policy) : policy_(policy) {
    for (auto& c : candidates) {
        lowered_.push_back(text::to_lower_ascii(c));
        std::vector<std::size_t> row(lowered_.back().size() + 1);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = j;
        rows_.push_back(std::move(row));
    }
    if (lowered_.empty()) status_ = Status::New;
}

double PrefixMatcher::score(std::size_t candidate) const {
    const std::size_t n = consumed_;
    if (n == 0) return 1.0;
    const std::size_t m = std::min(n, lowered_[candidate].size());
    return 1.0 - static_cast<double>(rows_[candidate][m]) / static_cast<double>(n);
}

void PrefixMatcher::advance(std::string_view text) {
    while (consumed_ < text.size()) {
        if (status_ != Status::Pending) {
            consumed_ = text.size();
            return;
        }
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(text[consumed_])));
        text_ += c;
        const std::size_t i = ++consumed_;
        for (std::size_t k = 0; k < lowered_.size(); ++k) {
            const std::string& e = lowered_[k];
            auto& row = rows_[k];
            std::size_t diagonal = row[0];
            row[0] = i;
            for (std::size_t j = 1; j <= e.size(); ++j) {
                const std::size_t above = row[j];
                row[j] = std::min({above + 1, row[j - 1] + 1, diagonal + (e[j - 1] == c ? 0 : 1)});
                diagonal = above;
            }
        }
        decide_at_threshold();
    }
}

void PrefixMatcher::decide_at_threshold() {
    if (consumed_ < policy_.min_prefix) return;
    std::size_t count = 0;
    std::size_t which = 0;
    for (std::size_t k = 0; k < lowered_.size(); ++k) {
        if (viable(score(k), policy_)) {
            ++count;
            which = k;
        }
    }
    if (count == 0) {
        status_ = Status::New;
    } else if (count == 1) {
        status_ = Status::Bound;
        bound_ = which;
    }
}

void PrefixMatcher::close() {
    if (status_ != Status::Pending) return;
    std::optional<std::size_t> best;
    double best_score = 0;
    double best_overall = 0;
    for (std::size_t k = 0; k < lowered_.size(); ++k) {
        const double s = score(k);
        if (!viable(s, policy_)) continue;
        const double overall = text::similarity(lowered_[k], text_);
        if (!best || s > best_score + 1e-12 || (s >= best_score - 1e-12 && overall > best_overall + 1e-12)) {
            best = k;
            best_score = s;
            best_overall = overall;
        }
    }
    if (best) {
        status_ = Status::Bound;
        bound_ = *best;
    } else {
        status_ = Status::New;
    }
}

// --------------------------------------------------------------- Reconciler

namespace {

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

// Progressive prefix rule: while the incoming text is still open and is a
// prefix of the existing text, the existing text stands.
std::string desired_text(const PartialText& in, const std::string* old) {
    if (!old) return in.text;
    if (!in.present) return *old;
    if (!in.closed && starts_with(*old, in.text)) return *old;
    return in.text;
}

struct Decision {
    bool decided = false;
    bool is_new = false;
    std::size_t old_index = 0;
    std::string id;
    bool added = false;
};

struct AltState {
    std::optional<PrefixMatcher> matcher;
    std::vector<std::size_t> candidates; // old alternative indices
    Decision d;
};

struct ItemState {
    std::optional<PrefixMatcher> matcher;
    std::vector<std::size_t> candidates; // old item indices
    Decision d;
    std::vector<AltState> alts;
    std::vector<bool> old_alt_taken;
    bool alts_settled = false;
};

struct SectionState {
    std::vector<ItemState> items;
    std::vector<bool> old_taken;
    bool settled = false;
};

} // namespace

struct Reconciler::State {
    DesignPanel base;
    DesignPanel display;
    MatchPolicy policy;
    TreeBuilder builder;
    std::array<SectionState, 4> sections;
    std::uint64_t generation = 0;
    std::set<std::string> used_ids;
    bool failed = false;
    bool finalized = false;
    std::vector<ReconciliationEvent> out;

    // ---- emission

    void emit(ReconciliationEvent e) {
        apply_event(display, e);
        out.push_back(std::move(e));
    }

    ReconciliationEvent event(EventKind kind, SectionKind section, const std::string& item_id,
                              std::vector<std::string> field = {}) {
        ReconciliationEvent e;
        e.kind = kind;
        e.section = section;
        e.item_id = item_id;
        e.field = std::move(field);
        return e;
    }

    void emit_text(EventKind set_kind, SectionKind section, const std::string& item_id,
                   std::vector<std::string> field, const std::string& current, const std::string& desired) {
        if (current == desired) return;
        if (starts_with(desired, current)) {
            auto e = event(EventKind::FieldDelta, section, item_id, std::move(field));
            e.mode = DeltaMode::Append;
            e.text = desired.substr(current.size());
            emit(std::move(e));
        } else {
            if (set_kind == EventKind::ItemUpdated) field.clear();
            auto e = event(set_kind, section, item_id, std::move(field));
            e.mode = DeltaMode::Set;
            e.text = desired;
            emit(std::move(e));
        }
    }

    void emit_flag(SectionKind section, const std::string& item_id, std::vector<std::string> field, bool current,
                   bool desired) {
        if (current == desired) return;
        auto e = event(EventKind::FieldDelta, section, item_id, std::move(field));
        e.text = desired ? "true" : "false";
        emit(std::move(e));
    }

    // ---- display lookups

    std::vector<DesignItem>& shown(SectionKind kind) { return display.section(kind); }

    std::size_t shown_index(SectionKind kind, const std::string& id) {
        const auto& items = shown(kind);
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (items[i].id == id) return i;
        }
        throw Error(ErrorCode::InvalidState, "reconciler lost track of item '" + id + "'");
    }

    DesignItem& shown_item(SectionKind kind, const std::string& id) { return shown(kind)[shown_index(kind, id)]; }

    std::size_t shown_alt_index(DesignItem& item, const std::string& id) {
        for (std::size_t i = 0; i < item.alternatives.size(); ++i) {
            if (item.alternatives[i].id == id) return i;
        }
        throw Error(ErrorCode::InvalidState, "reconciler lost track of alternative '" + id + "'");
    }

    // ---- ids

    std::string fresh_id(std::string candidate) {
        std::string id = candidate;
        for (int n = 1; used_ids.count(id) != 0; ++n) id = candidate + "-" + std::to_string(n);
        used_ids.insert(id);
        return id;
    }

    // ---- desired values

    const DesignItem* old_item(SectionKind kind, const ItemState& st) const {
        return st.d.decided && !st.d.is_new ? &base.section(kind)[st.d.old_index] : nullptr;
    }

    static const Alternative* old_alt(const DesignItem* old, const AltState& as) {
        return old && as.d.decided && !as.d.is_new ? &old->alternatives[as.d.old_index] : nullptr;
    }

    DesignItem desired_item(SectionKind kind, const PartialItem& in, const ItemState& st, bool with_alternatives) {
        const DesignItem* old = old_item(kind, st);
        DesignItem item;
        item.id = st.d.id;
        item.section = kind;
        item.summary = desired_text(in.summary, old ? &old->summary : nullptr);
        item.rationale = desired_text(in.rationale, old ? &old->rationale : nullptr);
        if (kind != SectionKind::UsefulAbstractions) {
            item.important = in.important.value_or(old ? old->important : false);
        }
        item.origin = old ? old->origin
                          : (kind == SectionKind::ConfirmedRequirements ? design::ItemOrigin::UserConfirmed
                                                                        : design::ItemOrigin::AgentProposed);
        if (with_alternatives) {
            if (in.has_alternatives) {
                const std::size_t n = std::min(in.alternatives.size(), design::kMaxAlternatives);
                for (std::size_t k = 0; k < n; ++k) item.alternatives.push_back(desired_alt(old, in.alternatives[k], st.alts[k]));
            } else if (old) {
                item.alternatives = old->alternatives;
            }
        }
        return item;
    }

    static Alternative desired_alt(const DesignItem* old_parent, const PartialAlternative& in, const AltState& as) {
        const Alternative* old = old_alt(old_parent, as);
        Alternative alt;
        alt.id = as.d.id;
        alt.text = desired_text(in.text, old ? &old->text : nullptr);
        alt.important = in.important.value_or(old ? old->important : false);
        if (old && alt.text == old->text) alt.tradeoff = old->tradeoff;
        return alt;
    }

    // ---- streaming synchronisation

    void sync() {
        const PartialTree& tree = builder.tree();
        for (SectionKind kind : tree.order) sync_section(kind, tree.section(kind));
    }

    void sync_section(SectionKind kind, const PartialSection& in) {
        SectionState& ss = sections[static_cast<std::size_t>(kind)];
        const auto& old_items = base.section(kind);
        if (ss.old_taken.empty()) ss.old_taken.assign(old_items.size(), false);
        while (ss.items.size() < in.items.size()) ss.items.emplace_back();

        for (std::size_t j = 0; j < in.items.size(); ++j) {
            const PartialItem& item = in.items[j];
            ItemState& st = ss.items[j];
            if (!st.d.decided) {
                if (!st.matcher && (item.summary.present || item.closed)) {
                    std::vector<std::string> texts;
                    for (std::size_t o = 0; o < old_items.size(); ++o) {
                        if (ss.old_taken[o]) continue;
                        st.candidates.push_back(o);
                        texts.push_back(old_items[o].summary);
                    }
                    st.matcher.emplace(std::move(texts), policy);
                }
                if (!st.matcher) continue;
                st.matcher->advance(item.summary.text);
                if (item.summary.closed || item.closed) st.matcher->close();
                if (st.matcher->status() == PrefixMatcher::Status::Pending) continue;
                st.d.decided = true;
                if (st.matcher->status() == PrefixMatcher::Status::Bound) {
                    st.d.old_index = st.candidates[st.matcher->bound()];
                    ss.old_taken[st.d.old_index] = true;
                    st.d.id = old_items[st.d.old_index].id;
                    st.old_alt_taken.assign(old_items[st.d.old_index].alternatives.size(), false);
                } else {
                    st.d.is_new = true;
                    st.d.id = fresh_id("g" + std::to_string(generation) + "." + std::string(design::section_tag(kind)) +
                                       std::to_string(j));
                }
            }
            sync_item(kind, ss, j, item);
        }

        if (in.closed && !ss.settled) {
            std::vector<std::string> order;
            for (const auto& st : ss.items) order.push_back(st.d.id);
            settle_items(kind, order);
            ss.settled = true;
        }
    }

    void sync_item(SectionKind kind, SectionState& ss, std::size_t j, const PartialItem& in) {
        ItemState& st = ss.items[j];
        const DesignItem want = desired_item(kind, in, st, false);
        if (st.d.is_new && !st.d.added) {
            auto e = event(EventKind::ItemAdded, kind, st.d.id);
            e.index = j == 0 ? 0 : shown_index(kind, ss.items[j - 1].d.id) + 1;
            e.item = want;
            emit(std::move(e));
            st.d.added = true;
        } else {
            const DesignItem& cur = shown_item(kind, st.d.id);
            emit_text(EventKind::ItemUpdated, kind, st.d.id, {"summary"}, cur.summary, want.summary);
            emit_text(EventKind::FieldDelta, kind, st.d.id, {"rationale"}, shown_item(kind, st.d.id).rationale,
                      want.rationale);
            emit_flag(kind, st.d.id, {"important"}, shown_item(kind, st.d.id).important, want.important);
        }
        if (in.has_alternatives) sync_alternatives(kind, st, in);
    }

    void sync_alternatives(SectionKind kind, ItemState& st, const PartialItem& in) {
        const DesignItem* old = old_item(kind, st);
        const std::size_t n = std::min(in.alternatives.size(), design::kMaxAlternatives);
        while (st.alts.size() < n) st.alts.emplace_back();

        for (std::size_t k = 0; k < n; ++k) {
            const PartialAlternative& alt = in.alternatives[k];
            AltState& as = st.alts[k];
            if (!as.d.decided) {
                if (!as.matcher && (alt.text.present || alt.closed)) {
                    std::vector<std::string> texts;
                    if (old) {
                        for (std::size_t o = 0; o < old->alternatives.size(); ++o) {
                            if (st.old_alt_taken[o]) continue;
                            as.candidates.push_back(o);
                            texts.push_back(old->alternatives[o].text);
                        }
                    }
                    as.matcher.emplace(std::move(texts), policy);
                }
                if (!as.matcher) continue;
                as.matcher->advance(alt.text.text);
                if (alt.text.closed || alt.closed) as.matcher->close();
                if (as.matcher->status() == PrefixMatcher::Status::Pending) continue;
                as.d.decided = true;
                if (as.matcher->status() == PrefixMatcher::Status::Bound) {
                    as.d.old_index = as.candidates[as.matcher->bound()];
                    st.old_alt_taken[as.d.old_index] = true;
                    as.d.id = old->alternatives[as.d.old_index].id;
                } else {
                    as.d.is_new = true;
                    as.d.id = fresh_id(st.d.id + "." + std::to_string(generation) + "a" + std::to_string(k));
                }
            }
            const Alternative want = desired_alt(old, alt, as);
            const std::vector<std::string> path{"alternatives", as.d.id};
            if (as.d.is_new && !as.d.added) {
                DesignItem& parent = shown_item(kind, st.d.id);
                auto e = event(EventKind::ItemAdded, kind, st.d.id, path);
                e.index = k == 0 ? 0 : shown_alt_index(parent, st.alts[k - 1].d.id) + 1;
                e.alternative = want;
                emit(std::move(e));
                as.d.added = true;
            } else {
                sync_alt_fields(kind, st.d.id, want);
            }
        }

        if (in.alternatives_closed && !st.alts_settled) {
            std::vector<std::string> order;
            for (std::size_t k = 0; k < n; ++k) order.push_back(st.alts[k].d.id);
            settle_alternatives(kind, st.d.id, order);
            st.alts_settled = true;
        }
    }

    void sync_alt_fields(SectionKind kind, const std::string& item_id, const Alternative& want) {
        auto current = [&]() -> Alternative& {
            DesignItem& parent = shown_item(kind, item_id);
            return parent.alternatives[shown_alt_index(parent, want.id)];
        };
        emit_text(EventKind::FieldDelta, kind, item_id, {"alternatives", want.id, "text"}, current().text, want.text);
        if (current().tradeoff != want.tradeoff) {
            auto e = event(EventKind::FieldDelta, kind, item_id, {"alternatives", want.id, "tradeoff"});
            e.text = want.tradeoff.value_or("");
            emit(std::move(e));
        }
        emit_flag(kind, item_id, {"alternatives", want.id, "important"}, current().important, want.important);
    }

    // Removes shown items missing from `order`, then moves the rest into it.
    void settle_items(SectionKind kind, const std::vector<std::string>& order) {
        const std::set<std::string> keep(order.begin(), order.end());
        std::vector<std::string> doomed;
        for (const auto& item : shown(kind)) {
            if (keep.count(item.id) == 0) doomed.push_back(item.id);
        }
        for (const auto& id : doomed) emit(event(EventKind::ItemRemoved, kind, id));
        for (std::size_t j = 0; j < order.size(); ++j) {
            if (shown(kind)[j].id == order[j]) continue;
            auto e = event(EventKind::ItemMatched, kind, order[j]);
            e.index = j;
            emit(std::move(e));
        }
    }

    void settle_alternatives(SectionKind kind, const std::string& item_id, const std::vector<std::string>& order) {
        const std::set<std::string> keep(order.begin(), order.end());
        std::vector<std::string> doomed;
        for (const auto& alt : shown_item(kind, item_id).alternatives) {
            if (keep.count(alt.id) == 0) doomed.push_back(alt.id);
        }
        for (const auto& id : doomed) emit(event(EventKind::ItemRemoved, kind, item_id, {"alternatives", id}));
        for (std::size_t k = 0; k < order.size(); ++k) {
            if (shown_item(kind, item_id).alternatives[k].id == order[k]) continue;
            auto e = event(EventKind::ItemMatched, kind, item_id, {"alternatives", order[k]});
            e.index = k;
            emit(std::move(e));
        }
    }

    // ---- final panel, built from the tree and the binding decisions only

    DesignPanel final_panel() {
        DesignPanel panel;
        panel.version = base.version;
        const PartialTree& tree = builder.tree();
        for (SectionKind kind : design::kSections) {
            const PartialSection& in = tree.section(kind);
            if (!in.present) {
                panel.section(kind) = base.section(kind);
                continue;
            }
            const SectionState& ss = sections[static_cast<std::size_t>(kind)];
            for (std::size_t j = 0; j < in.items.size(); ++j) {
                panel.section(kind).push_back(desired_item(kind, in.items[j], ss.items[j], true));
            }
        }
        return panel;
    }

    // Brings the display in line with `target`. Streaming already did this
    // work for well-formed input, so this normally emits nothing.
    void converge(const DesignPanel& target) {
        for (SectionKind kind : design::kSections) {
            const auto& want = target.section(kind);
            std::vector<std::string> order;
            for (const auto& item : want) order.push_back(item.id);
            for (const auto& item : want) {
                const auto& items = shown(kind);
                const bool present = std::any_of(items.begin(), items.end(),
                                                  [&](const DesignItem& i) { return i.id == item.id; });
                if (!present) {
                    auto e = event(EventKind::ItemAdded, kind, item.id);
                    e.index = items.size();
                    e.item = item;
                    emit(std::move(e));
                    continue;
                }
                const DesignItem& cur = shown_item(kind, item.id);
                emit_text(EventKind::ItemUpdated, kind, item.id, {"summary"}, cur.summary, item.summary);
                emit_text(EventKind::FieldDelta, kind, item.id, {"rationale"}, shown_item(kind, item.id).rationale,
                          item.rationale);
                emit_flag(kind, item.id, {"important"}, shown_item(kind, item.id).important, item.important);
                std::vector<std::string> alt_order;
                for (const auto& alt : item.alternatives) {
                    alt_order.push_back(alt.id);
                    DesignItem& parent = shown_item(kind, item.id);
                    const bool has = std::any_of(parent.alternatives.begin(), parent.alternatives.end(),
                                                 [&](const Alternative& a) { return a.id == alt.id; });
                    if (!has) {
                        auto e = event(EventKind::ItemAdded, kind, item.id, {"alternatives", alt.id});
                        e.index = parent.alternatives.size();
                        e.alternative = alt;
                        emit(std::move(e));
                    } else {
                        sync_alt_fields(kind, item.id, alt);
                    }
                }
                settle_alternatives(kind, item.id, alt_order);
            }
            settle_items(kind, order);
        }
    }
};

Reconciler::Reconciler(const DesignPanel& base, MatchPolicy policy) : state_(std::make_unique<State>()) {
    state_->base = design::live_view(base);
    state_->display = state_->base;
    state_->policy = policy;
    state_->generation = base.version + 1;
    for (const auto& section : state_->base.sections) {
        for (const auto& item : section) {
            state_->used_ids.insert(item.id);
            for (const auto& alt : item.alternatives) state_->used_ids.insert(alt.id);
        }
    }
}

Reconciler::~Reconciler() = default;

std::vector<ReconciliationEvent> Reconciler::feed(std::string_view chunk) {
    if (state_->failed) throw Error(ErrorCode::InvalidState, "panel stream already failed");
    if (state_->finalized) throw Error(ErrorCode::InvalidState, "panel stream already finalized");
    try {
        state_->builder.feed(chunk);
    } catch (...) {
        state_->failed = true;
        throw;
    }
    state_->sync();
    return std::exchange(state_->out, {});
}

Reconciler::Result Reconciler::finalize() {
    if (state_->failed) throw Error(ErrorCode::InvalidState, "panel stream failed");
    if (!state_->builder.tree().root_closed) throw Error(ErrorCode::InvalidState, "panel stream is not complete");
    Result result;
    result.panel = state_->final_panel();
    if (!state_->finalized) {
        state_->converge(result.panel);
        state_->finalized = true;
    }
    result.events = std::exchange(state_->out, {});
    return result;
}

const PartialTree& Reconciler::tree() const noexcept { return state_->builder.tree(); }

const DesignPanel& Reconciler::display() const noexcept { return state_->display; }

Reconciler::Result reconcile(const DesignPanel& base, std::string_view stream, MatchPolicy policy) {
    Reconciler r(base, policy);
    auto events = r.feed(stream);
    auto result = r.finalize();
    events.insert(events.end(), std::make_move_iterator(result.events.begin()),
                  std::make_move_iterator(result.events.end()));
    result.events = std::move(events);
    return result;
}

} // namespace designloop::streamsync
