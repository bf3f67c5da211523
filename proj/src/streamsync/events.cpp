#include "designloop/streamsync/events.hpp"

#include <algorithm>

#include "designloop/error.hpp"

namespace designloop::streamsync {

using design::Alternative;
using design::DesignItem;
using design::DesignPanel;

namespace {

constexpr std::array<std::string_view, 5> kKinds{"item_matched", "item_added", "item_updated", "item_removed",
                                                  "field_delta"};

[[noreturn]] void unresolved(const ReconciliationEvent& e, std::string_view what) {
    throw Error(ErrorCode::InvalidArgument, std::string(event_kind_name(e.kind)) + " for item '" + e.item_id +
                                                "': " + std::string(what));
}

std::vector<DesignItem>::iterator find_item(std::vector<DesignItem>& items, std::string_view id) {
    return std::find_if(items.begin(), items.end(), [&](const DesignItem& i) { return i.id == id; });
}

std::vector<Alternative>::iterator find_alt(std::vector<Alternative>& alts, std::string_view id) {
    return std::find_if(alts.begin(), alts.end(), [&](const Alternative& a) { return a.id == id; });
}

void update_text(std::string& target, const ReconciliationEvent& e) {
    if (e.mode == DeltaMode::Append) {
        target += e.text;
    } else {
        target = e.text;
    }
}

bool parse_flag(const ReconciliationEvent& e) {
    if (e.text == "true") return true;
    if (e.text == "false") return false;
    unresolved(e, "flag value must be true or false");
}

template <class T>
void move_to(std::vector<T>& list, typename std::vector<T>::iterator it, std::size_t index) {
    T value = std::move(*it);
    list.erase(it);
    list.insert(list.begin() + static_cast<std::ptrdiff_t>(std::min(index, list.size())), std::move(value));
}

void alternative_json(nlohmann::ordered_json& out, const Alternative& alt) {
    out["id"] = alt.id;
    out["text"] = alt.text;
    out["important"] = alt.important;
    if (alt.tradeoff) out["tradeoff"] = *alt.tradeoff;
}

Alternative alternative_from(const nlohmann::json& j) {
    Alternative alt;
    alt.id = j.at("id").get<std::string>();
    alt.text = j.at("text").get<std::string>();
    alt.important = j.value("important", false);
    if (j.contains("tradeoff")) alt.tradeoff = j.at("tradeoff").get<std::string>();
    return alt;
}

} // namespace

std::string_view event_kind_name(EventKind kind) noexcept { return kKinds[static_cast<std::size_t>(kind)]; }

nlohmann::ordered_json to_json(const ReconciliationEvent& e) {
    nlohmann::ordered_json j;
    j["kind"] = event_kind_name(e.kind);
    j["section"] = design::section_key(e.section);
    j["item_id"] = e.item_id;
    j["field"] = e.field;
    if (e.index) j["index"] = *e.index;
    if (e.kind == EventKind::FieldDelta || e.kind == EventKind::ItemUpdated) {
        j["mode"] = e.mode == DeltaMode::Append ? "append" : "set";
        j["text"] = e.text;
    }
    if (e.item) {
        nlohmann::ordered_json item;
        item["id"] = e.item->id;
        item["summary"] = e.item->summary;
        item["rationale"] = e.item->rationale;
        item["important"] = e.item->important;
        item["origin"] = design::item_origin_name(e.item->origin);
        nlohmann::ordered_json alts = nlohmann::ordered_json::array();
        for (const auto& alt : e.item->alternatives) {
            nlohmann::ordered_json a;
            alternative_json(a, alt);
            alts.push_back(std::move(a));
        }
        item["alternatives"] = std::move(alts);
        j["item"] = std::move(item);
    }
    if (e.alternative) {
        nlohmann::ordered_json a;
        alternative_json(a, *e.alternative);
        j["alternative"] = std::move(a);
    }
    return j;
}

ReconciliationEvent event_from_json(const nlohmann::json& j) {
    ReconciliationEvent e;
    try {
        const std::string kind = j.at("kind").get<std::string>();
        const auto k = std::find(kKinds.begin(), kKinds.end(), kind);
        if (k == kKinds.end()) throw Error(ErrorCode::InvalidArgument, "unknown event kind '" + kind + "'");
        e.kind = static_cast<EventKind>(k - kKinds.begin());
        const auto section = design::section_from_key(j.at("section").get<std::string>());
        if (!section) throw Error(ErrorCode::InvalidArgument, "unknown section in event");
        e.section = *section;
        e.item_id = j.at("item_id").get<std::string>();
        e.field = j.at("field").get<std::vector<std::string>>();
        if (j.contains("index")) e.index = j.at("index").get<std::size_t>();
        if (j.contains("mode")) e.mode = j.at("mode").get<std::string>() == "append" ? DeltaMode::Append : DeltaMode::Set;
        e.text = j.value("text", "");
        if (j.contains("item")) {
            const auto& i = j.at("item");
            DesignItem item;
            item.id = i.at("id").get<std::string>();
            item.section = e.section;
            item.summary = i.at("summary").get<std::string>();
            item.rationale = i.at("rationale").get<std::string>();
            item.important = i.value("important", false);
            item.origin = i.value("origin", "agent") == "user" ? design::ItemOrigin::UserConfirmed
                                                               : design::ItemOrigin::AgentProposed;
            for (const auto& a : i.at("alternatives")) item.alternatives.push_back(alternative_from(a));
            e.item = std::move(item);
        }
        if (j.contains("alternative")) e.alternative = alternative_from(j.at("alternative"));
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed reconciliation event: ") + ex.what());
    }
    return e;
}

void apply_event(DesignPanel& panel, const ReconciliationEvent& e) {
    auto& items = panel.section(e.section);
    if (e.kind == EventKind::ItemAdded && e.field.empty()) {
        if (!e.item || !e.index) unresolved(e, "missing snapshot or index");
        if (*e.index > items.size()) unresolved(e, "index out of range");
        DesignItem item = *e.item;
        item.section = e.section;
        items.insert(items.begin() + static_cast<std::ptrdiff_t>(*e.index), std::move(item));
        return;
    }
    const auto it = find_item(items, e.item_id);
    if (it == items.end()) unresolved(e, "no such item");

    if (e.field.empty()) {
        switch (e.kind) {
        case EventKind::ItemRemoved: items.erase(it); return;
        case EventKind::ItemMatched:
            if (!e.index) unresolved(e, "missing index");
            move_to(items, it, *e.index);
            return;
        case EventKind::ItemUpdated: update_text(it->summary, e); return;
        default: unresolved(e, "event needs a field path");
        }
    }

    if (!e.nested()) {
        if (e.kind != EventKind::FieldDelta && e.kind != EventKind::ItemUpdated) unresolved(e, "bad field event");
        const std::string& name = e.field[0];
        if (e.field.size() != 1) unresolved(e, "bad field path");
        if (name == "summary") {
            update_text(it->summary, e);
        } else if (name == "rationale") {
            update_text(it->rationale, e);
        } else if (name == "important") {
            it->important = parse_flag(e);
        } else {
            unresolved(e, "unknown field '" + name + "'");
        }
        return;
    }

    auto& alts = it->alternatives;
    if (e.field.size() < 2) unresolved(e, "alternative path without id");
    if (e.kind == EventKind::ItemAdded) {
        if (!e.alternative || !e.index) unresolved(e, "missing alternative snapshot or index");
        if (*e.index > alts.size()) unresolved(e, "alternative index out of range");
        alts.insert(alts.begin() + static_cast<std::ptrdiff_t>(*e.index), *e.alternative);
        return;
    }
    const auto alt = find_alt(alts, e.field[1]);
    if (alt == alts.end()) unresolved(e, "no such alternative '" + e.field[1] + "'");
    if (e.field.size() == 2) {
        if (e.kind == EventKind::ItemRemoved) {
            alts.erase(alt);
        } else if (e.kind == EventKind::ItemMatched && e.index) {
            move_to(alts, alt, *e.index);
        } else {
            unresolved(e, "bad alternative event");
        }
        return;
    }
    if (e.kind != EventKind::FieldDelta || e.field.size() != 3) unresolved(e, "bad alternative field event");
    const std::string& name = e.field[2];
    if (name == "text") {
        update_text(alt->text, e);
    } else if (name == "important") {
        alt->important = parse_flag(e);
    } else if (name == "tradeoff") {
        if (e.mode == DeltaMode::Set && e.text.empty()) {
            alt->tradeoff.reset();
        } else {
            std::string value = alt->tradeoff.value_or("");
            update_text(value, e);
            alt->tradeoff = std::move(value);
        }
    } else {
        unresolved(e, "unknown alternative field '" + name + "'");
    }
}

void apply_events(DesignPanel& panel, std::span<const ReconciliationEvent> events) {
    for (const auto& e : events) apply_event(panel, e);
}

} // namespace designloop::streamsync
