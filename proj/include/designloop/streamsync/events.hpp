#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "designloop/design/panel.hpp"

namespace designloop::streamsync {

enum class EventKind { ItemMatched, ItemAdded, ItemUpdated, ItemRemoved, FieldDelta };
enum class DeltaMode { Set, Append };

std::string_view event_kind_name(EventKind kind) noexcept;

// Addressing: `item_id` names the item; `field` is empty for the item itself,
// {"summary" | "rationale" | "important"} for an item field,
// {"alternatives", <alt id>} for an alternative and
// {"alternatives", <alt id>, "text" | "important" | "tradeoff"} for one of its
// fields. Flags travel as "true"/"false"; an empty tradeoff clears it.
//
//   ItemAdded    item (or alternative) snapshot inserted at `index`
//   ItemRemoved  deletes the addressed item or alternative
//   ItemMatched  moves the addressed item or alternative to `index`
//   ItemUpdated  replaces the item summary with `text`
//   FieldDelta   sets or appends `text` to the addressed field
struct ReconciliationEvent {
    EventKind kind = EventKind::FieldDelta;
    design::SectionKind section = design::SectionKind::DesignQuestions;
    std::string item_id;
    std::vector<std::string> field;
    std::optional<std::size_t> index;
    DeltaMode mode = DeltaMode::Set;
    std::string text;
    std::optional<design::DesignItem> item;
    std::optional<design::Alternative> alternative;

    bool nested() const noexcept { return !field.empty() && field[0] == "alternatives"; }
    bool operator==(const ReconciliationEvent&) const = default;
};

nlohmann::ordered_json to_json(const ReconciliationEvent& event);
ReconciliationEvent event_from_json(const nlohmann::json& j);

// Applies events in order. Throws InvalidArgument for a path that does not
// resolve.
void apply_event(design::DesignPanel& panel, const ReconciliationEvent& event);
void apply_events(design::DesignPanel& panel, std::span<const ReconciliationEvent> events);

} // namespace designloop::streamsync
