#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace designloop::design {

enum class SectionKind { DesignQuestions, ConfirmedRequirements, ImplicitDecisions, UsefulAbstractions };

inline constexpr std::array<SectionKind, 4> kSections{
    SectionKind::DesignQuestions, SectionKind::ConfirmedRequirements, SectionKind::ImplicitDecisions,
    SectionKind::UsefulAbstractions};

// Wire key, e.g. "design_questions".
std::string_view section_key(SectionKind kind) noexcept;
std::optional<SectionKind> section_from_key(std::string_view key) noexcept;
// Two-letter tag used in generated ids ("dq", "cr", "id", "ua").
std::string_view section_tag(SectionKind kind) noexcept;

enum class ChangeMark { None, Added, Removed };
enum class ItemOrigin { AgentProposed, UserConfirmed };

std::string_view change_mark_name(ChangeMark mark) noexcept;
std::string_view item_origin_name(ItemOrigin origin) noexcept;

inline constexpr std::size_t kMaxAlternatives = 4;

struct Alternative {
    std::string id;
    std::string text;
    std::optional<std::string> tradeoff; // one sentence when present
    bool important = false;

    bool operator==(const Alternative&) const = default;
};

// Useful-abstraction items keep their term in `summary` and the description
// in `rationale`; they carry no alternatives.
struct DesignItem {
    std::string id;
    SectionKind section = SectionKind::DesignQuestions;
    std::string summary;
    std::string rationale;
    std::vector<Alternative> alternatives;
    bool important = false;
    ChangeMark change_mark = ChangeMark::None;
    ItemOrigin origin = ItemOrigin::AgentProposed;

    bool operator==(const DesignItem&) const = default;
};

struct DesignPanel {
    std::array<std::vector<DesignItem>, 4> sections;
    std::uint64_t version = 1;

    std::vector<DesignItem>& section(SectionKind kind) { return sections[static_cast<std::size_t>(kind)]; }
    const std::vector<DesignItem>& section(SectionKind kind) const {
        return sections[static_cast<std::size_t>(kind)];
    }

    DesignItem* find_item(std::string_view id);
    const DesignItem* find_item(std::string_view id) const;
    const Alternative* find_alternative(std::string_view item_id, std::string_view alternative_id) const;

    std::size_t item_count() const noexcept;
    bool empty() const noexcept { return item_count() == 0; }

    bool operator==(const DesignPanel&) const = default;
};

// Copy without Removed items and with every mark reset; this is what agents
// see and what reconciliation starts from.
DesignPanel live_view(const DesignPanel& panel);

// Equality of content: ids, text, flags, alternatives and order. Ignores
// change marks and the version counter.
bool same_content(const DesignPanel& a, const DesignPanel& b);
bool same_content(const DesignItem& a, const DesignItem& b);

// Storage form: every field including ids, marks and trade-offs, never the
// version (so restoring an old version reproduces its bytes exactly).
nlohmann::ordered_json to_json(const DesignPanel& panel);
DesignPanel panel_from_json(const nlohmann::json& j);
std::string serialize(const DesignPanel& panel);
DesignPanel deserialize_panel(std::string_view text);

// Agent-facing form: the streaming schema, live items only, no ids.
nlohmann::ordered_json to_stream_json(const DesignPanel& panel);

// Lenient batch reading of a complete agent response in the streaming
// schema. Items receive fresh ids `<prefix>.<tag><n>`; ill-typed fields are
// dropped and alternatives beyond the cap are ignored. Throws ParseError
// when the text is not a JSON object.
DesignPanel panel_from_stream_json(std::string_view text, std::string_view id_prefix);

} // namespace designloop::design
