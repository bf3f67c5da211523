#include "designloop/design/panel.hpp"

#include <algorithm>

#include "designloop/error.hpp"

namespace designloop::design {

namespace {

constexpr std::array<std::string_view, 4> kKeys{"design_questions", "confirmed_requirements", "implicit_decisions",
                                                 "useful_abstractions"};
constexpr std::array<std::string_view, 4> kTags{"dq", "cr", "id", "ua"};

ChangeMark mark_from_name(std::string_view name) {
    if (name == "added") return ChangeMark::Added;
    if (name == "removed") return ChangeMark::Removed;
    if (name == "none") return ChangeMark::None;
    throw Error(ErrorCode::Corrupt, "unknown change mark '" + std::string(name) + "'");
}

ItemOrigin item_origin_from_name(std::string_view name) {
    if (name == "agent") return ItemOrigin::AgentProposed;
    if (name == "user") return ItemOrigin::UserConfirmed;
    throw Error(ErrorCode::Corrupt, "unknown item origin '" + std::string(name) + "'");
}

bool same_alternatives(const std::vector<Alternative>& a, const std::vector<Alternative>& b) { return a == b; }

} // namespace

std::string_view section_key(SectionKind kind) noexcept { return kKeys[static_cast<std::size_t>(kind)]; }

std::optional<SectionKind> section_from_key(std::string_view key) noexcept {
    for (std::size_t i = 0; i < kKeys.size(); ++i) {
        if (kKeys[i] == key) return kSections[i];
    }
    return std::nullopt;
}

std::string_view section_tag(SectionKind kind) noexcept { return kTags[static_cast<std::size_t>(kind)]; }

std::string_view change_mark_name(ChangeMark mark) noexcept {
    switch (mark) {
    case ChangeMark::None: return "none";
    case ChangeMark::Added: return "added";
    case ChangeMark::Removed: return "removed";
    }
    return "none";
}

std::string_view item_origin_name(ItemOrigin origin) noexcept {
    return origin == ItemOrigin::UserConfirmed ? "user" : "agent";
}

DesignItem* DesignPanel::find_item(std::string_view id) {
    for (auto& section : sections) {
        for (auto& item : section) {
            if (item.id == id) return &item;
        }
    }
    return nullptr;
}

const DesignItem* DesignPanel::find_item(std::string_view id) const {
    return const_cast<DesignPanel*>(this)->find_item(id);
}

const Alternative* DesignPanel::find_alternative(std::string_view item_id, std::string_view alternative_id) const {
    const DesignItem* item = find_item(item_id);
    if (!item) return nullptr;
    for (const auto& alt : item->alternatives) {
        if (alt.id == alternative_id) return &alt;
    }
    return nullptr;
}

std::size_t DesignPanel::item_count() const noexcept {
    std::size_t n = 0;
    for (const auto& section : sections) n += section.size();
    return n;
}

DesignPanel live_view(const DesignPanel& panel) {
    DesignPanel live;
    live.version = panel.version;
    for (std::size_t s = 0; s < panel.sections.size(); ++s) {
        for (const auto& item : panel.sections[s]) {
            if (item.change_mark == ChangeMark::Removed) continue;
            live.sections[s].push_back(item);
            live.sections[s].back().change_mark = ChangeMark::None;
        }
    }
    return live;
}

bool same_content(const DesignItem& a, const DesignItem& b) {
    return a.id == b.id && a.section == b.section && a.summary == b.summary && a.rationale == b.rationale &&
           a.important == b.important && a.origin == b.origin && same_alternatives(a.alternatives, b.alternatives);
}

bool same_content(const DesignPanel& a, const DesignPanel& b) {
    for (std::size_t s = 0; s < a.sections.size(); ++s) {
        const auto& x = a.sections[s];
        const auto& y = b.sections[s];
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!same_content(x[i], y[i])) return false;
        }
    }
    return true;
}

nlohmann::ordered_json to_json(const DesignPanel& panel) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (SectionKind kind : kSections) {
        nlohmann::ordered_json items = nlohmann::ordered_json::array();
        const bool abstraction = kind == SectionKind::UsefulAbstractions;
        for (const auto& item : panel.section(kind)) {
            nlohmann::ordered_json j;
            j["id"] = item.id;
            j[abstraction ? "term" : "summary"] = item.summary;
            j[abstraction ? "description" : "rationale"] = item.rationale;
            if (!abstraction) {
                j["important"] = item.important;
                nlohmann::ordered_json alts = nlohmann::ordered_json::array();
                for (const auto& alt : item.alternatives) {
                    nlohmann::ordered_json a;
                    a["id"] = alt.id;
                    a["text"] = alt.text;
                    a["important"] = alt.important;
                    if (alt.tradeoff) a["tradeoff"] = *alt.tradeoff;
                    alts.push_back(std::move(a));
                }
                j["alternatives"] = std::move(alts);
            }
            j["origin"] = item_origin_name(item.origin);
            j["change_mark"] = change_mark_name(item.change_mark);
            items.push_back(std::move(j));
        }
        out[std::string(section_key(kind))] = std::move(items);
    }
    return out;
}

DesignPanel panel_from_json(const nlohmann::json& j) {
    DesignPanel panel;
    try {
        for (SectionKind kind : kSections) {
            const bool abstraction = kind == SectionKind::UsefulAbstractions;
            for (const auto& entry : j.at(std::string(section_key(kind)))) {
                DesignItem item;
                item.id = entry.at("id").get<std::string>();
                item.section = kind;
                item.summary = entry.at(abstraction ? "term" : "summary").get<std::string>();
                item.rationale = entry.at(abstraction ? "description" : "rationale").get<std::string>();
                if (!abstraction) {
                    item.important = entry.at("important").get<bool>();
                    for (const auto& a : entry.at("alternatives")) {
                        Alternative alt;
                        alt.id = a.at("id").get<std::string>();
                        alt.text = a.at("text").get<std::string>();
                        alt.important = a.at("important").get<bool>();
                        if (a.contains("tradeoff")) alt.tradeoff = a.at("tradeoff").get<std::string>();
                        item.alternatives.push_back(std::move(alt));
                    }
                }
                item.origin = item_origin_from_name(entry.at("origin").get<std::string>());
                item.change_mark = mark_from_name(entry.at("change_mark").get<std::string>());
                panel.section(kind).push_back(std::move(item));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Corrupt, std::string("malformed panel artifact: ") + e.what());
    }
    return panel;
}

std::string serialize(const DesignPanel& panel) { return to_json(panel).dump(2) + "\n"; }

DesignPanel deserialize_panel(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::Corrupt, std::string("malformed panel artifact: ") + e.what());
    }
    return panel_from_json(j);
}

nlohmann::ordered_json to_stream_json(const DesignPanel& panel) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (SectionKind kind : kSections) {
        nlohmann::ordered_json items = nlohmann::ordered_json::array();
        for (const auto& item : panel.section(kind)) {
            if (item.change_mark == ChangeMark::Removed) continue;
            nlohmann::ordered_json j;
            if (kind == SectionKind::UsefulAbstractions) {
                j["term"] = item.summary;
                j["description"] = item.rationale;
            } else {
                j["summary"] = item.summary;
                j["rationale"] = item.rationale;
                j["important"] = item.important;
                nlohmann::ordered_json alts = nlohmann::ordered_json::array();
                for (const auto& alt : item.alternatives) {
                    nlohmann::ordered_json a;
                    a["text"] = alt.text;
                    a["important"] = alt.important;
                    alts.push_back(std::move(a));
                }
                j["alternatives"] = std::move(alts);
            }
            items.push_back(std::move(j));
        }
        out[std::string(section_key(kind))] = std::move(items);
    }
    return out;
}

DesignPanel panel_from_stream_json(std::string_view text, std::string_view id_prefix) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed panel payload: ") + e.what(), e.byte);
    }
    if (!j.is_object()) throw ParseError("panel payload is not an object", 0);

    auto text_field = [](const nlohmann::json& obj, const char* key) {
        const auto it = obj.find(key);
        return it != obj.end() && it->is_string() ? it->get<std::string>() : std::string();
    };
    auto flag_field = [](const nlohmann::json& obj, const char* key) {
        const auto it = obj.find(key);
        return it != obj.end() && it->is_boolean() && it->get<bool>();
    };

    DesignPanel panel;
    for (SectionKind kind : kSections) {
        const auto it = j.find(std::string(section_key(kind)));
        if (it == j.end() || !it->is_array()) continue;
        const bool abstraction = kind == SectionKind::UsefulAbstractions;
        std::size_t n = 0;
        for (const auto& entry : *it) {
            if (!entry.is_object()) continue;
            DesignItem item;
            item.id = std::string(id_prefix) + "." + std::string(section_tag(kind)) + std::to_string(n++);
            item.section = kind;
            item.summary = text_field(entry, abstraction ? "term" : "summary");
            item.rationale = text_field(entry, abstraction ? "description" : "rationale");
            item.origin = kind == SectionKind::ConfirmedRequirements ? ItemOrigin::UserConfirmed
                                                                     : ItemOrigin::AgentProposed;
            if (!abstraction) {
                item.important = flag_field(entry, "important");
                const auto alts = entry.find("alternatives");
                if (alts != entry.end() && alts->is_array()) {
                    for (const auto& a : *alts) {
                        if (item.alternatives.size() == kMaxAlternatives) break;
                        if (!a.is_object()) continue;
                        Alternative alt;
                        alt.id = item.id + ".a" + std::to_string(item.alternatives.size());
                        alt.text = text_field(a, "text");
                        alt.important = flag_field(a, "important");
                        item.alternatives.push_back(std::move(alt));
                    }
                }
            }
            panel.section(kind).push_back(std::move(item));
        }
    }
    return panel;
}

} // namespace designloop::design
