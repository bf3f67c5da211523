#include "designloop/design/update.hpp"

#include <algorithm>
#include <set>

namespace designloop::design {

PanelUpdate apply_panel_update(const DesignPanel& current, const DesignPanel& next) {
    const DesignPanel before = live_view(current);
    std::set<std::string> before_ids;
    for (const auto& section : before.sections) {
        for (const auto& item : section) before_ids.insert(item.id);
    }
    std::set<std::string> next_ids;
    for (const auto& section : next.sections) {
        for (const auto& item : section) {
            if (item.change_mark != ChangeMark::Removed) next_ids.insert(item.id);
        }
    }

    PanelUpdate update;
    update.panel.version = current.version + 1;
    for (SectionKind kind : kSections) {
        auto& out = update.panel.section(kind);
        for (const auto& item : next.section(kind)) {
            if (item.change_mark == ChangeMark::Removed) continue;
            out.push_back(item);
            out.back().section = kind;
            if (before_ids.count(item.id) == 0) {
                out.back().change_mark = ChangeMark::Added;
                update.annotations.push_back({kind, item.id, ChangeMark::Added});
            } else {
                out.back().change_mark = ChangeMark::None;
            }
        }
        const auto& old_items = before.section(kind);
        for (std::size_t i = 0; i < old_items.size(); ++i) {
            if (next_ids.count(old_items[i].id) != 0) continue;
            DesignItem ghost = old_items[i];
            ghost.change_mark = ChangeMark::Removed;
            const std::size_t at = std::min(i, out.size());
            out.insert(out.begin() + static_cast<std::ptrdiff_t>(at), std::move(ghost));
            update.annotations.push_back({kind, old_items[i].id, ChangeMark::Removed});
        }
    }
    return update;
}

} // namespace designloop::design
