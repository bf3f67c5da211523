#pragma once

#include <string>
#include <vector>

#include "designloop/design/panel.hpp"

namespace designloop::design {

struct ChangeAnnotation {
    SectionKind section = SectionKind::DesignQuestions;
    std::string item_id;
    ChangeMark mark = ChangeMark::None;

    bool operator==(const ChangeAnnotation&) const = default;
};

struct PanelUpdate {
    DesignPanel panel;
    std::vector<ChangeAnnotation> annotations;
};

// Marks items of `next` that are new relative to the live part of `current`
// as Added and re-inserts items that disappeared, marked Removed, at their old
// index. Marks and Removed items of the previous generation are discarded.
// The result's version is current.version + 1.
PanelUpdate apply_panel_update(const DesignPanel& current, const DesignPanel& next);

} // namespace designloop::design
