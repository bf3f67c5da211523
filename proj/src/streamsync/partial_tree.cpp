#include "designloop/streamsync/partial_tree.hpp"

#include "designloop/error.hpp"

namespace designloop::streamsync {

using design::SectionKind;

void TreeBuilder::feed(std::string_view chunk) { tokenizer_.feed(chunk); }

void TreeBuilder::mismatch(std::size_t offset, std::string_view what) const {
    throw ParseError("panel stream: unexpected " + std::string(what), offset);
}

PartialSection& TreeBuilder::current_section() { return tree_.section(section_); }

PartialItem& TreeBuilder::current_item() { return current_section().items.back(); }

bool TreeBuilder::skip_value(bool opens_container) {
    if (skip_depth_ > 0) {
        if (opens_container) ++skip_depth_;
        return true;
    }
    if (slot_ == Slot::Skip) {
        slot_ = Slot::None;
        if (opens_container) skip_depth_ = 1;
        return true;
    }
    return false;
}

void TreeBuilder::begin_object(std::size_t offset) {
    if (skip_value(true)) return;
    if (frames_.empty()) {
        frames_.push_back(Frame::Root);
        tree_.root_open = true;
        return;
    }
    switch (frames_.back()) {
    case Frame::Section:
        frames_.push_back(Frame::Item);
        current_section().items.emplace_back();
        return;
    case Frame::Alternatives:
        frames_.push_back(Frame::Alternative);
        current_item().alternatives.emplace_back();
        return;
    default:
        mismatch(offset, "object");
    }
}

void TreeBuilder::end_object(std::size_t /*offset*/) {
    if (skip_depth_ > 0) {
        --skip_depth_;
        return;
    }
    const Frame frame = frames_.back();
    frames_.pop_back();
    slot_ = Slot::None;
    if (frame == Frame::Root) {
        tree_.root_closed = true;
    } else if (frame == Frame::Item) {
        current_item().closed = true;
    } else if (frame == Frame::Alternative) {
        current_item().alternatives.back().closed = true;
    }
}

void TreeBuilder::begin_array(std::size_t offset) {
    if (skip_value(true)) return;
    if (slot_ == Slot::Section) {
        slot_ = Slot::None;
        frames_.push_back(Frame::Section);
        current_section().present = true;
        tree_.order.push_back(section_);
        return;
    }
    if (slot_ == Slot::Alternatives) {
        slot_ = Slot::None;
        frames_.push_back(Frame::Alternatives);
        current_item().has_alternatives = true;
        return;
    }
    mismatch(offset, "array");
}

void TreeBuilder::end_array(std::size_t /*offset*/) {
    if (skip_depth_ > 0) {
        --skip_depth_;
        return;
    }
    const Frame frame = frames_.back();
    frames_.pop_back();
    if (frame == Frame::Section) {
        current_section().closed = true;
    } else {
        current_item().alternatives_closed = true;
    }
}

void TreeBuilder::key(std::string_view name, std::size_t offset) {
    if (skip_depth_ > 0) return;
    slot_ = Slot::Skip;
    switch (frames_.back()) {
    case Frame::Root:
        if (const auto kind = design::section_from_key(name)) {
            if (tree_.section(*kind).present) mismatch(offset, "repeated section '" + std::string(name) + "'");
            section_ = *kind;
            slot_ = Slot::Section;
        }
        return;
    case Frame::Item: {
        PartialItem& item = current_item();
        const bool abstraction = section_ == SectionKind::UsefulAbstractions;
        if (name == (abstraction ? "term" : "summary")) {
            slot_ = Slot::Summary;
        } else if (name == (abstraction ? "description" : "rationale")) {
            slot_ = Slot::Rationale;
        } else if (!abstraction && name == "important") {
            slot_ = Slot::Important;
        } else if (!abstraction && name == "alternatives") {
            if (item.has_alternatives) mismatch(offset, "repeated key 'alternatives'");
            slot_ = Slot::Alternatives;
        }
        if ((slot_ == Slot::Summary && item.summary.present) || (slot_ == Slot::Rationale && item.rationale.present)) {
            mismatch(offset, "repeated key '" + std::string(name) + "'");
        }
        return;
    }
    case Frame::Alternative: {
        PartialAlternative& alt = current_item().alternatives.back();
        if (name == "text") {
            if (alt.text.present) mismatch(offset, "repeated key 'text'");
            slot_ = Slot::AltText;
        } else if (name == "important") {
            slot_ = Slot::AltImportant;
        }
        return;
    }
    default:
        return;
    }
}

void TreeBuilder::begin_string(std::size_t offset) {
    if (skip_value(false)) {
        skip_string_ = true;
        return;
    }
    switch (slot_) {
    case Slot::Summary: text_ = &current_item().summary; break;
    case Slot::Rationale: text_ = &current_item().rationale; break;
    case Slot::AltText: text_ = &current_item().alternatives.back().text; break;
    default: mismatch(offset, "string");
    }
    slot_ = Slot::None;
    text_->present = true;
}

void TreeBuilder::string_chunk(std::string_view decoded) {
    if (skip_string_) return;
    text_->text.append(decoded);
}

void TreeBuilder::end_string(std::size_t /*offset*/) {
    if (skip_string_) {
        skip_string_ = false;
        return;
    }
    text_->closed = true;
    text_ = nullptr;
}

void TreeBuilder::scalar(json::ScalarKind kind, std::string_view /*text*/, std::size_t offset) {
    if (skip_value(false)) return;
    std::optional<bool>* flag = nullptr;
    if (slot_ == Slot::Important) flag = &current_item().important;
    if (slot_ == Slot::AltImportant) flag = &current_item().alternatives.back().important;
    if (!flag) mismatch(offset, "scalar");
    slot_ = Slot::None;
    if (kind == json::ScalarKind::True || kind == json::ScalarKind::False) {
        *flag = kind == json::ScalarKind::True;
    } else if (kind != json::ScalarKind::Null) {
        mismatch(offset, "non-boolean importance");
    }
}

} // namespace designloop::streamsync
