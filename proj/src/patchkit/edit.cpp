#include "designloop/patchkit/edit.hpp"

#include <nlohmann/json.hpp>

#include "designloop/error.hpp"
#include "designloop/text.hpp"

namespace designloop::patchkit {

std::optional<std::size_t> EditOperation::claimed_start() const {
    for (std::size_t i = 0; i < old_lines.size(); ++i) {
        if (!old_lines[i].number) continue;
        const std::size_t number = *old_lines[i].number;
        return number > i ? number - i : std::size_t{1};
    }
    return std::nullopt;
}

std::vector<EditLine> parse_block(std::string_view block) {
    std::vector<EditLine> out;
    for (const auto& line : text::split_lines(block)) out.push_back(parse_prefixed_line(line));
    return out;
}

std::string render_block(const std::vector<EditLine>& lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out += '\n';
        out += lines[i].number ? render_line(*lines[i].number, lines[i].text) : lines[i].text;
    }
    return out;
}

EditOperation make_edit(std::string_view old_block, std::string_view new_block,
                        std::optional<std::size_t> anchor, std::size_t offset) {
    EditOperation edit;
    edit.old_lines = parse_block(old_block);
    edit.new_lines = parse_block(new_block);
    if (edit.old_lines.empty() && edit.new_lines.empty()) {
        throw ParseError("edit has neither old nor new lines", offset);
    }
    if (edit.old_lines.empty()) {
        if (!anchor) {
            for (const auto& line : edit.new_lines) {
                if (line.number) {
                    anchor = *line.number > 0 ? *line.number - 1 : 0;
                    break;
                }
            }
        }
        if (!anchor) throw ParseError("insertion has no anchor line", offset);
        edit.anchor = anchor;
    }
    return edit;
}

// ---------------------------------------------------------------------------

std::vector<EditOperation> EditPayloadParser::feed(std::string_view chunk) {
    tokenizer_.feed(chunk);
    std::vector<EditOperation> out;
    out.swap(ready_);
    return out;
}

bool EditPayloadParser::skipping_value(bool opens_container) {
    if (skip_depth_ > 0) {
        if (opens_container) ++skip_depth_;
        return true;
    }
    if (skip_next_) {
        skip_next_ = false;
        if (opens_container) skip_depth_ = 1;
        return true;
    }
    return false;
}

void EditPayloadParser::expect_slot_kind(bool is_string, std::size_t offset) {
    switch (slot_) {
    case Slot::Old:
    case Slot::New:
        if (!is_string) throw ParseError("edit 'old'/'new' must be strings", offset);
        return;
    case Slot::Anchor:
        if (is_string) throw ParseError("edit 'anchor' must be a number", offset);
        return;
    case Slot::None:
        throw ParseError("unexpected value", offset);
    }
}

void EditPayloadParser::begin_object(std::size_t offset) {
    if (skipping_value(true)) return;
    ++depth_;
    if (!root_seen_) {
        root_seen_ = true;
        return;
    }
    if (edits_key_) throw ParseError("'edits' must be an array", offset);
    if (in_edits_ && !in_edit_) {
        in_edit_ = true;
        slot_ = Slot::None;
        has_old_ = has_new_ = false;
        old_.clear();
        new_.clear();
        anchor_.reset();
        return;
    }
    throw ParseError("unexpected object", offset);
}

void EditPayloadParser::end_object(std::size_t offset) {
    if (skip_depth_ > 0) {
        --skip_depth_;
        return;
    }
    --depth_;
    if (in_edit_) {
        if (!has_old_ || !has_new_) throw ParseError("edit requires both 'old' and 'new'", offset);
        ready_.push_back(make_edit(old_, new_, anchor_, offset));
        ++edit_count_;
        in_edit_ = false;
        return;
    }
    if (depth_ == 0 && !edits_seen_) throw ParseError("payload has no 'edits' array", offset);
}

void EditPayloadParser::begin_array(std::size_t offset) {
    if (skipping_value(true)) return;
    ++depth_;
    if (!root_seen_) throw ParseError("edit payload must be an object", offset);
    if (edits_key_) {
        edits_key_ = false;
        in_edits_ = true;
        edits_seen_ = true;
        return;
    }
    if (in_edits_ && !in_edit_) throw ParseError("each edit must be an object", offset);
    throw ParseError("unexpected array", offset);
}

void EditPayloadParser::end_array(std::size_t offset) {
    if (skip_depth_ > 0) {
        --skip_depth_;
        return;
    }
    --depth_;
    if (in_edits_ && !in_edit_) {
        in_edits_ = false;
        if (edit_count_ == 0) throw ParseError("edit list is empty", offset);
    }
}

void EditPayloadParser::key(std::string_view name, std::size_t offset) {
    if (skip_depth_ > 0) return;
    if (in_edit_) {
        if (name == "old") {
            slot_ = Slot::Old;
            has_old_ = true;
            old_.clear();
        } else if (name == "new") {
            slot_ = Slot::New;
            has_new_ = true;
            new_.clear();
        } else if (name == "anchor") {
            slot_ = Slot::Anchor;
        } else {
            slot_ = Slot::None;
            skip_next_ = true;
        }
        return;
    }
    if (depth_ == 1) {
        if (name == "edits") {
            if (edits_seen_) throw ParseError("duplicate 'edits' key", offset);
            edits_key_ = true;
        } else if (name == "rewrite") {
            throw ParseError("payload is a rewrite, not an edit list", offset);
        } else {
            skip_next_ = true;
        }
    }
}

void EditPayloadParser::begin_string(std::size_t offset) {
    if (skip_depth_ > 0) return;
    if (skip_next_) {
        skip_next_ = false;
        skip_string_ = true;
        return;
    }
    if (!root_seen_) throw ParseError("edit payload must be an object", offset);
    if (edits_key_) throw ParseError("'edits' must be an array", offset);
    if (!in_edit_) throw ParseError("each edit must be an object", offset);
    expect_slot_kind(true, offset);
}

void EditPayloadParser::string_chunk(std::string_view decoded) {
    if (skip_depth_ > 0 || skip_string_ || !in_edit_) return;
    if (slot_ == Slot::Old) old_ += decoded;
    if (slot_ == Slot::New) new_ += decoded;
}

void EditPayloadParser::end_string(std::size_t) {
    if (skip_depth_ > 0) return;
    if (skip_string_) {
        skip_string_ = false;
        return;
    }
    slot_ = Slot::None;
}

void EditPayloadParser::scalar(json::ScalarKind kind, std::string_view text, std::size_t offset) {
    if (skipping_value(false)) return;
    if (!root_seen_) throw ParseError("edit payload must be an object", offset);
    if (edits_key_) throw ParseError("'edits' must be an array", offset);
    if (!in_edit_) throw ParseError("each edit must be an object", offset);
    expect_slot_kind(false, offset);
    if (kind == json::ScalarKind::Null) {
        anchor_.reset();
    } else if (kind == json::ScalarKind::Number &&
               text.find_first_not_of("0123456789") == std::string_view::npos && text.size() <= 9) {
        anchor_ = static_cast<std::size_t>(std::stoul(std::string(text)));
    } else {
        throw ParseError("edit 'anchor' must be a non-negative integer", offset);
    }
    slot_ = Slot::None;
}

// ---------------------------------------------------------------------------

std::vector<EditOperation> parse_edit_payload(std::string_view payload) {
    EditPayloadParser parser;
    auto edits = parser.feed(payload);
    if (!parser.complete()) throw ParseError("truncated edit payload", parser.offset());
    return edits;
}

std::string parse_rewrite_payload(std::string_view payload) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed rewrite payload: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || !doc.contains("rewrite") || !doc["rewrite"].is_string()) {
        throw ParseError("rewrite payload requires a string 'rewrite' field", 0);
    }
    return doc["rewrite"].get<std::string>();
}

std::string to_edit_payload(const std::vector<EditOperation>& edits) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& edit : edits) {
        nlohmann::json item{{"old", render_block(edit.old_lines)}, {"new", render_block(edit.new_lines)}};
        if (edit.anchor && edit.is_insertion()) item["anchor"] = *edit.anchor;
        list.push_back(std::move(item));
    }
    return nlohmann::json{{"edits", std::move(list)}}.dump();
}

std::string to_rewrite_payload(std::string_view code) {
    return nlohmann::json{{"rewrite", std::string(code)}}.dump();
}

} // namespace designloop::patchkit
