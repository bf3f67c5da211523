#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "designloop/json_stream.hpp"
#include "designloop/patchkit/numbering.hpp"

namespace designloop::patchkit {

using EditLine = PrefixedLine;

// One replacement as emitted by the model. Pure insertions have no old lines
// and insert new_lines after line `anchor` (0 inserts at the top).
struct EditOperation {
    std::vector<EditLine> old_lines;
    std::vector<EditLine> new_lines;
    std::optional<std::size_t> anchor;

    bool is_insertion() const noexcept { return old_lines.empty(); }

    // Line number the old block claims to start at, derived from the first
    // numbered old line. Absent when no old line carries a number.
    std::optional<std::size_t> claimed_start() const;

    bool operator==(const EditOperation&) const = default;
};

std::vector<EditLine> parse_block(std::string_view block);
std::string render_block(const std::vector<EditLine>& lines);

// Builds an EditOperation from the raw "old"/"new" strings of one edit object.
// Throws ParseError (at `offset`) when the edit is empty or an insertion has
// no resolvable anchor.
EditOperation make_edit(std::string_view old_block, std::string_view new_block,
                        std::optional<std::size_t> anchor, std::size_t offset = 0);

// Incremental parser for { "edits": [ { "old": s, "new": s, "anchor"?: n } ] }.
// Each edit is returned by feed() as soon as its object closes.
class EditPayloadParser : private json::StreamHandler {
public:
    EditPayloadParser() : tokenizer_(*this) {}
    EditPayloadParser(const EditPayloadParser&) = delete;
    EditPayloadParser& operator=(const EditPayloadParser&) = delete;

    std::vector<EditOperation> feed(std::string_view chunk);

    bool complete() const noexcept { return tokenizer_.complete(); }
    // True while an edit object has been opened but not closed.
    bool inside_edit() const noexcept { return in_edit_; }
    std::size_t edit_count() const noexcept { return edit_count_; }
    std::size_t offset() const noexcept { return tokenizer_.offset(); }

private:
    enum class Slot { None, Old, New, Anchor };

    void begin_object(std::size_t offset) override;
    void end_object(std::size_t offset) override;
    void begin_array(std::size_t offset) override;
    void end_array(std::size_t offset) override;
    void key(std::string_view name, std::size_t offset) override;
    void begin_string(std::size_t offset) override;
    void string_chunk(std::string_view decoded) override;
    void end_string(std::size_t offset) override;
    void scalar(json::ScalarKind kind, std::string_view text, std::size_t offset) override;

    bool skipping_value(bool opens_container);
    void expect_slot_kind(bool is_string, std::size_t offset);

    json::StreamTokenizer tokenizer_;
    int depth_ = 0;
    int skip_depth_ = 0;       // >0 while inside an ignored container
    bool skip_next_ = false;   // next value belongs to an unknown key
    bool skip_string_ = false;
    bool root_seen_ = false;
    bool edits_key_ = false;   // the pending root value is the edits array
    bool in_edits_ = false;
    bool edits_seen_ = false;
    bool in_edit_ = false;
    Slot slot_ = Slot::None;
    bool has_old_ = false;
    bool has_new_ = false;
    std::string old_;
    std::string new_;
    std::optional<std::size_t> anchor_;
    std::size_t edit_count_ = 0;
    std::vector<EditOperation> ready_;
};

// Batch form of EditPayloadParser. Throws ParseError for structurally invalid
// or truncated payloads and for an empty edit list.
std::vector<EditOperation> parse_edit_payload(std::string_view payload);

// { "rewrite": "<entire file>" } -> file text.
std::string parse_rewrite_payload(std::string_view payload);

std::string to_edit_payload(const std::vector<EditOperation>& edits);
std::string to_rewrite_payload(std::string_view code);

} // namespace designloop::patchkit
