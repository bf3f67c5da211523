#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "designloop/design/panel.hpp"
#include "designloop/json_stream.hpp"

namespace designloop::streamsync {

enum class Completeness { Closed, OpenString, OpenContainer };

struct PartialText {
    std::string text;     // a prefix of the final text while open
    bool present = false; // the key has been seen
    bool closed = false;

    Completeness completeness() const noexcept { return closed ? Completeness::Closed : Completeness::OpenString; }
};

struct PartialAlternative {
    PartialText text;
    std::optional<bool> important;
    bool closed = false;
};

struct PartialItem {
    PartialText summary;   // "term" in useful_abstractions
    PartialText rationale; // "description" in useful_abstractions
    std::optional<bool> important;
    bool has_alternatives = false;
    bool alternatives_closed = false;
    std::vector<PartialAlternative> alternatives;
    bool closed = false;

    Completeness completeness() const noexcept { return closed ? Completeness::Closed : Completeness::OpenContainer; }
};

struct PartialSection {
    bool present = false;
    bool closed = false;
    std::vector<PartialItem> items;
};

struct PartialTree {
    bool root_open = false;
    bool root_closed = false;
    std::array<PartialSection, 4> sections;
    std::vector<design::SectionKind> order; // sections in document order

    PartialSection& section(design::SectionKind kind) { return sections[static_cast<std::size_t>(kind)]; }
    const PartialSection& section(design::SectionKind kind) const {
        return sections[static_cast<std::size_t>(kind)];
    }
    Completeness completeness() const noexcept {
        return root_closed ? Completeness::Closed : Completeness::OpenContainer;
    }
};

// Push-down builder for the panel stream schema. Unknown keys are skipped
// whatever their value; a known key holding the wrong kind of value, or a
// repeated section, is a stream error (ParseError at the offending byte).
class TreeBuilder : private json::StreamHandler {
public:
    TreeBuilder() : tokenizer_(*this) {}
    TreeBuilder(const TreeBuilder&) = delete;
    TreeBuilder& operator=(const TreeBuilder&) = delete;

    void feed(std::string_view chunk);

    const PartialTree& tree() const noexcept { return tree_; }
    bool complete() const noexcept { return tokenizer_.complete(); }
    std::size_t offset() const noexcept { return tokenizer_.offset(); }

private:
    enum class Frame { Root, Section, Item, Alternatives, Alternative };
    enum class Slot { None, Skip, Section, Summary, Rationale, Important, Alternatives, AltText, AltImportant };

    void begin_object(std::size_t offset) override;
    void end_object(std::size_t offset) override;
    void begin_array(std::size_t offset) override;
    void end_array(std::size_t offset) override;
    void key(std::string_view name, std::size_t offset) override;
    void begin_string(std::size_t offset) override;
    void string_chunk(std::string_view decoded) override;
    void end_string(std::size_t offset) override;
    void scalar(json::ScalarKind kind, std::string_view text, std::size_t offset) override;

    bool skip_value(bool opens_container);
    [[noreturn]] void mismatch(std::size_t offset, std::string_view what) const;
    PartialSection& current_section();
    PartialItem& current_item();

    json::StreamTokenizer tokenizer_;
    PartialTree tree_;
    std::vector<Frame> frames_;
    design::SectionKind section_ = design::SectionKind::DesignQuestions;
    Slot slot_ = Slot::None;
    int skip_depth_ = 0;
    bool skip_string_ = false;
    PartialText* text_ = nullptr;
};

} // namespace designloop::streamsync
