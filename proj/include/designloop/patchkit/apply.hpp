#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "designloop/patchkit/edit.hpp"

namespace designloop::patchkit {

struct FuzzPolicy {
    std::size_t search_radius = 10;
    double min_similarity = 0.85;
};

enum class PatchOutcome { Applied, AppliedWithFuzz, FallbackRequired };

std::string_view outcome_name(PatchOutcome outcome) noexcept;

struct AppliedEdit {
    std::size_t index = 0;      // position in the submitted edit list
    EditOperation edit;
    std::size_t start_line = 0; // 1-based first replaced line (insertions: first inserted line)
    double match_score = 1.0;

    bool operator==(const AppliedEdit&) const = default;
};

struct FailedEdit {
    std::size_t index = 0;
    EditOperation edit;
    std::string reason;

    bool operator==(const FailedEdit&) const = default;
};

struct PatchResult {
    PatchOutcome outcome = PatchOutcome::Applied;
    std::vector<AppliedEdit> applied_edits;
    std::vector<FailedEdit> failed_edits;
    std::optional<std::string> new_code;

    bool operator==(const PatchResult&) const = default;
};

// Mean per-line similarity of old_lines against code_lines[start, start + n),
// computed on right-stripped text.
double window_similarity(std::span<const std::string> code_lines, std::size_t start,
                         std::span<const EditLine> old_lines);

struct WindowMatch {
    std::size_t start = 0; // 0-based
    double score = 0.0;
    std::size_t distance = 0; // |start - claimed start|
};

// Best window for a replacement edit within the policy radius, regardless of
// the similarity threshold. Highest score wins; ties go to the window closest
// to the claimed position, then to the lower start. Edits without line numbers
// search the whole file. Absent when no window fits.
std::optional<WindowMatch> best_window(std::span<const std::string> code_lines,
                                       const EditOperation& edit, const FuzzPolicy& policy);

PatchResult apply_edits(std::string_view code, std::span<const EditOperation> edits,
                        const FuzzPolicy& policy = {});

} // namespace designloop::patchkit
