#include "designloop/patchkit/apply.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "designloop/text.hpp"

namespace designloop::patchkit {

namespace {

constexpr double kScoreEpsilon = 1e-12;

double line_similarity(std::string_view a, std::string_view b) {
    a = text::rstrip(a);
    b = text::rstrip(b);
    if (a == b) return 1.0;
    return text::similarity(a, b);
}

std::string format_score(double score) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", score);
    return buf;
}

struct Candidate {
    std::size_t index = 0;
    std::size_t start = 0; // 0-based, half-open [start, end)
    std::size_t end = 0;
    double score = 1.0;
    bool exact = true;
    bool insertion = false;
};

bool before(const Candidate& a, const Candidate& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.insertion != b.insertion) return a.insertion;
    return a.index < b.index;
}

} // namespace

std::string_view outcome_name(PatchOutcome outcome) noexcept {
    switch (outcome) {
    case PatchOutcome::Applied: return "Applied";
    case PatchOutcome::AppliedWithFuzz: return "AppliedWithFuzz";
    case PatchOutcome::FallbackRequired: return "FallbackRequired";
    }
    return "?";
}

double window_similarity(std::span<const std::string> code_lines, std::size_t start,
                         std::span<const EditLine> old_lines) {
    if (old_lines.empty()) return 1.0;
    double total = 0.0;
    for (std::size_t i = 0; i < old_lines.size(); ++i) {
        total += line_similarity(code_lines[start + i], old_lines[i].text);
    }
    return total / static_cast<double>(old_lines.size());
}

std::optional<WindowMatch> best_window(std::span<const std::string> code_lines,
                                       const EditOperation& edit, const FuzzPolicy& policy) {
    const std::size_t m = edit.old_lines.size();
    const std::size_t n = code_lines.size();
    if (m == 0 || m > n) return std::nullopt;

    const std::size_t last_start = n - m;
    const auto claimed = edit.claimed_start();
    // Without a claimed position every window is a candidate, ties toward the top.
    const std::size_t target = claimed ? *claimed - 1 : 0;
    std::size_t lo = 0;
    std::size_t hi = last_start;
    if (claimed) {
        lo = target > policy.search_radius ? target - policy.search_radius : 0;
        hi = std::min(last_start, target + policy.search_radius);
        if (lo > hi) return std::nullopt;
        if (target <= last_start) {
            const double exact = window_similarity(code_lines, target, edit.old_lines);
            if (exact == 1.0) return WindowMatch{target, 1.0, 0};
        }
    }

    std::optional<WindowMatch> best;
    for (std::size_t s = lo; s <= hi; ++s) {
        const double score = window_similarity(code_lines, s, edit.old_lines);
        const std::size_t distance = s > target ? s - target : target - s;
        if (!best || score > best->score + kScoreEpsilon ||
            (std::fabs(score - best->score) <= kScoreEpsilon && distance < best->distance)) {
            best = WindowMatch{s, score, distance};
        }
    }
    return best;
}

PatchResult apply_edits(std::string_view code, std::span<const EditOperation> edits,
                        const FuzzPolicy& policy) {
    bool trailing = false;
    std::vector<std::string> lines = text::split_lines(code, &trailing);

    PatchResult result;
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < edits.size(); ++i) {
        const EditOperation& edit = edits[i];
        if (edit.is_insertion()) {
            const std::size_t anchor = edit.anchor.value_or(0);
            if (anchor > lines.size()) {
                result.failed_edits.push_back({i, edit, "insertion anchor L" + std::to_string(anchor) +
                                                            " is past the end of the file"});
                continue;
            }
            candidates.push_back({i, anchor, anchor, 1.0, true, true});
            continue;
        }
        const auto match = best_window(lines, edit, policy);
        if (!match) {
            result.failed_edits.push_back({i, edit, "old lines do not fit the file within the search radius"});
            continue;
        }
        candidates.push_back({i, match->start, match->start + edit.old_lines.size(), match->score,
                              match->distance == 0 && match->score == 1.0, false});
    }

    // Overlaps are decided on best windows before thresholding so that a
    // stricter threshold can only ever fail more edits.
    std::sort(candidates.begin(), candidates.end(), before);
    std::vector<Candidate> kept;
    std::size_t kept_end = 0;
    std::size_t kept_owner = 0;
    for (const Candidate& c : candidates) {
        if (!kept.empty() && c.start < kept_end) {
            result.failed_edits.push_back(
                {c.index, edits[c.index], "overlaps edit #" + std::to_string(kept_owner + 1)});
            continue;
        }
        if (kept.empty() || c.end > kept_end) {
            kept_end = c.end;
            kept_owner = c.index;
        }
        kept.push_back(c);
    }

    std::vector<Candidate> resolved;
    for (const Candidate& c : kept) {
        if (c.score + kScoreEpsilon < policy.min_similarity) {
            result.failed_edits.push_back({c.index, edits[c.index],
                                           "best match similarity " + format_score(c.score) +
                                               " is below " + format_score(policy.min_similarity)});
            continue;
        }
        resolved.push_back(c);
        result.applied_edits.push_back({c.index, edits[c.index], c.start + 1, c.score});
    }

    std::sort(result.failed_edits.begin(), result.failed_edits.end(),
              [](const FailedEdit& a, const FailedEdit& b) { return a.index < b.index; });
    std::sort(result.applied_edits.begin(), result.applied_edits.end(),
              [](const AppliedEdit& a, const AppliedEdit& b) { return a.index < b.index; });

    if (!result.failed_edits.empty()) {
        result.outcome = PatchOutcome::FallbackRequired;
        return result;
    }

    // Bottom-up so earlier line offsets stay valid.
    for (auto it = resolved.rbegin(); it != resolved.rend(); ++it) {
        std::vector<std::string> replacement;
        replacement.reserve(edits[it->index].new_lines.size());
        for (const auto& line : edits[it->index].new_lines) replacement.push_back(line.text);
        lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(it->start),
                    lines.begin() + static_cast<std::ptrdiff_t>(it->end));
        lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(it->start), replacement.begin(),
                     replacement.end());
    }

    const bool all_exact = std::all_of(resolved.begin(), resolved.end(),
                                       [](const Candidate& c) { return c.exact; });
    result.outcome = all_exact ? PatchOutcome::Applied : PatchOutcome::AppliedWithFuzz;
    result.new_code = lines.empty() ? std::string() : text::join_lines(lines, trailing);
    return result;
}

} // namespace designloop::patchkit
