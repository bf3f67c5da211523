#include "designloop/patchkit/stream.hpp"

#include "designloop/error.hpp"

namespace designloop::patchkit {

EditStream::EditStream(std::string code, FuzzPolicy policy)
    : code_(std::move(code)), policy_(policy) {}

std::vector<PatchResult> EditStream::feed(std::string_view chunk) {
    std::vector<PatchResult> snapshots;
    for (auto& edit : parser_.feed(chunk)) {
        edits_.push_back(std::move(edit));
        last_ = apply_edits(code_, edits_, policy_);
        snapshots.push_back(*last_);
    }
    return snapshots;
}

PatchResult EditStream::finish() {
    if (parser_.inside_edit()) {
        PatchResult result = apply_edits(code_, edits_, policy_);
        result.failed_edits.push_back({edits_.size(), EditOperation{}, "stream ended mid-edit"});
        result.outcome = PatchOutcome::FallbackRequired;
        result.new_code.reset();
        return result;
    }
    if (!last_) throw ParseError("edit stream ended before any edit", parser_.offset());
    return *last_;
}

std::vector<PatchResult> apply_edit_stream(std::string_view code,
                                           std::span<const std::string> chunks,
                                           const FuzzPolicy& policy) {
    EditStream stream{std::string(code), policy};
    std::vector<PatchResult> snapshots;
    for (const auto& chunk : chunks) {
        auto produced = stream.feed(chunk);
        snapshots.insert(snapshots.end(), produced.begin(), produced.end());
    }
    PatchResult final_result = stream.finish();
    if (snapshots.empty() || !(snapshots.back() == final_result)) {
        snapshots.push_back(std::move(final_result));
    }
    return snapshots;
}

} // namespace designloop::patchkit
