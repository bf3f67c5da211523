#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "designloop/patchkit/apply.hpp"
#include "designloop/patchkit/edit.hpp"

namespace designloop::patchkit {

// Applies an edit payload while it streams in: every time another edit object
// closes, the edits received so far are applied to the original code and the
// result is returned as a snapshot.
class EditStream {
public:
    EditStream(std::string code, FuzzPolicy policy = {});

    std::vector<PatchResult> feed(std::string_view chunk);

    // Final result. A stream cut off inside an edit reports that edit as
    // failed; a stream that produced no edit at all throws ParseError.
    PatchResult finish();

    const std::vector<EditOperation>& edits() const noexcept { return edits_; }
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
    FuzzPolicy policy_;
    EditPayloadParser parser_;
    std::vector<EditOperation> edits_;
    std::optional<PatchResult> last_;
};

// Runs a whole chunk sequence through EditStream. The returned snapshots are
// one per completed edit, plus a trailing failure snapshot if the stream ends
// mid-edit.
std::vector<PatchResult> apply_edit_stream(std::string_view code,
                                           std::span<const std::string> chunks,
                                           const FuzzPolicy& policy = {});

} // namespace designloop::patchkit
