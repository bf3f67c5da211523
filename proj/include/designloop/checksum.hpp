#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace designloop {

// 64-bit FNV-1a. Stable across platforms; used for artifact checksums and
// prompt digests.
std::uint64_t fnv1a64(std::string_view data) noexcept;

// Lower-case, zero-padded 16 digit hex.
std::string to_hex64(std::uint64_t value);

} // namespace designloop
