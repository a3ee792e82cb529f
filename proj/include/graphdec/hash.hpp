// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace graphdec {

// 64-bit FNV-1a. Used for configuration fingerprints, which must be stable
// across platforms and standard library implementations.
std::uint64_t fnv1a64(std::string_view data);

// fnv1a64 rendered as 16 lowercase hex digits.
std::string fingerprint_hex(std::string_view data);

}  // namespace graphdec
