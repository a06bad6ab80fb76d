// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace qbt {

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const void *data, std::size_t size, std::uint64_t h = 14695981039346656037ull) {
  const auto *p = static_cast<const unsigned char *>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

std::string hex64(std::uint64_t v);

}  // namespace qbt
