#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace asag {

// FNV-1a, fixed across platforms so cache keys and mock scripts are stable.
constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t value);

}  // namespace asag
