#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace premsel {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// 64-bit FNV-1a; `state` allows incremental hashing.
constexpr std::uint64_t fnv1a(std::string_view bytes, std::uint64_t state = kFnvOffset) noexcept {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= kFnvPrime;
  }
  return state;
}

std::string to_hex(std::uint64_t value);
std::uint64_t parse_hex(std::string_view text);

/// FNV-1a over the whole file content. Throws Error(IoFailure) when unreadable.
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace premsel
