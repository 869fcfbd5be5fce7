#include "premsel/hash.hpp"

#include <array>
#include <charconv>
#include <fstream>

#include "premsel/error.hpp"
#include "premsel/random.hpp"

namespace premsel {

std::string to_hex(std::uint64_t value) {
  std::array<char, 16> buf{};
  for (int i = 15; i >= 0; --i) {
    buf[static_cast<std::size_t>(i)] = "0123456789abcdef"[value & 0xF];
    value >>= 4;
  }
  return {buf.begin(), buf.end()};
}

std::uint64_t parse_hex(std::string_view text) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, 16);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::ConfigError, "not a hex hash: '" + std::string(text) + "'");
  }
  return value;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::uint64_t state = kFnvOffset;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    state = fnv1a(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())), state);
  }
  return state;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) noexcept {
  return Rng::mix(Rng::mix(seed) ^ fnv1a(name));
}

}  // namespace premsel
