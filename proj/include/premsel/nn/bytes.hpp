#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "premsel/error.hpp"

namespace premsel::nn {

/// Little-endian append-only byte buffer.
class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    std::array<std::byte, sizeof(T)> raw;
    std::memcpy(raw.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    bytes_.insert(bytes_.end(), raw.begin(), raw.end());
  }

  template <typename T>
  void put_array(std::span<const T> values) {
    if constexpr (std::endian::native == std::endian::little) {
      const auto* p = reinterpret_cast<const std::byte*>(values.data());
      bytes_.insert(bytes_.end(), p, p + values.size_bytes());
    } else {
      for (const auto& v : values) put(v);
    }
  }

  void put_bytes(std::string_view s) {
    const auto* p = reinterpret_cast<const std::byte*>(s.data());
    bytes_.insert(bytes_.end(), p, p + s.size());
  }

  /// Appends CRC-32 of everything written so far.
  void put_crc32();

  std::vector<std::byte>& bytes() noexcept { return bytes_; }

 private:
  std::vector<std::byte> bytes_;
};

/// Bounds-checked little-endian reader; overruns throw Error(ChecksumMismatch)
/// since a well-formed, checksummed file never overruns.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    T value;
    auto raw = take(sizeof(T));
    std::array<std::byte, sizeof(T)> buf;
    std::copy(raw.begin(), raw.end(), buf.begin());
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    std::memcpy(&value, buf.data(), sizeof(T));
    return value;
  }

  template <typename T>
  void get_array(std::span<T> out) {
    if constexpr (std::endian::native == std::endian::little) {
      auto raw = take(out.size_bytes());
      std::memcpy(out.data(), raw.data(), raw.size());
    } else {
      for (auto& v : out) v = get<T>();
    }
  }

  std::string get_string(std::size_t n) {
    auto raw = take(n);
    return {reinterpret_cast<const char*>(raw.data()), raw.size()};
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const std::byte> take(std::size_t n) {
    if (n > remaining()) throw Error(ErrorCode::ChecksumMismatch, "truncated payload");
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::byte> bytes);

/// Verifies magic and trailing CRC; returns the payload between them.
std::span<const std::byte> checked_payload(std::span<const std::byte> bytes, std::string_view magic);

std::vector<std::byte> read_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames, so readers never see partial files.
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace premsel::nn
