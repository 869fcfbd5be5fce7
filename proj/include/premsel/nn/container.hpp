#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "premsel/error.hpp"
#include "premsel/nn/tensor.hpp"

namespace premsel::nn {

/// Named-tensor container (PSTC), little-endian:
///   "PSTC" | u32 version | u32 entry count |
///   per entry: u16 name length, name bytes, u8 dtype, u64 rows, u64 cols, data |
///   u32 CRC-32 of every preceding byte.
/// Entries are written in name order, so equal content gives equal bytes.
class TensorContainer {
 public:
  enum class DType : std::uint8_t { F32 = 0, F64 = 1, U32 = 2, I64 = 3, U64 = 4 };
  static constexpr std::uint32_t kVersion = 1;

  using Data = std::variant<std::vector<float>, std::vector<double>, std::vector<std::uint32_t>,
                            std::vector<std::int64_t>, std::vector<std::uint64_t>>;

  struct Entry {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    Data data;
  };

  template <typename T>
  void put(const std::string& name, std::vector<T> values, std::uint64_t rows, std::uint64_t cols) {
    if (values.size() != rows * cols) {
      throw Error(ErrorCode::ShapeMismatch, "tensor '" + name + "' size does not match its shape");
    }
    entries_[name] = Entry{rows, cols, Data(std::move(values))};
  }

  template <typename T>
  void put_vector(const std::string& name, std::vector<T> values) {
    const auto n = values.size();
    put(name, std::move(values), n, 1);
  }

  template <typename T>
  void put_matrix(const std::string& name, const Matrix<T>& m) {
    put(name, std::vector<T>(m.data(), m.data() + m.size()), static_cast<std::uint64_t>(m.rows()),
        static_cast<std::uint64_t>(m.cols()));
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Entry& entry(const std::string& name) const;

  /// Throws Error(ShapeMismatch) when the stored dtype differs from T.
  template <typename T>
  const std::vector<T>& get(const std::string& name) const {
    const auto* values = std::get_if<std::vector<T>>(&entry(name).data);
    if (values == nullptr) throw Error(ErrorCode::ShapeMismatch, "tensor '" + name + "' has another dtype");
    return *values;
  }

  template <typename T>
  Matrix<T> get_matrix(const std::string& name) const {
    const auto& e = entry(name);
    const auto& values = get<T>(name);
    return Eigen::Map<const Matrix<T>>(values.data(), static_cast<Eigen::Index>(e.rows),
                                       static_cast<Eigen::Index>(e.cols));
  }

  std::vector<std::byte> serialize() const;
  static TensorContainer deserialize(std::span<const std::byte> bytes);
  void save(const std::filesystem::path& path) const;
  static TensorContainer load(const std::filesystem::path& path);

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace premsel::nn
